// Copyright 2026 The GraspStab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GRASPSTAB_MATH_H_
#define GRASPSTAB_MATH_H_

#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace graspstab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = std::numbers::pi;

// Bad caller input: malformed files, out-of-range parameters, violated
// preconditions. The CLI maps these to exit code 1.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure inside an algorithm that was given valid input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool AllFinite(const Vec3& v) { return v.allFinite(); }

// Rotation matrix of an axis-angle vector (body-to-world).
Mat3 AxisAngleToMatrix(const Vec3& axis_angle);

// Rotation vector of a rotation matrix; angle in [0, pi].
Vec3 MatrixToAxisAngle(const Mat3& rotation);

Quat AxisAngleToQuat(const Vec3& axis_angle);
Vec3 QuatToAxisAngle(const Quat& q);

// Intrinsic X-Y-Z Euler angles: R = Rx(e[0]) * Ry(e[1]) * Rz(e[2]).
Mat3 EulerXyzToMatrix(const Vec3& euler);

// Inverse of EulerXyzToMatrix. Throws InvalidInput when |pitch| is within
// 1e-6 of pi/2, where the decomposition is not unique.
Vec3 MatrixToEulerXyz(const Mat3& rotation);

// Skew-symmetric cross-product matrix.
inline Mat3 Skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

// Wraps an angle to (-pi, pi].
double WrapAngle(double angle);

}  // namespace graspstab

#endif  // GRASPSTAB_MATH_H_
