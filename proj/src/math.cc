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

#include "graspstab/math.h"

#include <algorithm>
#include <cmath>

namespace graspstab {

Mat3 AxisAngleToMatrix(const Vec3& axis_angle) {
  const double angle = axis_angle.norm();
  if (angle < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
}

Vec3 MatrixToAxisAngle(const Mat3& rotation) {
  // Eigen's AngleAxis conversion goes through the quaternion, which keeps the
  // result accurate near both 0 and pi.
  Quat q(rotation);
  return QuatToAxisAngle(q);
}

Quat AxisAngleToQuat(const Vec3& axis_angle) {
  const double angle = axis_angle.norm();
  if (angle < 1e-300) return Quat::Identity();
  return Quat(Eigen::AngleAxisd(angle, axis_angle / angle));
}

Vec3 QuatToAxisAngle(const Quat& q_in) {
  Quat q = q_in.normalized();
  if (q.w() < 0) q.coeffs() = -q.coeffs();
  const double s = q.vec().norm();
  if (s < 1e-300) return Vec3::Zero();
  const double angle = 2.0 * std::atan2(s, q.w());
  return q.vec() * (angle / s);
}

Mat3 EulerXyzToMatrix(const Vec3& e) {
  return (Eigen::AngleAxisd(e[0], Vec3::UnitX()) *
          Eigen::AngleAxisd(e[1], Vec3::UnitY()) *
          Eigen::AngleAxisd(e[2], Vec3::UnitZ()))
      .toRotationMatrix();
}

Vec3 MatrixToEulerXyz(const Mat3& r) {
  // R = Rx Ry Rz gives r(0,2) = sin(pitch).
  const double sp = std::clamp(r(0, 2), -1.0, 1.0);
  const double pitch = std::asin(sp);
  if (std::abs(pitch) > kPi / 2 - 1e-6) {
    throw InvalidInput("Euler XYZ decomposition at gimbal lock (pitch = " +
                       std::to_string(pitch) + ")");
  }
  const double roll = std::atan2(-r(1, 2), r(2, 2));
  const double yaw = std::atan2(-r(0, 1), r(0, 0));
  return {roll, pitch, yaw};
}

double WrapAngle(double angle) {
  double a = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

}  // namespace graspstab
