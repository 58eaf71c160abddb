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

// Articulated ellipsoid hand: template, shape/pose parameters, forward
// kinematics and joint extraction.
//
// Link 0 is the palm (the kinematic root). Links 1 + 3 f + s belong to
// finger f (index, middle, ring, little, thumb) with s = 0, 1, 2 for the
// proximal, middle and distal segment. Every finger link uses the local
// frame x = bone axis (distal direction), y = volar direction, z = x cross y,
// so a positive rotation about z flexes the segment toward the palm.
//
// Anchors are stored in normalized ellipsoid coordinates u; the anchor point
// in the link frame is diag(radii) u, so anchors follow shape changes.

#ifndef GRASPSTAB_HAND_H_
#define GRASPSTAB_HAND_H_

#include <array>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "graspstab/geom.h"

namespace graspstab {

inline constexpr int kNumLinks = 16;
inline constexpr int kNumFingers = 5;
inline constexpr int kNumJoints = 21;
inline constexpr int kFullDofs = 48;
inline constexpr int kReducedDofs = 23;

enum class Finger { kIndex = 0, kMiddle, kRing, kLittle, kThumb };

constexpr int LinkIndex(int finger, int segment) {
  return 1 + 3 * finger + segment;
}

struct LinkTemplate {
  std::string name;
  int parent = -1;
  Ellipsoid rest;
  Vec3 parent_anchor = Vec3::Zero();  // on the parent, normalized coords
  Vec3 child_anchor = Vec3::Zero();   // on this link, normalized coords
};

class HandTemplate {
 public:
  // Built-in template from adult anthropometric segment sizes.
  static HandTemplate Default();

  // Throws InvalidInput if the tree is not a palm with five chains of three
  // links, if rest radii are not sorted descending, or if a rest anchor gap
  // exceeds 1e-9 m. Rest rotations are the joint frames, so they are kept
  // as given rather than sign-canonicalized.
  void Validate() const;

  const LinkTemplate& link(int i) const { return links_.at(i); }
  const std::array<LinkTemplate, kNumLinks>& links() const { return links_; }
  const Vec3& wrist_anchor() const { return wrist_anchor_; }

  // Distal principal-axis endpoint of a finger link, normalized coords.
  static Vec3 TipAnchor() { return Vec3::UnitX(); }

  nlohmann::json ToJson() const;
  // Parses and validates a template document.
  static HandTemplate FromJson(const nlohmann::json& j);

 private:
  std::array<LinkTemplate, kNumLinks> links_;
  Vec3 wrist_anchor_ = -Vec3::UnitX();
};

struct ShapeParams {
  std::array<Vec3, kNumLinks> delta_radii;

  ShapeParams() { delta_radii.fill(Vec3::Zero()); }
};

enum class PoseRepresentation { kAxisAngle, kEuler };
enum class DofLayout { kFull, kReduced };

// Flattened pose deltas. Full layout: 16 links x 3 (palm first, the palm's
// three values are the root orientation). Reduced layout (Euler only):
// 3 root values followed by (MCP abduction, MCP flexion, PIP flexion,
// DIP flexion) for each finger.
struct PoseParams {
  std::vector<double> values = std::vector<double>(kFullDofs, 0.0);
  PoseRepresentation representation = PoseRepresentation::kAxisAngle;
  DofLayout layout = DofLayout::kFull;

  static PoseParams Zero(DofLayout layout, PoseRepresentation rep);
  // Throws InvalidInput on size/layout mismatch or non-finite values.
  void Validate() const;
};

inline int DofCount(DofLayout layout) {
  return layout == DofLayout::kFull ? kFullDofs : kReducedDofs;
}

struct ObjectParams {
  Vec3 delta_radii = Vec3::Zero();
  Vec3 delta_axis_angle = Vec3::Zero();
  Vec3 delta_center = Vec3::Zero();
};

struct HandState {
  std::array<Ellipsoid, kNumLinks> links;
  Ellipsoid object;
  Vec3 root_t = Vec3::Zero();

  // Object first, then the 16 links (paper ordering E_0..E_16).
  std::vector<Ellipsoid> All() const;
};

using JointSet = std::array<Vec3, kNumJoints>;

// Poses every link and places the object relative to the posed palm.
// Throws InvalidInput naming the link when a radius drops below 1 mm.
HandState ComposeState(const HandTemplate& tmpl, const ShapeParams& beta,
                       const PoseParams& theta, const ObjectParams& phi,
                       const Vec3& root_t);

// Rest-relative local rotation of each link for a pose of any layout.
std::array<Mat3, kNumLinks> LocalRotations(const PoseParams& theta);

// Radii of every link after applying the shape deltas (with the 1 mm check).
std::array<Vec3, kNumLinks> ShapedRadii(const HandTemplate& tmpl,
                                        const ShapeParams& beta);

// Wrist, then MCP, PIP, DIP and TIP of each finger in finger order.
JointSet ExtractJoints(const HandTemplate& tmpl, const HandState& state);

PoseParams AxisAngleToEuler(const PoseParams& theta);
// Throws InvalidInput at gimbal lock (|pitch| >= pi/2 - 1e-6).
PoseParams EulerToAxisAngle(const PoseParams& theta);

// Full-layout Euler vector (48) to the reduced layout (23), dropping the
// axes the reduced layout does not carry, and back with zero fill.
std::vector<double> ReduceDofs(std::span<const double> full);
std::vector<double> ExpandDofs(std::span<const double> reduced);

// Converts any pose to full-layout Euler.
PoseParams ToFullEuler(const PoseParams& theta);
// Converts any pose to the given layout in Euler representation.
PoseParams ToEulerLayout(const PoseParams& theta, DofLayout layout);

// Index into the full 48-vector for each reduced slot.
const std::array<int, kReducedDofs>& ReducedToFullIndex();

std::string DofName(DofLayout layout, int index);

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

// Per-DoF limits for the full 48 Euler DoFs; unbounded entries are
// unconstrained.
struct JointLimits {
  std::array<Interval, kFullDofs> full;

  // Flexions [-0.26, 1.75] rad, abductions [-0.35, 0.35] rad, everything
  // else unbounded.
  static JointLimits Defaults();

  Interval ForDof(DofLayout layout, int index) const;
};

struct LimitViolation {
  int index = 0;  // in the pose's own layout
  std::string dof;
  double value = 0;
  Interval limit;
};

// Empty iff every limited DoF lies inside its closed interval.
std::vector<LimitViolation> ValidatePose(const PoseParams& theta,
                                         const JointLimits& limits);

}  // namespace graspstab

#endif  // GRASPSTAB_HAND_H_
