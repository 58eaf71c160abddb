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

// Grasp stability cost: state drift over a rollout plus the force, torque
// and contact-count balance of the object.

#ifndef GRASPSTAB_STABILITY_H_
#define GRASPSTAB_STABILITY_H_

#include "json.hpp"

#include "graspstab/geom.h"
#include "graspstab/hand.h"
#include "graspstab/sim.h"

namespace graspstab {

// Rotation angle 2 acos(|w|) in [0, pi]. Throws InvalidInput unless the
// quaternion has unit norm within 1e-6.
double QuatAngle(const Quat& q);

struct TargetKinematics {
  Vec3 acceleration = Vec3::Zero();          // m/s^2
  Vec3 angular_acceleration = Vec3::Zero();  // rad/s^2
};

// How the recorded contact resultant enters the force term.
enum class ForceAccounting {
  // |f + M g - M a|^2 / |M g|^2: f is the contact force, gravity added.
  kContactPlusGravity,
  // |f - M a|^2 / |M g|^2 with f read as the total applied force.
  kLiteral,
};

struct CostBreakdown {
  double pos = 0;
  double ang = 0;
  double pose_l1 = 0;
  double root = 0;
  double force = 0;
  double torque = 0;
  double contact = 0;
};

struct StabilityCost {
  double c_state = 0;
  double c_physics = 0;
  double total = 0;
  CostBreakdown breakdown;

  nlohmann::json ToJson() const;
};

// Object pose and hand configuration at one instant. The pose must be in
// Euler form; sizes of the two poses being compared must agree.
struct StateSnapshot {
  Vec3 p = Vec3::Zero();
  Quat q = Quat::Identity();
  PoseParams pose;
  Vec3 root = Vec3::Zero();
};

// |p' - p| + angle(q'^-1 q) + |pose' - pose|_1 / |pose| + |root' - root|,
// with pose differences wrapped to (-pi, pi].
double StateCost(const StateSnapshot& before, const StateSnapshot& after,
                 CostBreakdown* terms = nullptr);

struct PhysicsCostOptions {
  Vec3 gravity = Vec3(0.0, -9.81, 0.0);
  TargetKinematics targets;
  // Object length scale for the torque normalizer when I alpha = 0.
  double char_len = 0.0;
  ForceAccounting accounting = ForceAccounting::kContactPlusGravity;
};

// Time average of the force, torque and exp(-m) terms. Throws InvalidInput
// for an empty record, a non-positive mass, or when no force normalizer
// exists (zero gravity and zero acceleration target).
double PhysicsCost(const RolloutRecord& record, const RigidBodyProps& props,
                   const PhysicsCostOptions& options,
                   CostBreakdown* terms = nullptr);

StateSnapshot InitialSnapshot(const RolloutRecord& record);
StateSnapshot FinalSnapshot(const RolloutRecord& record);

StabilityCost TotalCost(const RolloutRecord& record,
                        const RigidBodyProps& props,
                        const PhysicsCostOptions& options);

// |p(T) - p(0)| in millimeters.
double SimulationDisplacement(const RolloutRecord& record);

}  // namespace graspstab

#endif  // GRASPSTAB_STABILITY_H_
