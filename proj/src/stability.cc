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

#include "graspstab/stability.h"

#include <algorithm>
#include <cmath>

namespace graspstab {

double QuatAngle(const Quat& q) {
  const double norm = q.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-6) {
    throw InvalidInput("quat_angle: quaternion is not unit length");
  }
  const double w = std::min(1.0, std::abs(q.w()) / norm);
  return 2.0 * std::acos(w);
}

nlohmann::json StabilityCost::ToJson() const {
  return {{"c_state", c_state},
          {"c_physics", c_physics},
          {"total", total},
          {"breakdown",
           {{"pos", breakdown.pos},
            {"ang", breakdown.ang},
            {"pose_l1", breakdown.pose_l1},
            {"root", breakdown.root},
            {"force", breakdown.force},
            {"torque", breakdown.torque},
            {"contact", breakdown.contact}}}};
}

double StateCost(const StateSnapshot& before, const StateSnapshot& after,
                 CostBreakdown* terms) {
  const auto& a = before.pose.values;
  const auto& b = after.pose.values;
  if (a.size() != b.size() || a.empty()) {
    throw InvalidInput("state cost: pose sizes differ (" +
                       std::to_string(a.size()) + " vs " +
                       std::to_string(b.size()) + ")");
  }
  CostBreakdown t;
  t.pos = (after.p - before.p).norm();
  t.ang = QuatAngle(after.q.conjugate() * before.q);
  double l1 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    l1 += std::abs(WrapAngle(b[i] - a[i]));
  }
  t.pose_l1 = l1 / static_cast<double>(a.size());
  t.root = (after.root - before.root).norm();
  if (terms != nullptr) {
    terms->pos = t.pos;
    terms->ang = t.ang;
    terms->pose_l1 = t.pose_l1;
    terms->root = t.root;
  }
  return t.pos + t.ang + t.pose_l1 + t.root;
}

double PhysicsCost(const RolloutRecord& record, const RigidBodyProps& props,
                   const PhysicsCostOptions& options, CostBreakdown* terms) {
  const int steps = record.steps();
  if (steps < 1) throw InvalidInput("physics cost: empty rollout record");
  if (!(props.mass > 0)) throw InvalidInput("physics cost: mass must be > 0");
  const double m = props.mass;
  const Vec3 mg = m * options.gravity;
  const Vec3 ma = m * options.targets.acceleration;
  double f_norm2 = mg.squaredNorm();
  if (f_norm2 == 0) f_norm2 = ma.squaredNorm();
  if (f_norm2 == 0) {
    throw InvalidInput("physics cost: zero gravity and zero acceleration "
                       "target leave the force term without a normalizer");
  }
  const Vec3 i_alpha = props.inertia * options.targets.angular_acceleration;
  double t_norm2 = i_alpha.squaredNorm();
  if (t_norm2 == 0) {
    t_norm2 = std::pow(std::sqrt(f_norm2) * options.char_len, 2);
    if (!(t_norm2 > 0)) {
      throw InvalidInput("physics cost: torque normalizer needs a positive "
                         "characteristic length");
    }
  }
  const Vec3 offset =
      options.accounting == ForceAccounting::kContactPlusGravity ? mg
                                                                 : Vec3::Zero();
  double force = 0, torque = 0, contact = 0;
  for (int t = 0; t < steps; ++t) {
    force += (record.force[t] + offset - ma).squaredNorm() / f_norm2;
    torque += (record.torque[t] - i_alpha).squaredNorm() / t_norm2;
    contact += std::exp(-static_cast<double>(record.contacts[t]));
  }
  force /= steps;
  torque /= steps;
  contact /= steps;
  if (terms != nullptr) {
    terms->force = force;
    terms->torque = torque;
    terms->contact = contact;
  }
  return force + torque + contact;
}

StateSnapshot InitialSnapshot(const RolloutRecord& record) {
  return {record.p_initial, record.q_initial, record.pose_target,
          record.root_target};
}

StateSnapshot FinalSnapshot(const RolloutRecord& record) {
  return {record.p_final, record.q_final, record.pose_final,
          record.root_final};
}

StabilityCost TotalCost(const RolloutRecord& record,
                        const RigidBodyProps& props,
                        const PhysicsCostOptions& options) {
  StabilityCost c;
  c.c_state =
      StateCost(InitialSnapshot(record), FinalSnapshot(record), &c.breakdown);
  c.c_physics = PhysicsCost(record, props, options, &c.breakdown);
  c.total = c.c_state + c.c_physics;
  return c;
}

double SimulationDisplacement(const RolloutRecord& record) {
  return (record.p_final - record.p_initial).norm() * 1e3;
}

}  // namespace graspstab
