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

#include <gtest/gtest.h>

#include "graspstab/optimizer.h"
#include "graspstab/scene_io.h"
#include "test_util.h"

namespace graspstab {
namespace {

using testing::DataPath;
using testing::RandomUnit;

Quat RandomQuat(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, kPi);
  return Quat(Eigen::AngleAxisd(u(rng), RandomUnit(rng)));
}

RigidBodyProps Props(double mass) {
  RigidBodyProps p;
  p.mass = mass;
  p.inertia = Mat3::Identity() * 1e-5 * mass;
  return p;
}

PhysicsCostOptions Options(double char_len = 0.02) {
  PhysicsCostOptions o;
  o.char_len = char_len;
  return o;
}

RolloutRecord Synthetic(int steps, const Vec3& f, const Vec3& tau, int contacts) {
  RolloutRecord r;
  r.force.assign(steps, f);
  r.torque.assign(steps, tau);
  r.contacts.assign(steps, contacts);
  r.reset.assign(steps, false);
  r.pose_target = PoseParams::Zero(DofLayout::kReduced, PoseRepresentation::kEuler);
  r.pose_final = r.pose_target;
  return r;
}

StateSnapshot Snapshot() {
  StateSnapshot s;
  s.pose = PoseParams::Zero(DofLayout::kReduced, PoseRepresentation::kEuler);
  return s;
}

TEST(QuatAngle, BasicCases) {
  EXPECT_EQ(QuatAngle(Quat::Identity()), 0.0);
  const Quat z90(Eigen::AngleAxisd(0.5 * kPi, Vec3::UnitZ()));
  EXPECT_NEAR(QuatAngle(z90), 0.5 * kPi, 1e-15);
  EXPECT_EQ(QuatAngle(z90), QuatAngle(Quat(-z90.coeffs())));
  EXPECT_NEAR(QuatAngle(Quat(Eigen::AngleAxisd(kPi, Vec3::UnitX()))), kPi, 1e-12);
  EXPECT_THROW(QuatAngle(Quat(1.1, 0, 0, 0)), InvalidInput);
}

TEST(QuatAngle, MetricOnRotations) {
  std::mt19937_64 rng(113);
  auto dist = [](const Quat& a, const Quat& b) { return QuatAngle((a.inverse() * b).normalized()); };
  for (int i = 0; i < 500; ++i) {
    const Quat a = RandomQuat(rng), b = RandomQuat(rng), c = RandomQuat(rng);
    EXPECT_NEAR(dist(a, b), dist(b, a), 1e-9);
    EXPECT_LE(dist(a, c), dist(a, b) + dist(b, c) + 1e-9);
    EXPECT_GE(dist(a, b), 0.0);
    EXPECT_LE(dist(a, b), kPi);
  }
}

TEST(StateCost, ArithmeticCases) {
  const StateSnapshot s = Snapshot();
  EXPECT_EQ(StateCost(s, s), 0.0);
  StateSnapshot moved = s;
  moved.p = Vec3(0.03, 0, 0);
  EXPECT_NEAR(StateCost(s, moved), 0.03, 1e-15);
  StateSnapshot bent = s;
  bent.pose.values[7] = 0.23;
  EXPECT_NEAR(StateCost(s, bent), 0.01, 1e-15);
  StateSnapshot rooted = s;
  rooted.root = Vec3(0, 0.004, 0.003);
  EXPECT_NEAR(StateCost(s, rooted), 0.005, 1e-15);
  StateSnapshot turned = s;
  turned.q = Quat(Eigen::AngleAxisd(0.2, Vec3::UnitY()));
  EXPECT_NEAR(StateCost(s, turned), 0.2, 1e-12);
}

TEST(StateCost, WrapsPoseDifferences) {
  const StateSnapshot s = Snapshot();
  StateSnapshot wrapped = s;
  wrapped.pose.values[4] = 2 * kPi - 0.23;
  EXPECT_NEAR(StateCost(s, wrapped), 0.01, 1e-12);
}

TEST(StateCost, RejectsMismatchedPoses) {
  StateSnapshot a = Snapshot();
  StateSnapshot b = Snapshot();
  b.pose = PoseParams::Zero(DofLayout::kFull, PoseRepresentation::kEuler);
  EXPECT_THROW(StateCost(a, b), InvalidInput);
}

TEST(StateCost, BreakdownSumsToTotal) {
  StateSnapshot s = Snapshot(), t = Snapshot();
  t.p = Vec3(0.01, 0.02, 0.0);
  t.q = Quat(Eigen::AngleAxisd(0.3, Vec3::UnitX()));
  t.pose.values[10] = -0.46;
  t.root = Vec3(0.001, 0, 0);
  CostBreakdown b;
  const double c = StateCost(s, t, &b);
  EXPECT_DOUBLE_EQ(c, b.pos + b.ang + b.pose_l1 + b.root);
  EXPECT_NEAR(b.pos, std::sqrt(0.0005), 1e-15);
  EXPECT_NEAR(b.ang, 0.3, 1e-12);
  EXPECT_NEAR(b.pose_l1, 0.02, 1e-15);
  EXPECT_NEAR(b.root, 0.001, 1e-15);
}

TEST(PhysicsCost, PerfectBalance) {
  const RigidBodyProps p = Props(0.2);
  const RolloutRecord r = Synthetic(120, -p.mass * Vec3(0, -9.81, 0), Vec3::Zero(), 2);
  CostBreakdown b;
  EXPECT_NEAR(PhysicsCost(r, p, Options(), &b), std::exp(-2.0), 1e-12);
  EXPECT_EQ(b.force, 0.0);
  EXPECT_EQ(b.torque, 0.0);
}

TEST(PhysicsCost, FreeFall) {
  const RolloutRecord r = Synthetic(120, Vec3::Zero(), Vec3::Zero(), 0);
  CostBreakdown b;
  const double c = PhysicsCost(r, Props(0.2), Options(), &b);
  EXPECT_GE(c, 2.0);
  EXPECT_NEAR(b.force, 1.0, 1e-15);
  EXPECT_EQ(b.contact, 1.0);
}

TEST(PhysicsCost, TorqueNormalizerUsesWeightAndLength) {
  const RigidBodyProps p = Props(0.5);
  const double w = p.mass * 9.81;
  const RolloutRecord r = Synthetic(10, -p.mass * Vec3(0, -9.81, 0), Vec3(0, 0, w * 0.02), 3);
  CostBreakdown b;
  PhysicsCost(r, p, Options(0.02), &b);
  EXPECT_NEAR(b.torque, 1.0, 1e-12);
  EXPECT_THROW(PhysicsCost(r, p, Options(0.0)), InvalidInput);
}

TEST(PhysicsCost, ScaleInvariance) {
  std::mt19937_64 rng(127);
  std::uniform_real_distribution<double> u(-1, 1);
  RolloutRecord r = Synthetic(50, Vec3::Zero(), Vec3::Zero(), 0);
  for (int t = 0; t < 50; ++t) {
    r.force[t] = Vec3(u(rng), u(rng), u(rng));
    r.torque[t] = Vec3(u(rng), u(rng), u(rng)) * 0.01;
    r.contacts[t] = static_cast<int>(rng() % 4);
  }
  const double base = PhysicsCost(r, Props(0.3), Options());
  for (double k : {2.0, 0.1, 7.5}) {
    RolloutRecord s = r;
    for (int t = 0; t < 50; ++t) {
      s.force[t] *= k;
      s.torque[t] *= k;
    }
    EXPECT_NEAR(PhysicsCost(s, Props(0.3 * k), Options()), base, 1e-12 * base);
  }
}

TEST(PhysicsCost, DegenerateInputs) {
  const RolloutRecord empty = Synthetic(0, Vec3::Zero(), Vec3::Zero(), 0);
  EXPECT_THROW(PhysicsCost(empty, Props(1), Options()), InvalidInput);
  const RolloutRecord r = Synthetic(5, Vec3::Zero(), Vec3::Zero(), 0);
  EXPECT_THROW(PhysicsCost(r, Props(0), Options()), InvalidInput);
  PhysicsCostOptions weightless = Options();
  weightless.gravity = Vec3::Zero();
  EXPECT_THROW(PhysicsCost(r, Props(1), weightless), InvalidInput);
  // A nonzero acceleration target supplies the normalizer.
  weightless.targets.acceleration = Vec3(1, 0, 0);
  EXPECT_NEAR(PhysicsCost(r, Props(1), weightless), 1.0 + 1.0, 1e-15);
}

TEST(PhysicsCost, LiteralAccountingReadsTotalForce) {
  const RigidBodyProps p = Props(0.2);
  const RolloutRecord balanced = Synthetic(20, Vec3::Zero(), Vec3::Zero(), 1);
  PhysicsCostOptions o = Options();
  o.accounting = ForceAccounting::kLiteral;
  CostBreakdown b;
  PhysicsCost(balanced, p, o, &b);
  EXPECT_EQ(b.force, 0.0);
  o.accounting = ForceAccounting::kContactPlusGravity;
  PhysicsCost(balanced, p, o, &b);
  EXPECT_NEAR(b.force, 1.0, 1e-15);
}

TEST(TotalCost, SumsComponents) {
  const RigidBodyProps p = Props(0.2);
  RolloutRecord r = Synthetic(30, Vec3(0.1, 1.5, 0), Vec3(0, 0.001, 0), 2);
  r.p_final = Vec3(0.002, -0.001, 0);
  r.q_final = Quat(Eigen::AngleAxisd(0.05, Vec3::UnitZ()));
  r.pose_final.values[5] = 0.1;
  const StabilityCost c = TotalCost(r, p, Options());
  EXPECT_EQ(c.total, c.c_state + c.c_physics);
  EXPECT_NEAR(c.c_state, StateCost(InitialSnapshot(r), FinalSnapshot(r)), 1e-15);
  EXPECT_NEAR(c.c_physics, PhysicsCost(r, p, Options()), 1e-15);
  EXPECT_GT(c.breakdown.contact, 0.0);
  EXPECT_LE(c.breakdown.contact, 1.0);
  const nlohmann::json j = c.ToJson();
  EXPECT_DOUBLE_EQ(j["total"].get<double>(), c.total);
  EXPECT_TRUE(j["breakdown"].contains("torque"));
}

TEST(TotalCost, ZeroInputsLeaveContactFloor) {
  const RigidBodyProps p = Props(0.2);
  RolloutRecord r = Synthetic(4, -p.mass * Vec3(0, -9.81, 0), Vec3::Zero(), 0);
  r.contacts = {0, 1, 2, 3};
  const double floor = (1 + std::exp(-1.0) + std::exp(-2.0) + std::exp(-3.0)) / 4;
  EXPECT_NEAR(TotalCost(r, p, Options()).total, floor, 1e-15);
  EXPECT_GE(TotalCost(r, p, Options()).total, std::exp(-3.0));
}

TEST(TotalCost, MonotoneInObjectDrift) {
  const RigidBodyProps p = Props(0.2);
  RolloutRecord r = Synthetic(10, Vec3(0, 1, 0), Vec3::Zero(), 1);
  double prev = -1;
  for (double d : {0.0, 0.001, 0.01, 0.05}) {
    r.p_final = Vec3(d, 0, 0);
    const double c = TotalCost(r, p, Options()).total;
    EXPECT_GT(c, prev);
    prev = c;
  }
}

TEST(SimulationDisplacement, Cases) {
  RolloutRecord r = Synthetic(5, Vec3::Zero(), Vec3::Zero(), 0);
  EXPECT_EQ(SimulationDisplacement(r), 0.0);
  r.p_initial = Vec3(1, 2, 3);
  r.p_final = Vec3(1, 2, 3);
  r.reset[2] = true;
  r.reset_count = 1;
  EXPECT_EQ(SimulationDisplacement(r), 0.0);
  r.p_final = Vec3(1, 2, 3.004);
  EXPECT_NEAR(SimulationDisplacement(r), 4.0, 1e-9);
}

TEST(SimulationDisplacement, HalfSecondFreeFall) {
  SimConfig cfg;
  cfg.enable_reset = false;
  ObjectSetup o;
  o.mesh = testing::BoxMesh(Vec3::Constant(0.02));
  o.props = MeshMassProps(o.mesh, 500.0);
  const RolloutRecord rec = Rollout(
      BuildScene(std::nullopt, o, Targets{PoseParams::Zero(DofLayout::kReduced, PoseRepresentation::kEuler), Vec3::Zero()}, cfg),
      cfg);
  // 0.5 s at 240 Hz: g dt^2 n (n + 1) / 2 with n = 120.
  EXPECT_NEAR(SimulationDisplacement(rec), 9.81 / 240.0 / 240.0 * 120 * 121 / 2 * 1e3, 1e-6);
  EXPECT_NEAR(SimulationDisplacement(rec), 1230, 10);
}

TEST(CostOrdering, PinchBeatsCradleBeatsNoContact) {
  double costs[3];
  const char* names[3] = {"pinch.json", "loose_cradle.json", "no_contact.json"};
  for (int i = 0; i < 3; ++i) {
    const ResolvedScene s = LoadScene(DataPath(names[i]));
    costs[i] = EvaluateSample(s.problem, s.sim, CenterSample(s.problem)).cost.total;
  }
  EXPECT_LT(costs[0], costs[1]);
  EXPECT_LT(costs[1], costs[2]);
}

}  // namespace
}  // namespace graspstab
