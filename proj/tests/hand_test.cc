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

#include "graspstab/hand.h"

#include <gtest/gtest.h>

#include "test_util.h"

namespace graspstab {
namespace {

using testing::RandomRotation;
using testing::RandomUnit;
using testing::RotationAngle;

const HandTemplate& Tmpl() {
  static const HandTemplate t = HandTemplate::Default();
  return t;
}

Mat3 OracleEulerXyz(const Vec3& e) {
  return (Eigen::AngleAxisd(e.x(), Vec3::UnitX()) * Eigen::AngleAxisd(e.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(e.z(), Vec3::UnitZ()))
      .toRotationMatrix();
}

// Chained homogeneous transforms: each link frame is its parent frame,
// moved to the parent anchor, rotated by the rest offset and the local
// Euler rotation, then moved back by the child anchor.
std::array<Eigen::Isometry3d, kNumLinks> OracleFk(const std::vector<double>& full_euler,
                                                  const ShapeParams& beta, const Vec3& root) {
  std::array<Eigen::Isometry3d, kNumLinks> t;
  auto local = [&](int i) {
    return OracleEulerXyz(Vec3(full_euler[3 * i], full_euler[3 * i + 1], full_euler[3 * i + 2]));
  };
  auto radii = [&](int i) { return Vec3(Tmpl().link(i).rest.radii() + beta.delta_radii[i]); };
  t[0] = Eigen::Translation3d(Tmpl().link(0).rest.center() + root) *
         Eigen::Isometry3d(Tmpl().link(0).rest.rotation() * local(0));
  for (int i = 1; i < kNumLinks; ++i) {
    const LinkTemplate& l = Tmpl().link(i);
    const Mat3 rest_rel = Tmpl().link(l.parent).rest.rotation().transpose() * l.rest.rotation();
    t[i] = t[l.parent] * Eigen::Translation3d(radii(l.parent).cwiseProduct(l.parent_anchor)) *
           Eigen::Isometry3d(rest_rel * local(i)) *
           Eigen::Translation3d(-radii(i).cwiseProduct(l.child_anchor));
  }
  return t;
}

PoseParams FullEuler(const std::vector<double>& v) {
  PoseParams p = PoseParams::Zero(DofLayout::kFull, PoseRepresentation::kEuler);
  p.values = v;
  return p;
}

std::vector<double> RandomFullEuler(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(kFullDofs);
  for (double& x : v) x = u(rng);
  return v;
}

double MaxAnchorGap(const HandState& s, const ShapeParams& beta) {
  double gap = 0;
  for (int i = 1; i < kNumLinks; ++i) {
    const LinkTemplate& l = Tmpl().link(i);
    const Ellipsoid& p = s.links[l.parent];
    const Ellipsoid& c = s.links[i];
    (void)beta;
    const Vec3 a = p.center() + p.rotation() * p.radii().cwiseProduct(l.parent_anchor);
    const Vec3 b = c.center() + c.rotation() * c.radii().cwiseProduct(l.child_anchor);
    gap = std::max(gap, (a - b).norm());
  }
  return gap;
}

TEST(HandTemplate, TreeShapeAndRestConnectivity) {
  EXPECT_NO_THROW(Tmpl().Validate());
  EXPECT_EQ(Tmpl().link(0).parent, -1);
  for (int f = 0; f < kNumFingers; ++f) {
    EXPECT_EQ(Tmpl().link(LinkIndex(f, 0)).parent, 0);
    EXPECT_EQ(Tmpl().link(LinkIndex(f, 1)).parent, LinkIndex(f, 0));
    EXPECT_EQ(Tmpl().link(LinkIndex(f, 2)).parent, LinkIndex(f, 1));
  }
  const HandState rest = ComposeState(Tmpl(), ShapeParams(), PoseParams(), ObjectParams(),
                                      Vec3::Zero());
  EXPECT_LT(MaxAnchorGap(rest, ShapeParams()), 1e-9);
}

TEST(HandTemplate, PalmDimensionsAndCenteredOrigin) {
  const Ellipsoid& palm = Tmpl().link(0).rest;
  EXPECT_NEAR(palm.center().norm(), 0, 1e-15);
  // 90 x 90 x 25 mm palm block.
  EXPECT_NEAR(2 * palm.radii()[0], 0.092, 0.003);
  EXPECT_NEAR(2 * palm.radii()[1], 0.090, 0.003);
  EXPECT_NEAR(2 * palm.radii()[2], 0.025, 0.001);
}

TEST(HandTemplate, JsonRoundtripAndValidation) {
  const nlohmann::json j = Tmpl().ToJson();
  const HandTemplate back = HandTemplate::FromJson(j);
  for (int i = 0; i < kNumLinks; ++i) {
    EXPECT_EQ(back.link(i).name, Tmpl().link(i).name);
    EXPECT_EQ(back.link(i).parent, Tmpl().link(i).parent);
    EXPECT_NEAR((back.link(i).rest.center() - Tmpl().link(i).rest.center()).norm(), 0, 1e-15);
    EXPECT_NEAR((back.link(i).rest.radii() - Tmpl().link(i).rest.radii()).norm(), 0, 1e-15);
  }
  nlohmann::json broken = j;
  broken["links"][4]["parent"] = 7;
  EXPECT_THROW(HandTemplate::FromJson(broken), InvalidInput);
}

TEST(ComposeState, IdentityParametersReproduceTemplate) {
  ObjectParams phi;
  phi.delta_center = Vec3(0.01, 0.02, 0.03);
  const HandState s = ComposeState(Tmpl(), ShapeParams(), PoseParams(), phi, Vec3::Zero());
  for (int i = 0; i < kNumLinks; ++i) {
    EXPECT_NEAR((s.links[i].center() - Tmpl().link(i).rest.center()).norm(), 0, 1e-12);
    EXPECT_LT(RotationAngle(s.links[i].rotation(), Tmpl().link(i).rest.rotation()), 1e-9);
    EXPECT_EQ(s.links[i].radii(), Tmpl().link(i).rest.radii());
  }
  const Ellipsoid& palm = Tmpl().link(0).rest;
  EXPECT_NEAR((s.object.center() - (palm.center() + palm.rotation() * phi.delta_center)).norm(),
              0, 1e-12);
  EXPECT_EQ(s.object.radii(), palm.radii());
  EXPECT_EQ(s.All().size(), 17u);
}

TEST(ComposeState, IndexMcpQuarterTurnRotatesChainAboutAnchor) {
  std::vector<double> v(kFullDofs, 0.0);
  const int prox = LinkIndex(0, 0);
  v[3 * prox + 2] = 0.5 * kPi;
  const HandState rest = ComposeState(Tmpl(), ShapeParams(), PoseParams(), ObjectParams(),
                                      Vec3::Zero());
  const HandState bent = ComposeState(Tmpl(), ShapeParams(), FullEuler(v), ObjectParams(),
                                      Vec3::Zero());
  const Ellipsoid& palm = rest.links[0];
  const Vec3 mcp = palm.center() +
                   palm.rotation() * palm.radii().cwiseProduct(Tmpl().link(prox).parent_anchor);
  const Mat3 rp = rest.links[prox].rotation();
  const Mat3 world = rp * Eigen::AngleAxisd(0.5 * kPi, Vec3::UnitZ()).toRotationMatrix() *
                     rp.transpose();
  for (int s = 0; s < 3; ++s) {
    const int i = LinkIndex(0, s);
    const Vec3 expected = mcp + world * (rest.links[i].center() - mcp);
    EXPECT_NEAR((bent.links[i].center() - expected).norm(), 0, 1e-9) << "segment " << s;
  }
  for (int f = 1; f < kNumFingers; ++f) {
    EXPECT_NEAR((bent.links[LinkIndex(f, 2)].center() - rest.links[LinkIndex(f, 2)].center()).norm(),
                0, 1e-15);
  }
}

TEST(ComposeState, MatchesChainedTransformOracle) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> ub(-0.003, 0.003);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> v = RandomFullEuler(rng, 0.8);
    ShapeParams beta;
    for (Vec3& d : beta.delta_radii) d = Vec3(ub(rng), ub(rng), ub(rng));
    const Vec3 root(ub(rng), ub(rng), ub(rng));
    const HandState s = ComposeState(Tmpl(), beta, FullEuler(v), ObjectParams(), root);
    const auto oracle = OracleFk(v, beta, root);
    for (int i = 0; i < kNumLinks; ++i) {
      EXPECT_NEAR((s.links[i].center() - oracle[i].translation()).norm(), 0, 1e-9);
      EXPECT_LT(RotationAngle(s.links[i].rotation(), oracle[i].rotation()), 1e-9);
    }
    // The joints are the shared anchors, which the oracle reaches through
    // the child frame.
    const JointSet joints = ExtractJoints(Tmpl(), s);
    for (int f = 0; f < kNumFingers; ++f) {
      for (int k = 0; k < 3; ++k) {
        const int i = LinkIndex(f, k);
        const Vec3 r = Tmpl().link(i).rest.radii() + beta.delta_radii[i];
        const Vec3 expected = oracle[i] * Vec3(r.cwiseProduct(Tmpl().link(i).child_anchor));
        EXPECT_NEAR((joints[1 + 4 * f + k] - expected).norm(), 0, 1e-9);
      }
      const int d = LinkIndex(f, 2);
      const Vec3 r = Tmpl().link(d).rest.radii() + beta.delta_radii[d];
      EXPECT_NEAR((joints[4 + 4 * f] - oracle[d] * Vec3(r.x(), 0, 0)).norm(), 0, 1e-9);
    }
  }
}

TEST(ComposeState, PalmGrowthMovesMcpAnchorsOutward) {
  ShapeParams beta;
  beta.delta_radii[0] = Vec3::Constant(0.005);
  const HandState rest = ComposeState(Tmpl(), ShapeParams(), PoseParams(), ObjectParams(),
                                      Vec3::Zero());
  const HandState grown = ComposeState(Tmpl(), beta, PoseParams(), ObjectParams(), Vec3::Zero());
  const JointSet a = ExtractJoints(Tmpl(), rest);
  const JointSet b = ExtractJoints(Tmpl(), grown);
  const Mat3 r = Tmpl().link(0).rest.rotation();
  for (int f = 0; f < kNumFingers; ++f) {
    const Vec3 u = Tmpl().link(LinkIndex(f, 0)).parent_anchor;
    EXPECT_NEAR((b[1 + 4 * f] - a[1 + 4 * f] - 0.005 * (r * u)).norm(), 0, 1e-12);
    EXPECT_GT((b[1 + 4 * f] - Tmpl().link(0).rest.center()).norm(),
              (a[1 + 4 * f] - Tmpl().link(0).rest.center()).norm());
  }
}

TEST(ComposeState, ChainStaysConnectedForRandomParameters) {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> ub(-0.004, 0.006);
  for (int trial = 0; trial < 200; ++trial) {
    ShapeParams beta;
    for (Vec3& d : beta.delta_radii) d = Vec3(ub(rng), ub(rng), ub(rng));
    const HandState s = ComposeState(Tmpl(), beta, FullEuler(RandomFullEuler(rng, kPi)),
                                     ObjectParams(), Vec3(ub(rng), ub(rng), ub(rng)));
    EXPECT_LT(MaxAnchorGap(s, beta), 1e-6);
  }
}

TEST(ComposeState, ShapeChangesKeepRestOrientations) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> ub(-0.004, 0.006);
  ShapeParams beta;
  for (Vec3& d : beta.delta_radii) d = Vec3(ub(rng), ub(rng), ub(rng));
  const HandState s = ComposeState(Tmpl(), beta, PoseParams(), ObjectParams(), Vec3::Zero());
  for (int i = 0; i < kNumLinks; ++i) {
    EXPECT_LT(RotationAngle(s.links[i].rotation(), Tmpl().link(i).rest.rotation()), 1e-9);
    EXPECT_NEAR((s.links[i].radii() - Tmpl().link(i).rest.radii() - beta.delta_radii[i]).norm(),
                0, 1e-15);
  }
}

TEST(ComposeState, RootInputsEqualGlobalRigidTransform) {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v = RandomFullEuler(rng, 0.7);
    v[0] = v[1] = v[2] = 0;
    const Vec3 t = RandomUnit(rng) * 0.1;
    const HandState base = ComposeState(Tmpl(), ShapeParams(), FullEuler(v), ObjectParams(),
                                        Vec3::Zero());
    const Vec3 root_euler(0.4 * RandomUnit(rng));
    v[0] = root_euler.x();
    v[1] = root_euler.y();
    v[2] = root_euler.z();
    const HandState moved = ComposeState(Tmpl(), ShapeParams(), FullEuler(v), ObjectParams(), t);
    const Mat3 r0 = Tmpl().link(0).rest.rotation();
    const Mat3 world = r0 * OracleEulerXyz(root_euler) * r0.transpose();
    const Vec3 pivot = Tmpl().link(0).rest.center();
    const JointSet a = ExtractJoints(Tmpl(), base);
    const JointSet b = ExtractJoints(Tmpl(), moved);
    for (int k = 0; k < kNumJoints; ++k) {
      EXPECT_NEAR((b[k] - (world * (a[k] - pivot) + pivot + t)).norm(), 0, 1e-9);
    }
  }
}

TEST(ComposeState, UnderflowNamesTheLink) {
  ShapeParams beta;
  beta.delta_radii[LinkIndex(2, 1)] = Vec3(0, -0.5, 0);
  try {
    ComposeState(Tmpl(), beta, PoseParams(), ObjectParams(), Vec3::Zero());
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find(Tmpl().link(LinkIndex(2, 1)).name), std::string::npos);
  }
  ObjectParams phi;
  phi.delta_radii = Vec3(-1, 0, 0);
  EXPECT_THROW(ComposeState(Tmpl(), ShapeParams(), PoseParams(), phi, Vec3::Zero()),
               InvalidInput);
}

TEST(ExtractJoints, RestPoseMatchesTemplateAnchors) {
  const HandState rest = ComposeState(Tmpl(), ShapeParams(), PoseParams(), ObjectParams(),
                                      Vec3::Zero());
  const JointSet j = ExtractJoints(Tmpl(), rest);
  const Ellipsoid& palm = Tmpl().link(0).rest;
  EXPECT_EQ(j[0], palm.center() + palm.rotation() * palm.radii().cwiseProduct(Tmpl().wrist_anchor()));
  for (int f = 0; f < kNumFingers; ++f) {
    for (int s = 0; s < 3; ++s) {
      const LinkTemplate& l = Tmpl().link(LinkIndex(f, s));
      const Ellipsoid& p = Tmpl().link(l.parent).rest;
      EXPECT_NEAR((j[1 + 4 * f + s] - (p.center() + p.rotation() * p.radii().cwiseProduct(l.parent_anchor))).norm(),
                  0, 1e-9);
    }
    // Positive bone lengths along every chain.
    for (int k = 0; k < 4; ++k) {
      const Vec3 from = k == 0 ? j[0] : j[4 * f + k];
      EXPECT_GT((j[1 + 4 * f + k] - from).norm(), 1e-3);
    }
  }
}

TEST(ExtractJoints, RigidRotationEquivariance) {
  std::mt19937_64 rng(61);
  const HandState s = ComposeState(Tmpl(), ShapeParams(), FullEuler(RandomFullEuler(rng, 0.6)),
                                   ObjectParams(), Vec3::Zero());
  const Mat3 r = RandomRotation(rng);
  const Vec3 t(0.1, -0.3, 0.2);
  HandState moved = s;
  for (Ellipsoid& e : moved.links) e = e.WithPose(r * e.center() + t, r * e.rotation());
  const JointSet a = ExtractJoints(Tmpl(), s);
  const JointSet b = ExtractJoints(Tmpl(), moved);
  for (int k = 0; k < kNumJoints; ++k) EXPECT_NEAR((b[k] - (r * a[k] + t)).norm(), 0, 1e-12);
}

TEST(AngleConversion, ZeroAndSingleAxis) {
  PoseParams aa = PoseParams::Zero(DofLayout::kFull, PoseRepresentation::kAxisAngle);
  PoseParams e = AxisAngleToEuler(aa);
  for (double x : e.values) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(e.representation, PoseRepresentation::kEuler);
  aa.values[5] = 0.5 * kPi;
  e = AxisAngleToEuler(aa);
  EXPECT_NEAR(e.values[3], 0, 1e-12);
  EXPECT_NEAR(e.values[4], 0, 1e-12);
  EXPECT_NEAR(e.values[5], 0.5 * kPi, 1e-12);
}

TEST(AngleConversion, RandomRoundtrip) {
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> u(-kPi, kPi), pitch(-1.5, 1.5);
  for (int trial = 0; trial < 100; ++trial) {
    PoseParams e = PoseParams::Zero(DofLayout::kFull, PoseRepresentation::kEuler);
    for (int i = 0; i < kFullDofs; ++i) e.values[i] = i % 3 == 1 ? pitch(rng) : u(rng);
    const PoseParams back = AxisAngleToEuler(EulerToAxisAngle(e));
    for (int i = 0; i < kFullDofs; ++i) EXPECT_NEAR(back.values[i], e.values[i], 1e-9);
    // The axis-angle form describes the same rotation.
    const PoseParams aa = EulerToAxisAngle(e);
    for (int l = 0; l < kNumLinks; ++l) {
      const Vec3 a(aa.values[3 * l], aa.values[3 * l + 1], aa.values[3 * l + 2]);
      const Mat3 ra = a.norm() > 0 ? Mat3(Eigen::AngleAxisd(a.norm(), a.normalized()))
                                   : Mat3::Identity();
      EXPECT_LT(RotationAngle(ra, OracleEulerXyz(Vec3(e.values[3 * l], e.values[3 * l + 1],
                                                      e.values[3 * l + 2]))),
                1e-9);
    }
  }
}

TEST(AngleConversion, GimbalLockIsRejected) {
  PoseParams e = PoseParams::Zero(DofLayout::kFull, PoseRepresentation::kEuler);
  e.values[4] = 0.5 * kPi;
  EXPECT_THROW(EulerToAxisAngle(e), InvalidInput);
  e.values[4] = 0.5 * kPi - 1e-3;
  EXPECT_NO_THROW(EulerToAxisAngle(e));
}

TEST(ReducedLayout, ZeroAndInManifoldRoundtrip) {
  std::vector<double> full(kFullDofs, 0.0);
  for (double x : ReduceDofs(full)) EXPECT_EQ(x, 0.0);
  for (int f = 0; f < kNumFingers; ++f) full[3 * LinkIndex(f, 1) + 2] = 0.1 * (f + 1);
  EXPECT_EQ(ExpandDofs(ReduceDofs(full)), full);
}

TEST(ReducedLayout, ProjectionDropsOnlyUnsupportedAxes) {
  std::mt19937_64 rng(71);
  const std::vector<double> full = RandomFullEuler(rng, 1.0);
  const std::vector<double> back = ExpandDofs(ReduceDofs(full));
  const auto& map = ReducedToFullIndex();
  for (int i = 0; i < kFullDofs; ++i) {
    const bool kept = std::find(map.begin(), map.end(), i) != map.end();
    if (kept) {
      EXPECT_EQ(back[i], full[i]);
    } else {
      EXPECT_EQ(back[i], 0.0);
    }
  }
  // Twist on a middle segment is dropped.
  std::vector<double> twist(kFullDofs, 0.0);
  twist[3 * LinkIndex(1, 1) + 0] = 0.3;
  for (double x : ReduceDofs(twist)) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(map.size(), 23u);
}

TEST(ReducedLayout, ReduceAfterExpandIsIdentity) {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> r(kReducedDofs);
    for (double& x : r) x = u(rng);
    EXPECT_EQ(ReduceDofs(ExpandDofs(r)), r);
  }
}

TEST(ReducedLayout, ReducedPoseComposesLikeExpandedPose) {
  std::mt19937_64 rng(79);
  std::uniform_real_distribution<double> u(-0.5, 1.0);
  PoseParams r = PoseParams::Zero(DofLayout::kReduced, PoseRepresentation::kEuler);
  for (double& x : r.values) x = u(rng);
  const HandState a = ComposeState(Tmpl(), ShapeParams(), r, ObjectParams(), Vec3::Zero());
  const HandState b = ComposeState(Tmpl(), ShapeParams(), FullEuler(ExpandDofs(r.values)),
                                   ObjectParams(), Vec3::Zero());
  for (int i = 0; i < kNumLinks; ++i) {
    EXPECT_NEAR((a.links[i].center() - b.links[i].center()).norm(), 0, 1e-15);
  }
}

TEST(ValidatePose, DefaultsAndBoundaries) {
  const JointLimits lim = JointLimits::Defaults();
  PoseParams p = PoseParams::Zero(DofLayout::kReduced, PoseRepresentation::kEuler);
  EXPECT_TRUE(ValidatePose(p, lim).empty());
  const int pip = 3 + 4 * 0 + 2;
  p.values[pip] = 3.0;
  const auto v = ValidatePose(p, lim);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].index, pip);
  EXPECT_EQ(v[0].dof, "index_middle.flexion");
  p.values[pip] = 1.75;
  p.values[3] = -0.35;
  p.values[4] = -0.26;
  EXPECT_TRUE(ValidatePose(p, lim).empty());
  p.values[3] = -0.35 - 1e-12;
  EXPECT_EQ(ValidatePose(p, lim).size(), 1u);
  for (int f = 0; f < kNumFingers; ++f) {
    EXPECT_DOUBLE_EQ(lim.ForDof(DofLayout::kReduced, 3 + 4 * f).lo, -0.35);
    EXPECT_DOUBLE_EQ(lim.ForDof(DofLayout::kReduced, 3 + 4 * f).hi, 0.35);
    for (int k = 1; k < 4; ++k) {
      EXPECT_DOUBLE_EQ(lim.ForDof(DofLayout::kReduced, 3 + 4 * f + k).lo, -0.26);
      EXPECT_DOUBLE_EQ(lim.ForDof(DofLayout::kReduced, 3 + 4 * f + k).hi, 1.75);
    }
  }
}

TEST(PoseParams, SizesFollowTheLayout) {
  EXPECT_EQ(DofCount(DofLayout::kFull), 48);
  EXPECT_EQ(DofCount(DofLayout::kReduced), 23);
  PoseParams p = PoseParams::Zero(DofLayout::kReduced, PoseRepresentation::kEuler);
  EXPECT_EQ(p.values.size(), 23u);
  p.values.push_back(0);
  EXPECT_THROW(p.Validate(), InvalidInput);
}

}  // namespace
}  // namespace graspstab
