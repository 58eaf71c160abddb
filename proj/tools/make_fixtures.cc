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

// Regenerates the shipped fixture files in a data directory:
//
//   hand_template.json     the built-in hand template
//   sphere_r20.obj         20 mm radius sphere hull, centered at the origin
//   pinch.json             palm-up tripod grasp (thumb, index and middle
//                          fingertips) holding the sphere
//   pinch_perturbed.json   the tripod with finger DoFs jittered by 0.15 rad
//   loose_cradle.json      the sphere resting on a slightly cupped palm
//   no_contact.json        the sphere well away from the hand
//
// The tripod finger angles come from an offline search for a grasp with
// zero resets and balanced contact forces; the sphere center is solved
// here so that each fingertip pad presses 2 mm into it.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "graspstab/contact.h"
#include "graspstab/convex_hull.h"
#include "graspstab/geom_io.h"
#include "graspstab/hand.h"
#include "graspstab/scene_io.h"

namespace graspstab {
namespace {

constexpr double kSphereRadius = 0.02;
constexpr double kSqueeze = 0.002;
constexpr double kPalmUp = -0.5 * kPi;

// Reduced layout: root (3), then per finger abduction, MCP, PIP, DIP.
const double kTripod[kReducedDofs] = {
    kPalmUp, 0, 0,                          // root
    0.1117, 0.2541, 0.9840, 0.7457,         // index
    -0.0297, 0.4183, 1.2489, 1.1292,        // middle
    0, 0, 0, 0,                             // ring
    0, 0, 0, 0,                             // little
    -0.0059, 0.9389, 1.1502, 0.8635};       // thumb

const int kPads[3] = {LinkIndex(0, 2), LinkIndex(1, 2), LinkIndex(4, 2)};

PoseParams ReducedPose(const double* values) {
  PoseParams p = PoseParams::Zero(DofLayout::kReduced, PoseRepresentation::kEuler);
  p.values.assign(values, values + kReducedDofs);
  return p;
}

// Sphere center where every pad reaches the target depth, in world
// coordinates (the palm center is the origin).
Vec3 SolveTripodCenter(const PoseParams& pose) {
  const HandState s = ComposeState(HandTemplate::Default(), ShapeParams(), pose,
                                   ObjectParams(), Vec3::Zero());
  const ConvexShape sphere = ConvexShape::MakeEllipsoid(Vec3::Constant(kSphereRadius));
  auto residual = [&](const Vec3& c) {
    double e = 0;
    for (int i : kPads) {
      const auto [shape, pose_i] = ConvexShape::FromEllipsoid(s.links[i]);
      const double d = QueryPair(shape, pose_i, sphere, Pose{Mat3::Identity(), c}).depth;
      e += (d - kSqueeze) * (d - kSqueeze);
    }
    return e;
  };
  Vec3 c = Vec3::Zero();
  for (int i : kPads) {
    const Ellipsoid& e = s.links[i];
    c += e.center() + e.rotation().col(1) * (e.radii()[1] + kSphereRadius);
  }
  c /= 3.0;
  double best = residual(c);
  for (double step = 5e-3; step > 1e-9; step *= 0.5) {
    for (bool improved = true; improved;) {
      improved = false;
      for (int k = 0; k < 3; ++k) {
        for (double sign : {-1.0, 1.0}) {
          Vec3 trial = c;
          trial[k] += sign * step;
          const double r = residual(trial);
          if (r < best) {
            best = r;
            c = trial;
            improved = true;
          }
        }
      }
    }
  }
  return c;
}

// Object parameters that turn the palm ellipsoid into the sphere centered
// at `world_center`.
ObjectParams SpherePhi(const PoseParams& pose, const Vec3& world_center) {
  const HandState s = ComposeState(HandTemplate::Default(), ShapeParams(), pose,
                                   ObjectParams(), Vec3::Zero());
  const Ellipsoid& palm = s.links[0];
  ObjectParams phi;
  phi.delta_radii = Vec3::Constant(kSphereRadius) - palm.radii();
  phi.delta_center = palm.rotation().transpose() * (world_center - palm.center());
  return phi;
}

SceneSpec BaseScene(const PoseParams& pose, const ObjectParams& phi) {
  SceneSpec spec;
  spec.units = "SI";
  spec.template_ref = "hand_template.json";
  spec.theta = pose;
  spec.phi = phi;
  spec.root_t = Vec3::Zero();
  spec.object.mesh = "sphere_r20.obj";
  spec.seed = 7;
  return spec;
}

int Run(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "hand_template.json") << HandTemplate::Default().ToJson().dump(2) << "\n";

  std::vector<Vec3> pts;
  for (const Vec3& u : UnitSpherePattern(kSurfacePatternSize)) pts.push_back(u * kSphereRadius);
  WriteObjFile((dir / "sphere_r20.obj").string(), ConvexHull(pts));

  const PoseParams tripod = ReducedPose(kTripod);
  const Vec3 center = SolveTripodCenter(tripod);
  WriteSceneFile(dir / "pinch.json", BaseScene(tripod, SpherePhi(tripod, center)));

  // The object stays where the unperturbed grasp holds it.
  PoseParams jittered = tripod;
  std::mt19937_64 rng(20260101);
  std::bernoulli_distribution coin(0.5);
  const JointLimits limits = JointLimits::Defaults();
  for (int i = 3; i < kReducedDofs; ++i) {
    const Interval lim = limits.ForDof(DofLayout::kReduced, i);
    jittered.values[i] = std::clamp(jittered.values[i] + (coin(rng) ? 0.15 : -0.15),
                                    lim.lo, lim.hi);
  }
  WriteSceneFile(dir / "pinch_perturbed.json",
                 BaseScene(jittered, SpherePhi(jittered, center)));

  // Slightly cupped fingers, sphere dropped 0.5 mm above the palm.
  PoseParams cupped = PoseParams::Zero(DofLayout::kReduced, PoseRepresentation::kEuler);
  cupped.values[0] = kPalmUp;
  for (int f = 0; f < 4; ++f) {
    cupped.values[3 + 4 * f + 1] = 0.3;
    cupped.values[3 + 4 * f + 2] = 0.3;
  }
  {
    const HandState s = ComposeState(HandTemplate::Default(), ShapeParams(), cupped,
                                     ObjectParams(), Vec3::Zero());
    const Ellipsoid& palm = s.links[0];
    const Vec3 c = palm.center() +
                   palm.rotation().col(2) * (palm.radii()[2] + kSphereRadius + 5e-4);
    WriteSceneFile(dir / "loose_cradle.json", BaseScene(cupped, SpherePhi(cupped, c)));
  }

  {
    const Vec3 far(0.0, 0.3, 0.0);
    SceneSpec spec = BaseScene(cupped, SpherePhi(cupped, far));
    WriteSceneFile(dir / "no_contact.json", spec);
  }

  std::printf("tripod sphere center %.9f %.9f %.9f\n", center.x(), center.y(), center.z());
  return 0;
}

}  // namespace
}  // namespace graspstab

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <data-dir>\n";
    return 1;
  }
  try {
    return graspstab::Run(argv[1]);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
