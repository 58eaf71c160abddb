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

#include <cmath>

#include "graspstab/geom_io.h"

namespace graspstab {
namespace {

constexpr const char* kFingerNames[kNumFingers] = {"index", "middle", "ring",
                                                   "little", "thumb"};
constexpr const char* kSegmentNames[3] = {"proximal", "middle", "distal"};

// Segment sizes in meters: bone length, volar thickness, lateral width.
struct SegmentSize {
  double length, thickness, width;
};

constexpr SegmentSize kFingerSizes[kNumFingers][3] = {
    {{0.045, 0.020, 0.019}, {0.027, 0.018, 0.017}, {0.022, 0.016, 0.015}},
    {{0.048, 0.021, 0.020}, {0.030, 0.019, 0.018}, {0.024, 0.017, 0.016}},
    {{0.045, 0.020, 0.019}, {0.029, 0.018, 0.017}, {0.023, 0.016, 0.015}},
    {{0.036, 0.018, 0.017}, {0.021, 0.016, 0.015}, {0.020, 0.015, 0.014}},
    {{0.045, 0.022, 0.021}, {0.032, 0.020, 0.019}, {0.028, 0.018, 0.017}},
};

// Palm: 92 mm long (x), 90 mm wide (y), 25 mm thick (z, volar = +z).
Vec3 PalmRadii() { return {0.046, 0.045, 0.0125}; }

// Finger roots on the distal rim of the palm, spread about the palm normal.
constexpr double kFingerSpread[4] = {-0.6, -0.2, 0.2, 0.6};

Vec3 AnchorPoint(const Ellipsoid& e, const Vec3& u) {
  return e.center() + e.rotation() * e.radii().cwiseProduct(u);
}

Vec3 Block(std::span<const double> v, int link) {
  return {v[3 * link], v[3 * link + 1], v[3 * link + 2]};
}

}  // namespace

HandTemplate HandTemplate::Default() {
  HandTemplate t;
  t.links_[0].name = "palm";
  t.links_[0].parent = -1;
  t.links_[0].rest = Ellipsoid(Vec3::Zero(), PalmRadii(), Vec3::Zero());

  for (int f = 0; f < kNumFingers; ++f) {
    Vec3 u;
    Mat3 frame;
    if (f < 4) {
      const double phi = kFingerSpread[f];
      u = Vec3(std::cos(phi), std::sin(phi), 0.0);
    } else {
      // Thumb root on the radial side, slightly volar and proximal.
      u = Vec3(-0.20, -0.95, 0.25).normalized();
    }
    // Bone axis along the palm surface normal keeps the rest contact
    // tangential.
    const Vec3 x = u.cwiseQuotient(PalmRadii()).normalized();
    Vec3 y;
    if (f < 4) {
      y = Vec3::UnitZ();
    } else {
      // Thumb flexion sweeps toward the fingertips.
      const Vec3 target = Vec3(1.0, 0.0, 0.35).normalized();
      y = (target - x * x.dot(target)).normalized();
    }
    frame << x, y, x.cross(y);
    const Vec3 aa = MatrixToAxisAngle(frame);

    int parent = 0;
    Vec3 parent_anchor = u;
    for (int s = 0; s < 3; ++s) {
      const SegmentSize& sz = kFingerSizes[f][s];
      const Vec3 radii(sz.length / 2, sz.thickness / 2, sz.width / 2);
      const Ellipsoid& pe = t.links_[parent].rest;
      const Vec3 joint = AnchorPoint(pe, parent_anchor);
      const Vec3 center = joint + frame.col(0) * radii.x();
      LinkTemplate& link = t.links_[LinkIndex(f, s)];
      link.name = std::string(kFingerNames[f]) + "_" + kSegmentNames[s];
      link.parent = parent;
      link.rest = Ellipsoid(center, radii, aa);
      link.parent_anchor = parent_anchor;
      link.child_anchor = -Vec3::UnitX();
      parent = LinkIndex(f, s);
      parent_anchor = Vec3::UnitX();
    }
  }
  t.Validate();
  return t;
}

void HandTemplate::Validate() const {
  if (links_[0].parent != -1) throw InvalidInput("template: palm must be root");
  for (int i = 0; i < kNumLinks; ++i) {
    const LinkTemplate& l = links_[i];
    const Vec3& r = l.rest.radii();
    if (r[0] < r[1] || r[1] < r[2]) {
      throw InvalidInput("template: radii of '" + l.name +
                         "' are not sorted descending");
    }
    if (i == 0) continue;
    const int f = (i - 1) / 3, s = (i - 1) % 3;
    const int expected = s == 0 ? 0 : LinkIndex(f, s - 1);
    if (l.parent != expected) {
      throw InvalidInput("template: link '" + l.name +
                         "' breaks the five three-link chains");
    }
    const Vec3 a = AnchorPoint(links_[l.parent].rest, l.parent_anchor);
    const Vec3 b = AnchorPoint(l.rest, l.child_anchor);
    if ((a - b).norm() > 1e-9) {
      throw InvalidInput("template: anchor gap at '" + l.name + "' is " +
                         std::to_string((a - b).norm()) + " m");
    }
  }
}

nlohmann::json HandTemplate::ToJson() const {
  nlohmann::json links = nlohmann::json::array();
  for (const LinkTemplate& l : links_) {
    links.push_back({{"name", l.name},
                     {"parent", l.parent},
                     {"ellipsoid", EllipsoidToJson(l.rest)},
                     {"parent_anchor", Vec3ToJson(l.parent_anchor)},
                     {"child_anchor", Vec3ToJson(l.child_anchor)}});
  }
  return {{"units", "SI"},
          {"wrist_anchor", Vec3ToJson(wrist_anchor_)},
          {"links", links}};
}

HandTemplate HandTemplate::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInput("template: expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "units" && key != "wrist_anchor" && key != "links") {
      throw InvalidInput("template: unknown field '" + key + "'");
    }
  }
  if (!j.contains("links") || !j["links"].is_array() ||
      j["links"].size() != kNumLinks) {
    throw InvalidInput("template.links: expected 16 links");
  }
  HandTemplate t;
  if (j.contains("wrist_anchor")) {
    t.wrist_anchor_ = Vec3FromJson(j["wrist_anchor"], "template.wrist_anchor");
  }
  for (int i = 0; i < kNumLinks; ++i) {
    const auto& lj = j["links"][i];
    const std::string field = "template.links[" + std::to_string(i) + "]";
    if (!lj.is_object()) throw InvalidInput(field + ": expected an object");
    LinkTemplate& l = t.links_[i];
    try {
      l.name = lj.at("name").get<std::string>();
      l.parent = lj.at("parent").get<int>();
    } catch (const nlohmann::json::exception&) {
      throw InvalidInput(field + ": 'name' (string) and 'parent' (integer) "
                         "are required");
    }
    l.rest = EllipsoidFromJson(lj.at("ellipsoid"));
    l.parent_anchor = lj.contains("parent_anchor")
                          ? Vec3FromJson(lj["parent_anchor"],
                                         field + ".parent_anchor")
                          : Vec3::Zero();
    l.child_anchor = lj.contains("child_anchor")
                         ? Vec3FromJson(lj["child_anchor"],
                                        field + ".child_anchor")
                         : Vec3::Zero();
  }
  t.Validate();
  return t;
}

PoseParams PoseParams::Zero(DofLayout layout, PoseRepresentation rep) {
  PoseParams p;
  p.layout = layout;
  p.representation = rep;
  p.values.assign(DofCount(layout), 0.0);
  return p;
}

void PoseParams::Validate() const {
  if (static_cast<int>(values.size()) != DofCount(layout)) {
    throw InvalidInput("pose: expected " + std::to_string(DofCount(layout)) +
                       " values, got " + std::to_string(values.size()));
  }
  if (layout == DofLayout::kReduced &&
      representation != PoseRepresentation::kEuler) {
    throw InvalidInput("pose: the reduced layout requires Euler angles");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidInput("pose: non-finite value");
  }
}

std::vector<Ellipsoid> HandState::All() const {
  std::vector<Ellipsoid> out;
  out.reserve(kNumLinks + 1);
  out.push_back(object);
  out.insert(out.end(), links.begin(), links.end());
  return out;
}

const std::array<int, kReducedDofs>& ReducedToFullIndex() {
  static const std::array<int, kReducedDofs> map = [] {
    std::array<int, kReducedDofs> m{};
    m[0] = 0;
    m[1] = 1;
    m[2] = 2;
    for (int f = 0; f < kNumFingers; ++f) {
      m[3 + 4 * f + 0] = 3 * LinkIndex(f, 0) + 1;  // MCP abduction (y)
      m[3 + 4 * f + 1] = 3 * LinkIndex(f, 0) + 2;  // MCP flexion (z)
      m[3 + 4 * f + 2] = 3 * LinkIndex(f, 1) + 2;  // PIP flexion
      m[3 + 4 * f + 3] = 3 * LinkIndex(f, 2) + 2;  // DIP flexion
    }
    return m;
  }();
  return map;
}

std::vector<double> ReduceDofs(std::span<const double> full) {
  if (full.size() != kFullDofs) {
    throw InvalidInput("reduce_dofs: expected 48 values");
  }
  std::vector<double> out(kReducedDofs);
  const auto& map = ReducedToFullIndex();
  for (int i = 0; i < kReducedDofs; ++i) out[i] = full[map[i]];
  return out;
}

std::vector<double> ExpandDofs(std::span<const double> reduced) {
  if (reduced.size() != kReducedDofs) {
    throw InvalidInput("expand_dofs: expected 23 values");
  }
  std::vector<double> out(kFullDofs, 0.0);
  const auto& map = ReducedToFullIndex();
  for (int i = 0; i < kReducedDofs; ++i) out[map[i]] = reduced[i];
  return out;
}

PoseParams AxisAngleToEuler(const PoseParams& theta) {
  theta.Validate();
  if (theta.representation == PoseRepresentation::kEuler) return theta;
  PoseParams out = theta;
  out.representation = PoseRepresentation::kEuler;
  for (int l = 0; l < kNumLinks; ++l) {
    const Vec3 e = MatrixToEulerXyz(AxisAngleToMatrix(Block(theta.values, l)));
    for (int k = 0; k < 3; ++k) out.values[3 * l + k] = e[k];
  }
  return out;
}

PoseParams EulerToAxisAngle(const PoseParams& theta) {
  theta.Validate();
  if (theta.representation == PoseRepresentation::kAxisAngle) return theta;
  const PoseParams full = ToFullEuler(theta);
  PoseParams out = full;
  out.representation = PoseRepresentation::kAxisAngle;
  for (int l = 0; l < kNumLinks; ++l) {
    const Vec3 e = Block(full.values, l);
    if (std::abs(e[1]) >= kPi / 2 - 1e-6) {
      throw InvalidInput("euler_to_axis_angle: gimbal lock at link " +
                         std::to_string(l));
    }
    const Vec3 aa = MatrixToAxisAngle(EulerXyzToMatrix(e));
    for (int k = 0; k < 3; ++k) out.values[3 * l + k] = aa[k];
  }
  return out;
}

PoseParams ToFullEuler(const PoseParams& theta) {
  theta.Validate();
  if (theta.layout == DofLayout::kReduced) {
    PoseParams out;
    out.layout = DofLayout::kFull;
    out.representation = PoseRepresentation::kEuler;
    out.values = ExpandDofs(theta.values);
    return out;
  }
  return AxisAngleToEuler(theta);
}

PoseParams ToEulerLayout(const PoseParams& theta, DofLayout layout) {
  PoseParams full = ToFullEuler(theta);
  if (layout == DofLayout::kFull) return full;
  PoseParams out;
  out.layout = DofLayout::kReduced;
  out.representation = PoseRepresentation::kEuler;
  out.values = ReduceDofs(full.values);
  return out;
}

std::array<Mat3, kNumLinks> LocalRotations(const PoseParams& theta) {
  theta.Validate();
  std::array<Mat3, kNumLinks> rots;
  if (theta.representation == PoseRepresentation::kAxisAngle) {
    for (int l = 0; l < kNumLinks; ++l) {
      rots[l] = AxisAngleToMatrix(Block(theta.values, l));
    }
    return rots;
  }
  const PoseParams full = ToFullEuler(theta);
  for (int l = 0; l < kNumLinks; ++l) {
    rots[l] = EulerXyzToMatrix(Block(full.values, l));
  }
  return rots;
}

std::array<Vec3, kNumLinks> ShapedRadii(const HandTemplate& tmpl,
                                        const ShapeParams& beta) {
  std::array<Vec3, kNumLinks> radii;
  for (int i = 0; i < kNumLinks; ++i) {
    radii[i] = tmpl.link(i).rest.radii() + beta.delta_radii[i];
    if (!radii[i].allFinite() || (radii[i].array() <= 1e-3).any()) {
      throw InvalidInput("shape: radii of link '" + tmpl.link(i).name +
                         "' fall below 1 mm");
    }
  }
  return radii;
}

HandState ComposeState(const HandTemplate& tmpl, const ShapeParams& beta,
                       const PoseParams& theta, const ObjectParams& phi,
                       const Vec3& root_t) {
  if (!root_t.allFinite()) throw InvalidInput("root translation not finite");
  const auto radii = ShapedRadii(tmpl, beta);
  const auto local = LocalRotations(theta);

  std::array<Mat3, kNumLinks> rot;
  std::array<Vec3, kNumLinks> center;
  rot[0] = tmpl.link(0).rest.rotation() * local[0];
  center[0] = tmpl.link(0).rest.center() + root_t;
  // Parents precede children in link order.
  for (int i = 1; i < kNumLinks; ++i) {
    const LinkTemplate& l = tmpl.link(i);
    const int p = l.parent;
    const Mat3 rest_rel =
        tmpl.link(p).rest.rotation().transpose() * l.rest.rotation();
    rot[i] = rot[p] * rest_rel * local[i];
    const Vec3 joint =
        center[p] + rot[p] * radii[p].cwiseProduct(l.parent_anchor);
    center[i] = joint - rot[i] * radii[i].cwiseProduct(l.child_anchor);
  }

  HandState state;
  for (int i = 0; i < kNumLinks; ++i) {
    state.links[i] =
        Ellipsoid(center[i], radii[i], MatrixToAxisAngle(rot[i]));
  }
  const Vec3 obj_radii = radii[0] + phi.delta_radii;
  if (!obj_radii.allFinite() || (obj_radii.array() <= 0).any()) {
    throw InvalidInput("object: radii must stay positive");
  }
  const Mat3 obj_rot = rot[0] * AxisAngleToMatrix(phi.delta_axis_angle);
  state.object = Ellipsoid(center[0] + rot[0] * phi.delta_center, obj_radii,
                           MatrixToAxisAngle(obj_rot));
  state.root_t = root_t;
  return state;
}

JointSet ExtractJoints(const HandTemplate& tmpl, const HandState& state) {
  JointSet joints;
  joints[0] = AnchorPoint(state.links[0], tmpl.wrist_anchor());
  for (int f = 0; f < kNumFingers; ++f) {
    for (int s = 0; s < 3; ++s) {
      const int i = LinkIndex(f, s);
      joints[1 + 4 * f + s] =
          AnchorPoint(state.links[i], tmpl.link(i).child_anchor);
    }
    joints[1 + 4 * f + 3] =
        AnchorPoint(state.links[LinkIndex(f, 2)], HandTemplate::TipAnchor());
  }
  return joints;
}

std::string DofName(DofLayout layout, int index) {
  int full = index;
  if (layout == DofLayout::kReduced) full = ReducedToFullIndex().at(index);
  const int link = full / 3, axis = full % 3;
  if (link == 0) return std::string("root.") + "xyz"[axis];
  const int f = (link - 1) / 3, s = (link - 1) % 3;
  static constexpr const char* kAxisRole[3] = {"twist", "abduction",
                                               "flexion"};
  return std::string(kFingerNames[f]) + "_" + kSegmentNames[s] + "." +
         kAxisRole[axis];
}

JointLimits JointLimits::Defaults() {
  JointLimits lim;
  for (int f = 0; f < kNumFingers; ++f) {
    lim.full[3 * LinkIndex(f, 0) + 1] = {-0.35, 0.35};
    for (int s = 0; s < 3; ++s) lim.full[3 * LinkIndex(f, s) + 2] = {-0.26, 1.75};
  }
  return lim;
}

Interval JointLimits::ForDof(DofLayout layout, int index) const {
  if (layout == DofLayout::kReduced) return full.at(ReducedToFullIndex().at(index));
  return full.at(index);
}

std::vector<LimitViolation> ValidatePose(const PoseParams& theta,
                                         const JointLimits& limits) {
  PoseParams euler = theta.representation == PoseRepresentation::kEuler
                         ? theta
                         : AxisAngleToEuler(theta);
  euler.Validate();
  std::vector<LimitViolation> out;
  for (int i = 0; i < DofCount(euler.layout); ++i) {
    const Interval lim = limits.ForDof(euler.layout, i);
    const double v = euler.values[i];
    if (v < lim.lo || v > lim.hi) {
      out.push_back({i, DofName(euler.layout, i), v, lim});
    }
  }
  return out;
}

}  // namespace graspstab
