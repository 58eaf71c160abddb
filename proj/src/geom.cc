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

#include "graspstab/geom.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "graspstab/convex_hull.h"

namespace graspstab {

Ellipsoid::Ellipsoid(const Vec3& center, const Vec3& radii,
                     const Vec3& axis_angle)
    : center_(center), radii_(radii), axis_angle_(axis_angle) {
  if (!center.allFinite() || !radii.allFinite() || !axis_angle.allFinite()) {
    throw InvalidInput("ellipsoid has non-finite parameters");
  }
  if ((radii.array() <= 0).any()) {
    throw InvalidInput("ellipsoid radii must be positive");
  }
  rotation_ = AxisAngleToMatrix(axis_angle);
}

Ellipsoid Ellipsoid::WithPose(const Vec3& center, const Mat3& rotation) const {
  Ellipsoid out = *this;
  if (!center.allFinite()) throw InvalidInput("non-finite ellipsoid center");
  out.center_ = center;
  out.rotation_ = rotation;
  out.axis_angle_ = MatrixToAxisAngle(rotation);
  return out;
}

double Ellipsoid::Volume() const { return 4.0 / 3.0 * kPi * radii_.prod(); }

double ImplicitValue(const Ellipsoid& e, const Vec3& x) {
  if (!x.allFinite()) throw InvalidInput("implicit value: non-finite point");
  const Vec3 local = e.rotation().transpose() * (x - e.center());
  return local.cwiseQuotient(e.radii()).squaredNorm() - 1.0;
}

namespace {

bool LexLess(const Vec3& a, const Vec3& b, double tol) {
  for (int k = 0; k < 3; ++k) {
    if (a[k] < b[k] - tol) return true;
    if (a[k] > b[k] + tol) return false;
  }
  return false;
}

}  // namespace

Ellipsoid Canonicalize(const Ellipsoid& e) {
  const Vec3& r = e.radii();
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return r[a] > r[b]; });
  Vec3 radii;
  Mat3 rot;
  for (int k = 0; k < 3; ++k) {
    radii[k] = r[order[k]];
    rot.col(k) = e.rotation().col(order[k]);
  }
  if (rot.determinant() < 0) rot.col(2) = -rot.col(2);

  const double tie = 1e-12 * radii[0];
  const bool tie01 = radii[0] - radii[1] <= tie;
  const bool tie12 = radii[1] - radii[2] <= tie;
  if (tie01 && tie12) return Ellipsoid(e.center(), radii, Vec3::Zero());
  if (tie01 || tie12) {
    // Only the distinct axis matters; rotate the matching basis vector onto
    // it along the shortest arc.
    const int u = tie01 ? 2 : 0;
    Vec3 axis = rot.col(u);
    if (axis[u] < 0 || (axis[u] == 0 && LexLess(-axis, axis, 0))) {
      axis = -axis;
    }
    const Quat q = Quat::FromTwoVectors(Vec3::Unit(u), axis);
    return Ellipsoid(e.center(), radii, QuatToAxisAngle(q));
  }

  static constexpr std::array<std::array<double, 3>, 4> kFlips = {{
      {1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}}};
  Vec3 best;
  double best_angle = 1e300;
  for (const auto& s : kFlips) {
    const Mat3 cand = rot * Vec3(s[0], s[1], s[2]).asDiagonal();
    const Vec3 aa = MatrixToAxisAngle(cand);
    const double angle = aa.norm();
    if (angle < best_angle - 1e-12 ||
        (std::abs(angle - best_angle) <= 1e-12 && LexLess(aa, best, 1e-12))) {
      best = aa;
      best_angle = angle;
    }
  }
  return Ellipsoid(e.center(), radii, best);
}

Vec3 SupportPoint(const Ellipsoid& e, const Vec3& dir) {
  const double len = dir.norm();
  if (!(len > 0) || !std::isfinite(len)) {
    throw InvalidInput("support point: zero or non-finite direction");
  }
  const Vec3 local = e.radii().cwiseProduct(e.rotation().transpose() * dir);
  const Vec3 u = local.normalized();
  return e.center() + e.rotation() * e.radii().cwiseProduct(u);
}

const std::vector<Vec3>& UnitSpherePattern(int n) {
  if (n < 4) throw InvalidInput("surface pattern needs at least 4 points");
  static std::mutex mu;
  static std::map<int, std::vector<Vec3>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<Vec3> pts;
  pts.reserve(n);
  if (n == 4) {
    const double s = 1.0 / std::sqrt(3.0);
    pts = {Vec3(s, s, s), Vec3(s, -s, -s), Vec3(-s, s, -s), Vec3(-s, -s, s)};
  } else {
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / n;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * i;
      pts.emplace_back(rho * std::cos(phi), rho * std::sin(phi), z);
    }
  }
  return cache.emplace(n, std::move(pts)).first->second;
}

std::vector<Vec3> SampleSurface(const Ellipsoid& e, int n) {
  const auto& pattern = UnitSpherePattern(n);
  std::vector<Vec3> out;
  out.reserve(pattern.size());
  const Mat3 m = e.rotation() * e.radii().asDiagonal();
  for (const Vec3& u : pattern) out.push_back(e.center() + m * u);
  return out;
}

std::vector<Vec3> RetainedSurfaceSamples(std::span<const Ellipsoid> es,
                                         int samples_per) {
  std::vector<Vec3> kept;
  for (std::size_t i = 0; i < es.size(); ++i) {
    for (const Vec3& x : SampleSurface(es[i], samples_per)) {
      bool inside = false;
      for (std::size_t j = 0; j < es.size() && !inside; ++j) {
        if (j != i && ImplicitValue(es[j], x) < -1e-9) inside = true;
      }
      if (!inside) kept.push_back(x);
    }
  }
  return kept;
}

TriMesh EllipsoidsToMesh(std::span<const Ellipsoid> es, int samples_per) {
  if (es.empty()) throw InvalidInput("ellipsoids_to_mesh: empty list");
  std::vector<Vec3> kept = RetainedSurfaceSamples(es, samples_per);
  if (kept.size() < 4) {
    std::size_t largest = 0;
    for (std::size_t i = 1; i < es.size(); ++i) {
      if (es[i].Volume() > es[largest].Volume()) largest = i;
    }
    kept = SampleSurface(es[largest], samples_per);
  }
  return ConvexHull(kept);
}

namespace {

double Cross2(const Eigen::Vector2d& o, const Eigen::Vector2d& a,
              const Eigen::Vector2d& b) {
  return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
}

// Andrew's monotone chain, counter-clockwise.
std::vector<Eigen::Vector2d> Hull2d(std::vector<Eigen::Vector2d> p) {
  std::sort(p.begin(), p.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  if (p.size() < 3) return p;
  std::vector<Eigen::Vector2d> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && Cross2(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && Cross2(h[k - 2], h[k - 1], p[i - 1]) <= 0) --k;
    h[k++] = p[i - 1];
  }
  h.resize(k - 1);
  return h;
}

}  // namespace

Obb FitObb(std::span<const Vec3> points) {
  if (points.size() < 4) throw InvalidInput("OBB fit needs at least 4 points");
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : points) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  // Ascending eigenvalues: column 2 dominant, column 0 the plane normal.
  const Vec3 e1 = eig.eigenvectors().col(2);
  const Vec3 e2 = eig.eigenvectors().col(1);
  const Vec3 normal = e1.cross(e2).normalized();

  std::vector<Eigen::Vector2d> flat;
  flat.reserve(points.size());
  for (const Vec3& p : points) flat.emplace_back(e1.dot(p - mean), e2.dot(p - mean));
  const auto hull = Hull2d(std::move(flat));

  // Rotating calipers: the minimum-area rectangle has a side collinear with
  // a hull edge.
  double best_area = 1e300;
  double best_angle = 0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Eigen::Vector2d edge = hull[(i + 1) % hull.size()] - hull[i];
    if (edge.norm() < 1e-300) continue;
    const Eigen::Vector2d u = edge.normalized();
    const Eigen::Vector2d w(-u.y(), u.x());
    double umin = 1e300, umax = -1e300, wmin = 1e300, wmax = -1e300;
    for (const auto& q : hull) {
      umin = std::min(umin, u.dot(q));
      umax = std::max(umax, u.dot(q));
      wmin = std::min(wmin, w.dot(q));
      wmax = std::max(wmax, w.dot(q));
    }
    const double area = (umax - umin) * (wmax - wmin);
    if (area < best_area * (1 - 1e-12)) {
      best_area = area;
      best_angle = std::atan2(u.y(), u.x());
    }
  }
  const Vec3 ax = std::cos(best_angle) * e1 + std::sin(best_angle) * e2;
  const Vec3 ay = normal.cross(ax);
  Mat3 rot;
  rot << ax, ay, normal;

  Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
  for (const Vec3& p : points) {
    const Vec3 local = rot.transpose() * p;
    lo = lo.cwiseMin(local);
    hi = hi.cwiseMax(local);
  }
  Obb box;
  box.rotation = rot;
  box.center = rot * (0.5 * (lo + hi));
  box.half_extents = 0.5 * (hi - lo);
  return box;
}

std::vector<Ellipsoid> MeshToEllipsoids(const TriMesh& mesh,
                                        std::span<const int> segment_labels) {
  if (segment_labels.size() != mesh.vertices.size()) {
    throw InvalidInput("mesh_to_ellipsoids: need one label per vertex");
  }
  std::map<int, std::vector<Vec3>> segments;
  for (std::size_t i = 0; i < segment_labels.size(); ++i) {
    const int label = segment_labels[i];
    if (label < 1 || label > 16) {
      throw InvalidInput("mesh_to_ellipsoids: label " + std::to_string(label) +
                         " outside 1..16");
    }
    segments[label].push_back(mesh.vertices[i]);
  }
  if (segments.empty()) throw InvalidInput("mesh_to_ellipsoids: empty mesh");
  const int count = segments.rbegin()->first;
  std::vector<Ellipsoid> out;
  out.reserve(count);
  for (int label = 1; label <= count; ++label) {
    auto it = segments.find(label);
    const std::string name = "segment " + std::to_string(label);
    if (it == segments.end()) throw InvalidInput(name + " has no vertices");
    const auto& pts = it->second;
    if (pts.size() < 4) throw InvalidInput(name + " has fewer than 4 vertices");
    Vec3 mean = Vec3::Zero();
    for (const Vec3& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    Mat3 cov = Mat3::Zero();
    for (const Vec3& p : pts) cov += (p - mean) * (p - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    if (eig.eigenvalues()[0] <= 1e-12 * eig.eigenvalues()[2]) {
      throw InvalidInput(name + " is degenerate (coplanar vertices)");
    }
    const Obb box = FitObb(pts);
    out.push_back(Canonicalize(
        Ellipsoid(box.center, box.half_extents, box.axis_angle())));
  }
  return out;
}

namespace {

// Signed volume with the tetrahedra fanned from `ref`.
double SignedVolumeAbout(const TriMesh& mesh, const Vec3& ref) {
  double v = 0;
  for (const auto& t : mesh.triangles) {
    const Vec3 a = mesh.vertices[t[0]] - ref;
    const Vec3 b = mesh.vertices[t[1]] - ref;
    const Vec3 c = mesh.vertices[t[2]] - ref;
    v += a.dot(b.cross(c));
  }
  return v / 6.0;
}

}  // namespace

double MeshVolume(const TriMesh& mesh) {
  if (mesh.vertices.empty()) return 0;
  return SignedVolumeAbout(mesh, mesh.vertices[0]);
}

bool IsWatertight(const TriMesh& mesh) {
  std::unordered_map<std::uint64_t, int> directed;
  auto key = [](int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  };
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      if (++directed[key(t[e], t[(e + 1) % 3])] > 1) return false;
    }
  }
  for (const auto& [k, count] : directed) {
    const int a = static_cast<int>(k >> 32);
    const int b = static_cast<int>(k & 0xffffffffu);
    if (!directed.contains(key(b, a))) return false;
  }
  return !mesh.triangles.empty();
}

RigidBodyProps MeshMassProps(const TriMesh& mesh, double density) {
  if (!(density > 0)) throw InvalidInput("density must be positive");
  CheckMesh(mesh);
  if (mesh.triangles.size() < 4) throw InvalidInput("mesh is not closed");
  // Exporters often split vertices along seams, so weld exact duplicates
  // before checking that every edge has a matching opposite edge.
  {
    std::map<std::array<double, 3>, int> ids;
    TriMesh welded;
    std::vector<int> remap(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      const Vec3& v = mesh.vertices[i];
      remap[i] = ids.try_emplace({v.x(), v.y(), v.z()},
                                 static_cast<int>(ids.size())).first->second;
    }
    welded.triangles.reserve(mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
      welded.triangles.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});
    }
    if (!IsWatertight(welded)) {
      throw InvalidInput("mesh is not watertight (open or non-manifold edges)");
    }
  }
  Vec3 lo = mesh.vertices[0], hi = mesh.vertices[0];
  for (const Vec3& p : mesh.vertices) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 ref = 0.5 * (lo + hi);
  const double v_mid = SignedVolumeAbout(mesh, ref);
  const double v_lo = SignedVolumeAbout(mesh, lo - (hi - lo));
  if (std::abs(v_mid) < 1e-300 ||
      std::abs(v_mid - v_lo) > 0.01 * std::abs(v_mid)) {
    throw InvalidInput("mesh is not watertight (signed volume depends on "
                       "the reference point)");
  }
  const double sign = v_mid < 0 ? -1.0 : 1.0;

  // Covariance of each tetrahedron (ref, a, b, c) about ref.
  static const Mat3 kCanon = (Mat3() << 2, 1, 1, 1, 2, 1, 1, 1, 2).finished();
  double volume = 0;
  Vec3 first = Vec3::Zero();
  Mat3 cov = Mat3::Zero();
  for (const auto& t : mesh.triangles) {
    Mat3 a;
    a << mesh.vertices[t[0]] - ref, mesh.vertices[t[1]] - ref,
        mesh.vertices[t[2]] - ref;
    const double det = a.determinant();
    volume += det / 6.0;
    first += det / 24.0 * (a.col(0) + a.col(1) + a.col(2));
    cov += det / 120.0 * (a * kCanon * a.transpose());
  }
  volume *= sign;
  first *= sign;
  cov *= sign;
  const Vec3 com_rel = first / volume;
  const Mat3 cov_com = cov - volume * com_rel * com_rel.transpose();
  RigidBodyProps props;
  props.mass = density * volume;
  props.com = ref + com_rel;
  props.inertia =
      density * (cov_com.trace() * Mat3::Identity() - cov_com);
  props.inertia = 0.5 * (props.inertia + props.inertia.transpose()).eval();
  return props;
}

RigidBodyProps EllipsoidMassProps(const Ellipsoid& e, double density) {
  if (!(density > 0)) throw InvalidInput("density must be positive");
  RigidBodyProps props;
  props.mass = density * e.Volume();
  props.com = e.center();
  const Vec3 r2 = e.radii().cwiseAbs2();
  props.inertia = Mat3::Zero();
  props.inertia(0, 0) = props.mass / 5.0 * (r2.y() + r2.z());
  props.inertia(1, 1) = props.mass / 5.0 * (r2.x() + r2.z());
  props.inertia(2, 2) = props.mass / 5.0 * (r2.x() + r2.y());
  return props;
}

void CheckMesh(const TriMesh& mesh) {
  const int n = static_cast<int>(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    for (int k : t) {
      if (k < 0 || k >= n) {
        throw InvalidInput("triangle " + std::to_string(i) +
                           " has an out-of-range vertex index");
      }
    }
    const Vec3 cr = (mesh.vertices[t[1]] - mesh.vertices[t[0]])
                        .cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]);
    if (!(cr.norm() > 0)) {
      throw InvalidInput("triangle " + std::to_string(i) + " is degenerate");
    }
  }
}

TriMesh TransformMesh(const TriMesh& mesh, const Mat3& rotation,
                      const Vec3& translation) {
  TriMesh out = mesh;
  for (Vec3& v : out.vertices) v = rotation * v + translation;
  return out;
}

}  // namespace graspstab
