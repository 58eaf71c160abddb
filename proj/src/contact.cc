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

#include "graspstab/contact.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "gjk_epa_internal.h"
#include "graspstab/convex_hull.h"
#include "graspstab/geom_io.h"

namespace graspstab {
namespace {

// Hulls with at most this many vertices are scanned linearly.
constexpr int kLinearScanVertices = 32;

using Vec2 = Eigen::Vector2d;

double Cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Groups coplanar hull triangles into polygons.
std::vector<ConvexShape::Face> MergeFaces(const TriMesh& mesh, double scale) {
  struct Plane {
    Vec3 normal;
    double offset;
    std::vector<int> verts;
  };
  std::vector<Plane> planes;
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3 n = (mesh.vertices[t[1]] - a)
                       .cross(mesh.vertices[t[2]] - a)
                       .normalized();
    const double off = n.dot(a);
    Plane* match = nullptr;
    for (Plane& p : planes) {
      if (p.normal.dot(n) > 1 - 1e-9 &&
          std::abs(p.offset - off) < 1e-9 * scale) {
        match = &p;
        break;
      }
    }
    if (match == nullptr) {
      planes.push_back({n, off, {}});
      match = &planes.back();
    }
    for (int k = 0; k < 3; ++k) match->verts.push_back(t[k]);
  }
  std::vector<ConvexShape::Face> faces;
  for (Plane& p : planes) {
    std::sort(p.verts.begin(), p.verts.end());
    p.verts.erase(std::unique(p.verts.begin(), p.verts.end()), p.verts.end());
    const Vec3 u = p.normal.unitOrthogonal();
    const Vec3 w = p.normal.cross(u);
    std::vector<std::pair<Vec2, int>> pts;
    for (int v : p.verts) {
      const Vec3& x = mesh.vertices[v];
      pts.push_back({Vec2(x.dot(u), x.dot(w)), v});
    }
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
      return a.first.x() < b.first.x() ||
             (a.first.x() == b.first.x() && a.first.y() < b.first.y());
    });
    // Monotone chain; (u, w, normal) is right-handed so the result is
    // counter-clockwise about the normal.
    std::vector<std::pair<Vec2, int>> hull(2 * pts.size());
    int k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      while (k >= 2 && Cross2(hull[k - 1].first - hull[k - 2].first,
                              pts[i].first - hull[k - 2].first) <= 0) {
        --k;
      }
      hull[k++] = pts[i];
    }
    for (int i = static_cast<int>(pts.size()) - 2, lo = k + 1; i >= 0; --i) {
      while (k >= lo && Cross2(hull[k - 1].first - hull[k - 2].first,
                               pts[i].first - hull[k - 2].first) <= 0) {
        --k;
      }
      hull[k++] = pts[i];
    }
    ConvexShape::Face face;
    face.normal = p.normal;
    face.offset = p.offset;
    for (int i = 0; i + 1 < k; ++i) {
      face.polygon.push_back(mesh.vertices[hull[i].second]);
    }
    faces.push_back(std::move(face));
  }
  return faces;
}

// Keeps the deepest point and then the points that spread the patch most.
std::vector<ContactPoint> ReduceManifold(std::vector<ContactPoint> pts) {
  if (pts.size() <= 4) return pts;
  std::vector<ContactPoint> out;
  auto take = [&](std::size_t i) {
    out.push_back(pts[i]);
    pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i));
  };
  auto argmax = [&](auto score) {
    std::size_t best = 0;
    double best_s = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double s = score(pts[i].position);
      if (s > best_s) {
        best_s = s;
        best = i;
      }
    }
    return std::make_pair(best, best_s);
  };
  std::size_t deepest = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].depth > pts[deepest].depth) deepest = i;
  }
  take(deepest);
  const Vec3 p0 = out[0].position;
  take(argmax([&](const Vec3& x) { return (x - p0).squaredNorm(); }).first);
  const Vec3 p1 = out[1].position;
  take(argmax([&](const Vec3& x) {
         return (p1 - p0).cross(x - p0).squaredNorm();
       }).first);
  const Vec3 p2 = out[2].position;
  const double base = (p1 - p0).cross(p2 - p0).norm();
  const auto [i3, s3] = argmax([&](const Vec3& x) {
    return (p1 - p0).cross(x - p0).norm() + (p2 - p1).cross(x - p1).norm() +
           (p0 - p2).cross(x - p2).norm() - base;
  });
  if (s3 > 1e-12 * std::max(base, 1e-12)) take(i3);
  return out;
}

int BestFace(const ConvexShape& s, const Pose& pose, const Vec3& dir) {
  int best = 0;
  double best_dot = -std::numeric_limits<double>::infinity();
  const Vec3 local = pose.rotation.transpose() * dir;
  for (int i = 0; i < static_cast<int>(s.faces().size()); ++i) {
    const double d = s.faces()[i].normal.dot(local);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return best;
}

std::vector<ContactPoint> ClipHulls(const ConvexShape& a, const Pose& pa,
                                    const ConvexShape& b, const Pose& pb,
                                    const Vec3& normal, double margin,
                                    int body_a, int body_b) {
  const int fa = BestFace(a, pa, normal);
  const int fb = BestFace(b, pb, -normal);
  const double sa = (pa.rotation * a.faces()[fa].normal).dot(normal);
  const double sb = (pb.rotation * b.faces()[fb].normal).dot(-normal);
  const bool ref_is_a = sa >= sb - 1e-3;
  const ConvexShape& ref_shape = ref_is_a ? a : b;
  const Pose& ref_pose = ref_is_a ? pa : pb;
  const ConvexShape& inc_shape = ref_is_a ? b : a;
  const Pose& inc_pose = ref_is_a ? pb : pa;
  const ConvexShape::Face& ref = ref_shape.faces()[ref_is_a ? fa : fb];
  const Vec3 n_ref = ref_pose.rotation * ref.normal;
  const ConvexShape::Face& inc =
      inc_shape.faces()[BestFace(inc_shape, inc_pose, -n_ref)];

  std::vector<Vec3> poly;
  for (const Vec3& v : inc.polygon) poly.push_back(inc_pose * v);
  std::vector<Vec3> ref_poly;
  for (const Vec3& v : ref.polygon) ref_poly.push_back(ref_pose * v);

  const int m = static_cast<int>(ref_poly.size());
  for (int k = 0; k < m && !poly.empty(); ++k) {
    const Vec3& p = ref_poly[k];
    const Vec3 inward = n_ref.cross(ref_poly[(k + 1) % m] - p);
    std::vector<Vec3> next;
    const int np = static_cast<int>(poly.size());
    for (int i = 0; i < np; ++i) {
      const Vec3& x = poly[i];
      const Vec3& y = poly[(i + 1) % np];
      const double dx = (x - p).dot(inward), dy = (y - p).dot(inward);
      if (dx >= 0) next.push_back(x);
      if ((dx >= 0) != (dy >= 0)) {
        next.push_back(x + (y - x) * (dx / (dx - dy)));
      }
    }
    poly = std::move(next);
  }

  std::vector<ContactPoint> pts;
  const Vec3 contact_normal = ref_is_a ? n_ref : Vec3(-n_ref);
  for (const Vec3& x : poly) {
    const double s = n_ref.dot(x - ref_poly[0]);
    if (s > margin) continue;
    pts.push_back({x - n_ref * (s / 2), contact_normal, -s, body_a, body_b});
  }
  return ReduceManifold(std::move(pts));
}

double FastImplicit(const Ellipsoid& e, const Vec3& x) {
  const Vec3 y = e.rotation().transpose() * (x - e.center());
  return y.cwiseQuotient(e.radii()).squaredNorm() - 1.0;
}

std::pair<ConvexShape, Pose> CenteredHull(const TriMesh& mesh) {
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& v : mesh.vertices) centroid += v;
  centroid /= static_cast<double>(std::max<std::size_t>(mesh.vertices.size(), 1));
  std::vector<Vec3> local;
  local.reserve(mesh.vertices.size());
  for (const Vec3& v : mesh.vertices) local.push_back(v - centroid);
  Pose pose;
  pose.position = centroid;
  return {ConvexShape::MakeHull(local), pose};
}

// Inside votes of one closed mesh on a voxel grid.
class VoxelGrid {
 public:
  VoxelGrid(const Vec3& origin, double pitch, const std::array<int, 3>& n)
      : origin_(origin), pitch_(pitch), n_(n) {}

  std::size_t size() const {
    return static_cast<std::size_t>(n_[0]) * n_[1] * n_[2];
  }
  std::size_t Index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_[1] + j) * n_[2] + k;
  }

  // Adds one vote per axis whose ray parity says the voxel center is
  // inside the mesh.
  void Vote(const TriMesh& mesh, std::vector<std::uint8_t>& votes) const {
    for (int axis = 0; axis < 3; ++axis) VoteAxis(mesh, axis, votes);
  }

 private:
  double Center(int axis, int i) const {
    return origin_[axis] + (i + 0.5) * pitch_;
  }

  static bool TopLeft(const Vec2& d) {
    return d.y() < 0 || (d.y() == 0 && d.x() > 0);
  }

  void VoteAxis(const TriMesh& mesh, int axis,
                std::vector<std::uint8_t>& votes) const {
    const int ua = (axis + 1) % 3, va = (axis + 2) % 3;
    const int nu = n_[ua], nv = n_[va];
    std::vector<std::vector<double>> columns(static_cast<std::size_t>(nu) * nv);
    for (const auto& t : mesh.triangles) {
      const Vec3& p0 = mesh.vertices[t[0]];
      Vec2 a(p0[ua], p0[va]);
      Vec2 b(mesh.vertices[t[1]][ua], mesh.vertices[t[1]][va]);
      Vec2 c(mesh.vertices[t[2]][ua], mesh.vertices[t[2]][va]);
      const double area = Cross2(b - a, c - a);
      if (area == 0) continue;
      if (area < 0) std::swap(b, c);
      const Vec3 normal = (mesh.vertices[t[1]] - p0).cross(mesh.vertices[t[2]] - p0);
      const double lo_u = std::min({a.x(), b.x(), c.x()});
      const double hi_u = std::max({a.x(), b.x(), c.x()});
      const double lo_v = std::min({a.y(), b.y(), c.y()});
      const double hi_v = std::max({a.y(), b.y(), c.y()});
      const int i0 = std::max(0, static_cast<int>(std::ceil((lo_u - origin_[ua]) / pitch_ - 0.5)));
      const int i1 = std::min(nu - 1, static_cast<int>(std::floor((hi_u - origin_[ua]) / pitch_ - 0.5)));
      const int j0 = std::max(0, static_cast<int>(std::ceil((lo_v - origin_[va]) / pitch_ - 0.5)));
      const int j1 = std::min(nv - 1, static_cast<int>(std::floor((hi_v - origin_[va]) / pitch_ - 0.5)));
      for (int i = i0; i <= i1; ++i) {
        for (int j = j0; j <= j1; ++j) {
          const Vec2 x(Center(ua, i), Center(va, j));
          bool inside = true;
          const Vec2* tri[3] = {&a, &b, &c};
          for (int e = 0; e < 3 && inside; ++e) {
            const Vec2& p = *tri[e];
            const Vec2& q = *tri[(e + 1) % 3];
            const double f = Cross2(q - p, x - p);
            inside = f > 0 || (f == 0 && TopLeft(q - p));
          }
          if (!inside) continue;
          // Plane: normal . (X - p0) = 0, solve for the axis coordinate.
          const double s =
              p0[axis] - (normal[ua] * (x.x() - p0[ua]) +
                          normal[va] * (x.y() - p0[va])) / normal[axis];
          columns[static_cast<std::size_t>(i) * nv + j].push_back(s);
        }
      }
    }
    for (int i = 0; i < nu; ++i) {
      for (int j = 0; j < nv; ++j) {
        auto& col = columns[static_cast<std::size_t>(i) * nv + j];
        if (col.empty()) continue;
        std::sort(col.begin(), col.end());
        std::size_t next = 0;
        bool inside = false;
        for (int k = 0; k < n_[axis]; ++k) {
          const double x = Center(axis, k);
          while (next < col.size() && col[next] < x) {
            inside = !inside;
            ++next;
          }
          if (!inside) continue;
          std::array<int, 3> idx{};
          idx[axis] = k;
          idx[ua] = i;
          idx[va] = j;
          ++votes[Index(idx[0], idx[1], idx[2])];
        }
      }
    }
  }

  Vec3 origin_;
  double pitch_;
  std::array<int, 3> n_;
};

void BoundingBox(const TriMesh& m, Vec3& lo, Vec3& hi) {
  for (const Vec3& v : m.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
}

}  // namespace

ConvexShape ConvexShape::MakeEllipsoid(const Vec3& radii) {
  if (!radii.allFinite() || (radii.array() <= 0).any()) {
    throw InvalidInput("ellipsoid shape: radii must be positive");
  }
  ConvexShape s;
  s.radii_ = radii;
  s.bounding_radius_ = radii.maxCoeff();
  return s;
}

ConvexShape ConvexShape::MakeHull(std::span<const Vec3> points) {
  auto data = std::make_shared<HullData>();
  data->mesh = ConvexHull(points);
  const int n = static_cast<int>(data->mesh.vertices.size());
  data->neighbors.assign(n, {});
  for (const auto& t : data->mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      auto& nb = data->neighbors[t[k]];
      const int other = t[(k + 1) % 3];
      if (std::find(nb.begin(), nb.end(), other) == nb.end()) {
        nb.push_back(other);
        data->neighbors[other].push_back(t[k]);
      }
    }
  }
  ConvexShape s;
  s.bounding_radius_ = 0;
  Vec3 lo = data->mesh.vertices[0], hi = lo;
  for (const Vec3& v : data->mesh.vertices) {
    s.bounding_radius_ = std::max(s.bounding_radius_, v.norm());
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  data->faces = MergeFaces(data->mesh, (hi - lo).norm());
  s.hull_ = std::move(data);
  return s;
}

std::pair<ConvexShape, Pose> ConvexShape::FromEllipsoid(const Ellipsoid& e) {
  Pose pose;
  pose.rotation = e.rotation();
  pose.position = e.center();
  return {MakeEllipsoid(e.radii()), pose};
}

Vec3 ConvexShape::LocalSupport(const Vec3& dir, int* hint) const {
  if (hull_ == nullptr) {
    Vec3 u = radii_.cwiseProduct(dir);
    const double len = u.norm();
    if (!(len > 0)) return Vec3(radii_.x(), 0, 0);
    return radii_.cwiseProduct(u / len);
  }
  const auto& verts = hull_->mesh.vertices;
  const int n = static_cast<int>(verts.size());
  int best = 0;
  if (n <= kLinearScanVertices || hint == nullptr) {
    double best_d = verts[0].dot(dir);
    for (int i = 1; i < n; ++i) {
      const double d = verts[i].dot(dir);
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
  } else {
    best = (*hint >= 0 && *hint < n) ? *hint : 0;
    double best_d = verts[best].dot(dir);
    for (bool moved = true; moved;) {
      moved = false;
      for (int nb : hull_->neighbors[best]) {
        const double d = verts[nb].dot(dir);
        if (d > best_d) {
          best_d = d;
          best = nb;
          moved = true;
        }
      }
    }
    *hint = best;
  }
  return verts[best];
}

const TriMesh& ConvexShape::mesh() const {
  static const TriMesh kEmpty;
  return hull_ ? hull_->mesh : kEmpty;
}

const std::vector<ConvexShape::Face>& ConvexShape::faces() const {
  static const std::vector<Face> kEmpty;
  return hull_ ? hull_->faces : kEmpty;
}

double ContactManifold::MaxDepth() const {
  double d = -std::numeric_limits<double>::infinity();
  for (const ContactPoint& p : points) d = std::max(d, p.depth);
  return d;
}

std::optional<ContactManifold> DetectContacts(const ConvexShape& a,
                                              const Pose& pose_a,
                                              const ConvexShape& b,
                                              const Pose& pose_b,
                                              double margin, int body_a,
                                              int body_b) {
  const double reach = a.bounding_radius() + b.bounding_radius() + margin;
  if ((pose_a.position - pose_b.position).squaredNorm() > reach * reach) {
    return std::nullopt;
  }
  const PairQuery q =
      QueryPairBounded(a, pose_a, b, pose_b, margin, body_a, body_b);
  if (q.depth < -margin) return std::nullopt;
  ContactManifold m;
  m.body_a = body_a;
  m.body_b = body_b;
  if (!a.is_ellipsoid() && !b.is_ellipsoid()) {
    m.points = ClipHulls(a, pose_a, b, pose_b, q.normal, margin, body_a, body_b);
  }
  if (m.points.empty()) {
    m.points.push_back({(q.witness_a + q.witness_b) / 2, q.normal, q.depth,
                        body_a, body_b});
  }
  return m;
}

double PenetrationLoss(std::span<const Ellipsoid> es, int samples_per) {
  double loss = 0;
  const int n = static_cast<int>(es.size());
  for (int i = 0; i < n; ++i) {
    const std::vector<Vec3> pts = SampleSurface(es[i], samples_per);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double reach = es[j].MaxRadius();
      // Skip pairs whose bounding spheres do not meet.
      if ((es[i].center() - es[j].center()).norm() >
          es[i].MaxRadius() + reach) {
        continue;
      }
      for (const Vec3& x : pts) {
        const double v = FastImplicit(es[j], x);
        if (v < 0) loss -= v;
      }
    }
  }
  return loss;
}

double PenetrationLoss(const HandState& state, LossScope scope) {
  if (scope == LossScope::kHandOnly) {
    return PenetrationLoss(std::span<const Ellipsoid>(state.links));
  }
  const std::vector<Ellipsoid> all = state.All();
  return PenetrationLoss(std::span<const Ellipsoid>(all));
}

double MaxPenetration(const HandState& state) {
  const auto [obj, obj_pose] = ConvexShape::FromEllipsoid(state.object);
  double worst = 0;
  for (int i = 0; i < kNumLinks; ++i) {
    const auto [link, link_pose] = ConvexShape::FromEllipsoid(state.links[i]);
    const auto m =
        DetectContacts(link, link_pose, obj, obj_pose, 0.0, i + 1, 0);
    if (m) worst = std::max(worst, m->MaxDepth());
  }
  return worst;
}

double MaxPenetration(std::span<const TriMesh> hand_parts,
                      const TriMesh& object) {
  const auto [obj, obj_pose] = CenteredHull(object);
  double worst = 0;
  for (std::size_t i = 0; i < hand_parts.size(); ++i) {
    const auto [part, part_pose] = CenteredHull(hand_parts[i]);
    const auto m = DetectContacts(part, part_pose, obj, obj_pose, 0.0,
                                  static_cast<int>(i) + 1, 0);
    if (m) worst = std::max(worst, m->MaxDepth());
  }
  return worst;
}

double IntersectionVolume(std::span<const TriMesh> hand_parts,
                          const TriMesh& object, double voxel) {
  if (!(voxel >= 0.5e-3 && voxel <= 5e-3)) {
    throw InvalidInput("intersection volume: voxel pitch must lie in "
                       "[0.5, 5] mm");
  }
  if (!IsWatertight(object)) {
    throw InvalidInput("intersection volume: object mesh is not watertight");
  }
  const double inf = std::numeric_limits<double>::infinity();
  Vec3 hand_lo = Vec3::Constant(inf), hand_hi = Vec3::Constant(-inf);
  for (std::size_t i = 0; i < hand_parts.size(); ++i) {
    if (!IsWatertight(hand_parts[i])) {
      throw InvalidInput("intersection volume: hand part " +
                         std::to_string(i) + " is not watertight");
    }
    BoundingBox(hand_parts[i], hand_lo, hand_hi);
  }
  Vec3 obj_lo = Vec3::Constant(inf), obj_hi = Vec3::Constant(-inf);
  BoundingBox(object, obj_lo, obj_hi);
  if (hand_parts.empty() || object.vertices.empty()) return 0;

  // Grid anchored at the joint bounding box; only the overlap of the two
  // boxes can hold shared voxels.
  const Vec3 joint_lo = hand_lo.cwiseMin(obj_lo);
  const Vec3 lo = hand_lo.cwiseMax(obj_lo);
  const Vec3 hi = hand_hi.cwiseMin(obj_hi);
  if ((hi.array() <= lo.array()).any()) return 0;
  Vec3 origin;
  std::array<int, 3> n{};
  for (int k = 0; k < 3; ++k) {
    const int first = static_cast<int>(std::floor((lo[k] - joint_lo[k]) / voxel));
    const int last = static_cast<int>(std::ceil((hi[k] - joint_lo[k]) / voxel));
    origin[k] = joint_lo[k] + first * voxel;
    n[k] = std::max(last - first, 1);
  }
  const VoxelGrid grid(origin, voxel, n);

  std::vector<std::uint8_t> obj_votes(grid.size(), 0);
  grid.Vote(object, obj_votes);
  std::vector<std::uint8_t> in_hand(grid.size(), 0);
  std::vector<std::uint8_t> votes(grid.size());
  for (const TriMesh& part : hand_parts) {
    std::fill(votes.begin(), votes.end(), 0);
    grid.Vote(part, votes);
    for (std::size_t i = 0; i < votes.size(); ++i) {
      if (votes[i] >= 2) in_hand[i] = 1;
    }
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (in_hand[i] && obj_votes[i] >= 2) ++count;
  }
  return static_cast<double>(count) * voxel * voxel * voxel * 1e6;
}

double IntersectionVolume(const TriMesh& hand, const TriMesh& object,
                          double voxel) {
  const std::vector<TriMesh> parts = ConnectedComponents(hand);
  return IntersectionVolume(std::span<const TriMesh>(parts), object, voxel);
}

}  // namespace graspstab
