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

// GJK distance and EPA penetration depth on the Minkowski difference A - B.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "graspstab/contact.h"
#include "gjk_epa_internal.h"

namespace graspstab {
namespace {

struct SupportVertex {
  Vec3 w;  // a - b
  Vec3 a;
  Vec3 b;
};

class MinkowskiSupport {
 public:
  MinkowskiSupport(const ConvexShape& a, const Pose& pa, const ConvexShape& b,
                   const Pose& pb)
      : a_(a), pa_(pa), b_(b), pb_(pb) {}

  SupportVertex operator()(const Vec3& d) {
    const Vec3 sa =
        pa_ * a_.LocalSupport(pa_.rotation.transpose() * d, &hint_a_);
    const Vec3 sb =
        pb_ * b_.LocalSupport(pb_.rotation.transpose() * -d, &hint_b_);
    return {sa - sb, sa, sb};
  }

 private:
  const ConvexShape& a_;
  const Pose& pa_;
  const ConvexShape& b_;
  const Pose& pb_;
  int hint_a_ = 0;
  int hint_b_ = 0;
};

// Simplex with barycentric weights of the point closest to the origin.
struct Simplex {
  std::array<SupportVertex, 4> v;
  std::array<double, 4> bary{};
  int size = 0;

  void Keep(std::initializer_list<std::pair<int, double>> kept) {
    std::array<SupportVertex, 4> nv;
    std::array<double, 4> nb{};
    int n = 0;
    for (const auto& [i, w] : kept) {
      nv[n] = v[i];
      nb[n] = w;
      ++n;
    }
    v = nv;
    bary = nb;
    size = n;
  }

  Vec3 Closest() const {
    Vec3 p = Vec3::Zero();
    for (int i = 0; i < size; ++i) p += bary[i] * v[i].w;
    return p;
  }
};

void ClosestSegment(Simplex& s) {
  const Vec3& a = s.v[0].w;
  const Vec3 ab = s.v[1].w - a;
  const double denom = ab.squaredNorm();
  const double t = denom > 0 ? -a.dot(ab) / denom : 0.0;
  if (t <= 0) {
    s.Keep({{0, 1.0}});
  } else if (t >= 1) {
    s.Keep({{1, 1.0}});
  } else {
    s.Keep({{0, 1 - t}, {1, t}});
  }
}

// Closest point of triangle (i0, i1, i2) of s to the origin, written as a
// reduced simplex into `out`.
void ClosestTriangle(const Simplex& s, int i0, int i1, int i2, Simplex& out) {
  const Vec3& a = s.v[i0].w;
  const Vec3& b = s.v[i1].w;
  const Vec3& c = s.v[i2].w;
  const Vec3 ab = b - a, ac = c - a;
  Simplex r = s;
  const double d1 = ab.dot(-a), d2 = ac.dot(-a);
  if (d1 <= 0 && d2 <= 0) {
    r.Keep({{i0, 1.0}});
    out = r;
    return;
  }
  const double d3 = ab.dot(-b), d4 = ac.dot(-b);
  if (d3 >= 0 && d4 <= d3) {
    r.Keep({{i1, 1.0}});
    out = r;
    return;
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    const double t = d1 / (d1 - d3);
    r.Keep({{i0, 1 - t}, {i1, t}});
    out = r;
    return;
  }
  const double d5 = ab.dot(-c), d6 = ac.dot(-c);
  if (d6 >= 0 && d5 <= d6) {
    r.Keep({{i2, 1.0}});
    out = r;
    return;
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    const double t = d2 / (d2 - d6);
    r.Keep({{i0, 1 - t}, {i2, t}});
    out = r;
    return;
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && d4 - d3 >= 0 && d5 - d6 >= 0) {
    const double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    r.Keep({{i1, 1 - t}, {i2, t}});
    out = r;
    return;
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  r.Keep({{i0, 1 - v - w}, {i1, v}, {i2, w}});
  out = r;
}

// True if the origin and vertex d lie on opposite sides of plane (a, b, c),
// or the tetrahedron is too flat to tell.
bool OriginOutsidePlane(const Vec3& a, const Vec3& b, const Vec3& c,
                        const Vec3& d) {
  const Vec3 n = (b - a).cross(c - a);
  const double sp = -a.dot(n);
  const double sd = (d - a).dot(n);
  if (std::abs(sd) <= 1e-14 * n.norm() * (d - a).norm()) return true;
  return sp * sd < 0;
}

// Returns true when the origin lies inside the tetrahedron.
bool ClosestTetrahedron(Simplex& s) {
  const Vec3 &a = s.v[0].w, &b = s.v[1].w, &c = s.v[2].w, &d = s.v[3].w;
  constexpr int kFaces[4][4] = {
      {0, 1, 2, 3}, {0, 2, 3, 1}, {0, 3, 1, 2}, {1, 3, 2, 0}};
  const Vec3* p[4] = {&a, &b, &c, &d};
  double best = std::numeric_limits<double>::infinity();
  Simplex best_s;
  bool any = false;
  for (const auto& f : kFaces) {
    if (!OriginOutsidePlane(*p[f[0]], *p[f[1]], *p[f[2]], *p[f[3]])) continue;
    any = true;
    Simplex cand;
    ClosestTriangle(s, f[0], f[1], f[2], cand);
    const double dist = cand.Closest().squaredNorm();
    if (dist < best) {
      best = dist;
      best_s = cand;
    }
  }
  if (!any) {
    // Origin inside: weights are not needed for EPA.
    return true;
  }
  s = best_s;
  return false;
}

// Reduces the simplex to the feature closest to the origin. Returns true
// when the origin is enclosed by a tetrahedron.
bool ReduceSimplex(Simplex& s) {
  switch (s.size) {
    case 1:
      s.bary[0] = 1.0;
      return false;
    case 2:
      ClosestSegment(s);
      return false;
    case 3: {
      Simplex out;
      ClosestTriangle(s, 0, 1, 2, out);
      s = out;
      return false;
    }
    default:
      return ClosestTetrahedron(s);
  }
}

struct GjkResult {
  bool overlap = false;
  double distance = 0;
  Vec3 witness_a, witness_b;
  Simplex simplex;
};

GjkResult Gjk(MinkowskiSupport& support, const Vec3& initial_dir,
              double max_distance) {
  GjkResult res;
  Simplex& s = res.simplex;
  Vec3 v = initial_dir.squaredNorm() > 1e-24 ? initial_dir : Vec3::UnitX();
  {
    s.v[0] = support(-v);
    s.size = 1;
    s.bary[0] = 1.0;
    v = s.v[0].w;
  }
  constexpr int kMaxIter = 128;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    const double vv = v.squaredNorm();
    if (vv < 1e-24) {
      res.overlap = true;
      return res;
    }
    const SupportVertex w = support(-v);
    const double vw = v.dot(w.w);
    if (vw > 0 && vw * vw > max_distance * max_distance * vv) {
      // Separating plane further than max_distance: report the bound.
      res.distance = vw / std::sqrt(vv);
      res.witness_a = w.a;
      res.witness_b = w.a - v.normalized() * res.distance;
      return res;
    }
    bool duplicate = false;
    for (int i = 0; i < s.size; ++i) {
      if ((s.v[i].w - w.w).squaredNorm() < 1e-28) duplicate = true;
    }
    if (duplicate || vv - vw <= std::max(1e-10 * vv, 1e-22)) break;
    s.v[s.size++] = w;
    if (ReduceSimplex(s)) {
      res.overlap = true;
      return res;
    }
    v = s.Closest();
  }
  res.distance = v.norm();
  res.witness_a = Vec3::Zero();
  res.witness_b = Vec3::Zero();
  for (int i = 0; i < s.size; ++i) {
    res.witness_a += s.bary[i] * s.v[i].a;
    res.witness_b += s.bary[i] * s.v[i].b;
  }
  return res;
}

// Grows the terminal GJK simplex into a tetrahedron containing the origin
// (possibly on its boundary). Returns false if the difference is flat.
bool CompleteTetrahedron(MinkowskiSupport& support, Simplex& s) {
  static const Vec3 kAxes[6] = {Vec3::UnitX(),  -Vec3::UnitX(),
                                Vec3::UnitY(),  -Vec3::UnitY(),
                                Vec3::UnitZ(),  -Vec3::UnitZ()};
  auto try_add = [&](const Vec3& dir, auto accept) {
    const SupportVertex w = support(dir);
    if (!accept(w.w)) return false;
    s.v[s.size++] = w;
    return true;
  };
  if (s.size == 1) {
    for (const Vec3& d : kAxes) {
      if (try_add(d, [&](const Vec3& w) {
            return (w - s.v[0].w).norm() > 1e-12;
          })) {
        break;
      }
    }
    if (s.size < 2) return false;
  }
  if (s.size == 2) {
    const Vec3 seg = (s.v[1].w - s.v[0].w).normalized();
    for (const Vec3& axis : kAxes) {
      const Vec3 d = seg.cross(axis);
      if (d.norm() < 1e-6) continue;
      if (try_add(d.normalized(), [&](const Vec3& w) {
            return seg.cross(w - s.v[0].w).norm() > 1e-12;
          })) {
        break;
      }
    }
    if (s.size < 3) return false;
  }
  if (s.size == 3) {
    const Vec3 n = (s.v[1].w - s.v[0].w).cross(s.v[2].w - s.v[0].w);
    if (n.norm() < 1e-30) return false;
    const Vec3 un = n.normalized();
    auto off_plane = [&](const Vec3& w) {
      return std::abs(un.dot(w - s.v[0].w)) > 1e-12;
    };
    if (!try_add(un, off_plane) && !try_add(-un, off_plane)) return false;
  }
  return true;
}

struct EpaFace {
  std::array<int, 3> v;
  Vec3 normal;
  double dist;
  bool alive = true;
};

class Epa {
 public:
  Epa(MinkowskiSupport& support, const Simplex& tet) : support_(support) {
    for (int i = 0; i < 4; ++i) verts_.push_back(tet.v[i]);
    interior_ = (verts_[0].w + verts_[1].w + verts_[2].w + verts_[3].w) / 4;
    AddFace(0, 1, 2);
    AddFace(0, 3, 1);
    AddFace(0, 2, 3);
    AddFace(1, 3, 2);
  }

  // Returns false if the depth could not be bracketed within `accept_gap`.
  bool Run(double tol, double accept_gap, PairQuery& out) {
    constexpr int kMaxIter = 256;
    int best = -1;
    double gap = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < kMaxIter; ++iter) {
      best = BestFace();
      if (best < 0) return false;
      const EpaFace f = faces_[best];
      const SupportVertex w = support_(f.normal);
      const double d = f.normal.dot(w.w);
      gap = d - f.dist;
      if (gap <= tol) break;
      bool duplicate = false;
      for (const SupportVertex& sv : verts_) {
        if ((sv.w - w.w).squaredNorm() < 1e-28) duplicate = true;
      }
      if (duplicate) break;
      verts_.push_back(w);
      Expand(static_cast<int>(verts_.size()) - 1);
    }
    if (gap > accept_gap) return false;
    Fill(faces_[best], out);
    return true;
  }

 private:
  void AddFace(int a, int b, int c) {
    const Vec3& pa = verts_[a].w;
    Vec3 n = (verts_[b].w - pa).cross(verts_[c].w - pa);
    const double len = n.norm();
    if (len > 0) {
      n /= len;
    } else {
      n = (pa - interior_).normalized();
    }
    if (n.dot(pa - interior_) < 0) {
      n = -n;
      std::swap(b, c);
    }
    faces_.push_back({{a, b, c}, n, n.dot(pa), true});
  }

  int BestFace() const {
    int best = -1;
    double dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(faces_.size()); ++i) {
      if (faces_[i].alive && faces_[i].dist < dist) {
        dist = faces_[i].dist;
        best = i;
      }
    }
    return best;
  }

  void Expand(int wi) {
    const Vec3& w = verts_[wi].w;
    std::vector<std::pair<int, int>> edges;
    for (EpaFace& f : faces_) {
      if (!f.alive) continue;
      if (f.normal.dot(w - verts_[f.v[0]].w) > 1e-14) {
        f.alive = false;
        for (int k = 0; k < 3; ++k) {
          const int a = f.v[k], b = f.v[(k + 1) % 3];
          auto twin = std::find(edges.begin(), edges.end(),
                                std::make_pair(b, a));
          if (twin != edges.end()) {
            edges.erase(twin);
          } else {
            edges.emplace_back(a, b);
          }
        }
      }
    }
    for (const auto& [a, b] : edges) AddFace(a, b, wi);
    if (faces_.size() > 4096) {
      std::erase_if(faces_, [](const EpaFace& f) { return !f.alive; });
    }
  }

  void Fill(const EpaFace& f, PairQuery& out) const {
    const Vec3 p = f.normal * f.dist;
    const Vec3& a = verts_[f.v[0]].w;
    const Vec3& b = verts_[f.v[1]].w;
    const Vec3& c = verts_[f.v[2]].w;
    const Vec3 v0 = b - a, v1 = c - a, v2 = p - a;
    const double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
    const double d20 = v2.dot(v0), d21 = v2.dot(v1);
    const double denom = d00 * d11 - d01 * d01;
    double l1 = 1.0 / 3, l2 = 1.0 / 3;
    if (denom > 0) {
      l1 = (d11 * d20 - d01 * d21) / denom;
      l2 = (d00 * d21 - d01 * d20) / denom;
    }
    const double l0 = 1 - l1 - l2;
    out.depth = f.dist;
    out.normal = f.normal;
    out.witness_a = l0 * verts_[f.v[0]].a + l1 * verts_[f.v[1]].a +
                    l2 * verts_[f.v[2]].a;
    out.witness_b = l0 * verts_[f.v[0]].b + l1 * verts_[f.v[1]].b +
                    l2 * verts_[f.v[2]].b;
  }

  MinkowskiSupport& support_;
  std::vector<SupportVertex> verts_;
  std::vector<EpaFace> faces_;
  Vec3 interior_;
};

std::string PairName(int a, int b) {
  return "(" + std::to_string(a) + ", " + std::to_string(b) + ")";
}

}  // namespace

PairQuery QueryPairBounded(const ConvexShape& a, const Pose& pose_a,
                           const ConvexShape& b, const Pose& pose_b,
                           double max_distance, int body_a, int body_b) {
  MinkowskiSupport support(a, pose_a, b, pose_b);
  const Vec3 center_diff = pose_a.position - pose_b.position;
  GjkResult g = Gjk(support, center_diff, max_distance);
  PairQuery q;
  if (!g.overlap) {
    q.depth = -g.distance;
    const Vec3 d = g.witness_b - g.witness_a;
    q.normal = d.norm() > 0 ? Vec3(d.normalized())
                            : Vec3((-center_diff).normalized());
    q.witness_a = g.witness_a;
    q.witness_b = g.witness_b;
    return q;
  }
  if (!CompleteTetrahedron(support, g.simplex)) {
    throw NumericalError("contact pair " + PairName(body_a, body_b) +
                         ": degenerate Minkowski difference");
  }
  Epa epa(support, g.simplex);
  if (!epa.Run(1e-9, 1e-4, q)) {
    throw NumericalError("contact pair " + PairName(body_a, body_b) +
                         ": penetration depth did not converge");
  }
  return q;
}

PairQuery QueryPair(const ConvexShape& a, const Pose& pose_a,
                    const ConvexShape& b, const Pose& pose_b, int body_a,
                    int body_b) {
  return QueryPairBounded(a, pose_a, b, pose_b,
                          std::numeric_limits<double>::infinity(), body_a,
                          body_b);
}

}  // namespace graspstab
