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

#include "graspstab/convex_hull.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace graspstab {
namespace {

struct Face {
  std::array<int, 3> v;
  Vec3 normal;
  double offset;
  std::vector<int> outside;
  bool alive = true;
};

std::uint64_t EdgeKey(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

class Quickhull {
 public:
  explicit Quickhull(std::span<const Vec3> points) : pts_(points) {}

  TriMesh Run() {
    if (pts_.size() < 4) {
      throw InvalidInput("convex hull needs at least 4 points");
    }
    Vec3 lo = pts_[0], hi = pts_[0];
    for (const Vec3& p : pts_) {
      if (!p.allFinite()) throw InvalidInput("convex hull: non-finite point");
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const double scale = std::max((hi - lo).norm(), 1e-300);
    eps_ = 1e-11 * scale + 1e-14 * std::max(lo.cwiseAbs().maxCoeff(),
                                            hi.cwiseAbs().maxCoeff());
    InitialSimplex(scale);
    Expand();
    return Collect();
  }

 private:
  int AddFace(int a, int b, int c) {
    Face f;
    f.v = {a, b, c};
    const Vec3 n = (pts_[b] - pts_[a]).cross(pts_[c] - pts_[a]);
    f.normal = n.normalized();
    f.offset = f.normal.dot(pts_[a]);
    faces_.push_back(std::move(f));
    const int id = static_cast<int>(faces_.size()) - 1;
    edges_[EdgeKey(a, b)] = id;
    edges_[EdgeKey(b, c)] = id;
    edges_[EdgeKey(c, a)] = id;
    return id;
  }

  double Dist(const Face& f, int p) const {
    return f.normal.dot(pts_[p]) - f.offset;
  }

  void InitialSimplex(double scale) {
    const int n = static_cast<int>(pts_.size());
    // Extreme points along the coordinate axes.
    std::array<int, 6> ext{};
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < 3; ++k) {
        if (pts_[i][k] < pts_[ext[2 * k]][k]) ext[2 * k] = i;
        if (pts_[i][k] > pts_[ext[2 * k + 1]][k]) ext[2 * k + 1] = i;
      }
    }
    int i0 = ext[0], i1 = ext[1];
    double best = -1;
    for (int a = 0; a < 6; ++a) {
      for (int b = a + 1; b < 6; ++b) {
        const double d = (pts_[ext[a]] - pts_[ext[b]]).squaredNorm();
        if (d > best) {
          best = d;
          i0 = ext[a];
          i1 = ext[b];
        }
      }
    }
    const Vec3 dir = (pts_[i1] - pts_[i0]).normalized();
    int i2 = -1;
    best = 0;
    for (int i = 0; i < n; ++i) {
      const Vec3 d = pts_[i] - pts_[i0];
      const double dist = (d - dir * d.dot(dir)).norm();
      if (dist > best) {
        best = dist;
        i2 = i;
      }
    }
    if (i2 < 0 || best < 1e-9 * scale) {
      throw InvalidInput("convex hull: points are collinear");
    }
    const Vec3 nrm =
        (pts_[i1] - pts_[i0]).cross(pts_[i2] - pts_[i0]).normalized();
    int i3 = -1;
    best = 0;
    for (int i = 0; i < n; ++i) {
      const double dist = std::abs(nrm.dot(pts_[i] - pts_[i0]));
      if (dist > best) {
        best = dist;
        i3 = i;
      }
    }
    if (i3 < 0 || best < 1e-9 * scale) {
      throw InvalidInput("convex hull: points are coplanar");
    }
    if (nrm.dot(pts_[i3] - pts_[i0]) > 0) std::swap(i1, i2);
    // Now i3 lies below face (i0, i1, i2); every face points away from it.
    const int f0 = AddFace(i0, i1, i2);
    const int f1 = AddFace(i0, i3, i1);
    const int f2 = AddFace(i1, i3, i2);
    const int f3 = AddFace(i2, i3, i0);
    const std::array<int, 4> init = {f0, f1, f2, f3};
    for (int i = 0; i < n; ++i) {
      if (i == i0 || i == i1 || i == i2 || i == i3) continue;
      for (int f : init) {
        if (Dist(faces_[f], i) > eps_) {
          faces_[f].outside.push_back(i);
          break;
        }
      }
    }
  }

  void Expand() {
    std::vector<int> stack;
    std::vector<char> visible;
    std::vector<std::pair<int, int>> horizon;
    std::vector<int> visible_list;
    for (std::size_t cursor = 0; cursor < faces_.size(); ++cursor) {
      if (!faces_[cursor].alive || faces_[cursor].outside.empty()) continue;
      const Face& seed = faces_[cursor];
      int apex = seed.outside[0];
      double far = Dist(seed, apex);
      for (int p : seed.outside) {
        const double d = Dist(seed, p);
        if (d > far) {
          far = d;
          apex = p;
        }
      }
      // Flood the visible region from the seed face.
      visible.assign(faces_.size(), 0);
      visible_list.clear();
      horizon.clear();
      stack.assign(1, static_cast<int>(cursor));
      visible[cursor] = 1;
      while (!stack.empty()) {
        const int f = stack.back();
        stack.pop_back();
        visible_list.push_back(f);
        const auto& v = faces_[f].v;
        for (int e = 0; e < 3; ++e) {
          const int a = v[e], b = v[(e + 1) % 3];
          const int nb = edges_.at(EdgeKey(b, a));
          if (visible[nb]) continue;
          if (Dist(faces_[nb], apex) > eps_) {
            visible[nb] = 1;
            stack.push_back(nb);
          }
        }
      }
      for (int f : visible_list) {
        const auto& v = faces_[f].v;
        for (int e = 0; e < 3; ++e) {
          const int a = v[e], b = v[(e + 1) % 3];
          if (!visible[edges_.at(EdgeKey(b, a))]) horizon.emplace_back(a, b);
        }
      }
      std::vector<int> orphans;
      for (int f : visible_list) {
        Face& face = faces_[f];
        face.alive = false;
        for (int p : face.outside) {
          if (p != apex) orphans.push_back(p);
        }
        face.outside.clear();
        face.outside.shrink_to_fit();
        for (int e = 0; e < 3; ++e) {
          edges_.erase(EdgeKey(face.v[e], face.v[(e + 1) % 3]));
        }
      }
      std::vector<int> created;
      created.reserve(horizon.size());
      for (const auto& [a, b] : horizon) created.push_back(AddFace(a, b, apex));
      std::sort(orphans.begin(), orphans.end());
      for (int p : orphans) {
        for (int f : created) {
          if (Dist(faces_[f], p) > eps_) {
            faces_[f].outside.push_back(p);
            break;
          }
        }
      }
      // Restart the scan: newly created faces sit at the end and will be
      // reached by the cursor, older faces keep their outside sets.
    }
  }

  TriMesh Collect() const {
    TriMesh mesh;
    std::vector<int> remap(pts_.size(), -1);
    for (const Face& f : faces_) {
      if (!f.alive) continue;
      std::array<int, 3> tri{};
      for (int k = 0; k < 3; ++k) {
        int& slot = remap[f.v[k]];
        if (slot < 0) {
          slot = static_cast<int>(mesh.vertices.size());
          mesh.vertices.push_back(pts_[f.v[k]]);
        }
        tri[k] = slot;
      }
      mesh.triangles.push_back(tri);
    }
    return mesh;
  }

  std::span<const Vec3> pts_;
  std::vector<Face> faces_;
  std::unordered_map<std::uint64_t, int> edges_;
  double eps_ = 0;
};

}  // namespace

TriMesh ConvexHull(std::span<const Vec3> points) {
  return Quickhull(points).Run();
}

}  // namespace graspstab
