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

// Convex collision queries, contact manifolds, the ellipsoid penetration
// loss and the geometric contact metrics.

#ifndef GRASPSTAB_CONTACT_H_
#define GRASPSTAB_CONTACT_H_

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "graspstab/geom.h"
#include "graspstab/hand.h"

namespace graspstab {

// Contact slop shared with the simulator.
inline constexpr double kDefaultContactMargin = 1e-3;

struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 position = Vec3::Zero();

  Vec3 operator*(const Vec3& local) const {
    return rotation * local + position;
  }
};

// A convex shape in its own local frame: either an axis-aligned ellipsoid
// centered at the origin or the convex hull of a point set.
class ConvexShape {
 public:
  struct Face {
    Vec3 normal;                // outward, local frame
    double offset = 0;          // normal . x = offset on the face
    std::vector<Vec3> polygon;  // counter-clockwise about the normal
  };

  static ConvexShape MakeEllipsoid(const Vec3& radii);
  // Throws InvalidInput when the points do not span three dimensions.
  static ConvexShape MakeHull(std::span<const Vec3> points);

  // Shape and pose of a world-frame ellipsoid.
  static std::pair<ConvexShape, Pose> FromEllipsoid(const Ellipsoid& e);

  bool is_ellipsoid() const { return hull_ == nullptr; }
  const Vec3& radii() const { return radii_; }

  // Local support point. `hint` speeds up hull queries by starting the
  // vertex walk from a previous answer; it may be null.
  Vec3 LocalSupport(const Vec3& dir, int* hint = nullptr) const;

  // Radius of a sphere about the local origin that contains the shape.
  double bounding_radius() const { return bounding_radius_; }

  // Hull data (empty for ellipsoids).
  const TriMesh& mesh() const;
  const std::vector<Face>& faces() const;

 private:
  struct HullData {
    TriMesh mesh;
    std::vector<std::vector<int>> neighbors;
    std::vector<Face> faces;
  };

  Vec3 radii_ = Vec3::Ones();
  double bounding_radius_ = 1.0;
  std::shared_ptr<const HullData> hull_;
};

struct ContactPoint {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitX();  // from body A into body B
  double depth = 0;             // negative while still separated
  int body_a = -1;
  int body_b = -1;
};

struct ContactManifold {
  int body_a = -1;
  int body_b = -1;
  std::vector<ContactPoint> points;  // at most 4

  double MaxDepth() const;
};

// Signed distance query between two posed convex shapes.
struct PairQuery {
  double depth = 0;             // > 0 penetrating, < 0 separated
  Vec3 normal = Vec3::UnitX();  // from A into B
  Vec3 witness_a = Vec3::Zero();
  Vec3 witness_b = Vec3::Zero();
};

// GJK for separated shapes, EPA for overlapping ones. Throws NumericalError
// naming the pair if EPA fails to bracket the depth within 1e-4 m.
PairQuery QueryPair(const ConvexShape& a, const Pose& pose_a,
                    const ConvexShape& b, const Pose& pose_b,
                    int body_a = -1, int body_b = -1);

// Contact manifold of a pair, or nothing when the shapes are separated by
// more than `margin`. Pairs involving an ellipsoid yield a single point at
// the midpoint of the witness points; hull pairs are clipped face against
// face and reduced to at most four points.
std::optional<ContactManifold> DetectContacts(const ConvexShape& a,
                                              const Pose& pose_a,
                                              const ConvexShape& b,
                                              const Pose& pose_b,
                                              double margin,
                                              int body_a = -1,
                                              int body_b = -1);

// Which ellipsoids enter the penetration loss.
enum class LossScope { kAll, kHandOnly };

// Sum over ellipsoids i, over their fixed surface samples x and over all
// other ellipsoids j of -min(E_j(x), 0).
double PenetrationLoss(std::span<const Ellipsoid> es,
                       int samples_per = kSurfacePatternSize);
double PenetrationLoss(const HandState& state,
                       LossScope scope = LossScope::kAll);

// Deepest penetration between any hand link and the object ellipsoid (m).
double MaxPenetration(const HandState& state);
// Deepest penetration between any hand part and the object hull (m).
double MaxPenetration(std::span<const TriMesh> hand_parts,
                      const TriMesh& object);

// Volume (cm^3) of the voxel centers inside both the hand (union of its
// closed parts) and the object. Inside tests are ray-parity votes along the
// three axes. Throws InvalidInput for open meshes or a voxel pitch outside
// [0.5, 5] mm.
double IntersectionVolume(std::span<const TriMesh> hand_parts,
                          const TriMesh& object, double voxel);
// Splits the hand mesh into connected components first.
double IntersectionVolume(const TriMesh& hand, const TriMesh& object,
                          double voxel);

}  // namespace graspstab

#endif  // GRASPSTAB_CONTACT_H_
