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

// Ellipsoid primitives, triangle meshes and the conversions between them.
//
// An ellipsoid is stored as (center c, radii r, axis-angle a). Its rotation
// R = exp(a) maps body coordinates to world coordinates, so the surface is
// { c + R diag(r) u : |u| = 1 } and the implicit function is
//
//   E(x) = (x - c)^T R diag(r)^-2 R^T (x - c) - 1,
//
// negative inside, zero on the surface and positive outside.

#ifndef GRASPSTAB_GEOM_H_
#define GRASPSTAB_GEOM_H_

#include <array>
#include <span>
#include <vector>

#include "graspstab/math.h"

namespace graspstab {

// Number of points of the fixed surface pattern used for contact losses.
inline constexpr int kSurfacePatternSize = 872;

class Ellipsoid {
 public:
  // Unit sphere at the origin.
  Ellipsoid() : Ellipsoid(Vec3::Zero(), Vec3::Ones(), Vec3::Zero()) {}

  // Throws InvalidInput unless all radii are positive and every component
  // is finite.
  Ellipsoid(const Vec3& center, const Vec3& radii, const Vec3& axis_angle);

  const Vec3& center() const { return center_; }
  const Vec3& radii() const { return radii_; }
  const Vec3& axis_angle() const { return axis_angle_; }
  const Mat3& rotation() const { return rotation_; }

  // Same shape, different placement.
  Ellipsoid WithPose(const Vec3& center, const Mat3& rotation) const;

  double Volume() const;
  double MaxRadius() const { return radii_.maxCoeff(); }

 private:
  Vec3 center_;
  Vec3 radii_;
  Vec3 axis_angle_;
  Mat3 rotation_;
};

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

struct Obb {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();
  Mat3 rotation = Mat3::Identity();

  Vec3 axis_angle() const { return MatrixToAxisAngle(rotation); }
};

struct RigidBodyProps {
  double mass = 1.0;
  Mat3 inertia = Mat3::Identity();  // about com, body frame
  Vec3 com = Vec3::Zero();
};

// E(x) for the ellipsoid. Throws InvalidInput on non-finite x.
double ImplicitValue(const Ellipsoid& e, const Vec3& x);

// Returns the ellipsoid with the same implicit function whose radii are
// sorted descending and whose rotation is the smallest-angle choice among
// the equivalent axis sign flips (ties broken by the lexicographically
// smallest rotation vector). Coinciding radii resolve to the rotation of
// least angle, so spheres come back unrotated.
Ellipsoid Canonicalize(const Ellipsoid& e);

// Surface point maximizing <x, dir>. Throws InvalidInput for a zero or
// non-finite direction.
Vec3 SupportPoint(const Ellipsoid& e, const Vec3& dir);

// Fixed unit-sphere pattern of n points: a Fibonacci lattice, except for
// n = 4 which is a regular tetrahedron. Throws InvalidInput for n < 4.
const std::vector<Vec3>& UnitSpherePattern(int n);

// Surface points of e obtained by mapping UnitSpherePattern(n).
std::vector<Vec3> SampleSurface(const Ellipsoid& e, int n);

// Surface samples of every ellipsoid that are not strictly inside any other
// ellipsoid (min over the others of E_j(x) >= -1e-9).
std::vector<Vec3> RetainedSurfaceSamples(std::span<const Ellipsoid> es,
                                         int samples_per);

// Convex hull of the retained surface samples. When every sample is
// swallowed, falls back to the hull of the largest ellipsoid's samples.
TriMesh EllipsoidsToMesh(std::span<const Ellipsoid> es, int samples_per);

// Fits an oriented box: PCA axes, then a rotating-calipers minimum-area
// rectangle in the plane of the two dominant axes.
Obb FitObb(std::span<const Vec3> points);

// One ellipsoid per segment label 1..L (L = max label, at most 16), sized
// and oriented like the segment's OBB and returned in canonical form.
// Throws InvalidInput naming the segment when a label is missing or when a
// segment has fewer than 4 vertices or they are coplanar.
std::vector<Ellipsoid> MeshToEllipsoids(const TriMesh& mesh,
                                        std::span<const int> segment_labels);

// Signed volume (positive for outward-oriented closed meshes).
double MeshVolume(const TriMesh& mesh);

// Every undirected edge shared by exactly two triangles with opposite
// orientation.
bool IsWatertight(const TriMesh& mesh);

// Mass, center of mass and inertia about the center of mass for a uniform
// solid. Throws InvalidInput if the signed volume depends on the reference
// point by more than 1% (open mesh) or vanishes.
RigidBodyProps MeshMassProps(const TriMesh& mesh, double density);

// Closed-form mass properties of a solid ellipsoid; inertia in the
// ellipsoid's body frame.
RigidBodyProps EllipsoidMassProps(const Ellipsoid& e, double density);

// Throws InvalidInput if a triangle index is out of range or a triangle has
// zero area.
void CheckMesh(const TriMesh& mesh);

TriMesh TransformMesh(const TriMesh& mesh, const Mat3& rotation,
                      const Vec3& translation);

}  // namespace graspstab

#endif  // GRASPSTAB_GEOM_H_
