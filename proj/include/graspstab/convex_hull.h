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

#ifndef GRASPSTAB_CONVEX_HULL_H_
#define GRASPSTAB_CONVEX_HULL_H_

#include <span>

#include "graspstab/geom.h"

namespace graspstab {

// Quickhull. Returns a closed, outward-oriented triangle mesh whose vertices
// are the hull vertices of the input. Throws InvalidInput when the points do
// not span three dimensions.
TriMesh ConvexHull(std::span<const Vec3> points);

}  // namespace graspstab

#endif  // GRASPSTAB_CONVEX_HULL_H_
