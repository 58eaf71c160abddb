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

#ifndef GRASPSTAB_GEOM_IO_H_
#define GRASPSTAB_GEOM_IO_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "graspstab/geom.h"

namespace graspstab {

// Wavefront OBJ: only `v` and `f` records are read. Polygonal faces are fan
// triangulated, negative (relative) indices are supported and zero-area
// triangles are dropped.
TriMesh ReadObj(std::istream& in);
TriMesh ReadObjFile(const std::string& path);
void WriteObj(std::ostream& out, const TriMesh& mesh);
void WriteObjFile(const std::string& path, const TriMesh& mesh);

// Splits a mesh into its edge-connected components.
std::vector<TriMesh> ConnectedComponents(const TriMesh& mesh);

// {"center":[x,y,z],"radii":[a,b,c],"axis_angle":[u,v,w]}
nlohmann::json EllipsoidToJson(const Ellipsoid& e);
Ellipsoid EllipsoidFromJson(const nlohmann::json& j);
nlohmann::json EllipsoidsToJson(const std::vector<Ellipsoid>& es);
std::vector<Ellipsoid> EllipsoidsFromJson(const nlohmann::json& j);

nlohmann::json Vec3ToJson(const Vec3& v);
// Throws InvalidInput naming `field` unless j is an array of 3 numbers.
Vec3 Vec3FromJson(const nlohmann::json& j, const std::string& field);

}  // namespace graspstab

#endif  // GRASPSTAB_GEOM_IO_H_
