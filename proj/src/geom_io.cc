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

#include "graspstab/geom_io.h"

#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace graspstab {

TriMesh ReadObj(std::istream& in) {
  TriMesh mesh;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ss >> v.x() >> v.y() >> v.z())) {
        throw InvalidInput("OBJ line " + std::to_string(line_no) +
                           ": malformed vertex");
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> face;
      std::string tok;
      while (ss >> tok) {
        // "i", "i/t", "i//n" or "i/t/n"
        const std::string head = tok.substr(0, tok.find('/'));
        int idx = 0;
        try {
          idx = std::stoi(head);
        } catch (const std::exception&) {
          throw InvalidInput("OBJ line " + std::to_string(line_no) +
                             ": malformed face index '" + tok + "'");
        }
        const int n = static_cast<int>(mesh.vertices.size());
        idx = idx < 0 ? n + idx : idx - 1;
        if (idx < 0 || idx >= n) {
          throw InvalidInput("OBJ line " + std::to_string(line_no) +
                             ": face index out of range");
        }
        face.push_back(idx);
      }
      if (face.size() < 3) {
        throw InvalidInput("OBJ line " + std::to_string(line_no) +
                           ": face with fewer than 3 vertices");
      }
      for (std::size_t k = 1; k + 1 < face.size(); ++k) {
        const std::array<int, 3> tri = {face[0], face[k], face[k + 1]};
        const Vec3 cr = (mesh.vertices[tri[1]] - mesh.vertices[tri[0]])
                            .cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
        if (cr.norm() > 0) mesh.triangles.push_back(tri);
      }
    }
  }
  return mesh;
}

TriMesh ReadObjFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open mesh file '" + path + "'");
  return ReadObj(in);
}

void WriteObj(std::ostream& out, const TriMesh& mesh) {
  out << std::setprecision(17);
  for (const Vec3& v : mesh.vertices) {
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  for (const auto& t : mesh.triangles) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
}

void WriteObjFile(const std::string& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write mesh file '" + path + "'");
  WriteObj(out, mesh);
}

std::vector<TriMesh> ConnectedComponents(const TriMesh& mesh) {
  const int n = static_cast<int>(mesh.vertices.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& t : mesh.triangles) {
    parent[find(t[1])] = find(t[0]);
    parent[find(t[2])] = find(t[0]);
  }
  std::vector<int> comp_of_root(n, -1);
  std::vector<TriMesh> comps;
  std::vector<int> local(n, -1);
  for (const auto& t : mesh.triangles) {
    const int root = find(t[0]);
    if (comp_of_root[root] < 0) {
      comp_of_root[root] = static_cast<int>(comps.size());
      comps.emplace_back();
    }
    TriMesh& c = comps[comp_of_root[root]];
    std::array<int, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      if (local[t[k]] < 0) {
        local[t[k]] = static_cast<int>(c.vertices.size());
        c.vertices.push_back(mesh.vertices[t[k]]);
      }
      tri[k] = local[t[k]];
    }
    c.triangles.push_back(tri);
  }
  return comps;
}

nlohmann::json Vec3ToJson(const Vec3& v) {
  return nlohmann::json::array({v.x(), v.y(), v.z()});
}

Vec3 Vec3FromJson(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) {
    throw InvalidInput(field + ": expected an array of 3 numbers");
  }
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    if (!j[k].is_number()) {
      throw InvalidInput(field + ": expected an array of 3 numbers");
    }
    v[k] = j[k].get<double>();
  }
  return v;
}

nlohmann::json EllipsoidToJson(const Ellipsoid& e) {
  return {{"center", Vec3ToJson(e.center())},
          {"radii", Vec3ToJson(e.radii())},
          {"axis_angle", Vec3ToJson(e.axis_angle())}};
}

Ellipsoid EllipsoidFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInput("ellipsoid: expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "center" && key != "radii" && key != "axis_angle") {
      throw InvalidInput("ellipsoid: unknown field '" + key + "'");
    }
  }
  if (!j.contains("center") || !j.contains("radii")) {
    throw InvalidInput("ellipsoid: 'center' and 'radii' are required");
  }
  const Vec3 aa = j.contains("axis_angle")
                      ? Vec3FromJson(j["axis_angle"], "ellipsoid.axis_angle")
                      : Vec3::Zero();
  return Ellipsoid(Vec3FromJson(j["center"], "ellipsoid.center"),
                   Vec3FromJson(j["radii"], "ellipsoid.radii"), aa);
}

nlohmann::json EllipsoidsToJson(const std::vector<Ellipsoid>& es) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Ellipsoid& e : es) arr.push_back(EllipsoidToJson(e));
  return arr;
}

std::vector<Ellipsoid> EllipsoidsFromJson(const nlohmann::json& j) {
  if (!j.is_array()) throw InvalidInput("ellipsoid list: expected an array");
  std::vector<Ellipsoid> out;
  for (const auto& item : j) out.push_back(EllipsoidFromJson(item));
  return out;
}

}  // namespace graspstab
