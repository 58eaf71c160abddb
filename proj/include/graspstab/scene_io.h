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

// Scene files, result bundles and their JSON/OBJ/CSV encodings.
//
// A scene file is a JSON object:
//
//   {
//     "units": "SI",                          optional, must be "SI"
//     "template": "default" | "hand.json" | {inline template},
//     "beta": [48 numbers],                    radii deltas, m
//     "theta": {"layout": "reduced" | "full",
//               "representation": "euler" | "axis_angle",
//               "values": [...]},
//     "phi": {"delta_radii": [3], "delta_axis_angle": [3],
//             "delta_center": [3]},
//     "root_t": [3],
//     "object": {"mesh": "sphere.obj", "catalog_id": "C0", "mass": kg,
//                "density": kg/m^3, "friction": mu, "restitution": e},
//     "sim": {"dt": ..., "steps": ..., ...},
//     "sampler": {"iterations": ..., "samples": ..., ...},
//     "limits": {"index_proximal.flexion": [lo, hi], ...},
//     "seed": 7
//   }
//
// Only "object" is required. Relative paths resolve against the scene
// file's directory. Unknown fields are rejected with their path.

#ifndef GRASPSTAB_SCENE_IO_H_
#define GRASPSTAB_SCENE_IO_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "graspstab/hand.h"
#include "graspstab/optimizer.h"
#include "graspstab/sim.h"

namespace graspstab {

// Scene file contents as written; absent fields stay absent so that
// writing a loaded scene reproduces the file.
struct SceneSpec {
  std::optional<std::string> units;
  std::optional<std::string> template_ref;
  std::optional<nlohmann::json> template_inline;
  std::optional<std::vector<double>> beta;
  std::optional<PoseParams> theta;
  std::optional<ObjectParams> phi;
  std::optional<Vec3> root_t;

  struct Object {
    std::optional<std::string> mesh;
    std::optional<std::string> catalog_id;
    std::optional<double> mass;
    std::optional<double> density;
    std::optional<double> friction;
    std::optional<double> restitution;
  } object;

  // Validated override objects, applied on top of the defaults.
  std::optional<nlohmann::json> sim;
  std::optional<nlohmann::json> sampler;
  std::optional<nlohmann::json> limits;
  std::optional<std::uint64_t> seed;

  nlohmann::json ToJson() const;
  // Throws InvalidInput naming the offending field path.
  static SceneSpec FromJson(const nlohmann::json& j);
};

SceneSpec LoadSceneFile(const std::filesystem::path& path);
void WriteSceneFile(const std::filesystem::path& path, const SceneSpec& spec);

inline constexpr double kDefaultFriction = 0.8;
inline constexpr double kDefaultRestitution = 1.0;
inline constexpr double kDefaultDensity = 500.0;

// A scene with every default applied and the object placed.
struct ResolvedScene {
  GraspProblem problem;
  SimConfig sim;
  SamplerConfig sampler;
  ObjectParams phi;
  HandState initial_state;
  std::vector<std::string> warnings;
};

// Applies defaults, loads the template and object mesh (relative to
// base_dir), injects catalog values and places the object at the object
// ellipsoid's frame.
ResolvedScene ResolveScene(const SceneSpec& spec,
                           const std::filesystem::path& base_dir);

// Reads and resolves in one step.
ResolvedScene LoadScene(const std::filesystem::path& path);

struct Metrics {
  double max_pene_mm = 0;
  double inter_cm3 = 0;
  double disp_mm = 0;
  double sc = 0;
  int resets = 0;

  nlohmann::json ToJson() const;
  static Metrics FromJson(const nlohmann::json& j);
};

// Contact metrics of posed hand parts against an object mesh.
struct ContactMetrics {
  double max_pene_mm = 0;
  double inter_cm3 = 0;
};
inline constexpr double kMetricsVoxel = 1e-3;  // m
ContactMetrics ComputeContactMetrics(const std::vector<TriMesh>& hand_parts,
                                     const TriMesh& object,
                                     double voxel = kMetricsVoxel);

// Per-link hull meshes of a posed hand.
std::vector<TriMesh> HandPartMeshes(const std::array<Ellipsoid, kNumLinks>& links);
// Concatenates meshes into one (disconnected) mesh.
TriMesh MergeMeshes(const std::vector<TriMesh>& parts);

struct ResultBundle {
  nlohmann::json result;
  Metrics metrics;
  TriMesh hand_mesh;    // per-link hulls at the best state
  TriMesh object_mesh;  // object at its initial pose
  std::string cost_trace_csv;
};

// File names inside a result directory.
inline constexpr const char* kResultFile = "result.json";
inline constexpr const char* kMetricsFile = "metrics.json";
inline constexpr const char* kHandMeshFile = "hand.obj";
inline constexpr const char* kObjectMeshFile = "object.obj";
inline constexpr const char* kCostTraceFile = "cost_trace.csv";

ResultBundle MakeBundle(const ResolvedScene& scene, const OptResult& result);

// Recomputes the metrics from the bundle's meshes and states. Throws
// NumericalError on any mismatch.
void VerifyBundle(const ResultBundle& bundle);

// Verifies, then writes the five files. Throws InvalidInput on IO errors.
void ExportResult(const ResultBundle& bundle, const std::filesystem::path& dir);
ResultBundle LoadResult(const std::filesystem::path& dir);

nlohmann::json OptResultToJson(const OptResult& result, const SimConfig& sim);
std::string CostTraceCsv(const OptResult& result);

nlohmann::json ContactsToJson(const std::vector<ContactImpulse>& contacts,
                              double dt);
nlohmann::json RolloutToJson(const RolloutRecord& record);
std::string RolloutCsv(const RolloutRecord& record);

nlohmann::json PoseToJson(const PoseParams& pose);
PoseParams PoseFromJson(const nlohmann::json& j, const std::string& field);

}  // namespace graspstab

#endif  // GRASPSTAB_SCENE_IO_H_
