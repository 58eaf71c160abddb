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

// Command-line front end: optimize, simulate, metrics, convert, template.
// Exit status is 0 on success, 1 for bad input and 2 for internal errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "graspstab/contact.h"
#include "graspstab/geom_io.h"
#include "graspstab/hand.h"
#include "graspstab/optimizer.h"
#include "graspstab/scene_io.h"
#include "graspstab/sim.h"
#include "graspstab/stability.h"

namespace {

namespace fs = std::filesystem;
using graspstab::InvalidInput;
using nlohmann::json;

struct RunFlags {
  std::string scene;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  std::optional<int> samples;
  std::optional<int> steps;
  std::optional<int> dofs;
  std::optional<int> threads;
};

void AddRunFlags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--scene", f.scene, "Scene JSON file")->required();
  cmd->add_option("--seed", f.seed, "Master seed (overrides the scene)");
  cmd->add_option("--iters", f.iters, "Sampling iterations K")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--samples", f.samples, "Samples per iteration N")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--steps", f.steps, "Simulation steps T")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--dofs", f.dofs, "Local pose DoFs: 20 or 45")
      ->check(CLI::IsMember({20, 45}));
  cmd->add_option("--threads", f.threads, "Worker threads (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
}

graspstab::ResolvedScene LoadWithFlags(const RunFlags& f) {
  graspstab::ResolvedScene s = graspstab::LoadScene(f.scene);
  for (const std::string& w : s.warnings) std::cerr << "warning: " << w << "\n";
  if (f.seed) s.sampler.seed = *f.seed;
  if (f.iters) s.sampler.iterations = *f.iters;
  if (f.samples) s.sampler.samples = *f.samples;
  if (f.steps) s.sim.steps = *f.steps;
  if (f.threads) s.sampler.threads = *f.threads;
  if (f.dofs) {
    s.problem.layout =
        *f.dofs == 45 ? graspstab::DofLayout::kFull : graspstab::DofLayout::kReduced;
  }
  return s;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
}

int RunOptimize(const RunFlags& f, const std::string& out_dir) {
  const graspstab::ResolvedScene s = LoadWithFlags(f);
  const graspstab::OptResult r = graspstab::Optimize(s.problem, s.sampler, s.sim);
  const graspstab::ResultBundle b = graspstab::MakeBundle(s, r);
  graspstab::ExportResult(b, out_dir);
  std::cout << b.metrics.ToJson().dump(2) << "\n";
  return 0;
}

int RunSimulate(const RunFlags& f, const std::string& out_json,
                const std::string& out_csv) {
  const graspstab::ResolvedScene s = LoadWithFlags(f);
  const graspstab::RolloutRecord rec = graspstab::RolloutSample(
      s.problem, s.sim, graspstab::CenterSample(s.problem));
  const graspstab::StabilityCost cost =
      graspstab::TotalCost(rec, s.problem.object.props, s.problem.cost);
  json j = graspstab::RolloutToJson(rec);
  j["cost"] = cost.ToJson();
  j["disp_mm"] = graspstab::SimulationDisplacement(rec);
  j["contacts_final"] = graspstab::ContactsToJson(rec.final_contacts, s.sim.dt);
  if (!out_json.empty()) WriteText(out_json, j.dump(2) + "\n");
  if (!out_csv.empty()) WriteText(out_csv, graspstab::RolloutCsv(rec));
  std::cout << json{{"cost", cost.ToJson()},
                    {"disp_mm", j["disp_mm"]},
                    {"reset_count", rec.reset_count}}
                   .dump(2)
            << "\n";
  return 0;
}

int RunMetrics(const std::string& hand_path, const std::string& object_path,
               double voxel_mm) {
  const graspstab::TriMesh hand = graspstab::ReadObjFile(hand_path);
  const graspstab::TriMesh object = graspstab::ReadObjFile(object_path);
  const graspstab::ContactMetrics m = graspstab::ComputeContactMetrics(
      graspstab::ConnectedComponents(hand), object, voxel_mm * 1e-3);
  std::cout << json{{"max_pene_mm", m.max_pene_mm}, {"inter_cm3", m.inter_cm3}}
                   .dump(2)
            << "\n";
  return 0;
}

int RunConvert(const std::string& input, const std::string& output,
               const std::string& labels_path, int samples) {
  const std::string ext = fs::path(input).extension().string();
  if (ext == ".obj") {
    graspstab::TriMesh mesh = graspstab::ReadObjFile(input);
    std::vector<int> labels;
    if (!labels_path.empty()) {
      std::ifstream in(labels_path);
      if (!in) throw InvalidInput("cannot open '" + labels_path + "'");
      try {
        labels = json::parse(in).get<std::vector<int>>();
      } catch (const json::exception& e) {
        throw InvalidInput("labels: expected an array of integers: " +
                           std::string(e.what()));
      }
    } else {
      // Components are relabeled in order; their vertices are regrouped.
      const auto parts = graspstab::ConnectedComponents(mesh);
      mesh = graspstab::MergeMeshes(parts);
      for (std::size_t p = 0; p < parts.size(); ++p) {
        labels.insert(labels.end(), parts[p].vertices.size(),
                      static_cast<int>(p) + 1);
      }
    }
    const auto es = graspstab::MeshToEllipsoids(mesh, labels);
    WriteText(output, graspstab::EllipsoidsToJson(es).dump(2) + "\n");
    return 0;
  }
  if (ext == ".json") {
    std::ifstream in(input);
    if (!in) throw InvalidInput("cannot open '" + input + "'");
    json j;
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      throw InvalidInput(input + ": " + e.what());
    }
    const auto es = graspstab::EllipsoidsFromJson(j);
    graspstab::WriteObjFile(output, graspstab::EllipsoidsToMesh(es, samples));
    return 0;
  }
  throw InvalidInput("convert: input must be a .obj mesh or a .json ellipsoid list");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grasp stability simulation and optimization"};
  app.require_subcommand(1);

  RunFlags opt_flags;
  std::string out_dir = "result";
  auto* optimize = app.add_subcommand("optimize", "Optimize a grasp scene");
  AddRunFlags(optimize, opt_flags);
  optimize->add_option("--out", out_dir, "Result directory");

  RunFlags sim_flags;
  std::string sim_json, sim_csv;
  auto* simulate =
      app.add_subcommand("simulate", "Roll out the scene's initial state");
  AddRunFlags(simulate, sim_flags);
  simulate->add_option("--out", sim_json, "Rollout record JSON");
  simulate->add_option("--csv", sim_csv, "Per-step CSV");

  std::string hand_path, object_path;
  double voxel_mm = graspstab::kMetricsVoxel * 1e3;
  auto* metrics =
      app.add_subcommand("metrics", "Penetration and intersection metrics");
  metrics->add_option("--hand", hand_path, "Hand mesh OBJ")->required();
  metrics->add_option("--object", object_path, "Object mesh OBJ")->required();
  metrics->add_option("--voxel", voxel_mm, "Voxel pitch in mm")
      ->check(CLI::Range(0.5, 5.0));

  std::string conv_in, conv_out, conv_labels;
  int conv_samples = graspstab::kSurfacePatternSize;
  auto* convert = app.add_subcommand(
      "convert", "Mesh (.obj) to ellipsoids (.json) or back");
  convert->add_option("--input", conv_in, "Input .obj or .json")->required();
  convert->add_option("--output", conv_out, "Output file")->required();
  convert->add_option("--labels", conv_labels,
                      "Per-vertex segment labels (JSON array, 1-based); "
                      "defaults to one segment per connected component");
  convert->add_option("--samples", conv_samples,
                      "Surface samples per ellipsoid for .json input")
      ->check(CLI::Range(4, 100000));

  std::string template_out;
  auto* tmpl = app.add_subcommand("template", "Emit the default hand template");
  tmpl->add_option("--out", template_out, "Output file (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (optimize->parsed()) return RunOptimize(opt_flags, out_dir);
    if (simulate->parsed()) return RunSimulate(sim_flags, sim_json, sim_csv);
    if (metrics->parsed()) return RunMetrics(hand_path, object_path, voxel_mm);
    if (convert->parsed()) {
      return RunConvert(conv_in, conv_out, conv_labels, conv_samples);
    }
    if (tmpl->parsed()) {
      const std::string text =
          graspstab::HandTemplate::Default().ToJson().dump(2) + "\n";
      if (template_out.empty()) {
        std::cout << text;
      } else {
        WriteText(template_out, text);
      }
      return 0;
    }
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
