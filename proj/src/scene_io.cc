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

#include "graspstab/scene_io.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "graspstab/catalog.h"
#include "graspstab/contact.h"
#include "graspstab/geom_io.h"

namespace graspstab {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void Fail(const std::string& path, const std::string& what) {
  throw InvalidInput(path + ": " + what);
}

void RejectUnknown(const json& j, const std::string& path,
                   const std::set<std::string>& known) {
  if (!j.is_object()) Fail(path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) Fail(path + "." + key, "unknown field");
  }
}

double GetNumber(const json& j, const std::string& path) {
  if (!j.is_number()) Fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) Fail(path, "expected a finite number");
  return v;
}

double GetPositive(const json& j, const std::string& path) {
  const double v = GetNumber(j, path);
  if (!(v > 0)) Fail(path, "must be positive");
  return v;
}

int GetInt(const json& j, const std::string& path) {
  if (!j.is_number_integer()) Fail(path, "expected an integer");
  return j.get<int>();
}

bool GetBool(const json& j, const std::string& path) {
  if (!j.is_boolean()) Fail(path, "expected true or false");
  return j.get<bool>();
}

std::string GetString(const json& j, const std::string& path) {
  if (!j.is_string()) Fail(path, "expected a string");
  return j.get<std::string>();
}

Vec3 GetVec3(const json& j, const std::string& path) {
  return Vec3FromJson(j, path);
}

std::vector<double> GetNumbers(const json& j, const std::string& path) {
  if (!j.is_array()) Fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(GetNumber(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

json QuatToJson(const Quat& q) { return {q.w(), q.x(), q.y(), q.z()}; }

// Number with infinities kept distinguishable from nulls.
json CostNumber(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? json("inf") : json("-inf");
}

using SimSetter = std::function<void(SimConfig&, const json&, const std::string&)>;

const std::map<std::string, SimSetter>& SimFields() {
  static const std::map<std::string, SimSetter> fields = {
      {"dt", [](SimConfig& c, const json& j, const std::string& p) { c.dt = GetPositive(j, p); }},
      {"steps", [](SimConfig& c, const json& j, const std::string& p) { c.steps = GetInt(j, p); }},
      {"gravity", [](SimConfig& c, const json& j, const std::string& p) { c.gravity = GetVec3(j, p); }},
      {"restitution_threshold", [](SimConfig& c, const json& j, const std::string& p) { c.restitution_threshold = GetNumber(j, p); }},
      {"pd_kp", [](SimConfig& c, const json& j, const std::string& p) { c.pd_kp = GetNumber(j, p); }},
      {"pd_kd", [](SimConfig& c, const json& j, const std::string& p) { c.pd_kd = GetNumber(j, p); }},
      {"torque_clamp", [](SimConfig& c, const json& j, const std::string& p) { c.torque_clamp = GetPositive(j, p); }},
      {"root_kp_linear", [](SimConfig& c, const json& j, const std::string& p) { c.root_kp_linear = GetNumber(j, p); }},
      {"root_force_clamp", [](SimConfig& c, const json& j, const std::string& p) { c.root_force_clamp = GetPositive(j, p); }},
      {"root_kp_angular", [](SimConfig& c, const json& j, const std::string& p) { c.root_kp_angular = GetNumber(j, p); }},
      {"root_torque_clamp", [](SimConfig& c, const json& j, const std::string& p) { c.root_torque_clamp = GetPositive(j, p); }},
      {"solver_iterations", [](SimConfig& c, const json& j, const std::string& p) { c.solver_iterations = GetInt(j, p); }},
      {"baumgarte", [](SimConfig& c, const json& j, const std::string& p) { c.baumgarte = GetNumber(j, p); }},
      {"slop", [](SimConfig& c, const json& j, const std::string& p) { c.slop = GetNumber(j, p); }},
      {"reset_position", [](SimConfig& c, const json& j, const std::string& p) { c.reset_position = GetPositive(j, p); }},
      {"reset_angle", [](SimConfig& c, const json& j, const std::string& p) { c.reset_angle = GetPositive(j, p); }},
      {"enable_reset", [](SimConfig& c, const json& j, const std::string& p) { c.enable_reset = GetBool(j, p); }},
      {"link_density", [](SimConfig& c, const json& j, const std::string& p) { c.link_density = GetPositive(j, p); }},
      {"max_initial_penetration", [](SimConfig& c, const json& j, const std::string& p) { c.max_initial_penetration = GetPositive(j, p); }},
      {"divergence_speed", [](SimConfig& c, const json& j, const std::string& p) { c.divergence_speed = GetPositive(j, p); }},
  };
  return fields;
}

using SamplerSetter =
    std::function<void(SamplerConfig&, const json&, const std::string&)>;

const std::map<std::string, SamplerSetter>& SamplerFields() {
  static const std::map<std::string, SamplerSetter> fields = {
      {"iterations", [](SamplerConfig& c, const json& j, const std::string& p) { c.iterations = GetInt(j, p); }},
      {"samples", [](SamplerConfig& c, const json& j, const std::string& p) { c.samples = GetInt(j, p); }},
      {"pose_variance", [](SamplerConfig& c, const json& j, const std::string& p) { c.pose_variance = GetPositive(j, p); }},
      {"root_variance", [](SamplerConfig& c, const json& j, const std::string& p) { c.root_variance = GetPositive(j, p); }},
      {"elite_fraction", [](SamplerConfig& c, const json& j, const std::string& p) { c.elite_fraction = GetPositive(j, p); }},
      {"variance_floor", [](SamplerConfig& c, const json& j, const std::string& p) { c.variance_floor = GetPositive(j, p); }},
      {"temperature_floor", [](SamplerConfig& c, const json& j, const std::string& p) { c.temperature_floor = GetPositive(j, p); }},
      {"update_mean", [](SamplerConfig& c, const json& j, const std::string& p) { c.update_mean = GetBool(j, p); }},
      {"threads", [](SamplerConfig& c, const json& j, const std::string& p) { c.threads = GetInt(j, p); }},
  };
  return fields;
}

template <typename Config, typename Fields>
void ApplyOverrides(Config& cfg, const json& j, const std::string& path,
                    const Fields& fields) {
  if (!j.is_object()) Fail(path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    auto it = fields.find(key);
    if (it == fields.end()) Fail(path + "." + key, "unknown field");
    it->second(cfg, value, path + "." + key);
  }
}

std::map<std::string, int> FullDofIndex() {
  std::map<std::string, int> out;
  for (int i = 0; i < kFullDofs; ++i) out[DofName(DofLayout::kFull, i)] = i;
  return out;
}

void ApplyLimits(JointLimits& limits, const json& j, const std::string& path) {
  if (!j.is_object()) Fail(path, "expected an object");
  const auto index = FullDofIndex();
  for (const auto& [key, value] : j.items()) {
    const std::string p = path + "." + key;
    auto it = index.find(key);
    if (it == index.end()) Fail(p, "unknown degree of freedom");
    const std::vector<double> v = GetNumbers(value, p);
    if (v.size() != 2 || !(v[0] <= v[1])) Fail(p, "expected [lo, hi] with lo <= hi");
    limits.full[it->second] = {v[0], v[1]};
  }
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool Close(double a, double b) {
  return std::abs(a - b) <= 1e-9 + 1e-6 * std::max(std::abs(a), std::abs(b));
}

json OutcomeToJson(const SampleOutcome& o, double dt) {
  json j = {{"theta", PoseToJson(o.sample.theta)},
            {"root_t", Vec3ToJson(o.sample.root)},
            {"clamped_dofs", o.sample.clamped.size()},
            {"cost", o.cost.ToJson()},
            {"weight", o.weight}};
  j["cost"]["total"] = CostNumber(o.cost.total);
  if (!o.ok()) {
    j["error"] = o.error;
    return j;
  }
  j["reset_count"] = o.reset_count;
  j["displacement_mm"] = o.displacement_mm;
  j["p_final"] = Vec3ToJson(o.p_final);
  j["q_final"] = QuatToJson(o.q_final);
  j["pose_final"] = PoseToJson(o.pose_final);
  j["root_final"] = Vec3ToJson(o.root_final);
  j["contacts"] = ContactsToJson(o.final_contacts, dt);
  return j;
}

}  // namespace

json PoseToJson(const PoseParams& pose) {
  return {{"layout", pose.layout == DofLayout::kFull ? "full" : "reduced"},
          {"representation", pose.representation == PoseRepresentation::kEuler
                                 ? "euler"
                                 : "axis_angle"},
          {"values", pose.values}};
}

PoseParams PoseFromJson(const json& j, const std::string& path) {
  RejectUnknown(j, path, {"layout", "representation", "values"});
  PoseParams p;
  const std::string layout =
      j.contains("layout") ? GetString(j["layout"], path + ".layout") : "reduced";
  if (layout == "full") {
    p.layout = DofLayout::kFull;
  } else if (layout == "reduced") {
    p.layout = DofLayout::kReduced;
  } else {
    Fail(path + ".layout", "expected \"full\" or \"reduced\"");
  }
  const std::string rep = j.contains("representation")
                              ? GetString(j["representation"], path + ".representation")
                              : "euler";
  if (rep == "euler") {
    p.representation = PoseRepresentation::kEuler;
  } else if (rep == "axis_angle") {
    p.representation = PoseRepresentation::kAxisAngle;
  } else {
    Fail(path + ".representation", "expected \"euler\" or \"axis_angle\"");
  }
  if (!j.contains("values")) Fail(path + ".values", "required");
  p.values = GetNumbers(j["values"], path + ".values");
  try {
    p.Validate();
  } catch (const InvalidInput& e) {
    Fail(path, e.what());
  }
  return p;
}

json SceneSpec::ToJson() const {
  json j = json::object();
  if (units) j["units"] = *units;
  if (template_ref) j["template"] = *template_ref;
  if (template_inline) j["template"] = *template_inline;
  if (beta) j["beta"] = *beta;
  if (theta) j["theta"] = PoseToJson(*theta);
  if (phi) {
    j["phi"] = {{"delta_radii", Vec3ToJson(phi->delta_radii)},
                {"delta_axis_angle", Vec3ToJson(phi->delta_axis_angle)},
                {"delta_center", Vec3ToJson(phi->delta_center)}};
  }
  if (root_t) j["root_t"] = Vec3ToJson(*root_t);
  json o = json::object();
  if (object.mesh) o["mesh"] = *object.mesh;
  if (object.catalog_id) o["catalog_id"] = *object.catalog_id;
  if (object.mass) o["mass"] = *object.mass;
  if (object.density) o["density"] = *object.density;
  if (object.friction) o["friction"] = *object.friction;
  if (object.restitution) o["restitution"] = *object.restitution;
  j["object"] = o;
  if (sim) j["sim"] = *sim;
  if (sampler) j["sampler"] = *sampler;
  if (limits) j["limits"] = *limits;
  if (seed) j["seed"] = *seed;
  return j;
}

SceneSpec SceneSpec::FromJson(const json& j) {
  const std::string root = "scene";
  RejectUnknown(j, root,
                {"units", "template", "beta", "theta", "phi", "root_t",
                 "object", "sim", "sampler", "limits", "seed"});
  SceneSpec s;
  if (j.contains("units")) {
    s.units = GetString(j["units"], root + ".units");
    if (*s.units != "SI") Fail(root + ".units", "only \"SI\" is supported");
  }
  if (j.contains("template")) {
    const json& t = j["template"];
    if (t.is_string()) {
      s.template_ref = t.get<std::string>();
    } else if (t.is_object()) {
      try {
        HandTemplate::FromJson(t);
      } catch (const InvalidInput& e) {
        Fail(root + ".template", e.what());
      }
      s.template_inline = t;
    } else {
      Fail(root + ".template", "expected a name, a path or an inline template");
    }
  }
  if (j.contains("beta")) {
    s.beta = GetNumbers(j["beta"], root + ".beta");
    if (s.beta->size() != 3 * kNumLinks) {
      Fail(root + ".beta", "expected " + std::to_string(3 * kNumLinks) + " numbers");
    }
  }
  if (j.contains("theta")) s.theta = PoseFromJson(j["theta"], root + ".theta");
  if (j.contains("phi")) {
    const std::string p = root + ".phi";
    RejectUnknown(j["phi"], p, {"delta_radii", "delta_axis_angle", "delta_center"});
    ObjectParams phi;
    const json& pj = j["phi"];
    if (pj.contains("delta_radii")) phi.delta_radii = GetVec3(pj["delta_radii"], p + ".delta_radii");
    if (pj.contains("delta_axis_angle")) phi.delta_axis_angle = GetVec3(pj["delta_axis_angle"], p + ".delta_axis_angle");
    if (pj.contains("delta_center")) phi.delta_center = GetVec3(pj["delta_center"], p + ".delta_center");
    s.phi = phi;
  }
  if (j.contains("root_t")) s.root_t = GetVec3(j["root_t"], root + ".root_t");

  if (!j.contains("object")) Fail(root + ".object", "required");
  {
    const std::string p = root + ".object";
    const json& o = j["object"];
    RejectUnknown(o, p, {"mesh", "catalog_id", "mass", "density", "friction", "restitution"});
    if (o.contains("mesh")) s.object.mesh = GetString(o["mesh"], p + ".mesh");
    if (o.contains("catalog_id")) {
      s.object.catalog_id = GetString(o["catalog_id"], p + ".catalog_id");
      try {
        LookupCatalog(*s.object.catalog_id);
      } catch (const InvalidInput& e) {
        Fail(p + ".catalog_id", e.what());
      }
    }
    if (o.contains("mass")) s.object.mass = GetPositive(o["mass"], p + ".mass");
    if (o.contains("density")) s.object.density = GetPositive(o["density"], p + ".density");
    if (o.contains("friction")) {
      s.object.friction = GetNumber(o["friction"], p + ".friction");
      if (*s.object.friction < 0 || *s.object.friction > 2) {
        Fail(p + ".friction", "must lie in [0, 2]");
      }
    }
    if (o.contains("restitution")) {
      s.object.restitution = GetNumber(o["restitution"], p + ".restitution");
      if (*s.object.restitution < 0 || *s.object.restitution > 1) {
        Fail(p + ".restitution", "must lie in [0, 1]");
      }
    }
    if (!s.object.mesh && !s.object.catalog_id) {
      Fail(p + ".mesh", "required unless a catalog_id is given");
    }
  }
  if (j.contains("sim")) {
    SimConfig probe;
    ApplyOverrides(probe, j["sim"], root + ".sim", SimFields());
    s.sim = j["sim"];
  }
  if (j.contains("sampler")) {
    SamplerConfig probe;
    ApplyOverrides(probe, j["sampler"], root + ".sampler", SamplerFields());
    s.sampler = j["sampler"];
  }
  if (j.contains("limits")) {
    JointLimits probe;
    ApplyLimits(probe, j["limits"], root + ".limits");
    s.limits = j["limits"];
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) Fail(root + ".seed", "expected a non-negative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  return s;
}

SceneSpec LoadSceneFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open scene file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidInput("scene file '" + path.string() + "': " + e.what());
  }
  return SceneSpec::FromJson(j);
}

void WriteSceneFile(const fs::path& path, const SceneSpec& spec) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write scene file '" + path.string() + "'");
  out << spec.ToJson().dump(2) << "\n";
}

ResolvedScene ResolveScene(const SceneSpec& spec, const fs::path& base_dir) {
  ResolvedScene r;
  GraspProblem& prob = r.problem;

  if (spec.template_inline) {
    prob.tmpl = HandTemplate::FromJson(*spec.template_inline);
  } else if (spec.template_ref && *spec.template_ref != "default") {
    const fs::path p = base_dir / *spec.template_ref;
    std::ifstream in(p);
    if (!in) Fail("scene.template", "cannot open '" + p.string() + "'");
    json tj;
    try {
      in >> tj;
    } catch (const json::parse_error& e) {
      Fail("scene.template", e.what());
    }
    prob.tmpl = HandTemplate::FromJson(tj);
  }
  if (spec.beta) {
    for (int i = 0; i < kNumLinks; ++i) {
      prob.beta.delta_radii[i] =
          Vec3((*spec.beta)[3 * i], (*spec.beta)[3 * i + 1], (*spec.beta)[3 * i + 2]);
    }
  }
  prob.theta = spec.theta ? *spec.theta
                          : PoseParams::Zero(DofLayout::kReduced,
                                             PoseRepresentation::kEuler);
  prob.layout = prob.theta.layout;
  prob.root = spec.root_t.value_or(Vec3::Zero());
  r.phi = spec.phi.value_or(ObjectParams());

  if (spec.sim) ApplyOverrides(r.sim, *spec.sim, "scene.sim", SimFields());
  if (spec.sampler) {
    ApplyOverrides(r.sampler, *spec.sampler, "scene.sampler", SamplerFields());
  }
  if (spec.limits) ApplyLimits(prob.limits, *spec.limits, "scene.limits");
  r.sampler.seed = spec.seed.value_or(0);

  const CatalogEntry* entry = nullptr;
  if (spec.object.catalog_id) {
    entry = &LookupCatalog(*spec.object.catalog_id);
    if (!entry->warning.empty()) {
      r.warnings.push_back("catalog " + std::string(entry->id) + ": " +
                           std::string(entry->warning));
    }
  }
  r.sim.friction = spec.object.friction.value_or(
      entry != nullptr ? entry->friction : kDefaultFriction);
  r.sim.restitution = spec.object.restitution.value_or(kDefaultRestitution);
  r.sim.Validate();
  r.sampler.Validate();

  TriMesh mesh;
  if (spec.object.mesh) {
    mesh = ReadObjFile((base_dir / *spec.object.mesh).string());
  } else {
    const std::vector<Ellipsoid> e = {
        Ellipsoid(Vec3::Zero(), entry->size_m() / 2, Vec3::Zero())};
    mesh = EllipsoidsToMesh(e, kSurfacePatternSize);
  }
  CheckMesh(mesh);
  const double volume = MeshVolume(mesh);
  double density = spec.object.density.value_or(kDefaultDensity);
  if (spec.object.mass) {
    density = *spec.object.mass / volume;
  } else if (entry != nullptr) {
    density = entry->mass_kg() / volume;
  }
  prob.object.mesh = mesh;
  prob.object.props = MeshMassProps(mesh, density);

  r.initial_state =
      ComposeState(prob.tmpl, prob.beta, prob.theta, r.phi, prob.root);
  const Ellipsoid& e0 = r.initial_state.object;
  prob.object.position = e0.center();
  prob.object.orientation = Quat(e0.rotation());
  prob.cost.gravity = r.sim.gravity;
  prob.cost.char_len = e0.radii().mean();
  return r;
}

ResolvedScene LoadScene(const fs::path& path) {
  return ResolveScene(LoadSceneFile(path), path.parent_path());
}

json Metrics::ToJson() const {
  return {{"max_pene_mm", max_pene_mm},
          {"inter_cm3", inter_cm3},
          {"disp_mm", disp_mm},
          {"sc", sc},
          {"resets", resets}};
}

Metrics Metrics::FromJson(const json& j) {
  RejectUnknown(j, "metrics", {"max_pene_mm", "inter_cm3", "disp_mm", "sc", "resets"});
  Metrics m;
  for (const char* key : {"max_pene_mm", "inter_cm3", "disp_mm", "sc", "resets"}) {
    if (!j.contains(key)) Fail(std::string("metrics.") + key, "required");
  }
  m.max_pene_mm = GetNumber(j["max_pene_mm"], "metrics.max_pene_mm");
  m.inter_cm3 = GetNumber(j["inter_cm3"], "metrics.inter_cm3");
  m.disp_mm = GetNumber(j["disp_mm"], "metrics.disp_mm");
  m.sc = GetNumber(j["sc"], "metrics.sc");
  m.resets = GetInt(j["resets"], "metrics.resets");
  return m;
}

ContactMetrics ComputeContactMetrics(const std::vector<TriMesh>& hand_parts,
                                     const TriMesh& object, double voxel) {
  ContactMetrics m;
  m.max_pene_mm = MaxPenetration(hand_parts, object) * 1e3;
  m.inter_cm3 = IntersectionVolume(hand_parts, object, voxel);
  return m;
}

std::vector<TriMesh> HandPartMeshes(const std::array<Ellipsoid, kNumLinks>& links) {
  std::vector<TriMesh> parts;
  for (const Ellipsoid& e : links) {
    const std::vector<Ellipsoid> one = {e};
    parts.push_back(EllipsoidsToMesh(one, kSurfacePatternSize));
  }
  return parts;
}

TriMesh MergeMeshes(const std::vector<TriMesh>& parts) {
  TriMesh out;
  for (const TriMesh& m : parts) {
    const int base = static_cast<int>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), m.vertices.begin(), m.vertices.end());
    for (const auto& t : m.triangles) {
      out.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
    }
  }
  return out;
}

json ContactsToJson(const std::vector<ContactImpulse>& contacts, double dt) {
  json out = json::array();
  for (const ContactImpulse& c : contacts) {
    out.push_back({{"position", Vec3ToJson(c.point.position)},
                   {"normal", Vec3ToJson(c.point.normal)},
                   {"depth", c.point.depth},
                   {"body_a", c.point.body_a},
                   {"body_b", c.point.body_b},
                   {"normal_force", c.normal / dt},
                   {"tangent_force", Vec3ToJson(c.tangent / dt)}});
  }
  return out;
}

json OptResultToJson(const OptResult& result, const SimConfig& sim) {
  json trace = json::array();
  for (std::size_t k = 0; k < result.trace.size(); ++k) {
    const IterationStats& s = result.trace[k];
    trace.push_back({{"iteration", k},
                     {"best", CostNumber(s.best)},
                     {"best_so_far", CostNumber(s.best_so_far)},
                     {"median", CostNumber(s.median)},
                     {"failures", s.failures},
                     {"clamped", s.clamped},
                     {"mean_sigma", s.mean_sigma}});
  }
  const auto& d = result.final_distribution;
  return {{"best", OutcomeToJson(result.best, sim.dt)},
          {"center", OutcomeToJson(result.center, sim.dt)},
          {"evaluations", result.evaluations},
          {"trace", trace},
          {"final_distribution",
           {{"mean", std::vector<double>(d.mean.data(), d.mean.data() + d.mean.size())},
            {"variance", std::vector<double>(d.variance.data(),
                                             d.variance.data() + d.variance.size())}}}};
}

std::string CostTraceCsv(const OptResult& result) {
  std::ostringstream out;
  out << "iteration,best,best_so_far,median,failures,clamped,mean_sigma\n";
  for (std::size_t k = 0; k < result.trace.size(); ++k) {
    const IterationStats& s = result.trace[k];
    out << k << "," << FormatDouble(s.best) << "," << FormatDouble(s.best_so_far)
        << "," << FormatDouble(s.median) << "," << s.failures << "," << s.clamped
        << "," << FormatDouble(s.mean_sigma) << "\n";
  }
  return out.str();
}

ResultBundle MakeBundle(const ResolvedScene& scene, const OptResult& result) {
  if (!result.best.ok()) {
    throw NumericalError("result bundle: no finite-cost sample to export");
  }
  const GraspProblem& prob = scene.problem;
  ResultBundle b;
  b.result = OptResultToJson(result, scene.sim);
  b.result["p_initial"] = Vec3ToJson(prob.object.position);
  b.result["q_initial"] = QuatToJson(prob.object.orientation);
  b.result["seed"] = scene.sampler.seed;
  b.result["config"] = {{"iterations", scene.sampler.iterations},
                        {"samples", scene.sampler.samples},
                        {"steps", scene.sim.steps},
                        {"dt", scene.sim.dt},
                        {"dofs", DofCount(prob.layout) - 3}};

  const HandState best = ComposeState(prob.tmpl, prob.beta, result.best.sample.theta,
                                      scene.phi, result.best.sample.root);
  const std::vector<TriMesh> parts = HandPartMeshes(best.links);
  b.hand_mesh = MergeMeshes(parts);
  b.object_mesh = TransformMesh(prob.object.mesh,
                                prob.object.orientation.toRotationMatrix(),
                                prob.object.position);
  const ContactMetrics cm = ComputeContactMetrics(parts, b.object_mesh);
  b.metrics.max_pene_mm = cm.max_pene_mm;
  b.metrics.inter_cm3 = cm.inter_cm3;
  b.metrics.disp_mm = result.best.displacement_mm;
  b.metrics.sc = result.best.cost.total;
  b.metrics.resets = result.best.reset_count;
  b.cost_trace_csv = CostTraceCsv(result);
  return b;
}

void VerifyBundle(const ResultBundle& b) {
  auto mismatch = [](const std::string& what, double stored, double recomputed) {
    throw NumericalError("result bundle: " + what + " is " + FormatDouble(stored) +
                         " but recomputes to " + FormatDouble(recomputed));
  };
  const ContactMetrics cm =
      ComputeContactMetrics(ConnectedComponents(b.hand_mesh), b.object_mesh);
  if (!Close(cm.max_pene_mm, b.metrics.max_pene_mm)) {
    mismatch("max_pene_mm", b.metrics.max_pene_mm, cm.max_pene_mm);
  }
  if (!Close(cm.inter_cm3, b.metrics.inter_cm3)) {
    mismatch("inter_cm3", b.metrics.inter_cm3, cm.inter_cm3);
  }
  try {
    const json& best = b.result.at("best");
    const Vec3 p0 = Vec3FromJson(b.result.at("p_initial"), "result.p_initial");
    const Vec3 p1 = Vec3FromJson(best.at("p_final"), "result.best.p_final");
    const double disp = (p1 - p0).norm() * 1e3;
    if (!Close(disp, b.metrics.disp_mm)) mismatch("disp_mm", b.metrics.disp_mm, disp);
    const double sc = GetNumber(best.at("cost").at("total"), "result.best.cost.total");
    if (!Close(sc, b.metrics.sc)) mismatch("sc", b.metrics.sc, sc);
    const int resets = GetInt(best.at("reset_count"), "result.best.reset_count");
    if (resets != b.metrics.resets) mismatch("resets", b.metrics.resets, resets);
  } catch (const json::exception& e) {
    throw NumericalError(std::string("result bundle: incomplete result: ") + e.what());
  }
}

void ExportResult(const ResultBundle& b, const fs::path& dir) {
  VerifyBundle(b);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create '" + dir.string() + "': " + ec.message());
  auto write_text = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name);
    out << text;
    if (!out) throw InvalidInput("cannot write '" + (dir / name).string() + "'");
  };
  write_text(kResultFile, b.result.dump(2) + "\n");
  write_text(kMetricsFile, b.metrics.ToJson().dump(2) + "\n");
  WriteObjFile((dir / kHandMeshFile).string(), b.hand_mesh);
  WriteObjFile((dir / kObjectMeshFile).string(), b.object_mesh);
  write_text(kCostTraceFile, b.cost_trace_csv);
}

ResultBundle LoadResult(const fs::path& dir) {
  auto read_text = [&](const char* name) {
    std::ifstream in(dir / name);
    if (!in) throw InvalidInput("cannot open '" + (dir / name).string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  ResultBundle b;
  try {
    b.result = json::parse(read_text(kResultFile));
    b.metrics = Metrics::FromJson(json::parse(read_text(kMetricsFile)));
  } catch (const json::parse_error& e) {
    throw InvalidInput("result bundle '" + dir.string() + "': " + e.what());
  }
  b.hand_mesh = ReadObjFile((dir / kHandMeshFile).string());
  b.object_mesh = ReadObjFile((dir / kObjectMeshFile).string());
  b.cost_trace_csv = read_text(kCostTraceFile);
  return b;
}

json RolloutToJson(const RolloutRecord& r) {
  json force = json::array(), torque = json::array(), pos = json::array(),
       orient = json::array();
  for (int t = 0; t < r.steps(); ++t) {
    force.push_back(Vec3ToJson(r.force[t]));
    torque.push_back(Vec3ToJson(r.torque[t]));
    pos.push_back(Vec3ToJson(r.object[t].position));
    orient.push_back(QuatToJson(r.object[t].orientation));
  }
  return {{"steps", r.steps()},
          {"reset_count", r.reset_count},
          {"p_initial", Vec3ToJson(r.p_initial)},
          {"q_initial", QuatToJson(r.q_initial)},
          {"p_final", Vec3ToJson(r.p_final)},
          {"q_final", QuatToJson(r.q_final)},
          {"pose_final", PoseToJson(r.pose_final)},
          {"root_final", Vec3ToJson(r.root_final)},
          {"force", force},
          {"torque", torque},
          {"contacts", r.contacts},
          {"reset", r.reset},
          {"object_position", pos},
          {"object_orientation", orient}};
}

std::string RolloutCsv(const RolloutRecord& r) {
  std::ostringstream out;
  out << "step,fx,fy,fz,tx,ty,tz,m,reset,px,py,pz,qw,qx,qy,qz\n";
  for (int t = 0; t < r.steps(); ++t) {
    const Vec3& f = r.force[t];
    const Vec3& tq = r.torque[t];
    const BodyState& o = r.object[t];
    out << t;
    for (double v : {f.x(), f.y(), f.z(), tq.x(), tq.y(), tq.z()}) {
      out << "," << FormatDouble(v);
    }
    out << "," << r.contacts[t] << "," << (r.reset[t] ? 1 : 0);
    for (double v : {o.position.x(), o.position.y(), o.position.z(),
                     o.orientation.w(), o.orientation.x(), o.orientation.y(),
                     o.orientation.z()}) {
      out << "," << FormatDouble(v);
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace graspstab
