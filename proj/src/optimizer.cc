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

#include "graspstab/optimizer.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

namespace graspstab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Standard normals from a fixed generator with a hand-rolled Box-Muller
// transform; std::normal_distribution differs between standard libraries.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : rng_(seed) {}

  double Next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0;
    while (u1 <= 0) u1 = Uniform();
    const double u2 = Uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

 private:
  double Uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 rng_;
  bool has_spare_ = false;
  double spare_ = 0;
};

std::uint64_t SampleSeed(std::uint64_t seed, int iteration, int index) {
  std::uint64_t s = SplitMix64(seed);
  s = SplitMix64(s ^ static_cast<std::uint64_t>(iteration));
  return SplitMix64(s ^ (static_cast<std::uint64_t>(index) << 20));
}

double Median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
  }
  return m;
}

}  // namespace

void SamplerConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidInput(std::string("sampler config: ") + what);
  };
  require(iterations >= 1, "iterations must be at least 1");
  require(samples >= 1, "samples must be at least 1");
  require(pose_variance > 0 && std::isfinite(pose_variance),
          "pose variance must be positive");
  require(root_variance > 0 && std::isfinite(root_variance),
          "root variance must be positive");
  require(elite_fraction > 0 && elite_fraction <= 1,
          "elite fraction must lie in (0, 1]");
  require(variance_floor > 0, "variance floor must be positive");
  require(temperature_floor > 0, "temperature floor must be positive");
  require(threads >= 0, "threads must be non-negative");
}

Eigen::VectorXd Sample::Flat() const {
  const int n = static_cast<int>(theta.values.size());
  Eigen::VectorXd x(n + 3);
  for (int i = 0; i < n; ++i) x[i] = theta.values[i];
  x.tail<3>() = root;
  return x;
}

SamplerState InitDistributions(const PoseParams& theta, const Vec3& root,
                               DofLayout layout, const SamplerConfig& cfg) {
  cfg.Validate();
  const PoseParams center = ToEulerLayout(theta, layout);
  SamplerState s;
  s.layout = layout;
  const int n = DofCount(layout);
  s.mean.resize(n + 3);
  s.variance.resize(n + 3);
  for (int i = 0; i < n; ++i) {
    s.mean[i] = center.values[i];
    s.variance[i] = cfg.pose_variance;
  }
  s.mean.tail<3>() = root;
  s.variance.tail<3>().setConstant(cfg.root_variance);
  return s;
}

std::vector<Sample> DrawSamples(const SamplerState& state, int n,
                                std::uint64_t seed, int iteration,
                                const JointLimits& limits) {
  if (n < 1) throw InvalidInput("draw samples: n must be at least 1");
  const int pose_dims = state.pose_dims();
  if (state.dims() != pose_dims + 3 || state.variance.size() != state.mean.size()) {
    throw InvalidInput("draw samples: distribution size does not match layout");
  }
  std::vector<Sample> out(n);
  for (int i = 0; i < n; ++i) {
    NormalStream normal(SampleSeed(seed, iteration, i));
    Sample& s = out[i];
    s.theta = PoseParams::Zero(state.layout, PoseRepresentation::kEuler);
    for (int d = 0; d < pose_dims; ++d) {
      s.theta.values[d] =
          state.mean[d] + std::sqrt(state.variance[d]) * normal.Next();
    }
    for (int d = 0; d < 3; ++d) {
      s.root[d] = state.mean[pose_dims + d] +
                  std::sqrt(state.variance[pose_dims + d]) * normal.Next();
    }
    s.clamped = ValidatePose(s.theta, limits);
    for (const LimitViolation& v : s.clamped) {
      s.theta.values[v.index] =
          std::clamp(v.value, v.limit.lo, v.limit.hi);
    }
  }
  return out;
}

std::vector<SampleOutcome> EvaluateBatch(const std::vector<Sample>& samples,
                                         const SampleEvaluator& evaluate,
                                         int threads) {
  const int n = static_cast<int>(samples.size());
  std::vector<SampleOutcome> out(n);
  auto run_one = [&](int i) {
    try {
      out[i] = evaluate(samples[i]);
      out[i].sample = samples[i];
    } catch (const std::exception& e) {
      out[i] = SampleOutcome();
      out[i].sample = samples[i];
      out[i].cost.total = kInf;
      out[i].error = e.what();
    }
    if (std::isnan(out[i].cost.total)) out[i].cost.total = kInf;
  };
  const int workers = std::clamp(threads, 1, std::max(n, 1));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) run_one(i);
    return out;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) run_one(i);
    });
  }
  for (std::thread& t : pool) t.join();
  return out;
}

SamplerState ReweightAndUpdate(std::vector<SampleOutcome>& outcomes,
                               const SamplerState& state,
                               const SamplerState& initial,
                               const SamplerConfig& cfg) {
  std::vector<double> finite;
  for (const SampleOutcome& o : outcomes) {
    if (o.ok()) finite.push_back(o.cost.total);
  }
  if (finite.empty()) {
    throw NumericalError(
        "sampler: every sample in the batch failed, cannot update");
  }
  std::vector<double> sorted = finite;
  std::sort(sorted.begin(), sorted.end());
  const double c_min = sorted.front();
  const double lambda = std::max(Median(finite) - c_min, cfg.temperature_floor);
  const std::size_t elite = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::ceil(cfg.elite_fraction * static_cast<double>(sorted.size()) -
                       1e-9)));
  const double cutoff = sorted[std::min(elite, sorted.size()) - 1];

  double total = 0;
  for (SampleOutcome& o : outcomes) {
    o.weight = 0;
    if (o.ok() && o.cost.total <= cutoff) {
      o.weight = std::exp(-(o.cost.total - c_min) / lambda);
    }
    total += o.weight;
  }
  const int d = state.dims();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (SampleOutcome& o : outcomes) {
    o.weight /= total;
    if (o.weight > 0) mean += o.weight * o.sample.Flat();
  }
  SamplerState next = state;
  next.mean = cfg.update_mean ? mean : initial.mean;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (const SampleOutcome& o : outcomes) {
    if (o.weight > 0) {
      var += o.weight * (o.sample.Flat() - next.mean).array().square().matrix();
    }
  }
  next.variance = var.cwiseMax(cfg.variance_floor);
  return next;
}

int ResolveThreads(int requested) {
  int n = requested > 0 ? requested
                        : static_cast<int>(std::thread::hardware_concurrency());
  n = std::max(n, 1);
  if (const char* env = std::getenv("GRASPSTAB_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) n = std::min<long>(n, cap);
  }
  return n;
}

OptResult RunSampler(const Sample& center, const SamplerConfig& cfg,
                     const JointLimits& limits,
                     const SampleEvaluator& evaluate) {
  cfg.Validate();
  const SamplerState initial =
      InitDistributions(center.theta, center.root, center.theta.layout, cfg);
  const int threads = ResolveThreads(cfg.threads);
  SamplerState state = initial;
  OptResult result;
  result.best.cost.total = kInf;
  for (int k = 0; k < cfg.iterations; ++k) {
    std::vector<Sample> samples =
        DrawSamples(state, cfg.samples, cfg.seed, k, limits);
    if (k == 0) {
      samples[0] = center;
      samples[0].theta = ToEulerLayout(center.theta, initial.layout);
    }
    std::vector<SampleOutcome> outcomes =
        EvaluateBatch(samples, evaluate, threads);
    result.evaluations += static_cast<int>(outcomes.size());
    if (k == 0) result.center = outcomes[0];

    state = ReweightAndUpdate(outcomes, state, initial, cfg);

    IterationStats stats;
    stats.best = kInf;
    std::vector<double> finite;
    int best_index = -1;
    for (int i = 0; i < static_cast<int>(outcomes.size()); ++i) {
      const SampleOutcome& o = outcomes[i];
      stats.clamped += static_cast<int>(o.sample.clamped.size());
      if (!o.ok()) {
        ++stats.failures;
        continue;
      }
      finite.push_back(o.cost.total);
      // Strict comparison keeps the earliest sample on ties.
      if (o.cost.total < stats.best) {
        stats.best = o.cost.total;
        best_index = i;
      }
    }
    if (outcomes[best_index].cost.total < result.best.cost.total) {
      result.best = outcomes[best_index];
    }
    stats.best_so_far = result.best.cost.total;
    stats.median = Median(finite);
    stats.mean_sigma = state.variance.cwiseSqrt().mean();
    result.trace.push_back(stats);
  }
  result.final_distribution = state;
  return result;
}

Sample CenterSample(const GraspProblem& problem) {
  Sample s;
  s.theta = ToEulerLayout(problem.theta, problem.layout);
  s.root = problem.root;
  return s;
}

RolloutRecord RolloutSample(const GraspProblem& problem, const SimConfig& sim,
                            const Sample& sample, bool keep_impulses) {
  HandSetup hand;
  hand.tmpl = problem.tmpl;
  hand.beta = problem.beta;
  hand.theta = sample.theta;
  hand.root_t = sample.root;
  const Targets targets{sample.theta, sample.root};
  return Rollout(BuildScene(hand, problem.object, targets, sim, problem.statics),
                 sim, keep_impulses);
}

SampleOutcome EvaluateSample(const GraspProblem& problem,
                             const SimConfig& sim, const Sample& sample) {
  const RolloutRecord rec = RolloutSample(problem, sim, sample);

  SampleOutcome out;
  out.sample = sample;
  out.cost = TotalCost(rec, problem.object.props, problem.cost);
  out.reset_count = rec.reset_count;
  out.displacement_mm = SimulationDisplacement(rec);
  out.p_final = rec.p_final;
  out.q_final = rec.q_final;
  out.pose_final = rec.pose_final;
  out.root_final = rec.root_final;
  out.final_contacts = rec.final_contacts;
  return out;
}

OptResult Optimize(const GraspProblem& problem, const SamplerConfig& sampler,
                   const SimConfig& sim) {
  sim.Validate();
  const SampleEvaluator evaluate = [&](const Sample& s) {
    return EvaluateSample(problem, sim, s);
  };
  return RunSampler(CenterSample(problem), sampler, problem.limits, evaluate);
}

}  // namespace graspstab
