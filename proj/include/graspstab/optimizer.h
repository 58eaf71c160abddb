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

// Iterative Gaussian sampling over the hand pose and root translation.
//
// Every iteration draws N samples from independent per-dimension Gaussians,
// rolls each one out in its own scene, scores it with the stability cost and
// refits the Gaussians from exponentially weighted samples. The lowest-cost
// sample seen in any iteration is the result.

#ifndef GRASPSTAB_OPTIMIZER_H_
#define GRASPSTAB_OPTIMIZER_H_

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "graspstab/hand.h"
#include "graspstab/sim.h"
#include "graspstab/stability.h"

namespace graspstab {

struct SamplerConfig {
  int iterations = 30;             // K
  int samples = 300;               // N
  double pose_variance = 0.1 * kPi;  // rad^2 per pose dimension
  double root_variance = 0.05;       // m^2 per root dimension
  // Only samples at or below this cost quantile keep a weight; ties with
  // the cut-off cost stay in. 1 keeps every finite sample.
  double elite_fraction = 0.2;
  double variance_floor = 1e-4;
  double temperature_floor = 1e-6;
  // Full CEM moves the mean; otherwise only the variances adapt and
  // sampling stays centered on the initial state.
  bool update_mean = true;
  std::uint64_t seed = 0;
  // Worker threads for batch evaluation; 0 picks the hardware count,
  // capped by the GRASPSTAB_THREADS environment variable.
  int threads = 0;

  // Throws InvalidInput for K or N < 1, non-positive variances or floors,
  // or an elite fraction outside (0, 1].
  void Validate() const;
};

// Independent Gaussians over the pose (Euler, in one layout) followed by
// the three root translation dimensions.
struct SamplerState {
  DofLayout layout = DofLayout::kReduced;
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;

  int pose_dims() const { return DofCount(layout); }
  int dims() const { return static_cast<int>(mean.size()); }
};

struct Sample {
  PoseParams theta;  // Euler, sampler layout
  Vec3 root = Vec3::Zero();
  // Limit violations of the raw draw; each one was clamped to its limit.
  std::vector<LimitViolation> clamped;

  // Pose values followed by the root.
  Eigen::VectorXd Flat() const;
};

struct SampleOutcome {
  Sample sample;
  StabilityCost cost;  // total is +inf when the rollout failed
  std::string error;
  double weight = 0;

  // Rollout summary.
  int reset_count = 0;
  double displacement_mm = 0;
  Vec3 p_final = Vec3::Zero();
  Quat q_final = Quat::Identity();
  PoseParams pose_final;
  Vec3 root_final = Vec3::Zero();
  std::vector<ContactImpulse> final_contacts;

  bool ok() const { return std::isfinite(cost.total); }
};

// Initial distributions centered on the pose (converted to Euler in the
// given layout) and the root translation.
SamplerState InitDistributions(const PoseParams& theta, const Vec3& root,
                               DofLayout layout, const SamplerConfig& cfg);

// Draws n samples; sample i of iteration k depends only on (seed, k, i).
// Pose values outside the limits are clamped and recorded.
std::vector<Sample> DrawSamples(const SamplerState& state, int n,
                                std::uint64_t seed, int iteration,
                                const JointLimits& limits);

// Scores one sample. Must be safe to call concurrently.
using SampleEvaluator = std::function<SampleOutcome(const Sample&)>;

// Evaluates every sample, in parallel when threads > 1. Results follow the
// sample order; an exception inside the evaluator becomes an infinite cost.
std::vector<SampleOutcome> EvaluateBatch(const std::vector<Sample>& samples,
                                         const SampleEvaluator& evaluate,
                                         int threads);

// Sets the outcome weights and returns the refitted distributions. Throws
// NumericalError when every cost is infinite.
SamplerState ReweightAndUpdate(std::vector<SampleOutcome>& outcomes,
                               const SamplerState& state,
                               const SamplerState& initial,
                               const SamplerConfig& cfg);

struct IterationStats {
  double best = 0;       // lowest cost of the iteration
  double best_so_far = 0;
  double median = 0;
  int failures = 0;
  int clamped = 0;       // clamped DoFs over the batch
  double mean_sigma = 0;  // mean standard deviation after the update
};

struct OptResult {
  SampleOutcome best;
  SampleOutcome center;  // the unperturbed initial state
  std::vector<IterationStats> trace;
  SamplerState final_distribution;
  int evaluations = 0;
};

// Runs the sampling loop with an arbitrary evaluator. The center sample is
// evaluated first, as sample 0 of iteration 0.
OptResult RunSampler(const Sample& center, const SamplerConfig& cfg,
                     const JointLimits& limits,
                     const SampleEvaluator& evaluate);

// Everything needed to turn a sample into a rollout: the hand is composed
// at the sample, PD targets equal the sample, and the object starts at its
// fixed initial pose.
struct GraspProblem {
  HandTemplate tmpl = HandTemplate::Default();
  ShapeParams beta;
  PoseParams theta;  // center pose, any representation
  Vec3 root = Vec3::Zero();
  DofLayout layout = DofLayout::kReduced;
  ObjectSetup object;
  PhysicsCostOptions cost;
  JointLimits limits = JointLimits::Defaults();
  std::vector<StaticBody> statics;
};

// Builds the scene for a sample and rolls it out.
RolloutRecord RolloutSample(const GraspProblem& problem, const SimConfig& sim,
                            const Sample& sample, bool keep_impulses = false);

SampleOutcome EvaluateSample(const GraspProblem& problem,
                             const SimConfig& sim, const Sample& sample);

// The center sample of a problem (pose in Euler form, unclamped).
Sample CenterSample(const GraspProblem& problem);

OptResult Optimize(const GraspProblem& problem, const SamplerConfig& sampler,
                   const SimConfig& sim);

// Effective worker count: cfg value or hardware concurrency, capped by
// GRASPSTAB_THREADS when set.
int ResolveThreads(int requested);

}  // namespace graspstab

#endif  // GRASPSTAB_OPTIMIZER_H_
