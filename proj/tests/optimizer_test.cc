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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <stdexcept>

#include "graspstab/scene_io.h"
#include "test_util.h"

namespace graspstab {
namespace {

using testing::DataPath;

Sample ZeroCenter() {
  Sample s;
  s.theta = PoseParams::Zero(DofLayout::kReduced, PoseRepresentation::kEuler);
  return s;
}

SampleOutcome WithCost(const Sample& s, double cost) {
  SampleOutcome o;
  o.sample = s;
  o.cost.total = cost;
  return o;
}

TEST(InitDistributionsTest, DefaultsCenterOnThePose) {
  PoseParams theta = PoseParams::Zero(DofLayout::kReduced, PoseRepresentation::kEuler);
  for (int i = 0; i < kReducedDofs; ++i) theta.values[i] = 0.01 * i;
  const Vec3 root(0.1, -0.2, 0.3);
  const SamplerState s =
      InitDistributions(theta, root, DofLayout::kReduced, SamplerConfig());
  ASSERT_EQ(s.pose_dims(), 23);
  ASSERT_EQ(s.dims(), 26);
  for (int i = 0; i < 23; ++i) {
    EXPECT_DOUBLE_EQ(s.mean[i], theta.values[i]);
    EXPECT_DOUBLE_EQ(s.variance[i], 0.1 * kPi);
  }
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(s.mean[23 + i], root[i]);
    EXPECT_DOUBLE_EQ(s.variance[23 + i], 0.05);
  }
}

TEST(InitDistributionsTest, FullLayoutAndAxisAngleInput) {
  PoseParams theta = PoseParams::Zero(DofLayout::kReduced, PoseRepresentation::kEuler);
  theta.values[0] = -0.5 * kPi;
  theta.values[3 + 1] = 0.4;
  const SamplerState s = InitDistributions(EulerToAxisAngle(theta), Vec3::Zero(),
                                           DofLayout::kFull, SamplerConfig());
  ASSERT_EQ(s.dims(), kFullDofs + 3);
  const PoseParams expected = ToEulerLayout(theta, DofLayout::kFull);
  for (int i = 0; i < kFullDofs; ++i) EXPECT_NEAR(s.mean[i], expected.values[i], 1e-12);
}

TEST(SamplerConfigTest, RejectsDegenerateSettings) {
  SamplerConfig cfg;
  EXPECT_NO_THROW(cfg.Validate());
  auto bad = [](auto mutate) {
    SamplerConfig c;
    mutate(c);
    EXPECT_THROW(c.Validate(), InvalidInput);
  };
  bad([](SamplerConfig& c) { c.iterations = 0; });
  bad([](SamplerConfig& c) { c.samples = 0; });
  bad([](SamplerConfig& c) { c.pose_variance = 0; });
  bad([](SamplerConfig& c) { c.root_variance = -1; });
  bad([](SamplerConfig& c) { c.elite_fraction = 0; });
  bad([](SamplerConfig& c) { c.elite_fraction = 1.5; });
  bad([](SamplerConfig& c) { c.variance_floor = 0; });
  bad([](SamplerConfig& c) { c.threads = -1; });
  SamplerConfig zero_var;
  zero_var.pose_variance = 0;
  EXPECT_THROW(InitDistributions(ZeroCenter().theta, Vec3::Zero(),
                                 DofLayout::kReduced, zero_var),
               InvalidInput);
}

TEST(DrawSamplesTest, DeterministicPerSeedIterationAndIndex) {
  const SamplerState s = InitDistributions(ZeroCenter().theta, Vec3::Zero(),
                                           DofLayout::kReduced, SamplerConfig());
  const JointLimits free;
  const auto a = DrawSamples(s, 20, 7, 3, free);
  const auto b = DrawSamples(s, 20, 7, 3, free);
  const auto c = DrawSamples(s, 20, 8, 3, free);
  const auto d = DrawSamples(s, 20, 7, 4, free);
  // A longer batch keeps the first samples.
  const auto e = DrawSamples(s, 40, 7, 3, free);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(a[i].Flat(), b[i].Flat());
    EXPECT_EQ(a[i].Flat(), e[i].Flat());
    EXPECT_NE(a[i].Flat(), c[i].Flat());
    EXPECT_NE(a[i].Flat(), d[i].Flat());
  }
  EXPECT_THROW(DrawSamples(s, 0, 7, 0, free), InvalidInput);
}

TEST(DrawSamplesTest, MomentsMatchTheDistribution) {
  SamplerState s = InitDistributions(ZeroCenter().theta, Vec3(0.1, 0.2, 0.3),
                                     DofLayout::kReduced, SamplerConfig());
  for (int i = 0; i < s.dims(); ++i) s.mean[i] += 0.05 * i;
  const int n = 4000;
  const auto draws = DrawSamples(s, n, 11, 0, JointLimits());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(s.dims());
  for (const Sample& x : draws) mean += x.Flat();
  mean /= n;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(s.dims());
  for (const Sample& x : draws) var += (x.Flat() - mean).array().square().matrix();
  var /= n - 1;
  for (int i = 0; i < s.dims(); ++i) {
    const double sigma = std::sqrt(s.variance[i]);
    EXPECT_NEAR(mean[i], s.mean[i], 4 * sigma / std::sqrt(n)) << "dim " << i;
    // Sample variance has relative standard error sqrt(2 / (n - 1)).
    EXPECT_NEAR(var[i] / s.variance[i], 1.0, 4 * std::sqrt(2.0 / (n - 1))) << "dim " << i;
  }
}

TEST(DrawSamplesTest, ClampsExactlyTheViolations) {
  const SamplerState s = InitDistributions(ZeroCenter().theta, Vec3::Zero(),
                                           DofLayout::kReduced, SamplerConfig());
  const JointLimits limits = JointLimits::Defaults();
  const auto raw = DrawSamples(s, 50, 5, 0, JointLimits());
  const auto clamped = DrawSamples(s, 50, 5, 0, limits);
  int total = 0;
  for (int i = 0; i < 50; ++i) {
    const auto violations = ValidatePose(raw[i].theta, limits);
    EXPECT_TRUE(raw[i].clamped.empty());
    ASSERT_EQ(clamped[i].clamped.size(), violations.size());
    total += static_cast<int>(violations.size());
    EXPECT_TRUE(ValidatePose(clamped[i].theta, limits).empty());
    for (int d = 0; d < kReducedDofs; ++d) {
      const Interval lim = limits.ForDof(DofLayout::kReduced, d);
      EXPECT_EQ(clamped[i].theta.values[d],
                std::clamp(raw[i].theta.values[d], lim.lo, lim.hi));
    }
    EXPECT_EQ(clamped[i].root, raw[i].root);
  }
  // sigma = 0.56 rad against intervals about 2 rad wide: clamping happens.
  EXPECT_GT(total, 0);
}

TEST(EvaluateBatchTest, KeepsOrderAndTurnsExceptionsIntoInfiniteCost) {
  const SamplerState s = InitDistributions(ZeroCenter().theta, Vec3::Zero(),
                                           DofLayout::kReduced, SamplerConfig());
  const auto samples = DrawSamples(s, 37, 1, 0, JointLimits());
  const SampleEvaluator eval = [](const Sample& x) {
    if (x.root.x() > 0.2) throw std::runtime_error("boom");
    return WithCost(x, x.Flat().squaredNorm());
  };
  for (int threads : {1, 4}) {
    const auto out = EvaluateBatch(samples, eval, threads);
    ASSERT_EQ(out.size(), samples.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_EQ(out[i].sample.Flat(), samples[i].Flat());
      if (samples[i].root.x() > 0.2) {
        EXPECT_FALSE(out[i].ok());
        EXPECT_EQ(out[i].error, "boom");
      } else {
        EXPECT_DOUBLE_EQ(out[i].cost.total, samples[i].Flat().squaredNorm());
      }
    }
  }
}

TEST(ReweightTest, EqualCostsGiveUniformWeightsAndEmpiricalMoments) {
  const SamplerConfig cfg;
  const SamplerState s = InitDistributions(ZeroCenter().theta, Vec3::Zero(),
                                           DofLayout::kReduced, cfg);
  const auto samples = DrawSamples(s, 40, 2, 0, JointLimits());
  std::vector<SampleOutcome> out;
  for (const Sample& x : samples) out.push_back(WithCost(x, 3.0));
  const SamplerState next = ReweightAndUpdate(out, s, s, cfg);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(s.dims());
  for (const SampleOutcome& o : out) {
    EXPECT_NEAR(o.weight, 1.0 / 40, 1e-15);
    mean += o.sample.Flat();
  }
  mean /= 40;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(s.dims());
  for (const SampleOutcome& o : out) {
    var += (o.sample.Flat() - mean).array().square().matrix();
  }
  var /= 40;
  EXPECT_LT((next.mean - mean).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((next.variance - var.cwiseMax(cfg.variance_floor)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ReweightTest, WeightsMatchTheExponentialLaw) {
  const SamplerConfig cfg;
  const SamplerState s = InitDistributions(ZeroCenter().theta, Vec3::Zero(),
                                           DofLayout::kReduced, cfg);
  const auto samples = DrawSamples(s, 20, 3, 0, JointLimits());
  std::vector<SampleOutcome> out;
  for (int i = 0; i < 20; ++i) out.push_back(WithCost(samples[i], 1.0 + 0.5 * i));
  out[7].cost.total = std::numeric_limits<double>::infinity();
  ReweightAndUpdate(out, s, s, cfg);
  // 19 finite costs 1.0 .. 10.5 without 4.5: median 6.0, so lambda 5.0.
  // Elite: ceil(0.2 * 19) = 4 lowest costs.
  const double lambda = 5.0;
  double z = 0;
  for (int i = 0; i < 4; ++i) z += std::exp(-(0.5 * i) / lambda);
  double sum = 0;
  for (int i = 0; i < 20; ++i) {
    const double expected = i < 4 ? std::exp(-(0.5 * i) / lambda) / z : 0.0;
    EXPECT_NEAR(out[i].weight, expected, 1e-14) << i;
    sum += out[i].weight;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(ReweightTest, LoneEliteSampleBecomesTheMean) {
  // With five samples the elite set is the single best one.
  const SamplerConfig cfg;
  const SamplerState s = InitDistributions(ZeroCenter().theta, Vec3::Zero(),
                                           DofLayout::kReduced, cfg);
  const auto samples = DrawSamples(s, 5, 4, 0, JointLimits());
  std::vector<SampleOutcome> out;
  for (int i = 0; i < 5; ++i) out.push_back(WithCost(samples[i], i == 2 ? 0.1 : 50.0 + i));
  const SamplerState next = ReweightAndUpdate(out, s, s, cfg);
  EXPECT_LT((next.mean - samples[2].Flat()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(out[2].weight, 1.0, 1e-12);
  // A single point has zero spread, so the floor takes over.
  for (int i = 0; i < next.dims(); ++i) EXPECT_EQ(next.variance[i], cfg.variance_floor);
}

TEST(ReweightTest, AllFailuresThrow) {
  const SamplerConfig cfg;
  const SamplerState s = InitDistributions(ZeroCenter().theta, Vec3::Zero(),
                                           DofLayout::kReduced, cfg);
  const auto samples = DrawSamples(s, 6, 4, 0, JointLimits());
  std::vector<SampleOutcome> out;
  for (const Sample& x : samples) {
    out.push_back(WithCost(x, std::numeric_limits<double>::infinity()));
  }
  EXPECT_THROW(ReweightAndUpdate(out, s, s, cfg), NumericalError);
}

TEST(ReweightTest, VarianceOnlyModeKeepsTheInitialMean) {
  SamplerConfig cfg;
  cfg.update_mean = false;
  const SamplerState s = InitDistributions(ZeroCenter().theta, Vec3::Zero(),
                                           DofLayout::kReduced, cfg);
  const auto samples = DrawSamples(s, 30, 9, 0, JointLimits());
  std::vector<SampleOutcome> out;
  for (const Sample& x : samples) out.push_back(WithCost(x, x.Flat().norm()));
  const SamplerState next = ReweightAndUpdate(out, s, s, cfg);
  EXPECT_EQ(next.mean, s.mean);
}

// Quadratic bowl with a known minimum; scale chosen so root errors in
// metres weigh like pose errors in radians.
struct Bowl {
  Eigen::VectorXd target;
  double Cost(const Sample& x) const {
    Eigen::VectorXd d = x.Flat() - target;
    d.tail<3>() *= 10.0;
    return d.squaredNorm();
  }
};

Bowl RandomBowl(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  Bowl b;
  b.target.resize(kReducedDofs + 3);
  for (int i = 0; i < kReducedDofs; ++i) b.target[i] = 0.5 * u(rng);
  for (int i = 0; i < 3; ++i) b.target[kReducedDofs + i] = 0.05 * u(rng);
  return b;
}

TEST(RunSamplerTest, RecoversQuadraticMinimum) {
  const Bowl bowl = RandomBowl(99);
  SamplerConfig cfg;
  cfg.threads = 1;
  const OptResult r = RunSampler(ZeroCenter(), cfg, JointLimits(), [&](const Sample& x) {
    return WithCost(x, bowl.Cost(x));
  });
  ASSERT_EQ(static_cast<int>(r.trace.size()), 30);
  EXPECT_EQ(r.evaluations, 30 * 300);
  const Eigen::VectorXd& m = r.final_distribution.mean;
  for (int i = 0; i < kReducedDofs; ++i) {
    EXPECT_NEAR(m[i], bowl.target[i], 0.02) << "pose dim " << i;
  }
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(m[kReducedDofs + i], bowl.target[kReducedDofs + i], 2e-3) << "root " << i;
  }
  // Best-so-far never rises.
  for (std::size_t k = 1; k < r.trace.size(); ++k) {
    EXPECT_LE(r.trace[k].best_so_far, r.trace[k - 1].best_so_far);
  }
  EXPECT_EQ(r.trace.back().best_so_far, r.best.cost.total);
  EXPECT_NEAR(r.center.cost.total, bowl.Cost(ZeroCenter()), 1e-12);
  EXPECT_LE(r.best.cost.total, r.center.cost.total);
}

TEST(RunSamplerTest, SingleSampleReturnsTheCenter) {
  SamplerConfig cfg;
  cfg.iterations = 1;
  cfg.samples = 1;
  Sample center = ZeroCenter();
  center.theta.values[5] = 0.3;
  center.root = Vec3(0.01, 0.02, 0.03);
  int calls = 0;
  const OptResult r = RunSampler(center, cfg, JointLimits::Defaults(), [&](const Sample& x) {
    ++calls;
    return WithCost(x, 1.25);
  });
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(r.best.sample.Flat(), center.Flat());
  EXPECT_EQ(r.center.sample.Flat(), center.Flat());
  EXPECT_EQ(r.best.cost.total, 1.25);
}

TEST(RunSamplerTest, ThreadCountDoesNotChangeTheResult) {
  const Bowl bowl = RandomBowl(5);
  SamplerConfig cfg;
  cfg.iterations = 4;
  cfg.samples = 64;
  cfg.seed = 123;
  const SampleEvaluator eval = [&](const Sample& x) { return WithCost(x, bowl.Cost(x)); };
  cfg.threads = 1;
  const OptResult a = RunSampler(ZeroCenter(), cfg, JointLimits::Defaults(), eval);
  cfg.threads = 3;
  const OptResult b = RunSampler(ZeroCenter(), cfg, JointLimits::Defaults(), eval);
  EXPECT_EQ(a.best.sample.Flat(), b.best.sample.Flat());
  EXPECT_EQ(a.final_distribution.mean, b.final_distribution.mean);
  EXPECT_EQ(a.final_distribution.variance, b.final_distribution.variance);
  for (std::size_t k = 0; k < a.trace.size(); ++k) {
    EXPECT_EQ(a.trace[k].best, b.trace[k].best);
    EXPECT_EQ(a.trace[k].clamped, b.trace[k].clamped);
  }
}

TEST(RunSamplerTest, VarianceStaysAboveTheFloor) {
  const Bowl bowl = RandomBowl(6);
  SamplerConfig cfg;
  cfg.iterations = 12;
  cfg.samples = 40;
  cfg.variance_floor = 1e-3;
  const OptResult r = RunSampler(ZeroCenter(), cfg, JointLimits(), [&](const Sample& x) {
    return WithCost(x, bowl.Cost(x));
  });
  EXPECT_GE(r.final_distribution.variance.minCoeff(), cfg.variance_floor);
  EXPECT_NEAR(r.trace.back().mean_sigma,
              r.final_distribution.variance.cwiseSqrt().mean(), 1e-15);
}

TEST(ResolveThreadsTest, EnvironmentCapsTheCount) {
  const char* old = std::getenv("GRASPSTAB_THREADS");
  const std::string saved = old ? old : "";
  setenv("GRASPSTAB_THREADS", "2", 1);
  EXPECT_EQ(ResolveThreads(8), 2);
  EXPECT_EQ(ResolveThreads(1), 1);
  EXPECT_LE(ResolveThreads(0), 2);
  EXPECT_GE(ResolveThreads(0), 1);
  setenv("GRASPSTAB_THREADS", "junk", 1);
  EXPECT_EQ(ResolveThreads(5), 5);
  if (old) {
    setenv("GRASPSTAB_THREADS", saved.c_str(), 1);
  } else {
    unsetenv("GRASPSTAB_THREADS");
  }
}

class GraspOptimizeTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    scene_ = new ResolvedScene(LoadScene(DataPath("pinch_perturbed.json")));
  }
  static void TearDownTestSuite() {
    delete scene_;
    scene_ = nullptr;
  }
  static ResolvedScene* scene_;
};
ResolvedScene* GraspOptimizeTest::scene_ = nullptr;

TEST_F(GraspOptimizeTest, EvaluationIsDeterministic) {
  const Sample c = CenterSample(scene_->problem);
  const SampleOutcome a = EvaluateSample(scene_->problem, scene_->sim, c);
  const SampleOutcome b = EvaluateSample(scene_->problem, scene_->sim, c);
  ASSERT_TRUE(a.ok());
  EXPECT_EQ(a.cost.total, b.cost.total);
  EXPECT_EQ(a.p_final, b.p_final);
  // The evaluator summary agrees with a plain rollout.
  const RolloutRecord rec = RolloutSample(scene_->problem, scene_->sim, c);
  EXPECT_EQ(a.reset_count, rec.reset_count);
  EXPECT_EQ(a.displacement_mm, SimulationDisplacement(rec));
  EXPECT_EQ(a.cost.total,
            TotalCost(rec, scene_->problem.object.props, scene_->problem.cost).total);
}

TEST_F(GraspOptimizeTest, SingleAndDuplicateBatches) {
  const Sample c = CenterSample(scene_->problem);
  const SampleEvaluator eval = [&](const Sample& x) {
    return EvaluateSample(scene_->problem, scene_->sim, x);
  };
  const auto one = EvaluateBatch({c}, eval, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_TRUE(one[0].ok());
  const auto dup = EvaluateBatch({c, c, c}, eval, 3);
  for (const SampleOutcome& o : dup) EXPECT_EQ(o.cost.total, one[0].cost.total);
}

// The first batch of an optimization run holds the center as sample 0
// next to 299 random draws.
TEST(PinchBatchTest, FirstBatchNeverLosesToTheCenter) {
  const ResolvedScene scene = LoadScene(DataPath("pinch.json"));
  const Sample c = CenterSample(scene.problem);
  const SamplerState s =
      InitDistributions(c.theta, c.root, scene.problem.layout, scene.sampler);
  std::vector<Sample> batch = DrawSamples(s, 300, scene.sampler.seed, 0, scene.problem.limits);
  batch[0] = c;
  const auto out = EvaluateBatch(batch, [&](const Sample& x) {
    return EvaluateSample(scene.problem, scene.sim, x);
  }, 0);
  double best = std::numeric_limits<double>::infinity();
  for (const SampleOutcome& o : out) best = std::min(best, o.cost.total);
  const double center_cost = EvaluateSample(scene.problem, scene.sim, c).cost.total;
  EXPECT_LE(best, center_cost);
  EXPECT_EQ(out[0].cost.total, center_cost);
}

TEST_F(GraspOptimizeTest, ShortRunImprovesOnTheCenter) {
  SamplerConfig cfg = scene_->sampler;
  cfg.iterations = 3;
  cfg.samples = 24;
  const OptResult r = Optimize(scene_->problem, cfg, scene_->sim);
  ASSERT_TRUE(r.center.ok());
  EXPECT_EQ(r.center.sample.Flat(), CenterSample(scene_->problem).Flat());
  EXPECT_LE(r.best.cost.total, r.center.cost.total);
  EXPECT_EQ(r.evaluations, 72);
}

}  // namespace
}  // namespace graspstab
