#include <cmath>

#include <gtest/gtest.h>

#include "commute/calibration.hpp"
#include "commute/synth.hpp"

using namespace commute;

namespace {

struct Planted {
  Fixture fx;
  DistanceProvider dist;
  WeightedDistanceDistribution observed;

  explicit Planted(const SynthConfig& cfg)
      : fx(synthesize(cfg)), dist(fx.registry, DistanceStrategy::dense),
        observed(distance_distribution(fx.ground_truth, dist, DistanceScope::region_and_outside)) {}

  GenerationInputs inputs() const { return GenerationInputs{fx.registry, dist, fx.marginals.in, fx.marginals.out}; }
};

SynthConfig small(std::uint64_t seed) {
  SynthConfig c;
  c.seed = seed;
  return c;
}

} // namespace

TEST(ConstantBeta, Value) {
  static_assert(constant_beta().value == 1.94e-4);
  EXPECT_EQ(constant_beta().shape, Shape::exponential);
}

TEST(GoldenSection, FindsQuadraticMinimum) {
  const auto r = golden_section_minimize([](double x) { return (x - 0.3) * (x - 0.3); }, -2.0, 5.0, 1e-9, 200);
  EXPECT_NEAR(r.x, 0.3, 1e-8);
  EXPECT_LE(r.trace.size(), 60u);
}

TEST(GoldenSection, ExhaustedBudgetThrowsWithTrace) {
  try {
    golden_section_minimize([](double x) { return x * x; }, -1.0, 1.0, 1e-12, 5);
    FAIL() << "expected NonConvergence";
  } catch (const NonConvergence& e) {
    const auto trace = nlohmann::json::parse(e.trace_json());
    EXPECT_EQ(trace.size(), 5u);
    EXPECT_TRUE(trace[0].contains("beta"));
  }
}

TEST(Objective, SelfComparisonIsZero) {
  Planted p(small(1));
  const auto self = distance_distribution(p.fx.ground_truth, p.dist, DistanceScope::region_and_outside);
  EXPECT_EQ(ks_distance(self, p.observed), 0.0);
  // Same beta and the ground-truth seed reproduce the ground truth exactly.
  EXPECT_EQ(objective(1.94e-4, p.fx.ground_truth_seed, p.inputs(), Shape::exponential, p.observed,
                      DistanceScope::region_and_outside),
            0.0);
}

TEST(Objective, NoDeterrenceFitsWorse) {
  Planted p(small(2));
  EXPECT_GT(objective(0.0, 5, p.inputs(), Shape::exponential, p.observed, DistanceScope::region_and_outside), 0.0);
}

TEST(Calibrate, OneReplicationMatchesGridScan) {
  Planted p(small(3));
  CalibrationConfig cfg;
  cfg.replications = 1;
  cfg.base_seed = 40;
  const auto report = calibrate(p.inputs(), Shape::exponential, p.observed, cfg);
  ASSERT_EQ(report.per_replication.size(), 1u);
  const auto& rep = report.per_replication[0];
  EXPECT_EQ(report.beta_average, rep.beta_star);

  // Log-spaced grid over the same bracket with the same seed.
  double grid_best = std::numeric_limits<double>::infinity();
  double grid_arg = 0.0;
  for (int k = 0; k <= 200; ++k) {
    const double beta = 1e-6 * std::pow(1e4, k / 200.0);
    const double ks = objective(beta, 40, p.inputs(), Shape::exponential, p.observed, cfg.scope);
    if (ks < grid_best) {
      grid_best = ks;
      grid_arg = beta;
    }
  }
  EXPECT_LE(rep.ks, grid_best + 0.02) << "grid argmin " << grid_arg;
  EXPECT_NEAR(std::log(rep.beta_star), std::log(grid_arg), std::log(2.0));
  EXPECT_NEAR(std::log(rep.beta_star), std::log(1.94e-4), std::log(2.0));
}

TEST(Calibrate, RecoversPlantedBetaAndIsDeterministic) {
  Planted p(small(4));
  CalibrationConfig cfg;
  cfg.replications = 4;
  const auto a = calibrate(p.inputs(), Shape::exponential, p.observed, cfg);
  const auto b = calibrate(p.inputs(), Shape::exponential, p.observed, cfg);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_LE(a.beta_min, a.beta_average);
  EXPECT_LE(a.beta_average, a.beta_max);
  for (std::size_t r = 0; r < a.per_replication.size(); ++r) EXPECT_EQ(a.per_replication[r].seed, r);
  EXPECT_NEAR(a.beta_average, 1.94e-4, 0.25 * 1.94e-4);

  cfg.threads = 1;
  EXPECT_EQ(to_json(calibrate(p.inputs(), Shape::exponential, p.observed, cfg)).dump(), to_json(a).dump());
}

TEST(Calibrate, AveragedObjectiveMode) {
  Planted p(small(5));
  CalibrationConfig cfg;
  cfg.replications = 3;
  cfg.averaging = Averaging::averaged_objective;
  const auto r = calibrate(p.inputs(), Shape::exponential, p.observed, cfg);
  EXPECT_EQ(r.beta_min, r.beta_max);
  EXPECT_EQ(r.beta_average, r.beta_min);
  for (const auto& rep : r.per_replication) EXPECT_TRUE(std::isfinite(rep.ks));
  EXPECT_NEAR(r.beta_average, 1.94e-4, 0.25 * 1.94e-4);
}

TEST(Calibrate, PowerLawUsesItsOwnBracket) {
  Planted p(small(6));
  auto cfg = CalibrationConfig::defaults_for(Shape::power);
  cfg.replications = 2;
  const auto r = calibrate(p.inputs(), Shape::power, p.observed, cfg);
  EXPECT_GE(r.beta_min, 0.1);
  EXPECT_LE(r.beta_max, 10.0);
}

TEST(Calibrate, TinyBudgetIsNonConvergence) {
  Planted p(small(7));
  CalibrationConfig cfg;
  cfg.replications = 1;
  cfg.max_probes = 3;
  EXPECT_THROW(calibrate(p.inputs(), Shape::exponential, p.observed, cfg), NonConvergence);
}

TEST(Calibrate, RejectsBadConfig) {
  Planted p(small(8));
  CalibrationConfig cfg;
  cfg.lo = 0.0;
  EXPECT_THROW(calibrate(p.inputs(), Shape::exponential, p.observed, cfg), ContractViolation);
  cfg = {};
  cfg.replications = 0;
  EXPECT_THROW(calibrate(p.inputs(), Shape::exponential, p.observed, cfg), ContractViolation);
  EXPECT_THROW(calibrate(p.inputs(), Shape::exponential, WeightedDistanceDistribution(std::vector<std::pair<double, Count>>{}),
                         CalibrationConfig{}),
               DomainError);
}
