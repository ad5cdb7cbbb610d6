#ifndef COMMUTE_CALIBRATION_HPP
#define COMMUTE_CALIBRATION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "commute/error.hpp"
#include "commute/generator.hpp"
#include "commute/geodata.hpp"
#include "commute/metrics.hpp"
#include "commute/od.hpp"
#include "commute/parallel.hpp"

namespace commute {

/// Distance-decay constant found to fit French regions at municipality
/// scale: exponential law, distances in meters.
struct BetaConstant {
  double value = 1.94e-4;
  Shape shape = Shape::exponential;
};

inline constexpr BetaConstant constant_beta() { return BetaConstant{}; }

/// Read-only inputs shared by every generation of a calibration.
struct GenerationInputs {
  const MunicipalityRegistry& registry;
  const DistanceProvider& distances;
  std::span<const Count> in;
  std::span<const Count> out;
  GeneratorOptions options = {};
};

/// KS distance between the distance distribution of one generation at
/// (beta, seed) and the observed distribution.
inline double objective(double beta, std::uint64_t seed, const GenerationInputs& inputs, Shape shape,
                        const WeightedDistanceDistribution& observed, DistanceScope scope) {
  const ODMatrix s =
      generate(inputs.registry, inputs.distances, inputs.in, inputs.out, DeterrenceSpec{shape, beta}, seed,
               inputs.options);
  return ks_distance(distance_distribution(s, inputs.distances, scope), observed);
}

struct Probe {
  double beta = 0.0;
  double ks = 0.0; ///< +inf when the generation got stuck at this beta
};

struct SearchResult {
  double x = 0.0;
  double fx = 0.0;
  std::vector<Probe> trace;
};

/// Golden-section minimization on [lo, hi]. Stops once the bracket is at
/// most `tol` wide; throws NonConvergence if `max_probes` evaluations are
/// spent first. Returns the best probe seen (trace abscissae are raw x).
inline SearchResult golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double tol,
                                            std::size_t max_probes,
                                            const std::function<double(double)>& label = nullptr) {
  if (!(lo < hi) || !(tol > 0.0)) throw ContractViolation("golden-section needs lo < hi and tolerance > 0");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  SearchResult r;
  r.fx = std::numeric_limits<double>::infinity();
  r.x = lo + (hi - lo) / 2.0;
  const auto eval = [&](double x) {
    if (r.trace.size() == max_probes) {
      nlohmann::json trace = nlohmann::json::array();
      for (const auto& p : r.trace) {
        trace.push_back({{"beta", label ? label(p.beta) : p.beta},
                         {"ks", std::isfinite(p.ks) ? nlohmann::json(p.ks) : nlohmann::json(nullptr)}});
      }
      throw NonConvergence("golden-section search exhausted " + std::to_string(max_probes) +
                               " probes with bracket [" + std::to_string(lo) + ", " + std::to_string(hi) + "]",
                           trace.dump());
    }
    const double fx = f(x);
    r.trace.push_back({x, fx});
    if (fx < r.fx) {
      r.fx = fx;
      r.x = x;
    }
    return fx;
  };
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = eval(c);
  double fd = eval(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = eval(d);
    }
  }
  return r;
}

/// How replications are combined into one beta.
enum class Averaging {
  per_replication_minimizers, ///< minimize each replication, average the minimizers
  averaged_objective,         ///< minimize the replication-averaged KS once
};

struct CalibrationConfig {
  std::size_t replications = 10;
  double lo = 1e-6;
  double hi = 1e-2;
  double tolerance = 1e-6; ///< relative bracket width
  std::size_t max_probes = 200;
  DistanceScope scope = DistanceScope::region_and_outside;
  std::uint64_t base_seed = 0;
  Averaging averaging = Averaging::per_replication_minimizers;
  std::size_t threads = 0;

  /// Bracket defaults: [1e-6, 1e-2] 1/m for the exponential law, [0.1, 10]
  /// for the power law.
  static CalibrationConfig defaults_for(Shape shape) {
    CalibrationConfig c;
    if (shape == Shape::power) {
      c.lo = 0.1;
      c.hi = 10.0;
    }
    return c;
  }

  void validate() const {
    if (!(lo < hi) || !(lo > 0.0)) throw ContractViolation("calibration bracket needs 0 < lo < hi");
    if (!(tolerance > 0.0)) throw ContractViolation("calibration tolerance must be positive");
    if (replications == 0) throw ContractViolation("calibration needs at least one replication");
    if (max_probes < 2) throw ContractViolation("calibration needs at least two probes");
  }
};

struct ReplicationResult {
  std::uint64_t seed = 0;
  double beta_star = 0.0;
  double ks = 0.0;
  std::vector<Probe> trace;
};

struct CalibrationReport {
  Shape shape = Shape::exponential;
  Averaging averaging = Averaging::per_replication_minimizers;
  DistanceScope scope = DistanceScope::region_and_outside;
  std::vector<ReplicationResult> per_replication;
  double beta_average = 0.0;
  double beta_min = 0.0;
  double beta_max = 0.0;
};

namespace detail {

// Stuck generations at extreme beta count as the worst possible fit so the
// search moves away from them. If every probe got stuck the failure is real.
inline double guarded_objective(double beta, std::uint64_t seed, const GenerationInputs& inputs, Shape shape,
                                const WeightedDistanceDistribution& observed, DistanceScope scope,
                                std::optional<StuckOrigin>& last_stuck) {
  try {
    return objective(beta, seed, inputs, shape, observed, scope);
  } catch (const StuckOrigin& e) {
    last_stuck = e;
    return std::numeric_limits<double>::infinity();
  }
}

// Golden-section over ln(beta): the bracket spans orders of magnitude, and a
// log-width of `tolerance` is a relative width of `tolerance` in beta.
inline SearchResult log_search(const std::function<double(double)>& f, const CalibrationConfig& config) {
  auto r = golden_section_minimize([&](double u) { return f(std::exp(u)); }, std::log(config.lo),
                                   std::log(config.hi), config.tolerance, config.max_probes,
                                   [](double u) { return std::exp(u); });
  r.x = std::exp(r.x);
  for (auto& p : r.trace) p.beta = std::exp(p.beta);
  return r;
}

} // namespace detail

/// Fits beta for `shape` so that simulated commuting distances match the
/// observed ones in KS distance, by golden-section search over ln(beta) in
/// [lo, hi]. Replication r uses seed base_seed + r and
/// keeps it fixed across its whole search, so each search sees a
/// deterministic objective.
inline CalibrationReport calibrate(const GenerationInputs& inputs, Shape shape,
                                   const WeightedDistanceDistribution& observed, const CalibrationConfig& config) {
  config.validate();
  if (observed.degenerate()) throw DomainError("observed commuting distance distribution is empty");
  CalibrationReport report;
  report.shape = shape;
  report.averaging = config.averaging;
  report.scope = config.scope;
  report.per_replication.resize(config.replications);
  for (std::size_t r = 0; r < config.replications; ++r) report.per_replication[r].seed = config.base_seed + r;

  if (config.averaging == Averaging::per_replication_minimizers) {
    parallel_for(
        config.replications,
        [&](std::size_t r) {
          auto& rep = report.per_replication[r];
          std::optional<StuckOrigin> stuck;
          auto result = detail::log_search(
              [&](double beta) {
                return detail::guarded_objective(beta, rep.seed, inputs, shape, observed, config.scope, stuck);
              },
              config);
          if (!std::isfinite(result.fx) && stuck) throw *stuck;
          rep.beta_star = result.x;
          rep.ks = result.fx;
          rep.trace = std::move(result.trace);
        },
        config.threads);
  } else {
    std::vector<std::optional<StuckOrigin>> stuck(config.replications);
    auto result = detail::log_search(
        [&](double beta) {
          std::vector<double> ks(config.replications);
          parallel_for(
              config.replications,
              [&](std::size_t r) {
                ks[r] = detail::guarded_objective(beta, report.per_replication[r].seed, inputs, shape, observed,
                                                  config.scope, stuck[r]);
                report.per_replication[r].trace.push_back({beta, ks[r]});
              },
              config.threads);
          return std::accumulate(ks.begin(), ks.end(), 0.0) / static_cast<double>(ks.size());
        },
        config);
    if (!std::isfinite(result.fx)) {
      for (auto& s : stuck) {
        if (s) throw *s;
      }
    }
    for (auto& rep : report.per_replication) {
      rep.beta_star = result.x;
      auto it = std::find_if(rep.trace.begin(), rep.trace.end(), [&](const Probe& p) { return p.beta == result.x; });
      rep.ks = it != rep.trace.end() ? it->ks : std::numeric_limits<double>::infinity();
    }
  }

  double sum = 0.0;
  report.beta_min = std::numeric_limits<double>::infinity();
  report.beta_max = -std::numeric_limits<double>::infinity();
  for (const auto& rep : report.per_replication) {
    sum += rep.beta_star;
    report.beta_min = std::min(report.beta_min, rep.beta_star);
    report.beta_max = std::max(report.beta_max, rep.beta_star);
  }
  report.beta_average = sum / static_cast<double>(report.per_replication.size());
  // The mean can round one ulp outside [min, max].
  report.beta_average = std::clamp(report.beta_average, report.beta_min, report.beta_max);
  return report;
}

/// Same as above with the observed distribution built from an observed
/// flow matrix indexed like the inputs.
inline CalibrationReport calibrate(const GenerationInputs& inputs, Shape shape, const ODMatrix& observed,
                                   const CalibrationConfig& config) {
  return calibrate(inputs, shape, distance_distribution(observed, inputs.distances, config.scope), config);
}

inline std::string_view to_string(Averaging a) {
  return a == Averaging::per_replication_minimizers ? "per_replication_minimizers" : "averaged_objective";
}

inline nlohmann::json to_json(const CalibrationReport& r) {
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& rep : r.per_replication) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& p : rep.trace) trace.push_back({{"beta", p.beta}, {"ks", num(p.ks)}});
    reps.push_back({{"seed", rep.seed}, {"beta_star", rep.beta_star}, {"ks", num(rep.ks)}, {"trace", trace}});
  }
  return {{"shape", std::string(to_string(r.shape))},
          {"averaging", std::string(to_string(r.averaging))},
          {"scope", std::string(to_string(r.scope))},
          {"beta_average", r.beta_average},
          {"beta_min", r.beta_min},
          {"beta_max", r.beta_max},
          {"per_replication", reps}};
}

} // namespace commute

#endif // COMMUTE_CALIBRATION_HPP
