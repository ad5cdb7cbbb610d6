#ifndef COMMUTE_GENERATOR_HPP
#define COMMUTE_GENERATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "commute/error.hpp"
#include "commute/geodata.hpp"
#include "commute/od.hpp"
#include "commute/rng.hpp"

namespace commute {

enum class Shape { power, exponential };

inline std::string_view to_string(Shape s) { return s == Shape::power ? "power" : "exp"; }

inline Shape parse_shape(std::string_view s) {
  if (s == "power") return Shape::power;
  if (s == "exp" || s == "exponential") return Shape::exponential;
  throw ContractViolation("unknown deterrence shape '" + std::string(s) + "'");
}

/// Distance-decay law and its parameter. `beta` is dimensionless for the
/// power law and in inverse meters for the exponential law.
struct DeterrenceSpec {
  Shape shape = Shape::exponential;
  double beta = 0.0;

  void validate() const {
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
      throw ContractViolation("deterrence beta must be finite and >= 0, got " + std::to_string(beta));
    }
  }
};

/// f(d) = d^-beta (power) or exp(-beta d) (exponential). A zero distance
/// has weight 0 under the power law and 1 under the exponential law.
inline double deterrence(const DeterrenceSpec& spec, double d) {
  if (spec.shape == Shape::exponential) return std::exp(-spec.beta * d);
  if (d == 0.0) return 0.0;
  return std::pow(d, -spec.beta);
}

namespace detail {

// f(d) / f(ref). Same choice law as `deterrence` with the row rescaled so the
// nearest admissible destination has weight 1, which keeps large-beta rows
// away from underflow.
inline double scaled_weight(const DeterrenceSpec& spec, double d, double ref) {
  if (spec.shape == Shape::exponential) return std::exp(-spec.beta * (d - ref));
  return std::pow(d / ref, -spec.beta);
}

[[noreturn]] inline void throw_stuck(std::size_t origin, const std::string& origin_id, Count pending,
                                     std::span<const Count> remaining_in, std::span<const std::string> dest_ids) {
  std::string msg = "origin '" + origin_id + "' (index " + std::to_string(origin) + ") has " +
                    std::to_string(pending) + " pending commuter(s) but no admissible destination with positive "
                    "weight; remaining capacities:";
  std::size_t shown = 0;
  for (std::size_t j = 0; j < remaining_in.size(); ++j) {
    if (remaining_in[j] == 0) continue;
    if (shown == 20) {
      msg += " ...";
      break;
    }
    msg += " " + dest_ids[j] + "=" + std::to_string(remaining_in[j]);
    ++shown;
  }
  if (shown == 0) msg += " none";
  throw StuckOrigin(origin, origin_id, msg);
}

} // namespace detail

/// Destination probabilities for one draw: proportional to
/// remaining capacity times deterrence, with `excluded` (the origin itself)
/// forced to zero.
inline std::vector<double> choice_probabilities(std::span<const Count> remaining_in, std::span<const double> distances,
                                                const DeterrenceSpec& spec,
                                                std::optional<std::size_t> excluded = std::nullopt) {
  spec.validate();
  if (remaining_in.size() != distances.size()) throw ContractViolation("capacity and distance rows differ in length");
  std::vector<double> p(remaining_in.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (excluded && *excluded == j) continue;
    if (remaining_in[j] < 0 || distances[j] < 0.0) throw ContractViolation("negative capacity or distance");
    if (remaining_in[j] == 0) continue;
    if (spec.shape == Shape::power && distances[j] == 0.0) {
      throw DomainError("distinct municipalities at zero distance have no power-law weight");
    }
    p[j] = static_cast<double>(remaining_in[j]) * deterrence(spec, distances[j]);
    total += p[j];
  }
  if (!(total > 0.0)) {
    throw StuckOrigin(excluded.value_or(0), excluded ? std::to_string(*excluded) : std::string(),
                      "no admissible destination with positive weight");
  }
  for (double& v : p) v /= total;
  return p;
}

/// Row `origin` of the provider against the first `remaining_in.size()` destinations.
inline std::vector<double> choice_probabilities(std::size_t origin, std::span<const Count> remaining_in,
                                                const DeterrenceSpec& spec, const DistanceProvider& dist) {
  std::vector<double> d(remaining_in.size());
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = dist(origin, j);
  return choice_probabilities(remaining_in, d, spec, origin);
}

/// How per-origin weight totals are kept between draws.
enum class WeightMaintenance {
  automatic,   ///< incremental with a dense provider, recompute otherwise
  incremental, ///< cached totals updated on every capacity decrement
  recompute,   ///< totals rebuilt from scratch on each draw
};

struct GeneratorOptions {
  /// Incremental totals are rebuilt from scratch every this many assignments.
  std::uint64_t refresh_interval = 4096;
  WeightMaintenance maintenance = WeightMaintenance::automatic;
  /// Compare every cached total against a fresh sum (relative 1e-9); throws
  /// std::logic_error on mismatch. Costs O(m) per draw.
  bool verify_incremental = false;
  /// Called after each assignment with (origin, destination).
  std::function<void(std::size_t, std::size_t)> on_assign;
};

/// Stochastic assignment of every region out-commuter to a workplace.
///
/// Repeatedly draws an origin uniformly among those with pending
/// out-commuters, then a destination with probability proportional to
/// remaining capacity times deterrence (self excluded), and moves one
/// commuter. `in` has one entry per destination (the first in.size()
/// registry members), `out` one per region origin. Output rows sum exactly
/// to `out`; columns never exceed `in`.
inline ODMatrix generate(const MunicipalityRegistry& reg, const DistanceProvider& dist, std::span<const Count> in,
                         std::span<const Count> out, const DeterrenceSpec& spec, std::uint64_t seed,
                         const GeneratorOptions& options = {}) {
  spec.validate();
  const std::size_t n = reg.region_size();
  const std::size_t m = in.size();
  if (out.size() != n) throw ContractViolation("out-commuter vector must have one entry per region municipality");
  if (m < n || m > reg.size()) throw ContractViolation("in-commuter vector must cover n..m destinations");
  if (dist.origins() != n || dist.destinations() < m) throw ContractViolation("distance provider does not match registry");
  Count total_in = 0, total_out = 0;
  for (Count c : in) {
    if (c < 0) throw ContractViolation("negative in-commuter count");
    total_in += c;
  }
  for (Count c : out) {
    if (c < 0) throw ContractViolation("negative out-commuter count");
    total_out += c;
  }
  if (total_in < total_out) {
    throw InfeasibleInputs("total in-commuters " + std::to_string(total_in) + " < total out-commuters " +
                           std::to_string(total_out) + " (deficit " + std::to_string(total_out - total_in) + ")");
  }
  if (options.refresh_interval == 0) throw ContractViolation("refresh interval must be positive");

  std::vector<std::string> origin_ids = reg.region_ids();
  std::vector<std::string> dest_ids = reg.ids(0, m);
  std::vector<Count> remaining_in(in.begin(), in.end());
  std::vector<Count> remaining_out(out.begin(), out.end());
  std::vector<Count> flows(n * m, 0);

  // Row reference distance: nearest destination that can ever be chosen.
  std::vector<double> ref(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (remaining_out[i] == 0) continue;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i || in[j] == 0) continue;
      const double d = dist(i, j);
      if (spec.shape == Shape::power && d == 0.0) {
        throw DomainError("municipalities '" + origin_ids[i] + "' and '" + dest_ids[j] +
                          "' coincide; the power law has no weight at zero distance");
      }
      best = std::min(best, d);
    }
    if (std::isfinite(best)) ref[i] = best;
  }

  WeightMaintenance mode = options.maintenance;
  if (mode == WeightMaintenance::automatic) {
    mode = dist.strategy() == DistanceStrategy::dense ? WeightMaintenance::incremental : WeightMaintenance::recompute;
  }

  std::vector<std::size_t> active;
  std::vector<std::size_t> slot(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (remaining_out[i] > 0) {
      slot[i] = active.size();
      active.push_back(i);
    }
  }

  Rng rng(seed);
  const auto finish = [&] {
    ODMatrix result(std::move(origin_ids), std::move(dest_ids), std::move(flows));
    result.set_provenance(Provenance{std::string(to_string(spec.shape)), spec.beta, seed, std::string(Rng::kAlgorithm),
                                     options.refresh_interval});
    return result;
  };
  if (active.empty()) return finish();

  const auto assign = [&](std::size_t i, std::size_t j) {
    ++flows[i * m + j];
    --remaining_in[j];
    if (--remaining_out[i] == 0) {
      const std::size_t s = slot[i];
      active[s] = active.back();
      slot[active[s]] = s;
      active.pop_back();
    }
    if (options.on_assign) options.on_assign(i, j);
  };

  if (mode == WeightMaintenance::recompute) {
    std::vector<double> row(m);
    while (!active.empty()) {
      const std::size_t i = active[rng.bounded(active.size())];
      double total = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double w = (j == i || remaining_in[j] == 0)
                             ? 0.0
                             : static_cast<double>(remaining_in[j]) * detail::scaled_weight(spec, dist(i, j), ref[i]);
        row[j] = w;
        total += w;
      }
      if (!(total > 0.0)) detail::throw_stuck(i, origin_ids[i], remaining_out[i], remaining_in, dest_ids);
      const double target = rng.uniform01() * total;
      double acc = 0.0;
      std::size_t pick = m;
      for (std::size_t j = 0; j < m; ++j) {
        if (row[j] == 0.0) continue;
        acc += row[j];
        pick = j;
        if (acc > target) break;
      }
      assign(i, pick);
    }
    return finish();
  }

  // Incremental maintenance: weights by origin row and a transposed copy by
  // destination so a capacity decrement touches one contiguous column.
  std::vector<double> weight;
  std::vector<double> weight_t;
  try {
    weight.assign(n * m, 0.0);
    weight_t.assign(n * m, 0.0);
  } catch (const std::bad_alloc&) {
    throw CapacityError("cannot allocate incremental weight tables of " + std::to_string(n * m) + " cells");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (remaining_out[i] == 0) continue;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i || in[j] == 0) continue;
      const double w = detail::scaled_weight(spec, dist(i, j), ref[i]);
      weight[i * m + j] = w;
      weight_t[j * n + i] = w;
    }
  }

  std::vector<double> totals(n, 0.0);
  std::vector<double> refreshed(n, 0.0);
  const auto fresh_total = [&](std::size_t i) {
    const double* w = weight.data() + i * m;
    double t = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (remaining_in[j] != 0) t += static_cast<double>(remaining_in[j]) * w[j];
    }
    return t;
  };
  const auto refresh = [&](std::size_t i) {
    totals[i] = fresh_total(i);
    refreshed[i] = totals[i];
  };
  for (std::size_t i : active) refresh(i);

  std::uint64_t assignments = 0;
  while (!active.empty()) {
    const std::size_t i = active[rng.bounded(active.size())];
    // Cancellation guard: once a cached total has lost three decimal orders
    // against its last refresh, its relative error is no longer bounded.
    if (!(totals[i] > 1e-3 * refreshed[i])) refresh(i);
    if (options.verify_incremental) {
      const double exact = fresh_total(i);
      if (std::abs(totals[i] - exact) > 1e-9 * exact) {
        throw std::logic_error("incremental weight total drifted for origin " + std::to_string(i));
      }
    }

    const double* w = weight.data() + i * m;
    const double target = rng.uniform01() * totals[i];
    double acc = 0.0;
    std::size_t pick = m;
    for (std::size_t j = 0; j < m; ++j) {
      if (remaining_in[j] == 0 || w[j] == 0.0) continue;
      acc += static_cast<double>(remaining_in[j]) * w[j];
      pick = j;
      if (acc > target) break;
    }
    if (pick == m) detail::throw_stuck(i, origin_ids[i], remaining_out[i], remaining_in, dest_ids);

    assign(i, pick);
    const double* column = weight_t.data() + pick * n;
    for (std::size_t k : active) totals[k] -= column[k];

    if (++assignments % options.refresh_interval == 0) {
      for (std::size_t k : active) refresh(k);
    }
  }
  return finish();
}

/// Regional generation without outside: marginals of the observed square
/// matrix drive a run with m = n.
inline ODMatrix generate_regional(const MunicipalityRegistry& reg, const DistanceProvider& dist,
                                  const ODMatrix& observed, const DeterrenceSpec& spec, std::uint64_t seed,
                                  const GeneratorOptions& options = {}) {
  if (observed.origin_ids() != reg.region_ids()) {
    throw ContractViolation("observed matrix must be indexed by the registry's region municipalities");
  }
  const Marginals marg = marginals_from_od(observed);
  return generate(reg, dist, marg.in, marg.out, spec, seed, options);
}

} // namespace commute

#endif // COMMUTE_GENERATOR_HPP
