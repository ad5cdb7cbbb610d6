#ifndef COMMUTE_SYNTH_HPP
#define COMMUTE_SYNTH_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "commute/error.hpp"
#include "commute/generator.hpp"
#include "commute/geodata.hpp"
#include "commute/od.hpp"
#include "commute/rng.hpp"

// Synthetic fixtures: random geography and marginals plus a ground-truth
// flow matrix from one generation at a planted deterrence.
namespace commute {

struct SynthConfig {
  std::size_t n = 20;              ///< region municipalities
  std::size_t m = 30;              ///< region plus outside
  double extent = 100'000.0;       ///< side of the square region, meters
  Count commuters = 1000;          ///< total region out-commuters
  double capacity_slack = 0.25;    ///< extra in-commuter capacity as a share of commuters
  DeterrenceSpec planted{Shape::exponential, 1.94e-4};
  std::uint64_t seed = 0;
  DistanceStrategy strategy = DistanceStrategy::automatic;
};

struct Fixture {
  MunicipalityRegistry registry;
  std::vector<Aggregate> aggregates;
  Marginals marginals;
  ODMatrix ground_truth;
  std::uint64_t ground_truth_seed = 0;
};

/// Derives an independent 64-bit seed (SplitMix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace detail {

inline double standard_normal(Rng& rng) {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u = 1.0 - rng.uniform01();
  const double v = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * 3.14159265358979323846 * v);
}

// Splits `total` proportionally to `shares` with largest-remainder rounding;
// ties go to the lower index.
inline std::vector<Count> apportion(Count total, const std::vector<double>& shares) {
  const double sum = std::accumulate(shares.begin(), shares.end(), 0.0);
  std::vector<Count> out(shares.size(), 0);
  std::vector<std::pair<double, std::size_t>> rest(shares.size());
  Count given = 0;
  for (std::size_t k = 0; k < shares.size(); ++k) {
    const double exact = static_cast<double>(total) * shares[k] / sum;
    out[k] = static_cast<Count>(std::floor(exact));
    given += out[k];
    rest[k] = {exact - static_cast<double>(out[k]), k};
  }
  std::stable_sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; given < total; k = (k + 1) % rest.size(), ++given) ++out[rest[k].second];
  return out;
}

inline std::string make_id(char prefix, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%05zu", prefix, k + 1);
  return buf;
}

} // namespace detail

/// Region municipalities are uniform over [0, extent]^2; outside ones are
/// uniform over the surrounding band out to a quarter extent. Municipality
/// sizes are log-normal and drive both demand (out-commuters) and capacity
/// (in-commuters, total = commuters x (1 + slack)).
inline Fixture synthesize(const SynthConfig& cfg) {
  if (cfg.n == 0 || cfg.m < cfg.n) throw ContractViolation("synth needs 1 <= n <= m");
  if (cfg.commuters < 0 || !(cfg.extent > 0.0) || cfg.capacity_slack < 0.0) {
    throw ContractViolation("synth needs commuters >= 0, extent > 0 and slack >= 0");
  }
  cfg.planted.validate();
  Rng rng(cfg.seed);

  std::vector<Municipality> items;
  items.reserve(cfg.m);
  for (std::size_t k = 0; k < cfg.n; ++k) {
    const double x = rng.uniform01() * cfg.extent;
    const double y = rng.uniform01() * cfg.extent;
    items.push_back({detail::make_id('R', k), x, y, true});
  }
  const double margin = cfg.extent / 4.0;
  for (std::size_t k = 0; k < cfg.m - cfg.n; ++k) {
    double x, y;
    do {
      x = -margin + rng.uniform01() * (cfg.extent + 2.0 * margin);
      y = -margin + rng.uniform01() * (cfg.extent + 2.0 * margin);
    } while (x >= 0.0 && x <= cfg.extent && y >= 0.0 && y <= cfg.extent);
    items.push_back({detail::make_id('X', k), x, y, false});
  }

  std::vector<double> demand(cfg.m), supply(cfg.m);
  for (std::size_t k = 0; k < cfg.m; ++k) demand[k] = std::exp(detail::standard_normal(rng));
  for (std::size_t k = 0; k < cfg.m; ++k) supply[k] = std::exp(detail::standard_normal(rng));

  std::vector<double> region_demand(demand.begin(), demand.begin() + static_cast<std::ptrdiff_t>(cfg.n));
  const double region_share = std::accumulate(region_demand.begin(), region_demand.end(), 0.0);
  const std::vector<Count> out = detail::apportion(cfg.commuters, region_demand);
  const auto capacity = static_cast<Count>(std::ceil(static_cast<double>(cfg.commuters) * (1.0 + cfg.capacity_slack)));
  const std::vector<Count> in = detail::apportion(capacity, supply);

  Fixture fx;
  fx.registry = MunicipalityRegistry(std::move(items));
  fx.marginals.in = in;
  fx.marginals.out = out;
  for (std::size_t k = 0; k < cfg.m; ++k) {
    Count o;
    if (k < cfg.n) {
      o = out[k];
    } else {
      // Outside residents are never assigned; give them a plausible total at
      // the region's per-size rate.
      o = static_cast<Count>(std::llround(static_cast<double>(cfg.commuters) * demand[k] / region_share));
    }
    fx.aggregates.push_back({fx.registry[k].id, in[k], o});
  }

  const DistanceProvider dist(fx.registry, cfg.strategy);
  fx.ground_truth_seed = derive_seed(cfg.seed);
  fx.ground_truth = generate(fx.registry, dist, in, out, cfg.planted, fx.ground_truth_seed);
  return fx;
}

} // namespace commute

#endif // COMMUTE_SYNTH_HPP
