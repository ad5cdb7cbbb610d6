#ifndef COMMUTE_METRICS_HPP
#define COMMUTE_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "commute/csv.hpp"
#include "commute/error.hpp"
#include "commute/geodata.hpp"
#include "commute/od.hpp"

namespace commute {

// Network comparison: common commuters, commuter totals, and the Sorensen
// index over flows (common part of commuters).

inline Count nc(const ODMatrix& r) { return r.total(); }

inline Count ncc(const ODMatrix& s, const ODMatrix& r) {
  if (!s.same_shape(r)) throw ContractViolation("ncc: matrices are indexed by different municipality sets");
  Count common = 0;
  const auto& a = s.flows();
  const auto& b = r.flows();
  for (std::size_t k = 0; k < a.size(); ++k) common += std::min(a[k], b[k]);
  return common;
}

inline double cpc(const ODMatrix& s, const ODMatrix& r) {
  const Count common = ncc(s, r);
  const Count denom = nc(r) + nc(s);
  if (denom == 0) throw DomainError("cpc undefined for two empty networks");
  return 2.0 * static_cast<double>(common) / static_cast<double>(denom);
}

inline double cpc(const RegionPlusOutsideOD& s, const RegionPlusOutsideOD& r) { return cpc(s.matrix(), r.matrix()); }

namespace detail {

inline std::size_t region_rows(const ODMatrix& m) {
  const auto& o = m.origin_ids();
  return (!o.empty() && o.back() == kOutsideId) ? o.size() - 1 : o.size();
}

inline ODMatrix region_block(const ODMatrix& m, std::size_t n) {
  if (m.cols() < n) throw ContractViolation("matrix has fewer destinations than region origins");
  std::vector<std::string> ids(m.origin_ids().begin(), m.origin_ids().begin() + static_cast<std::ptrdiff_t>(n));
  for (std::size_t j = 0; j < n; ++j) {
    if (m.dest_ids()[j] != ids[j]) throw ContractViolation("first n destinations must be the region origins");
  }
  std::vector<Count> flows(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) flows[i * n + j] = m.at(i, j);
  }
  auto dest = ids;
  return ODMatrix(std::move(ids), std::move(dest), std::move(flows));
}

} // namespace detail

/// CPC restricted to region-to-region flows. Either argument may be an
/// n x n, n x m, or collapsed (n+1) x (n+1) matrix over the same region.
inline double cpc_regional_block(const ODMatrix& s, const ODMatrix& r) {
  const std::size_t n = detail::region_rows(r);
  if (detail::region_rows(s) != n) throw ContractViolation("cpc_regional_block: region sizes differ");
  return cpc(detail::region_block(s, n), detail::region_block(r, n));
}

/// Commuting distances weighted by commuter counts. Samples are kept sorted
/// by distance with equal distances merged.
class WeightedDistanceDistribution {
public:
  WeightedDistanceDistribution() = default;

  explicit WeightedDistanceDistribution(std::vector<std::pair<double, Count>> samples) {
    for (const auto& [d, w] : samples) {
      if (!std::isfinite(d) || d < 0.0) throw ContractViolation("distance samples must be finite and >= 0");
      if (w < 0) throw ContractViolation("distance weights must be >= 0");
    }
    std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [d, w] : samples) {
      if (w == 0) continue;
      if (!samples_.empty() && samples_.back().first == d) {
        samples_.back().second += w;
      } else {
        samples_.emplace_back(d, w);
      }
      total_ += w;
    }
  }

  const std::vector<std::pair<double, Count>>& samples() const noexcept { return samples_; }
  Count total_weight() const noexcept { return total_; }
  bool degenerate() const noexcept { return total_ == 0; }

  /// Right-continuous ECDF: share of weight at distances <= x.
  double cdf(double x) const {
    if (degenerate()) throw DomainError("ECDF of an empty distribution");
    Count below = 0;
    for (const auto& [d, w] : samples_) {
      if (d > x) break;
      below += w;
    }
    return static_cast<double>(below) / static_cast<double>(total_);
  }

  double max_distance() const { return samples_.empty() ? 0.0 : samples_.back().first; }

  friend bool operator==(const WeightedDistanceDistribution&, const WeightedDistanceDistribution&) = default;

private:
  std::vector<std::pair<double, Count>> samples_;
  Count total_ = 0;
};

enum class DistanceScope { region_only, region_and_outside };

inline std::string_view to_string(DistanceScope s) {
  return s == DistanceScope::region_only ? "region_only" : "region_and_outside";
}

inline DistanceScope parse_distance_scope(std::string_view s) {
  if (s == "region_only") return DistanceScope::region_only;
  if (s == "region_and_outside") return DistanceScope::region_and_outside;
  throw ContractViolation("unknown distance scope '" + std::string(s) + "'");
}

/// One (d_ij, S_ij) sample per nonzero flow of an n x m matrix whose rows and
/// columns follow the provider's indexing. region_only keeps columns < n.
inline WeightedDistanceDistribution distance_distribution(const ODMatrix& s, const DistanceProvider& dist,
                                                          DistanceScope scope) {
  if (s.rows() != dist.origins() || s.cols() > dist.destinations()) {
    throw ContractViolation("flow matrix does not match the distance provider");
  }
  const std::size_t cols = scope == DistanceScope::region_only ? std::min(s.cols(), dist.origins()) : s.cols();
  std::vector<std::pair<double, Count>> samples;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (const Count c = s.at(i, j); c != 0) samples.emplace_back(dist(i, j), c);
    }
  }
  return WeightedDistanceDistribution(std::move(samples));
}

/// Supremum gap between two weighted ECDFs, evaluated exactly at the merged
/// step points. Cumulative weights are compared by cross-multiplication so
/// the only rounding is the final division.
inline double ks_distance(const WeightedDistanceDistribution& a, const WeightedDistanceDistribution& b) {
  if (a.degenerate() || b.degenerate()) throw DomainError("KS distance needs two non-empty distributions");
  using Wide = __int128;
  const auto& sa = a.samples();
  const auto& sb = b.samples();
  const Wide wa = a.total_weight();
  const Wide wb = b.total_weight();
  Wide ca = 0, cb = 0, best = 0;
  std::size_t ia = 0, ib = 0;
  while (ia < sa.size() || ib < sb.size()) {
    double x;
    if (ib == sb.size() || (ia < sa.size() && sa[ia].first <= sb[ib].first)) {
      x = sa[ia].first;
    } else {
      x = sb[ib].first;
    }
    while (ia < sa.size() && sa[ia].first == x) ca += sa[ia++].second;
    while (ib < sb.size() && sb[ib].first == x) cb += sb[ib++].second;
    Wide gap = ca * wb - cb * wa;
    if (gap < 0) gap = -gap;
    best = std::max(best, gap);
  }
  return static_cast<double>(best) / (static_cast<double>(wa) * static_cast<double>(wb));
}

struct DensityBin {
  double lo = 0.0;
  double hi = 0.0;
  double density = 0.0;
};

/// Equal-width histogram density over [0, max_distance] for display. The
/// last bin is closed on the right.
inline std::vector<DensityBin> binned_density(const WeightedDistanceDistribution& dist, std::size_t bins,
                                              double max_distance) {
  if (bins == 0) throw ContractViolation("bin count must be positive");
  if (dist.degenerate()) throw DomainError("density of an empty distribution");
  if (!(max_distance > 0.0)) max_distance = 1.0;
  const double width = max_distance / static_cast<double>(bins);
  std::vector<Count> weight(bins, 0);
  for (const auto& [d, w] : dist.samples()) {
    auto k = static_cast<std::size_t>(d / width);
    weight[std::min(k, bins - 1)] += w;
  }
  std::vector<DensityBin> out(bins);
  const double total = static_cast<double>(dist.total_weight());
  for (std::size_t k = 0; k < bins; ++k) {
    out[k].lo = width * static_cast<double>(k);
    out[k].hi = k + 1 == bins ? max_distance : width * static_cast<double>(k + 1);
    out[k].density = static_cast<double>(weight[k]) / (total * width);
  }
  return out;
}

// Distribution CSV: distance_m,weight

inline void write_distribution(std::ostream& out, const WeightedDistanceDistribution& dist) {
  out << "distance_m,weight\n";
  for (const auto& [d, w] : dist.samples()) out << csv::format_double(d) << ',' << w << '\n';
}

inline WeightedDistanceDistribution read_distribution(std::istream& in, std::string_view source = "distribution") {
  std::vector<std::pair<double, Count>> samples;
  csv::read(in, {"distance_m", "weight"}, source, [&](const auto& f, std::size_t line) {
    const double d = csv::parse_double(f[0], "distance_m");
    const Count w = csv::parse_int(f[1], "weight");
    if (d < 0.0 || w < 0) throw LoadError(std::string(source) + ":" + std::to_string(line) + ": negative value");
    samples.emplace_back(d, w);
  });
  return WeightedDistanceDistribution(std::move(samples));
}

inline void write_density(std::ostream& out, const std::vector<DensityBin>& bins) {
  out << "bin_lo_m,bin_hi_m,density\n";
  for (const auto& b : bins) {
    out << csv::format_double(b.lo) << ',' << csv::format_double(b.hi) << ',' << csv::format_double(b.density) << '\n';
  }
}

} // namespace commute

#endif // COMMUTE_METRICS_HPP
