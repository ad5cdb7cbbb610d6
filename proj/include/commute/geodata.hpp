#ifndef COMMUTE_GEODATA_HPP
#define COMMUTE_GEODATA_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <new>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "commute/csv.hpp"
#include "commute/error.hpp"

namespace commute {

/// Reserved identifier for the aggregated outside in collapsed matrices.
inline constexpr std::string_view kOutsideId = "__OUTSIDE__";

/// A municipality centroid in projected planar coordinates (meters).
struct Municipality {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  bool in_region = true;
};

/// Planar Euclidean distance in meters.
inline double euclidean_distance(const Municipality& a, const Municipality& b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

/// Ordered set of municipalities with region members first.
///
/// Positions [0, n) hold the studied region and [n, m) the outside. Any input
/// order is normalized to this layout by a stable partition, so the relative
/// order inside each group is preserved.
class MunicipalityRegistry {
public:
  MunicipalityRegistry() = default;

  explicit MunicipalityRegistry(std::vector<Municipality> items) : items_(std::move(items)) {
    std::stable_partition(items_.begin(), items_.end(), [](const Municipality& m) { return m.in_region; });
    index_.reserve(items_.size());
    for (std::size_t k = 0; k < items_.size(); ++k) {
      const auto& mu = items_[k];
      if (mu.id == kOutsideId) throw LoadError("municipality id '" + mu.id + "' is reserved");
      if (!std::isfinite(mu.x) || !std::isfinite(mu.y)) {
        throw LoadError("municipality '" + mu.id + "' has non-finite coordinates");
      }
      if (!index_.emplace(mu.id, k).second) throw LoadError("duplicate municipality id '" + mu.id + "'");
      if (mu.in_region) ++region_size_;
    }
    if (region_size_ == 0) throw LoadError("registry has no region municipality (n must be >= 1)");
  }

  /// n: number of region municipalities.
  std::size_t region_size() const noexcept { return region_size_; }
  /// m: region plus outside.
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }

  const Municipality& operator[](std::size_t k) const { return items_[k]; }
  const std::vector<Municipality>& items() const noexcept { return items_; }

  std::optional<std::size_t> index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::string> ids(std::size_t first, std::size_t last) const {
    std::vector<std::string> out;
    out.reserve(last - first);
    for (std::size_t k = first; k < last; ++k) out.push_back(items_[k].id);
    return out;
  }
  std::vector<std::string> region_ids() const { return ids(0, region_size_); }
  std::vector<std::string> all_ids() const { return ids(0, items_.size()); }

private:
  std::vector<Municipality> items_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t region_size_ = 0;
};

enum class DistanceStrategy { dense, lazy, automatic };

inline std::string_view to_string(DistanceStrategy s) {
  switch (s) {
    case DistanceStrategy::dense: return "dense";
    case DistanceStrategy::lazy: return "lazy";
    case DistanceStrategy::automatic: return "auto";
  }
  return "?";
}

inline DistanceStrategy parse_distance_strategy(std::string_view s) {
  if (s == "dense") return DistanceStrategy::dense;
  if (s == "lazy") return DistanceStrategy::lazy;
  if (s == "auto") return DistanceStrategy::automatic;
  throw ContractViolation("unknown distance strategy '" + std::string(s) + "'");
}

inline constexpr std::uint64_t kDefaultAutoThreshold = 10'000'000;

/// Distances from every region origin (rows 0..n) to every destination
/// (columns 0..m). Either a dense row-major table or evaluation on demand;
/// both go through euclidean_distance and agree bit for bit.
class DistanceProvider {
public:
  DistanceProvider(const MunicipalityRegistry& reg, DistanceStrategy strategy,
                   std::uint64_t auto_threshold = kDefaultAutoThreshold)
      : origins_(reg.region_size()), destinations_(reg.size()) {
    if (reg.empty()) throw ContractViolation("distance provider needs a non-empty registry");
    points_.reserve(reg.size());
    for (const auto& mu : reg.items()) points_.push_back({std::string(), mu.x, mu.y, mu.in_region});

    const bool overflow = origins_ != 0 && destinations_ > std::numeric_limits<std::size_t>::max() / origins_;
    const std::uint64_t cells = overflow ? std::numeric_limits<std::uint64_t>::max()
                                         : static_cast<std::uint64_t>(origins_) * destinations_;
    if (strategy == DistanceStrategy::automatic) {
      strategy = cells <= auto_threshold ? DistanceStrategy::dense : DistanceStrategy::lazy;
    }
    strategy_ = strategy;
    if (strategy_ == DistanceStrategy::dense) {
      if (overflow || cells > std::numeric_limits<std::size_t>::max() / sizeof(double)) {
        throw CapacityError("dense distance table of " + std::to_string(origins_) + "x" +
                            std::to_string(destinations_) + " cells is not addressable");
      }
      try {
        table_.resize(static_cast<std::size_t>(cells));
      } catch (const std::bad_alloc&) {
        throw CapacityError("cannot allocate dense distance table of " + std::to_string(cells) + " cells");
      }
      for (std::size_t i = 0; i < origins_; ++i) {
        double* row = table_.data() + i * destinations_;
        for (std::size_t j = 0; j < destinations_; ++j) row[j] = euclidean_distance(points_[i], points_[j]);
      }
    }
  }

  /// Resolved strategy; never `automatic`.
  DistanceStrategy strategy() const noexcept { return strategy_; }
  std::size_t origins() const noexcept { return origins_; }
  std::size_t destinations() const noexcept { return destinations_; }

  double operator()(std::size_t i, std::size_t j) const noexcept {
    if (strategy_ == DistanceStrategy::dense) return table_[i * destinations_ + j];
    return euclidean_distance(points_[i], points_[j]);
  }

private:
  std::size_t origins_;
  std::size_t destinations_;
  DistanceStrategy strategy_ = DistanceStrategy::lazy;
  std::vector<Municipality> points_;
  std::vector<double> table_;
};

inline DistanceProvider build_distance_provider(const MunicipalityRegistry& reg, DistanceStrategy strategy,
                                                std::uint64_t auto_threshold = kDefaultAutoThreshold) {
  return DistanceProvider(reg, strategy, auto_threshold);
}

// Municipality CSV: id,x,y,in_region

inline MunicipalityRegistry read_municipalities(std::istream& in, std::string_view source = "municipalities") {
  std::vector<Municipality> items;
  csv::read(in, {"id", "x", "y", "in_region"}, source, [&](const auto& f, std::size_t line) {
    Municipality mu;
    mu.id = std::string(f[0]);
    if (mu.id.empty()) throw LoadError(std::string(source) + ":" + std::to_string(line) + ": empty id");
    mu.x = csv::parse_double(f[1], "x");
    mu.y = csv::parse_double(f[2], "y");
    if (f[3] == "1") {
      mu.in_region = true;
    } else if (f[3] == "0") {
      mu.in_region = false;
    } else {
      throw LoadError(std::string(source) + ":" + std::to_string(line) + ": in_region must be 0 or 1");
    }
    items.push_back(std::move(mu));
  });
  return MunicipalityRegistry(std::move(items));
}

inline MunicipalityRegistry load_municipalities(const std::string& path) {
  auto in = csv::open_input(path);
  return read_municipalities(in, path);
}

inline void write_municipalities(std::ostream& out, const MunicipalityRegistry& reg) {
  out << "id,x,y,in_region\n";
  for (const auto& mu : reg.items()) {
    out << mu.id << ',' << csv::format_double(mu.x) << ',' << csv::format_double(mu.y) << ','
        << (mu.in_region ? '1' : '0') << '\n';
  }
}

} // namespace commute

#endif // COMMUTE_GEODATA_HPP
