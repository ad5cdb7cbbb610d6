#ifndef COMMUTE_OD_HPP
#define COMMUTE_OD_HPP

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "commute/csv.hpp"
#include "commute/error.hpp"
#include "commute/geodata.hpp"

namespace commute {

/// Commuter counts. Flows stay integral end to end.
using Count = std::int64_t;

/// How a synthetic matrix was produced; enough to regenerate it.
struct Provenance {
  std::string shape;
  double beta = 0.0;
  std::uint64_t seed = 0;
  std::string rng;
  std::uint64_t refresh_interval = 0;
};

/// Integer origin-destination flow matrix, row-major by origin.
///
/// Any cell whose origin id equals its destination id must be zero; in the
/// square regional case that is the diagonal.
class ODMatrix {
public:
  ODMatrix() = default;

  ODMatrix(std::vector<std::string> origin_ids, std::vector<std::string> dest_ids, std::vector<Count> flows)
      : origin_ids_(std::move(origin_ids)), dest_ids_(std::move(dest_ids)), flows_(std::move(flows)) {
    if (flows_.size() != origin_ids_.size() * dest_ids_.size()) {
      throw ContractViolation("flow buffer has " + std::to_string(flows_.size()) + " cells, expected " +
                              std::to_string(origin_ids_.size()) + "x" + std::to_string(dest_ids_.size()));
    }
    for (Count c : flows_) {
      if (c < 0) throw ContractViolation("negative flow count " + std::to_string(c));
    }
    std::unordered_map<std::string_view, std::size_t> dest_index;
    dest_index.reserve(dest_ids_.size());
    for (std::size_t j = 0; j < dest_ids_.size(); ++j) dest_index.emplace(dest_ids_[j], j);
    for (std::size_t i = 0; i < origin_ids_.size(); ++i) {
      auto it = dest_index.find(origin_ids_[i]);
      if (it != dest_index.end() && at(i, it->second) != 0) {
        throw ContractViolation("self-flow for '" + origin_ids_[i] + "' must be zero");
      }
    }
  }

  static ODMatrix zeros(std::vector<std::string> origin_ids, std::vector<std::string> dest_ids) {
    std::vector<Count> flows(origin_ids.size() * dest_ids.size(), 0);
    return ODMatrix(std::move(origin_ids), std::move(dest_ids), std::move(flows));
  }

  std::size_t rows() const noexcept { return origin_ids_.size(); }
  std::size_t cols() const noexcept { return dest_ids_.size(); }
  Count at(std::size_t i, std::size_t j) const { return flows_[i * dest_ids_.size() + j]; }
  std::span<const Count> row(std::size_t i) const {
    return {flows_.data() + i * dest_ids_.size(), dest_ids_.size()};
  }

  const std::vector<std::string>& origin_ids() const noexcept { return origin_ids_; }
  const std::vector<std::string>& dest_ids() const noexcept { return dest_ids_; }
  const std::vector<Count>& flows() const noexcept { return flows_; }

  Count row_sum(std::size_t i) const {
    Count s = 0;
    for (Count c : row(i)) s += c;
    return s;
  }
  Count col_sum(std::size_t j) const {
    Count s = 0;
    for (std::size_t i = 0; i < rows(); ++i) s += at(i, j);
    return s;
  }
  Count total() const {
    Count s = 0;
    for (Count c : flows_) s += c;
    return s;
  }

  bool same_shape(const ODMatrix& other) const {
    return origin_ids_ == other.origin_ids_ && dest_ids_ == other.dest_ids_;
  }

  const std::optional<Provenance>& provenance() const noexcept { return provenance_; }
  void set_provenance(Provenance p) { provenance_ = std::move(p); }

  friend bool operator==(const ODMatrix& a, const ODMatrix& b) {
    return a.origin_ids_ == b.origin_ids_ && a.dest_ids_ == b.dest_ids_ && a.flows_ == b.flows_;
  }

private:
  std::vector<std::string> origin_ids_;
  std::vector<std::string> dest_ids_;
  std::vector<Count> flows_;
  std::optional<Provenance> provenance_;
};

/// In-commuters per destination (`in`, length m) and out-commuters per origin
/// (`out`, length n).
struct Marginals {
  std::vector<Count> in;
  std::vector<Count> out;

  Count total_in() const {
    Count s = 0;
    for (Count c : in) s += c;
    return s;
  }
  Count total_out() const {
    Count s = 0;
    for (Count c : out) s += c;
    return s;
  }
};

/// Region block plus one aggregated outside row and column, (n+1)x(n+1).
/// The last origin and destination id is kOutsideId.
class RegionPlusOutsideOD {
public:
  explicit RegionPlusOutsideOD(ODMatrix m) : matrix_(std::move(m)) {
    const auto& o = matrix_.origin_ids();
    if (o.empty() || o != matrix_.dest_ids() || o.back() != kOutsideId) {
      throw ContractViolation("region-plus-outside matrix must be square with '" + std::string(kOutsideId) +
                              "' as last index");
    }
  }

  const ODMatrix& matrix() const noexcept { return matrix_; }
  /// n, the number of region municipalities.
  std::size_t region_size() const noexcept { return matrix_.rows() - 1; }

private:
  ODMatrix matrix_;
};

inline Marginals marginals_from_od(const ODMatrix& r) {
  if (r.origin_ids() != r.dest_ids()) {
    throw ContractViolation("marginals_from_od requires a square matrix over one municipality set");
  }
  Marginals m;
  m.out.resize(r.rows(), 0);
  m.in.resize(r.cols(), 0);
  for (std::size_t i = 0; i < r.rows(); ++i) {
    for (std::size_t j = 0; j < r.cols(); ++j) {
      m.out[i] += r.at(i, j);
      m.in[j] += r.at(i, j);
    }
  }
  return m;
}

/// One row of the aggregates file.
struct Aggregate {
  std::string id;
  Count in_commuters = 0;
  Count out_commuters = 0;
};

/// Builds generation inputs from per-municipality totals. Every registry
/// member contributes its in-commuters as capacity; only region members
/// contribute out-commuters as demand.
inline Marginals assemble_with_outside_inputs(const MunicipalityRegistry& reg, std::span<const Aggregate> aggregates) {
  std::vector<const Aggregate*> by_position(reg.size(), nullptr);
  for (const auto& a : aggregates) {
    auto k = reg.index_of(a.id);
    if (!k) throw LoadError("aggregate for unknown municipality '" + a.id + "'");
    if (by_position[*k] != nullptr) throw LoadError("duplicate aggregate for municipality '" + a.id + "'");
    if (a.in_commuters < 0 || a.out_commuters < 0) {
      throw LoadError("negative aggregate for municipality '" + a.id + "'");
    }
    by_position[*k] = &a;
  }
  Marginals m;
  m.in.resize(reg.size());
  m.out.resize(reg.region_size());
  for (std::size_t k = 0; k < reg.size(); ++k) {
    if (by_position[k] == nullptr) throw LoadError("missing aggregate for municipality '" + reg[k].id + "'");
    m.in[k] = by_position[k]->in_commuters;
    if (k < reg.region_size()) m.out[k] = by_position[k]->out_commuters;
  }
  const Count in = m.total_in();
  const Count out = m.total_out();
  if (in < out) {
    throw InfeasibleInputs("total in-commuters " + std::to_string(in) + " < total out-commuters " +
                           std::to_string(out) + " (deficit " + std::to_string(out - in) + ")");
  }
  return m;
}

/// Folds the outside columns of an n x m generation into one column and
/// recovers the outside-to-region row by difference from the region
/// municipalities' in-commuter totals.
inline RegionPlusOutsideOD collapse_to_region_plus_outside(const ODMatrix& full, std::span<const Count> in_totals) {
  const std::size_t n = full.rows();
  const std::size_t m = full.cols();
  if (m < n || in_totals.size() != n) {
    throw ContractViolation("collapse needs an n x m matrix (m >= n) and n in-commuter totals");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (full.dest_ids()[j] != full.origin_ids()[j]) {
      throw ContractViolation("first n destinations must be the region origins in order");
    }
  }
  auto ids = full.origin_ids();
  ids.emplace_back(kOutsideId);
  const std::size_t w = n + 1;
  std::vector<Count> flows(w * w, 0);
  for (std::size_t i = 0; i < n; ++i) {
    Count outside = 0;
    for (std::size_t j = 0; j < n; ++j) flows[i * w + j] = full.at(i, j);
    for (std::size_t j = n; j < m; ++j) outside += full.at(i, j);
    flows[i * w + n] = outside;
  }
  for (std::size_t j = 0; j < n; ++j) {
    Count regional = 0;
    for (std::size_t i = 0; i < n; ++i) regional += full.at(i, j);
    const Count diff = in_totals[j] - regional;
    if (diff < 0) {
      throw InfeasibleInputs("outside-to-'" + ids[j] + "' flow by difference is negative: in-commuters " +
                             std::to_string(in_totals[j]) + " < generated regional inflow " +
                             std::to_string(regional));
    }
    flows[n * w + j] = diff;
  }
  auto dest = ids;
  return RegionPlusOutsideOD(ODMatrix(std::move(ids), std::move(dest), std::move(flows)));
}

// Aggregates CSV: id,in_commuters,out_commuters

inline std::vector<Aggregate> read_aggregates(std::istream& in, std::string_view source = "aggregates") {
  std::vector<Aggregate> rows;
  csv::read(in, {"id", "in_commuters", "out_commuters"}, source, [&](const auto& f, std::size_t line) {
    Aggregate a{std::string(f[0]), csv::parse_int(f[1], "in_commuters"), csv::parse_int(f[2], "out_commuters")};
    if (a.in_commuters < 0 || a.out_commuters < 0) {
      throw LoadError(std::string(source) + ":" + std::to_string(line) + ": counts must be non-negative");
    }
    rows.push_back(std::move(a));
  });
  return rows;
}

inline std::vector<Aggregate> load_aggregates(const std::string& path) {
  auto in = csv::open_input(path);
  return read_aggregates(in, path);
}

inline void write_aggregates(std::ostream& out, std::span<const Aggregate> rows) {
  out << "id,in_commuters,out_commuters\n";
  for (const auto& a : rows) out << a.id << ',' << a.in_commuters << ',' << a.out_commuters << '\n';
}

// Flows CSV: origin_id,dest_id,count with count >= 1; absent pairs are zero.

inline void write_flows(std::ostream& out, const ODMatrix& od) {
  out << "origin_id,dest_id,count\n";
  for (std::size_t i = 0; i < od.rows(); ++i) {
    for (std::size_t j = 0; j < od.cols(); ++j) {
      const Count c = od.at(i, j);
      if (c != 0) out << od.origin_ids()[i] << ',' << od.dest_ids()[j] << ',' << c << '\n';
    }
  }
}

/// Reads flows onto a fixed index set; unknown ids, self pairs, duplicate
/// pairs and counts below one are load errors.
inline ODMatrix read_flows(std::istream& in, std::vector<std::string> origin_ids, std::vector<std::string> dest_ids,
                           std::string_view source = "flows") {
  std::unordered_map<std::string_view, std::size_t> oi, di;
  for (std::size_t i = 0; i < origin_ids.size(); ++i) oi.emplace(origin_ids[i], i);
  for (std::size_t j = 0; j < dest_ids.size(); ++j) di.emplace(dest_ids[j], j);
  std::vector<Count> flows(origin_ids.size() * dest_ids.size(), 0);
  std::vector<bool> seen(flows.size(), false);
  csv::read(in, {"origin_id", "dest_id", "count"}, source, [&](const auto& f, std::size_t line) {
    const std::string where = std::string(source) + ":" + std::to_string(line) + ": ";
    if (f[0] == f[1]) throw LoadError(where + "self pair '" + std::string(f[0]) + "' is not a commute");
    auto o = oi.find(f[0]);
    if (o == oi.end()) throw LoadError(where + "unknown origin '" + std::string(f[0]) + "'");
    auto d = di.find(f[1]);
    if (d == di.end()) throw LoadError(where + "unknown destination '" + std::string(f[1]) + "'");
    const Count c = csv::parse_int(f[2], "count");
    if (c < 1) throw LoadError(where + "count must be >= 1");
    const std::size_t cell = o->second * dest_ids.size() + d->second;
    if (seen[cell]) throw LoadError(where + "duplicate pair");
    seen[cell] = true;
    flows[cell] = c;
  });
  return ODMatrix(std::move(origin_ids), std::move(dest_ids), std::move(flows));
}

/// Observed or generated flows: region origins onto every registry destination.
inline ODMatrix load_flows(const std::string& path, const MunicipalityRegistry& reg) {
  auto in = csv::open_input(path);
  return read_flows(in, reg.region_ids(), reg.all_ids(), path);
}

inline RegionPlusOutsideOD read_region_plus_outside(std::istream& in, const MunicipalityRegistry& reg,
                                                    std::string_view source = "flows") {
  auto ids = reg.region_ids();
  ids.emplace_back(kOutsideId);
  auto dest = ids;
  return RegionPlusOutsideOD(read_flows(in, std::move(ids), std::move(dest), source));
}

} // namespace commute

#endif // COMMUTE_OD_HPP
