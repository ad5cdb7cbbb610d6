#ifndef COMMUTE_PIPELINE_HPP
#define COMMUTE_PIPELINE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "commute/calibration.hpp"
#include "commute/csv.hpp"
#include "commute/error.hpp"
#include "commute/generator.hpp"
#include "commute/geodata.hpp"
#include "commute/metrics.hpp"
#include "commute/od.hpp"
#include "commute/parallel.hpp"
#include "commute/rng.hpp"
#include "commute/synth.hpp"

// Orchestration behind the command-line subcommands. Every function reads
// its inputs from a RunConfig, writes files under config.out and returns the
// JSON document it also wrote (where there is one).
namespace commute::pipeline {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunConfig {
  std::string municipalities;
  std::string aggregates;
  std::string observed;
  Shape shape = Shape::exponential;
  std::string beta = "constant"; ///< a number, "constant" or "calibrate"
  std::size_t replications = 10;
  std::uint64_t seed = 0;
  std::string out = ".";
  DistanceStrategy strategy = DistanceStrategy::automatic;
  std::uint64_t auto_threshold = kDefaultAutoThreshold;
  std::size_t bins = 50;
  DistanceScope scope = DistanceScope::region_and_outside;
  std::uint64_t refresh_interval = 4096;
  std::size_t threads = 0;

  // calibration search
  std::optional<double> beta_lo;
  std::optional<double> beta_hi;
  double tolerance = 1e-6;
  Averaging averaging = Averaging::per_replication_minimizers;

  /// Soft bound on max |cpc_r - mean| / mean across replications in compare.
  double stability_threshold = 0.0102;

  // synth
  std::size_t synth_n = 20;
  std::size_t synth_m = 30;
  double extent = 100'000.0;
  Count commuters = 1000;
};

/// Loaded and validated inputs of one run.
struct Dataset {
  MunicipalityRegistry registry;
  std::vector<Aggregate> aggregates;
  Marginals marginals;
  std::unique_ptr<DistanceProvider> distances;
  std::optional<ODMatrix> observed;

  std::span<const Count> region_in_totals() const {
    return std::span<const Count>(marginals.in).first(registry.region_size());
  }
};

inline Dataset load_dataset(const RunConfig& cfg, bool need_observed) {
  if (cfg.municipalities.empty() || cfg.aggregates.empty()) {
    throw ContractViolation("--municipalities and --aggregates are required");
  }
  Dataset ds;
  ds.registry = load_municipalities(cfg.municipalities);
  ds.aggregates = load_aggregates(cfg.aggregates);
  ds.marginals = assemble_with_outside_inputs(ds.registry, ds.aggregates);
  ds.distances = std::make_unique<DistanceProvider>(ds.registry, cfg.strategy, cfg.auto_threshold);
  if (!cfg.observed.empty()) {
    ds.observed = load_flows(cfg.observed, ds.registry);
  } else if (need_observed) {
    throw ContractViolation("--observed flows are required for this subcommand");
  }
  return ds;
}

inline GenerationInputs inputs_of(const Dataset& ds, const RunConfig& cfg) {
  GeneratorOptions opt;
  opt.refresh_interval = cfg.refresh_interval;
  return GenerationInputs{ds.registry, *ds.distances, ds.marginals.in, ds.marginals.out, opt};
}

inline std::string replication_dir(const RunConfig& cfg, std::size_t r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rep_%03zu", r);
  return (std::filesystem::path(cfg.out) / buf).string();
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  auto out = csv::open_output(path);
  out << j.dump(2) << '\n';
}

template <typename Writer>
void write_file(const std::string& path, Writer&& writer) {
  auto out = csv::open_output(path);
  writer(out);
  if (!out) throw LoadError("failed writing '" + path + "'");
}

struct ResolvedBeta {
  double value = 0.0;
  std::string source;
  std::optional<CalibrationReport> calibration;
};

inline CalibrationConfig calibration_config(const RunConfig& cfg) {
  auto c = CalibrationConfig::defaults_for(cfg.shape);
  if (cfg.beta_lo) c.lo = *cfg.beta_lo;
  if (cfg.beta_hi) c.hi = *cfg.beta_hi;
  c.tolerance = cfg.tolerance;
  c.replications = cfg.replications;
  c.base_seed = cfg.seed;
  c.scope = cfg.scope;
  c.averaging = cfg.averaging;
  c.threads = cfg.threads;
  return c;
}

inline ResolvedBeta resolve_beta(const RunConfig& cfg, const Dataset& ds) {
  ResolvedBeta rb;
  if (cfg.beta == "constant") {
    if (cfg.shape != constant_beta().shape) {
      throw ContractViolation("--beta constant is defined for the exponential law only");
    }
    rb.value = constant_beta().value;
    rb.source = "constant";
  } else if (cfg.beta == "calibrate") {
    if (!ds.observed) throw ContractViolation("--beta calibrate requires --observed flows");
    rb.calibration = calibrate(inputs_of(ds, cfg), cfg.shape, *ds.observed, calibration_config(cfg));
    rb.value = rb.calibration->beta_average;
    rb.source = "calibrate";
  } else {
    rb.value = csv::parse_double(cfg.beta, "--beta");
    rb.source = "explicit";
  }
  DeterrenceSpec{cfg.shape, rb.value}.validate();
  return rb;
}

inline nlohmann::json run_metadata(const RunConfig& cfg, const Dataset& ds, const ResolvedBeta& beta) {
  return {{"tool_version", kToolVersion},
          {"rng", std::string(Rng::kAlgorithm)},
          {"shape", std::string(to_string(cfg.shape))},
          {"beta", beta.value},
          {"beta_source", beta.source},
          {"base_seed", cfg.seed},
          {"replications", cfg.replications},
          {"distance_strategy", std::string(to_string(ds.distances->strategy()))},
          {"auto_threshold", cfg.auto_threshold},
          {"refresh_interval", cfg.refresh_interval},
          {"n", ds.registry.region_size()},
          {"m", ds.registry.size()},
          {"total_out_commuters", ds.marginals.total_out()},
          {"inputs",
           {{"municipalities", cfg.municipalities}, {"aggregates", cfg.aggregates}, {"observed", cfg.observed}}}};
}

inline std::vector<ODMatrix> run_replications(const RunConfig& cfg, const Dataset& ds, double beta) {
  const auto inputs = inputs_of(ds, cfg);
  std::vector<ODMatrix> out(cfg.replications);
  parallel_for(
      cfg.replications,
      [&](std::size_t r) {
        out[r] = generate(ds.registry, *ds.distances, inputs.in, inputs.out, DeterrenceSpec{cfg.shape, beta},
                          cfg.seed + r, inputs.options);
      },
      cfg.threads);
  return out;
}

/// generate: one directory per replication holding the n x m flows, the
/// collapsed region-plus-outside flows and a metadata record.
inline nlohmann::json cmd_generate(const RunConfig& cfg) {
  if (cfg.replications == 0) throw ContractViolation("--replications must be >= 1");
  const Dataset ds = load_dataset(cfg, cfg.beta == "calibrate");
  const ResolvedBeta beta = resolve_beta(cfg, ds);
  std::filesystem::create_directories(cfg.out);
  if (beta.calibration) write_json((std::filesystem::path(cfg.out) / "calibration.json").string(), to_json(*beta.calibration));

  const auto runs = run_replications(cfg, ds, beta.value);
  auto meta = run_metadata(cfg, ds, beta);
  nlohmann::json reps = nlohmann::json::array();
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto dir = replication_dir(cfg, r);
    std::filesystem::create_directories(dir);
    const auto collapsed = collapse_to_region_plus_outside(runs[r], ds.region_in_totals());
    write_file(dir + "/flows_full.csv", [&](std::ostream& o) { write_flows(o, runs[r]); });
    write_file(dir + "/flows_collapsed.csv", [&](std::ostream& o) { write_flows(o, collapsed.matrix()); });
    auto rep_meta = meta;
    rep_meta["replication"] = r;
    rep_meta["seed"] = cfg.seed + r;
    rep_meta["total_flow"] = runs[r].total();
    write_json(dir + "/metadata.json", rep_meta);
    reps.push_back({{"replication", r}, {"seed", cfg.seed + r}, {"dir", std::filesystem::path(dir).filename().string()}});
  }
  meta["replication_dirs"] = reps;
  write_json((std::filesystem::path(cfg.out) / "metadata.json").string(), meta);
  return meta;
}

struct Summary {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double stddev = 0.0; ///< population standard deviation
  double cv() const { return mean != 0.0 ? stddev / mean : 0.0; }
  double max_relative_deviation() const {
    return mean != 0.0 ? std::max(max - mean, mean - min) / mean : 0.0;
  }
};

inline Summary summarize(const std::vector<double>& v) {
  Summary s;
  if (v.empty()) return s;
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.stddev += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(v.size()));
  return s;
}

inline nlohmann::json to_json(const Summary& s) {
  return {{"mean", s.mean}, {"min", s.min}, {"max", s.max}, {"stddev", s.stddev}, {"cv", s.cv()}};
}

/// compare: replicate generation and score each run against the observed
/// flows with CPC on the collapsed matrices, CPC on the region block, and KS
/// on commuting distances.
inline nlohmann::json cmd_compare(const RunConfig& cfg, std::ostream* warnings = nullptr) {
  if (cfg.replications == 0) throw ContractViolation("--replications must be >= 1");
  const Dataset ds = load_dataset(cfg, true);
  const ResolvedBeta beta = resolve_beta(cfg, ds);
  const auto runs = run_replications(cfg, ds, beta.value);

  const auto observed_collapsed = collapse_to_region_plus_outside(*ds.observed, ds.region_in_totals());
  const auto observed_dist = distance_distribution(*ds.observed, *ds.distances, cfg.scope);

  nlohmann::json reps = nlohmann::json::array();
  std::vector<double> cpcs, cpcs_regional, kss;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto collapsed = collapse_to_region_plus_outside(runs[r], ds.region_in_totals());
    const double c = cpc(collapsed, observed_collapsed);
    const double cr = cpc_regional_block(runs[r], *ds.observed);
    const double ks = ks_distance(distance_distribution(runs[r], *ds.distances, cfg.scope), observed_dist);
    cpcs.push_back(c);
    cpcs_regional.push_back(cr);
    kss.push_back(ks);
    reps.push_back({{"replication_seed", cfg.seed + r},
                    {"ncc", ncc(collapsed.matrix(), observed_collapsed.matrix())},
                    {"nc_observed", nc(observed_collapsed.matrix())},
                    {"nc_simulated", nc(collapsed.matrix())},
                    {"cpc", c},
                    {"cpc_regional", cr},
                    {"ks", ks},
                    {"scope", std::string(to_string(cfg.scope))}});
  }
  const Summary cpc_summary = summarize(cpcs);
  const bool unstable = cpc_summary.max_relative_deviation() > cfg.stability_threshold;
  if (unstable && warnings) {
    *warnings << "{\"warning\":\"cpc_spread\",\"max_relative_deviation\":" << cpc_summary.max_relative_deviation()
              << ",\"threshold\":" << cfg.stability_threshold << "}\n";
  }
  nlohmann::json report = {
      {"metadata", run_metadata(cfg, ds, beta)},
      {"replications", reps},
      {"summary", {{"cpc", to_json(cpc_summary)}, {"cpc_regional", to_json(summarize(cpcs_regional))}, {"ks", to_json(summarize(kss))}}},
      {"stability",
       {{"max_relative_deviation", cpc_summary.max_relative_deviation()},
        {"threshold", cfg.stability_threshold},
        {"within_threshold", !unstable}}}};
  if (beta.calibration) report["calibration"] = to_json(*beta.calibration);
  std::filesystem::create_directories(cfg.out);
  write_json((std::filesystem::path(cfg.out) / "compare.json").string(), report);
  return report;
}

/// calibrate: fit beta against the observed commuting distances.
inline nlohmann::json cmd_calibrate(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg, true);
  const auto report = calibrate(inputs_of(ds, cfg), cfg.shape, *ds.observed, calibration_config(cfg));
  auto j = to_json(report);
  j["metadata"] = {{"tool_version", kToolVersion},
                   {"rng", std::string(Rng::kAlgorithm)},
                   {"base_seed", cfg.seed},
                   {"distance_strategy", std::string(to_string(ds.distances->strategy()))},
                   {"refresh_interval", cfg.refresh_interval},
                   {"tolerance", cfg.tolerance},
                   {"bracket", {calibration_config(cfg).lo, calibration_config(cfg).hi}}};
  std::filesystem::create_directories(cfg.out);
  write_json((std::filesystem::path(cfg.out) / "calibration.json").string(), j);
  return j;
}

/// Largest distance over the origin-destination pairs in scope; the common
/// upper edge of all display histograms of a run.
inline double max_pair_distance(const DistanceProvider& dist, DistanceScope scope) {
  const std::size_t cols = scope == DistanceScope::region_only ? dist.origins() : dist.destinations();
  double best = 0.0;
  for (std::size_t i = 0; i < dist.origins(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) best = std::max(best, dist(i, j));
  }
  return best;
}

/// distances: weighted commuting-distance samples and binned densities per
/// replication, plus the observed pair and KS sidecars when flows are given.
inline nlohmann::json cmd_distances(const RunConfig& cfg) {
  if (cfg.replications == 0) throw ContractViolation("--replications must be >= 1");
  const Dataset ds = load_dataset(cfg, cfg.beta == "calibrate");
  const ResolvedBeta beta = resolve_beta(cfg, ds);
  const auto runs = run_replications(cfg, ds, beta.value);
  const double upper = max_pair_distance(*ds.distances, cfg.scope);
  std::filesystem::create_directories(cfg.out);
  const auto root = std::filesystem::path(cfg.out);

  std::optional<WeightedDistanceDistribution> observed;
  if (ds.observed) {
    observed = distance_distribution(*ds.observed, *ds.distances, cfg.scope);
    write_file((root / "observed_distances.csv").string(), [&](std::ostream& o) { write_distribution(o, *observed); });
    write_file((root / "observed_density.csv").string(),
               [&](std::ostream& o) { write_density(o, binned_density(*observed, cfg.bins, upper)); });
  }
  nlohmann::json reps = nlohmann::json::array();
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto dir = replication_dir(cfg, r);
    std::filesystem::create_directories(dir);
    const auto sim = distance_distribution(runs[r], *ds.distances, cfg.scope);
    write_file(dir + "/simulated_distances.csv", [&](std::ostream& o) { write_distribution(o, sim); });
    write_file(dir + "/simulated_density.csv",
               [&](std::ostream& o) { write_density(o, binned_density(sim, cfg.bins, upper)); });
    nlohmann::json rep = {{"replication_seed", cfg.seed + r}, {"total_weight", sim.total_weight()}};
    if (observed) {
      rep["ks"] = ks_distance(sim, *observed);
      write_json(dir + "/ks.json", {{"replication_seed", cfg.seed + r},
                                    {"ks", rep["ks"]},
                                    {"scope", std::string(to_string(cfg.scope))}});
    }
    reps.push_back(rep);
  }
  nlohmann::json meta = run_metadata(cfg, ds, beta);
  meta["scope"] = std::string(to_string(cfg.scope));
  meta["bins"] = cfg.bins;
  meta["bin_upper_m"] = upper;
  meta["replication_results"] = reps;
  write_json((root / "metadata.json").string(), meta);
  return meta;
}

/// synth: municipalities, aggregates and ground-truth flows for a random
/// region planted at a known deterrence.
inline nlohmann::json cmd_synth(const RunConfig& cfg) {
  SynthConfig sc;
  sc.n = cfg.synth_n;
  sc.m = cfg.synth_m;
  sc.extent = cfg.extent;
  sc.commuters = cfg.commuters;
  sc.seed = cfg.seed;
  sc.strategy = cfg.strategy;
  double planted;
  if (cfg.beta == "constant") {
    if (cfg.shape != Shape::exponential) throw ContractViolation("--beta constant is defined for the exponential law only");
    planted = constant_beta().value;
  } else if (cfg.beta == "calibrate") {
    throw ContractViolation("synth needs an explicit planted --beta or 'constant'");
  } else {
    planted = csv::parse_double(cfg.beta, "--beta");
  }
  sc.planted = DeterrenceSpec{cfg.shape, planted};
  const Fixture fx = synthesize(sc);

  std::filesystem::create_directories(cfg.out);
  const auto root = std::filesystem::path(cfg.out);
  write_file((root / "municipalities.csv").string(), [&](std::ostream& o) { write_municipalities(o, fx.registry); });
  write_file((root / "aggregates.csv").string(), [&](std::ostream& o) { write_aggregates(o, fx.aggregates); });
  write_file((root / "observed_flows.csv").string(), [&](std::ostream& o) { write_flows(o, fx.ground_truth); });
  nlohmann::json meta = {{"tool_version", kToolVersion},
                         {"rng", std::string(Rng::kAlgorithm)},
                         {"seed", cfg.seed},
                         {"ground_truth_seed", fx.ground_truth_seed},
                         {"n", sc.n},
                         {"m", sc.m},
                         {"extent_m", sc.extent},
                         {"commuters", sc.commuters},
                         {"capacity_slack", sc.capacity_slack},
                         {"shape", std::string(to_string(sc.planted.shape))},
                         {"beta", sc.planted.beta},
                         {"distance_strategy", std::string(to_string(sc.strategy))}};
  write_json((root / "metadata.json").string(), meta);
  return meta;
}

} // namespace commute::pipeline

#endif // COMMUTE_PIPELINE_HPP
