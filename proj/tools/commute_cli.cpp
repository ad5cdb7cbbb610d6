// Command-line front end: generate, compare, calibrate, distances, synth.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "commute/pipeline.hpp"

namespace {

int fail(const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
  return 1;
}

} // namespace

int main(int argc, char** argv) {
  using namespace commute;
  pipeline::RunConfig cfg;
  std::string shape = "exp";
  std::string strategy = "auto";
  std::string scope = "region_and_outside";
  std::string averaging = "per_replication";

  CLI::App app{"Synthesize municipality commuting networks from aggregate commuter counts"};
  app.set_version_flag("--version", pipeline::kToolVersion);
  app.set_config("--config", "", "TOML/INI file with the same keys as the flags (flags win)");
  app.require_subcommand(1);

  app.add_option("--municipalities", cfg.municipalities, "CSV id,x,y,in_region (meters)");
  app.add_option("--aggregates", cfg.aggregates, "CSV id,in_commuters,out_commuters");
  app.add_option("--observed", cfg.observed, "CSV origin_id,dest_id,count");
  app.add_option("--shape", shape, "Deterrence law")->check(CLI::IsMember({"power", "exp"}));
  app.add_option("--beta", cfg.beta, "Number, 'constant' or 'calibrate'")->capture_default_str();
  app.add_option("--replications", cfg.replications)->capture_default_str();
  app.add_option("--seed", cfg.seed)->capture_default_str();
  app.add_option("--out", cfg.out, "Output directory")->capture_default_str();
  app.add_option("--distance-strategy", strategy)->check(CLI::IsMember({"dense", "lazy", "auto"}));
  app.add_option("--auto-threshold", cfg.auto_threshold, "Cell count up to which 'auto' goes dense")
      ->capture_default_str();
  app.add_option("--bins", cfg.bins, "Display histogram bins")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--scope", scope, "Distance distribution scope")
      ->check(CLI::IsMember({"region_only", "region_and_outside"}));
  app.add_option("--refresh-interval", cfg.refresh_interval, "Assignments between weight-total refreshes")
      ->capture_default_str();
  app.add_option("--threads", cfg.threads, "Worker threads for replications (0 = all cores)");
  app.add_option("--beta-lo", cfg.beta_lo, "Calibration bracket lower end");
  app.add_option("--beta-hi", cfg.beta_hi, "Calibration bracket upper end");
  app.add_option("--tolerance", cfg.tolerance, "Calibration relative tolerance")->capture_default_str();
  app.add_option("--averaging", averaging, "How replications combine")
      ->check(CLI::IsMember({"per_replication", "averaged_objective"}));
  app.add_option("--stability-threshold", cfg.stability_threshold, "Soft CPC spread bound for compare")
      ->capture_default_str();
  app.add_option("--n", cfg.synth_n, "synth: region municipalities")->capture_default_str();
  app.add_option("--m", cfg.synth_m, "synth: region plus outside municipalities")->capture_default_str();
  app.add_option("--extent", cfg.extent, "synth: region side in meters")->capture_default_str();
  app.add_option("--commuters", cfg.commuters, "synth: total region out-commuters")->capture_default_str();

  auto* generate = app.add_subcommand("generate", "Generate flows, one directory per replication");
  auto* compare = app.add_subcommand("compare", "Score replications against observed flows (CPC, KS)");
  auto* calibrate = app.add_subcommand("calibrate", "Fit beta by KS on commuting distances");
  auto* distances = app.add_subcommand("distances", "Emit commuting distance samples and densities");
  auto* synth = app.add_subcommand("synth", "Write a synthetic fixture with planted beta");
  for (auto* sub : {generate, compare, calibrate, distances, synth}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.shape = parse_shape(shape);
    cfg.strategy = parse_distance_strategy(strategy);
    cfg.scope = parse_distance_scope(scope);
    cfg.averaging = averaging == "averaged_objective" ? Averaging::averaged_objective
                                                      : Averaging::per_replication_minimizers;
    if (generate->parsed()) {
      pipeline::cmd_generate(cfg);
    } else if (compare->parsed()) {
      const auto report = pipeline::cmd_compare(cfg, &std::cerr);
      std::cout << report["summary"].dump(2) << '\n';
    } else if (calibrate->parsed()) {
      const auto report = pipeline::cmd_calibrate(cfg);
      std::cout << nlohmann::json{{"beta_average", report["beta_average"]},
                                  {"beta_min", report["beta_min"]},
                                  {"beta_max", report["beta_max"]}}
                       .dump(2)
                << '\n';
    } else if (distances->parsed()) {
      pipeline::cmd_distances(cfg);
    } else if (synth->parsed()) {
      pipeline::cmd_synth(cfg);
    }
  } catch (const commute::NonConvergence& e) {
    std::cerr << nlohmann::json{{"error", e.kind()}, {"message", e.what()}, {"trace", nlohmann::json::parse(e.trace_json())}}
                     .dump()
              << '\n';
    return 1;
  } catch (const commute::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail("internal_error", e.what());
  }
  return 0;
}
