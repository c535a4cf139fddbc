// Command-line driver: one verb per experiment, artifacts and a manifest in --out.
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "pcshaper/experiments.hpp"

namespace {

int fail(const std::string& kind, const std::string& message, int code, std::optional<double> time = std::nullopt) {
  nlohmann::json j{{"error", kind}, {"message", message}};
  if (time) j["failure_time"] = *time;
  std::cerr << j.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chaos-expansion propagation and shaper design experiments"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  bool reduced = false;
  app.add_option("--config", config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "Monte Carlo seed (overrides the config)");
  app.add_flag("--reduced", reduced, "short horizon (t1=10, t2=20) with degrees capped at 12");

  const std::vector<std::pair<std::string, std::string>> verbs{
      {"mc-convergence", "residual-energy moments over a ladder of MC sample sizes"},
      {"pce-convergence", "moment trajectories per chaos degree plus the MC reference"},
      {"timing", "wall time of chaos construction per degree against MC"},
      {"compare-shapers", "residual-energy table for u=1, non-robust, robust and both GSA filters"},
      {"heatmap", "per-realisation residual energy of robust vs GSA filters on a frequency grid"}};
  for (const auto& [name, help] : verbs) {
    app.add_subcommand(name, help)->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 64);
  }
  const std::string verb = app.get_subcommands().front()->get_name();

  try {
    pcshaper::ExperimentConfig cfg = config_path.empty() ? pcshaper::ExperimentConfig{} : pcshaper::load_config(config_path);
    if (reduced) cfg.apply_reduced();
    if (seed) cfg.mc.config.seed = *seed;
    cfg.validate();
    pcshaper::OutputDir out(out_dir);
    nlohmann::json summary;

    if (verb == "mc-convergence") {
      const auto rows = pcshaper::run_mc_convergence(cfg, out);
      summary = {{"e_vres", rows.back().stats.mean}, {"var_vres", rows.back().stats.variance},
                 {"sample_count", rows.back().sample_size}};
    } else if (verb == "pce-convergence") {
      const auto r = pcshaper::run_pce_convergence(cfg, out);
      summary = nlohmann::json::array();
      for (const auto& e : r.entries) summary.push_back({{"degree", e.degree}, {"e_vres", e.e_vres}, {"var_vres", e.var_vres}});
      summary.push_back({{"degree", "mc"}, {"e_vres", r.reference_vres.mean}, {"var_vres", r.reference_vres.variance}});
    } else if (verb == "timing") {
      summary = pcshaper::to_json_value(pcshaper::run_timing(cfg, out));
    } else if (verb == "compare-shapers") {
      const auto r = pcshaper::run_compare_shapers(cfg, out);
      for (const auto& c : r.columns)
        summary[c.name] = {{"e_pce", c.e_pce}, {"var_pce", c.var_pce}, {"e_mc", c.mc.mean}, {"var_mc", c.mc.variance}};
    } else if (verb == "heatmap") {
      const auto r = pcshaper::run_heatmap(cfg, out);
      summary = {{"grid", r.grid}, {"cells", r.cells.size()}};
    }
    out.write_manifest(verb, cfg, summary);
    std::cout << summary.dump(2) << '\n';
    return EXIT_SUCCESS;
  } catch (const pcshaper::IntegrationError& e) {
    return fail("integration", e.what(), 3, e.failure_time());
  } catch (const pcshaper::ConfigurationError& e) {
    return fail("configuration", e.what(), 2);
  } catch (const pcshaper::DomainError& e) {
    return fail("domain", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}
