/**
 * @file experiments.hpp
 * @brief Experiment drivers behind the command-line verbs. Each driver reads an
 * ExperimentConfig, writes its CSV/JSON artifacts into an output directory and
 * returns the numbers it wrote so callers (and tests) can inspect them.
 */
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "pcshaper/design.hpp"
#include "pcshaper/dynamics.hpp"
#include "pcshaper/io.hpp"
#include "pcshaper/shaper.hpp"
#include "pcshaper/uq.hpp"

namespace pcshaper {

inline constexpr const char* kVersion = "0.1.0";

struct PceSettings {
  int degree = 30;
  std::vector<int> degrees{10, 20, 30};
  Truncation truncation = Truncation::TotalDegree;
  double tol = 1e-12;
  int samples_per_period = 20;
  bool write_coefficients = false;
};

struct McSettings {
  McConfig config{};
  std::vector<std::size_t> ladder{1000, 2000, 5000, 10'000, 20'000, 50'000, 100'000};
};

struct GsaSettings {
  std::size_t n_delays = 2;
  std::optional<double> t_f;  // defaults to the final delay of the robust seed
  int search_degree = 12;
  NelderMeadOptions nelder_mead{};
  std::vector<std::vector<double>> perturbations;  // extra multistart seeds (amplitude factors)
  std::optional<ShaperDesign> xi1_design;          // given designs skip the optimiser
  std::optional<ShaperDesign> xi2_design;
};

struct TimingSettings {
  std::vector<int> degrees{5, 10, 15, 20, 25, 30};
  std::size_t mc_samples = 10'000;
  Sampler sampler = Sampler::Rk45;
  int repeats = 3;
};

struct ExperimentConfig {
  SystemParams system{};
  UncertaintySchedule schedule = default_schedule();
  ResidualEnergySpec energy{};
  double level = 1.0;
  double damping = 0.0;
  std::optional<double> design_freq;  // defaults to mean_freq
  PceSettings pce{};
  McSettings mc{};
  GsaSettings gsa{};
  TimingSettings timing{};
  int heatmap_grid = 21;

  [[nodiscard]] double shaper_freq() const { return design_freq.value_or(schedule.mean_freq); }

  void validate() const {
    system.validate();
    schedule.validate();
    energy.validate();
    mc.config.validate();
    auto check_degree = [](int p) {
      if (p < 0 || p > kMaxBasisDegree) throw ConfigurationError("degree " + std::to_string(p) + " out of range");
    };
    check_degree(pce.degree);
    check_degree(gsa.search_degree);
    for (int p : pce.degrees) check_degree(p);
    for (int p : timing.degrees) check_degree(p);
    if (!(pce.tol > 0.0)) throw ConfigurationError("pce.tol must be positive");
    if (pce.samples_per_period < 1) throw ConfigurationError("pce.samples_per_period must be >= 1");
    for (std::size_t n : mc.ladder)
      if (n < 1) throw ConfigurationError("mc.ladder entries must be >= 1");
    if (heatmap_grid < 1) throw ConfigurationError("heatmap.grid must be >= 1");
    if (timing.repeats < 1) throw ConfigurationError("timing.repeats must be >= 1");
    if (gsa.n_delays < 1) throw ConfigurationError("gsa.n_delays must be >= 1");
    if (!(shaper_freq() > 0.0)) throw ConfigurationError("design_freq must be positive");
  }

  /// CI-speed variant: t1 = 10, t2 = 20 and every degree capped at 12.
  void apply_reduced() {
    schedule.t1 = 10.0;
    schedule.t2 = 20.0;
    static constexpr int cap = 12;
    pce.degree = std::min(pce.degree, cap);
    gsa.search_degree = std::min(gsa.search_degree, cap);
    auto clip = [](std::vector<int>& v) {
      v.erase(std::remove_if(v.begin(), v.end(), [](int p) { return p > cap; }), v.end());
      if (v.empty()) v.push_back(cap);
    };
    clip(pce.degrees);
    clip(timing.degrees);
  }

  [[nodiscard]] EvaluationConfig evaluation() const {
    EvaluationConfig e;
    e.params = system;
    e.schedule = schedule;
    e.degree = pce.degree;
    e.search_degree = gsa.search_degree;
    e.truncation = pce.truncation;
    e.tol = pce.tol;
    e.level = level;
    e.energy = energy;
    return e;
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  nlohmann::json gsa{{"n_delays", c.gsa.n_delays},
                     {"search_degree", c.gsa.search_degree},
                     {"initial_step", c.gsa.nelder_mead.initial_step},
                     {"diameter_tol", c.gsa.nelder_mead.diameter_tol},
                     {"max_evaluations", c.gsa.nelder_mead.max_evaluations},
                     {"perturbations", c.gsa.perturbations}};
  if (c.gsa.t_f) gsa["t_f"] = *c.gsa.t_f;
  if (c.gsa.xi1_design) gsa["xi1_design"] = *c.gsa.xi1_design;
  if (c.gsa.xi2_design) gsa["xi2_design"] = *c.gsa.xi2_design;
  nlohmann::json mc = c.mc.config;
  mc["ladder"] = c.mc.ladder;
  mc["workers"] = c.mc.config.workers;
  j = nlohmann::json{{"system", c.system},
                     {"schedule", c.schedule},
                     {"energy", c.energy},
                     {"level", c.level},
                     {"damping", c.damping},
                     {"design_freq", c.shaper_freq()},
                     {"pce",
                      {{"degree", c.pce.degree},
                       {"degrees", c.pce.degrees},
                       {"truncation", to_string(c.pce.truncation)},
                       {"tol", c.pce.tol},
                       {"samples_per_period", c.pce.samples_per_period},
                       {"write_coefficients", c.pce.write_coefficients}}},
                     {"mc", mc},
                     {"gsa", gsa},
                     {"timing",
                      {{"degrees", c.timing.degrees},
                       {"mc_samples", c.timing.mc_samples},
                       {"sampler", to_string(c.timing.sampler)},
                       {"repeats", c.timing.repeats}}},
                     {"heatmap", {{"grid", c.heatmap_grid}}}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  if (j.contains("system")) c.system = j.at("system").get<SystemParams>();
  if (j.contains("schedule")) c.schedule = j.at("schedule").get<UncertaintySchedule>();
  if (j.contains("energy")) c.energy = j.at("energy").get<ResidualEnergySpec>();
  c.level = j.value("level", c.level);
  c.damping = j.value("damping", c.damping);
  if (j.contains("design_freq")) c.design_freq = j.at("design_freq").get<double>();
  if (j.contains("pce")) {
    const auto& p = j.at("pce");
    c.pce.degree = p.value("degree", c.pce.degree);
    c.pce.degrees = p.value("degrees", c.pce.degrees);
    if (p.contains("truncation")) c.pce.truncation = truncation_from_string(p.at("truncation").get<std::string>());
    c.pce.tol = p.value("tol", c.pce.tol);
    c.pce.samples_per_period = p.value("samples_per_period", c.pce.samples_per_period);
    c.pce.write_coefficients = p.value("write_coefficients", c.pce.write_coefficients);
  }
  if (j.contains("mc")) {
    c.mc.config = j.at("mc").get<McConfig>();
    c.mc.ladder = j.at("mc").value("ladder", c.mc.ladder);
  }
  if (j.contains("gsa")) {
    const auto& g = j.at("gsa");
    c.gsa.n_delays = g.value("n_delays", c.gsa.n_delays);
    if (g.contains("t_f")) c.gsa.t_f = g.at("t_f").get<double>();
    c.gsa.search_degree = g.value("search_degree", c.gsa.search_degree);
    c.gsa.nelder_mead.initial_step = g.value("initial_step", c.gsa.nelder_mead.initial_step);
    c.gsa.nelder_mead.diameter_tol = g.value("diameter_tol", c.gsa.nelder_mead.diameter_tol);
    c.gsa.nelder_mead.max_evaluations = g.value("max_evaluations", c.gsa.nelder_mead.max_evaluations);
    c.gsa.perturbations = g.value("perturbations", c.gsa.perturbations);
    if (g.contains("xi1_design")) c.gsa.xi1_design = g.at("xi1_design").get<ShaperDesign>();
    if (g.contains("xi2_design")) c.gsa.xi2_design = g.at("xi2_design").get<ShaperDesign>();
  }
  if (j.contains("timing")) {
    const auto& t = j.at("timing");
    c.timing.degrees = t.value("degrees", c.timing.degrees);
    c.timing.mc_samples = t.value("mc_samples", c.timing.mc_samples);
    if (t.contains("sampler")) c.timing.sampler = sampler_from_string(t.at("sampler").get<std::string>());
    c.timing.repeats = t.value("repeats", c.timing.repeats);
  }
  if (j.contains("heatmap")) c.heatmap_grid = j.at("heatmap").value("grid", c.heatmap_grid);
}

[[nodiscard]] inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open config file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigurationError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  try {
    return j.get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError("config '" + path.string() + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) { std::filesystem::create_directories(root_); }

  [[nodiscard]] std::ofstream open(const std::string& name) {
    std::ofstream os(root_ / name);
    if (!os) throw ConfigurationError("cannot write '" + (root_ / name).string() + "'");
    written_.push_back(name);
    return os;
  }

  void write_json(const std::string& name, const nlohmann::json& j) { open(name) << j.dump(2) << '\n'; }

  [[nodiscard]] const std::vector<std::string>& written() const noexcept { return written_; }
  [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }

  /// Records the command, the effective configuration and every artifact written so far.
  void write_manifest(const std::string& command, const ExperimentConfig& cfg, const nlohmann::json& extra = {}) {
    nlohmann::json m{{"command", command},
                     {"version", kVersion},
                     {"config", cfg},
                     {"seed", cfg.mc.config.seed},
                     {"artifacts", written_}};
    if (!extra.is_null()) m["summary"] = extra;
    std::ofstream os(root_ / "manifest.json");
    os << m.dump(2) << '\n';
  }

 private:
  std::filesystem::path root_;
  std::vector<std::string> written_;
};

// ---------------------------------------------------------------------------
// mc-convergence
// ---------------------------------------------------------------------------

struct McConvergenceRow {
  std::size_t sample_size;
  SampleStatistics stats;
};

/// Residual-energy moments for a ladder of sample sizes; the n-th rung uses samples 0..n-1 of one stream.
[[nodiscard]] inline std::vector<McConvergenceRow> run_mc_convergence(const ExperimentConfig& cfg, OutputDir& out) {
  cfg.validate();
  McConfig mc = cfg.mc.config;
  mc.sample_count = *std::max_element(cfg.mc.ladder.begin(), cfg.mc.ladder.end());
  const std::vector<double> samples = mc_residual_samples(mc, cfg.schedule, unshaped(), cfg.level, cfg.energy);
  std::vector<McConvergenceRow> rows;
  auto os = out.open("mc_convergence.csv");
  io::write_header(os, {"sample_size", "e_vres", "var_vres", "stderr_e", "stderr_var"});
  for (std::size_t n : cfg.mc.ladder) {
    const SampleStatistics s = summarize(std::span<const double>(samples.data(), n));
    rows.push_back({n, s});
    io::write_row(os, {static_cast<double>(n), s.mean, s.variance, s.stderr_mean, s.stderr_variance});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// pce-convergence
// ---------------------------------------------------------------------------

struct PceConvergenceEntry {
  int degree;
  MomentReport moments;
  double e_vres;
  double var_vres;
};

struct PceConvergenceResult {
  std::vector<PceConvergenceEntry> entries;
  MomentReport reference;  // closed-form Monte Carlo on the same grid
  SampleStatistics reference_vres;
};

[[nodiscard]] inline PceConvergenceResult run_pce_convergence(const ExperimentConfig& cfg, OutputDir& out) {
  cfg.validate();
  PceConvergenceResult res;
  const IntegrationOptions iopt{cfg.pce.tol, cfg.pce.samples_per_period};
  const ShapedInput input{unshaped(), cfg.level};
  const PointState initial{cfg.system.initial_position, cfg.system.initial_velocity};
  for (int p : cfg.pce.degrees) {
    const PropagationResult r = propagate(cfg.system, cfg.schedule, p, cfg.pce.truncation, input, iopt);
    PceConvergenceEntry e{p, pce_moments(r), 0.0, 0.0};
    std::tie(e.e_vres, e.var_vres) = pce_residual_moments(r.interval2.final_a(), r.interval2.final_b(),
                                                          r.interval2.basis, cfg.energy, cfg.schedule);
    e.moments.e_vres = e.e_vres;
    e.moments.var_vres = e.var_vres;
    const std::string tag = "P" + std::to_string(p);
    {
      auto os = out.open("pce_moments_" + tag + ".csv");
      io::write_moments_csv(os, e.moments);
    }
    out.write_json("pce_summary_" + tag + ".json", io::moment_summary(e.moments, cfg.mc.config.seed, 0, p));
    if (cfg.pce.write_coefficients) {
      for (const PceTrajectory* tr : {&r.interval1, &r.interval2}) {
        const std::string name = "pce_coeffs_" + tag + "_interval" + std::to_string(tr->interval_tag);
        auto os = out.open(name + ".csv");
        io::write_trajectory_csv(os, *tr);
        out.write_json(name + ".json", io::trajectory_header(*tr, cfg.schedule));
      }
    }
    res.entries.push_back(std::move(e));
  }
  const double dt = 2.0 * std::numbers::pi / cfg.schedule.mean_freq / cfg.pce.samples_per_period;
  const std::vector<double> grid = uniform_grid(0.0, cfg.schedule.t2, dt);
  res.reference = mc_moment_trajectory(cfg.mc.config, cfg.schedule, unshaped(), cfg.level, grid, initial);
  res.reference_vres = mc_residual_moments(cfg.mc.config, cfg.schedule, unshaped(), cfg.level, cfg.energy, initial);
  res.reference.e_vres = res.reference_vres.mean;
  res.reference.var_vres = res.reference_vres.variance;
  {
    auto os = out.open("mc_reference_moments.csv");
    io::write_moments_csv(os, res.reference);
  }
  out.write_json("mc_reference_summary.json",
                 io::moment_summary(res.reference, cfg.mc.config.seed, cfg.mc.config.sample_count, -1));
  return res;
}

// ---------------------------------------------------------------------------
// timing
// ---------------------------------------------------------------------------

struct TimingResult {
  std::vector<std::pair<int, double>> pce_seconds;  // (degree, best-of-repeats wall time)
  std::vector<std::vector<double>> pce_all;         // every repeat, per degree
  double mc_seconds = 0.0;
  std::vector<double> mc_all;
  std::size_t mc_samples = 0;
  Sampler sampler = Sampler::Rk45;
};

[[nodiscard]] inline nlohmann::json to_json_value(const TimingResult& t) {
  nlohmann::json pce = nlohmann::json::array();
  for (std::size_t i = 0; i < t.pce_seconds.size(); ++i)
    pce.push_back({{"degree", t.pce_seconds[i].first}, {"seconds", t.pce_seconds[i].second}, {"repeats", t.pce_all[i]}});
  nlohmann::json j{{"pce", pce},
                   {"mc", {{"samples", t.mc_samples}, {"sampler", to_string(t.sampler)}, {"seconds", t.mc_seconds}, {"repeats", t.mc_all}}}};
  if (!t.pce_seconds.empty()) j["mc_over_pce_max_degree"] = t.mc_seconds / t.pce_seconds.back().second;
  return j;
}

/// Wall time of a full chaos construction (both intervals plus residual moments) per degree, and of MC.
[[nodiscard]] inline TimingResult run_timing(const ExperimentConfig& cfg, OutputDir& out) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };
  TimingResult t;
  t.sampler = cfg.timing.sampler;
  t.mc_samples = cfg.timing.mc_samples;
  const ShapedInput input{unshaped(), cfg.level};
  const IntegrationOptions iopt{cfg.pce.tol, cfg.pce.samples_per_period};
  std::vector<int> degrees = cfg.timing.degrees;
  std::sort(degrees.begin(), degrees.end());
  for (int p : degrees) {
    std::vector<double> all;
    for (int r = 0; r < cfg.timing.repeats; ++r) {
      const auto t0 = clock::now();
      const PropagationResult res = propagate(cfg.system, cfg.schedule, p, cfg.pce.truncation, input, iopt);
      (void)pce_residual_moments(res.interval2.final_a(), res.interval2.final_b(), res.interval2.basis, cfg.energy,
                                 cfg.schedule);
      all.push_back(seconds(t0, clock::now()));
    }
    t.pce_seconds.emplace_back(p, *std::min_element(all.begin(), all.end()));
    t.pce_all.push_back(std::move(all));
  }
  McConfig mc = cfg.mc.config;
  mc.sample_count = cfg.timing.mc_samples;
  mc.sampler = cfg.timing.sampler;
  for (int r = 0; r < cfg.timing.repeats; ++r) {
    const auto t0 = clock::now();
    (void)mc_residual_moments(mc, cfg.schedule, unshaped(), cfg.level, cfg.energy);
    t.mc_all.push_back(seconds(t0, clock::now()));
  }
  t.mc_seconds = *std::min_element(t.mc_all.begin(), t.mc_all.end());
  out.write_json("timing.json", to_json_value(t));
  return t;
}

// ---------------------------------------------------------------------------
// compare-shapers
// ---------------------------------------------------------------------------

struct ShaperColumn {
  std::string name;
  ShaperDesign design;
  double e_pce = 0.0;
  double var_pce = 0.0;
  SampleStatistics mc;
  std::optional<OptimizationResult> optimization;
};

struct CompareShapersResult {
  std::vector<ShaperColumn> columns;  // u=1, non-robust, robust, GSA Xi1, GSA Xi2

  [[nodiscard]] const ShaperColumn& column(const std::string& name) const {
    for (const auto& c : columns)
      if (c.name == name) return c;
    throw ConfigurationError("no column '" + name + "'");
  }
};

/// GSA design for one objective: taken from the config when given, otherwise optimised from the robust seed.
[[nodiscard]] inline std::pair<ShaperDesign, std::optional<OptimizationResult>> gsa_design(const ExperimentConfig& cfg,
                                                                                         ObjectiveTarget target) {
  const std::optional<ShaperDesign>& given =
      target == ObjectiveTarget::Xi1_ExpectedResidual ? cfg.gsa.xi1_design : cfg.gsa.xi2_design;
  if (given) {
    validate(*given);
    return {*given, std::nullopt};
  }
  const ShaperDesign seed = design_robust(cfg.damping, cfg.shaper_freq());
  const double t_f = cfg.gsa.t_f.value_or(seed.final_delay());
  ShaperDesign init = seed;
  if (cfg.gsa.n_delays != 2 || std::abs(t_f - seed.final_delay()) > 1e-12 * t_f) {
    // uniform staircase ending at t_f
    init.amplitudes.assign(cfg.gsa.n_delays + 1, 1.0 / static_cast<double>(cfg.gsa.n_delays + 1));
    init.delays.resize(cfg.gsa.n_delays);
    for (std::size_t i = 0; i < cfg.gsa.n_delays; ++i)
      init.delays[i] = t_f * static_cast<double>(i + 1) / static_cast<double>(cfg.gsa.n_delays);
    init.kind = ShaperKind::Gsa;
  }
  ObjectiveSpec obj{target, cfg.evaluation()};
  GsaOptions opt;
  opt.nelder_mead = cfg.gsa.nelder_mead;
  std::vector<ShaperDesign> inits{init};
  for (const auto& f : cfg.gsa.perturbations) inits.push_back(perturb_amplitudes(init, f));
  std::vector<OptimizationResult> results =
      inits.size() == 1 ? std::vector<OptimizationResult>{optimize_gsa(obj, cfg.gsa.n_delays, t_f, init, opt)}
                        : optimize_gsa_multistart(obj, cfg.gsa.n_delays, t_f, inits, opt);
  return {results.front().design, results.front()};
}

[[nodiscard]] inline CompareShapersResult run_compare_shapers(const ExperimentConfig& cfg, OutputDir& out) {
  cfg.validate();
  CompareShapersResult res;
  const double wd = cfg.shaper_freq();
  res.columns.push_back({"u1", unshaped(), 0, 0, {}, std::nullopt});
  res.columns.push_back({"nonrobust", design_nonrobust(cfg.damping, wd), 0, 0, {}, std::nullopt});
  res.columns.push_back({"robust", design_robust(cfg.damping, wd), 0, 0, {}, std::nullopt});
  for (ObjectiveTarget target : {ObjectiveTarget::Xi1_ExpectedResidual, ObjectiveTarget::Xi2_ResidualVariance}) {
    auto [d, opt] = gsa_design(cfg, target);
    res.columns.push_back({target == ObjectiveTarget::Xi1_ExpectedResidual ? "gsa_xi1" : "gsa_xi2", d, 0, 0, {}, opt});
  }
  const EvaluationConfig ev = cfg.evaluation();
  const PointState initial{cfg.system.initial_position, cfg.system.initial_velocity};
  for (ShaperColumn& c : res.columns) {
    std::tie(c.e_pce, c.var_pce) = residual_statistics(c.design, ev, cfg.pce.degree);
    c.mc = mc_residual_moments(cfg.mc.config, cfg.schedule, c.design, cfg.level, cfg.energy, initial);
  }

  {
    auto os = out.open("residual_energy.csv");
    os << "shaper,e_pce,var_pce,e_mc,var_mc,stderr_e_mc,stderr_var_mc\n";
    for (const ShaperColumn& c : res.columns) {
      os << c.name;
      for (double v : {c.e_pce, c.var_pce, c.mc.mean, c.mc.variance, c.mc.stderr_mean, c.mc.stderr_variance})
        os << ',' << io::fmt(v);
      os << '\n';
    }
  }
  {
    auto os = out.open("shaper_parameters.csv");
    os << "shaper,index,amplitude,delay\n";
    for (const ShaperColumn& c : res.columns) {
      for (std::size_t i = 0; i < c.design.amplitudes.size(); ++i)
        os << c.name << ',' << i << ',' << io::fmt(c.design.amplitudes[i]) << ','
           << io::fmt(i == 0 ? 0.0 : c.design.delays[i - 1]) << '\n';
    }
  }
  nlohmann::json j = nlohmann::json::array();
  for (const ShaperColumn& c : res.columns) {
    nlohmann::json col{{"name", c.name},
                       {"design", c.design},
                       {"pce", {{"degree", cfg.pce.degree}, {"e_vres", c.e_pce}, {"var_vres", c.var_pce}}},
                       {"mc",
                        {{"sample_count", c.mc.count},
                         {"seed", cfg.mc.config.seed},
                         {"e_vres", c.mc.mean},
                         {"var_vres", c.mc.variance},
                         {"stderr_e", c.mc.stderr_mean},
                         {"stderr_var", c.mc.stderr_variance}}}};
    if (c.optimization) col["optimization"] = *c.optimization;
    j.push_back(col);
  }
  out.write_json("compare_shapers.json", j);
  return res;
}

// ---------------------------------------------------------------------------
// heatmap
// ---------------------------------------------------------------------------

struct HeatmapCell {
  double omega_n, omega_m;
  double v_robust, v_gsa1, v_gsa2;
};

struct HeatmapResult {
  int grid = 0;
  std::vector<HeatmapCell> cells;  // omega_m outer, omega_n inner
  ShaperDesign robust, gsa1, gsa2;
};

[[nodiscard]] inline std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1.0);
  return v;
}

/// Per-realisation residual energy at t2 on an (omega_n, omega_m) grid; dV = V_robust - V_gsa.
[[nodiscard]] inline HeatmapResult run_heatmap(const ExperimentConfig& cfg, OutputDir& out) {
  cfg.validate();
  HeatmapResult res;
  res.grid = cfg.heatmap_grid;
  res.robust = design_robust(cfg.damping, cfg.shaper_freq());
  res.gsa1 = gsa_design(cfg, ObjectiveTarget::Xi1_ExpectedResidual).first;
  res.gsa2 = gsa_design(cfg, ObjectiveTarget::Xi2_ResidualVariance).first;
  const auto wn = linspace(cfg.schedule.interval1.lb, cfg.schedule.interval1.ub, cfg.heatmap_grid);
  const auto wm = linspace(cfg.schedule.interval2.lb, cfg.schedule.interval2.ub, cfg.heatmap_grid);
  const PointState initial{cfg.system.initial_position, cfg.system.initial_velocity};
  auto energy = [&](double a, double b, const ShaperDesign& d) {
    const PointState s = closed_form_trajectory(a, b, cfg.schedule, d, cfg.level, cfg.schedule.t2, initial);
    return residual_energy(s.x, s.v, b, cfg.energy);
  };
  auto os = out.open("heatmap.csv");
  io::write_header(os, {"omega_n", "omega_m", "v_robust", "v_gsa_xi1", "v_gsa_xi2", "dv_xi1", "dv_xi2"});
  for (double b : wm) {
    for (double a : wn) {
      HeatmapCell c{a, b, energy(a, b, res.robust), energy(a, b, res.gsa1), energy(a, b, res.gsa2)};
      io::write_row(os, {a, b, c.v_robust, c.v_gsa1, c.v_gsa2, c.v_robust - c.v_gsa1, c.v_robust - c.v_gsa2});
      res.cells.push_back(c);
    }
  }
  out.write_json("heatmap_designs.json", {{"robust", res.robust}, {"gsa_xi1", res.gsa1}, {"gsa_xi2", res.gsa2}});
  return res;
}

}  // namespace pcshaper
