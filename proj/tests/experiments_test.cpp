#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "pcshaper/experiments.hpp"

using namespace pcshaper;
namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pcshaper_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.apply_reduced();
  c.mc.config.sample_count = 2000;
  c.mc.ladder = {100, 2000};
  c.pce.degree = 6;
  c.pce.degrees = {4};
  c.gsa.search_degree = 4;
  c.gsa.nelder_mead.max_evaluations = 20;
  c.timing.degrees = {2};
  c.timing.mc_samples = 20;
  c.timing.repeats = 1;
  c.heatmap_grid = 3;
  return c;
}

}  // namespace

TEST(McConvergence, SingleRungGivesOneRow) {
  ExperimentConfig c = small_config();
  c.mc.ladder = {10};
  OutputDir out(scratch("mc_single"));
  const auto rows = run_mc_convergence(c, out);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].stats.count, 10u);
  const std::string csv = slurp(out.root() / "mc_convergence.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(McConvergence, BitIdenticalOnRerunAndSeedSensitive) {
  const ExperimentConfig c = small_config();
  OutputDir a(scratch("mc_a")), b(scratch("mc_b"));
  (void)run_mc_convergence(c, a);
  (void)run_mc_convergence(c, b);
  EXPECT_EQ(slurp(a.root() / "mc_convergence.csv"), slurp(b.root() / "mc_convergence.csv"));
  ExperimentConfig other = c;
  other.mc.config.seed += 1;
  OutputDir d(scratch("mc_d"));
  (void)run_mc_convergence(other, d);
  EXPECT_NE(slurp(a.root() / "mc_convergence.csv"), slurp(d.root() / "mc_convergence.csv"));
}

TEST(McConvergence, CsvRoundTripsAtFullPrecision) {
  const ExperimentConfig c = small_config();
  OutputDir out(scratch("mc_rt"));
  const auto rows = run_mc_convergence(c, out);
  std::ifstream in(out.root() / "mc_convergence.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "sample_size,e_vres,var_vres,stderr_e,stderr_var");
  for (const auto& r : rows) {
    std::getline(in, line);
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    ASSERT_EQ(v.size(), 5u);
    EXPECT_EQ(v[1], r.stats.mean);
    EXPECT_EQ(v[2], r.stats.variance);
  }
}

TEST(PceConvergence, DeterministicCurvesAtDegreeZero) {
  ExperimentConfig c = small_config();
  c.schedule = deterministic_schedule(kPi, 10.0, 20.0);
  c.pce.degrees = {0};
  c.mc.config.sample_count = 10;
  OutputDir out(scratch("pce_det"));
  const auto r = run_pce_convergence(c, out);
  ASSERT_EQ(r.entries.size(), 1u);
  const MomentReport& m = r.entries[0].moments;
  for (std::size_t k = 0; k < m.size(); ++k) {
    EXPECT_NEAR(m.mean_x[k], 1.0 - std::cos(kPi * m.times[k]), 1e-9);
    EXPECT_EQ(m.var_x[k], 0.0);
  }
  EXPECT_TRUE(fs::exists(out.root() / "pce_moments_P0.csv"));
  EXPECT_TRUE(fs::exists(out.root() / "mc_reference_moments.csv"));
}

TEST(PceConvergence, ErrorAgainstSamplingFallsWithDegreeAtReducedScale) {
  ExperimentConfig c = small_config();
  // below roughly P = 24 the error at t2 = 20 oscillates with degree, so the ladder starts past that
  c.pce.degrees = {16, 24, 30};
  c.mc.config.sample_count = 100'000;
  c.pce.write_coefficients = true;
  OutputDir out(scratch("pce_conv"));
  const auto r = run_pce_convergence(c, out);
  double prev = 1e300;
  for (const auto& e : r.entries) {
    const double err = std::abs(e.e_vres - r.reference_vres.mean);
    EXPECT_LT(err, prev) << "P=" << e.degree << " err=" << err;
    prev = err;
  }
  EXPECT_LT(prev, 0.005 * r.reference_vres.mean);
  EXPECT_TRUE(fs::exists(out.root() / "pce_coeffs_P16_interval2.csv"));
  EXPECT_TRUE(fs::exists(out.root() / "pce_coeffs_P16_interval2.json"));
}

TEST(Timing, ReportsEveryDegreeAndRatio) {
  ExperimentConfig c = small_config();
  c.timing.degrees = {20, 2};
  OutputDir out(scratch("timing"));
  const TimingResult t = run_timing(c, out);
  ASSERT_EQ(t.pce_seconds.size(), 2u);
  EXPECT_EQ(t.pce_seconds[0].first, 2);
  EXPECT_LT(t.pce_seconds[0].second, t.pce_seconds[1].second);
  EXPECT_GT(t.mc_seconds, 0.0);
  const auto j = nlohmann::json::parse(slurp(out.root() / "timing.json"));
  EXPECT_TRUE(j.contains("mc_over_pce_max_degree"));
  EXPECT_EQ(j.at("mc").at("sampler"), "Rk45");
}

TEST(CompareShapers, ZeroWidthBoundsCancelResidualVibration) {
  ExperimentConfig c = small_config();
  c.schedule = deterministic_schedule(kPi, 10.0, 20.0);
  c.mc.config.sample_count = 50;
  OutputDir out(scratch("cmp_det"));
  const auto r = run_compare_shapers(c, out);
  ASSERT_EQ(r.columns.size(), 5u);
  EXPECT_GT(r.column("u1").e_pce, 0.1);
  for (const char* name : {"nonrobust", "robust", "gsa_xi1", "gsa_xi2"}) {
    EXPECT_LT(r.column(name).e_pce, 1e-12) << name;
    EXPECT_LT(r.column(name).mc.mean, 1e-12) << name;
  }
}

TEST(CompareShapers, WritesBothGsaParameterVectors) {
  ExperimentConfig c = small_config();
  c.mc.config.sample_count = 200;
  OutputDir out(scratch("cmp"));
  const auto r = run_compare_shapers(c, out);
  EXPECT_TRUE(r.column("gsa_xi1").optimization.has_value());
  EXPECT_TRUE(r.column("gsa_xi2").optimization.has_value());
  const auto j = nlohmann::json::parse(slurp(out.root() / "compare_shapers.json"));
  ASSERT_EQ(j.size(), 5u);
  EXPECT_EQ(j[3].at("name"), "gsa_xi1");
  EXPECT_EQ(j[3].at("design").at("amplitudes").size(), 3u);
  EXPECT_EQ(j[4].at("design").at("delays").size(), 2u);
  const std::string params = slurp(out.root() / "shaper_parameters.csv");
  EXPECT_NE(params.find("gsa_xi2,2,"), std::string::npos);
}

TEST(CompareShapers, GivenDesignsSkipTheOptimiser) {
  ExperimentConfig c = small_config();
  c.mc.config.sample_count = 20;
  ShaperDesign g = design_robust(0.0, kPi);
  g.kind = ShaperKind::Gsa;
  c.gsa.xi1_design = g;
  c.gsa.xi2_design = g;
  OutputDir out(scratch("cmp_given"));
  const auto r = run_compare_shapers(c, out);
  EXPECT_FALSE(r.column("gsa_xi1").optimization.has_value());
  EXPECT_EQ(r.column("gsa_xi1").e_pce, r.column("robust").e_pce);
}

TEST(Heatmap, SingleCellAndNominalPair) {
  ExperimentConfig c = small_config();
  c.schedule = default_schedule();
  ShaperDesign g = design_robust(0.0, kPi);
  g.amplitudes = {0.26, 0.48, 0.26};
  g.kind = ShaperKind::Gsa;
  c.gsa.xi1_design = g;
  c.gsa.xi2_design = g;
  c.heatmap_grid = 1;
  OutputDir one(scratch("heat1"));
  const auto r1 = run_heatmap(c, one);
  ASSERT_EQ(r1.cells.size(), 1u);
  EXPECT_NEAR(r1.cells[0].omega_n, kPi, 1e-15);
  EXPECT_NEAR(r1.cells[0].omega_m, kPi, 1e-15);
  EXPECT_LT(r1.cells[0].v_robust, 1e-20);

  c.heatmap_grid = 3;
  OutputDir three(scratch("heat3"));
  const auto r3 = run_heatmap(c, three);
  ASSERT_EQ(r3.cells.size(), 9u);
  EXPECT_LT(r3.cells[4].v_robust, 1e-20);  // centre of the grid is the nominal pair
  const std::string csv = slurp(three.root() / "heatmap.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);
}

TEST(Config, ShippedConfigsLoadAndValidate) {
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(PCSHAPER_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    const ExperimentConfig c = load_config(entry.path());
    EXPECT_NO_THROW(c.validate()) << entry.path();
    EXPECT_DOUBLE_EQ(c.schedule.mean_freq, kPi);
    ++n;
  }
  EXPECT_GE(n, 5u);
}

TEST(Config, ReducedFlagAndRoundTrip) {
  ExperimentConfig c;
  c.apply_reduced();
  EXPECT_EQ(c.schedule.t1, 10.0);
  EXPECT_EQ(c.schedule.t2, 20.0);
  EXPECT_EQ(c.pce.degree, 12);
  EXPECT_EQ(c.pce.degrees, (std::vector<int>{10}));
  const nlohmann::json j = c;
  const auto back = j.get<ExperimentConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
}

TEST(Config, Errors) {
  const fs::path dir = scratch("cfg_err");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW((void)load_config(dir / "bad.json"), ConfigurationError);
  EXPECT_THROW((void)load_config(dir / "missing.json"), ConfigurationError);
  std::ofstream(dir / "wrong.json") << R"({"pce": {"degree": 99}})";
  EXPECT_THROW(load_config(dir / "wrong.json").validate(), ConfigurationError);
  std::ofstream(dir / "trunc.json") << R"({"pce": {"truncation": "Hyperbolic"}})";
  EXPECT_THROW((void)load_config(dir / "trunc.json"), ConfigurationError);
}

TEST(Manifest, CapturesConfigAndArtifacts) {
  const ExperimentConfig c = small_config();
  OutputDir out(scratch("manifest"));
  (void)run_mc_convergence(c, out);
  out.write_manifest("mc-convergence", c, {{"k", 1}});
  const auto m = nlohmann::json::parse(slurp(out.root() / "manifest.json"));
  EXPECT_EQ(m.at("command"), "mc-convergence");
  EXPECT_EQ(m.at("version"), kVersion);
  EXPECT_EQ(m.at("seed"), c.mc.config.seed);
  EXPECT_EQ(m.at("artifacts"), nlohmann::json::array({"mc_convergence.csv"}));
  EXPECT_EQ(m.at("config").at("schedule").at("t2"), 20.0);
}
