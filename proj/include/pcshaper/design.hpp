/**
 * @file design.hpp
 * @brief Optimised (GSA) time-delay filters: minimise E[V_res] or Var(V_res) of the chaos surrogate.
 *
 * Constraints: amplitudes on the unit simplex, 0 < T_1 < ... < T_N = t_f.
 * The search runs Nelder-Mead in an unconstrained space: a softmax over the
 * amplitude logits, and a softmax over the N delay gaps scaled by t_f, so every
 * trial point is feasible by construction.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <future>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pcshaper/basis.hpp"
#include "pcshaper/dynamics.hpp"
#include "pcshaper/errors.hpp"
#include "pcshaper/shaper.hpp"
#include "pcshaper/uq.hpp"

namespace pcshaper {

enum class ObjectiveTarget { Xi1_ExpectedResidual, Xi2_ResidualVariance };

[[nodiscard]] inline std::string to_string(ObjectiveTarget t) {
  return t == ObjectiveTarget::Xi1_ExpectedResidual ? "Xi1_ExpectedResidual" : "Xi2_ResidualVariance";
}

[[nodiscard]] inline ObjectiveTarget objective_target_from_string(const std::string& s) {
  if (s == "Xi1_ExpectedResidual" || s == "xi1" || s == "mean") return ObjectiveTarget::Xi1_ExpectedResidual;
  if (s == "Xi2_ResidualVariance" || s == "xi2" || s == "variance") return ObjectiveTarget::Xi2_ResidualVariance;
  throw ConfigurationError("unknown objective target '" + s + "'");
}

/// Everything needed to turn a shaper design into residual-energy statistics at t2.
struct EvaluationConfig {
  SystemParams params{};
  UncertaintySchedule schedule = default_schedule();
  int degree = 30;         // final evaluation
  int search_degree = 12;  // evaluations inside the optimiser
  Truncation truncation = Truncation::TotalDegree;
  double tol = 1e-12;
  double level = 1.0;  // base command u
  ResidualEnergySpec energy{};

  void validate() const {
    params.validate();
    schedule.validate();
    energy.validate();
    if (degree < 0 || degree > kMaxBasisDegree || search_degree < 0 || search_degree > kMaxBasisDegree) {
      throw ConfigurationError("EvaluationConfig: degree out of range");
    }
    if (!(tol > 0.0)) throw ConfigurationError("EvaluationConfig: tol must be positive");
  }
};

struct ObjectiveSpec {
  ObjectiveTarget target = ObjectiveTarget::Xi1_ExpectedResidual;
  EvaluationConfig evaluation{};
};

/// (E[V_res], Var(V_res)) of the chaos surrogate at t2 for a given design and degree.
[[nodiscard]] inline std::pair<double, double> residual_statistics(const ShaperDesign& design,
                                                                   const EvaluationConfig& cfg, int degree) {
  const PropagationResult r = propagate(cfg.params, cfg.schedule, degree, cfg.truncation,
                                        ShapedInput{design, cfg.level}, IntegrationOptions{cfg.tol, 20});
  return pce_residual_moments(r.interval2.final_a(), r.interval2.final_b(), r.interval2.basis, cfg.energy,
                              cfg.schedule);
}

[[nodiscard]] inline double evaluate_objective(const ShaperDesign& design, const ObjectiveSpec& objective,
                                               int degree) {
  const auto [e, v] = residual_statistics(design, objective.evaluation, degree);
  return objective.target == ObjectiveTarget::Xi1_ExpectedResidual ? e : v;
}

/// Objective at the full evaluation degree.
[[nodiscard]] inline double evaluate_objective(const ShaperDesign& design, const ObjectiveSpec& objective) {
  return evaluate_objective(design, objective, objective.evaluation.degree);
}

// ---------------------------------------------------------------------------
// Nelder-Mead
// ---------------------------------------------------------------------------

struct NelderMeadOptions {
  double initial_step = 0.1;
  double diameter_tol = 1e-6;
  std::size_t max_evaluations = 500;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
[[nodiscard]] inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                                  std::vector<double> x0, const NelderMeadOptions& opt = {}) {
  const std::size_t n = x0.size();
  NelderMeadResult res;
  if (n == 0) {
    res.x = x0;
    res.value = f(x0);
    res.evaluations = 1;
    res.converged = true;
    return res;
  }
  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += opt.initial_step;
  for (std::size_t i = 0; i <= n; ++i) {
    vals[i] = f(pts[i]);
    ++res.evaluations;
  }

  auto diameter = [&] {
    double d = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s = std::max(s, std::abs(pts[i][k] - pts[0][k]));
      d = std::max(d, s);
    }
    return d;
  };

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::vector<std::vector<double>> p2(n + 1);
    std::vector<double> v2(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      p2[i] = pts[order[i]];
      v2[i] = vals[order[i]];
    }
    pts.swap(p2);
    vals.swap(v2);
  };

  auto along = [&](const std::vector<double>& c, double coef) {
    std::vector<double> p(n);
    for (std::size_t k = 0; k < n; ++k) p[k] = c[k] + coef * (pts[n][k] - c[k]);
    return p;
  };

  // every evaluation inside the loop goes through here so the budget is never exceeded
  auto eval = [&](const std::vector<double>& p) -> std::optional<double> {
    if (res.evaluations >= opt.max_evaluations) return std::nullopt;
    ++res.evaluations;
    return f(p);
  };

  sort_simplex();
  while (res.evaluations < opt.max_evaluations) {
    if (diameter() < opt.diameter_tol) {
      res.converged = true;
      break;
    }
    ++res.iterations;
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / static_cast<double>(n);

    const std::vector<double> xr = along(centroid, -1.0);
    const double fr = *eval(xr);
    if (fr < vals[0]) {
      const std::vector<double> xe = along(centroid, -2.0);
      const std::optional<double> fe = eval(xe);
      if (fe && *fe < fr) {
        pts[n] = xe;
        vals[n] = *fe;
      } else {
        pts[n] = xr;
        vals[n] = fr;
      }
    } else if (fr < vals[n - 1]) {
      pts[n] = xr;
      vals[n] = fr;
    } else {
      const bool outside = fr < vals[n];
      const std::vector<double> xc = along(centroid, outside ? -0.5 : 0.5);
      const std::optional<double> fc = eval(xc);
      if (!fc) {
        if (outside) {
          pts[n] = xr;
          vals[n] = fr;
        }
      } else if (*fc < (outside ? fr : vals[n])) {
        pts[n] = xc;
        vals[n] = *fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          std::vector<double> shrunk(n);
          for (std::size_t k = 0; k < n; ++k) shrunk[k] = pts[0][k] + 0.5 * (pts[i][k] - pts[0][k]);
          const std::optional<double> fs = eval(shrunk);
          if (!fs) break;
          pts[i] = std::move(shrunk);
          vals[i] = *fs;
        }
      }
    }
    sort_simplex();
  }
  res.x = pts[0];
  res.value = vals[0];
  return res;
}

// ---------------------------------------------------------------------------
// Feasible parameterisation
// ---------------------------------------------------------------------------

/**
 * Maps between a feasible N-delay design with T_N = t_f and a vector of
 * 2N - 1 unconstrained coordinates: N amplitude logits relative to A_0 followed
 * by N - 1 gap logits relative to the first gap T_1.
 */
class DesignParameterization {
 public:
  DesignParameterization(std::size_t n_delays, double t_final) : n_(n_delays), t_final_(t_final) {
    if (n_delays < 1) throw ConfigurationError("DesignParameterization: need at least one delay");
    if (!(t_final > 0.0)) throw ConfigurationError("DesignParameterization: t_f must be positive");
  }

  [[nodiscard]] std::size_t dimension() const noexcept { return 2 * n_ - 1; }

  [[nodiscard]] ShaperDesign decode(const std::vector<double>& z) const {
    ShaperDesign d;
    d.kind = ShaperKind::Gsa;
    d.amplitudes = softmax_with_pinned_zero(z.begin(), n_);
    const std::vector<double> gaps = softmax_with_pinned_zero(z.begin() + static_cast<std::ptrdiff_t>(n_), n_ - 1);
    d.delays.resize(n_);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      acc += gaps[i];
      d.delays[i] = t_final_ * acc;
    }
    d.delays.back() = t_final_;
    // normalise away the last ulp so the sum is exactly representable as 1
    double sum = 0.0;
    for (double a : d.amplitudes) sum += a;
    for (double& a : d.amplitudes) a /= sum;
    return d;
  }

  [[nodiscard]] std::vector<double> encode(const ShaperDesign& d) const {
    if (d.delays.size() != n_) throw ConfigurationError("DesignParameterization: wrong number of delays");
    constexpr double floor = 1e-300;
    std::vector<double> z;
    z.reserve(dimension());
    const double a0 = std::max(d.amplitudes[0], floor);
    for (std::size_t i = 1; i <= n_; ++i) z.push_back(std::log(std::max(d.amplitudes[i], floor) / a0));
    std::vector<double> gaps(n_);
    double prev = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      gaps[i] = d.delays[i] - prev;
      prev = d.delays[i];
    }
    for (std::size_t i = 1; i < n_; ++i) z.push_back(std::log(gaps[i] / gaps[0]));
    return z;
  }

 private:
  /// softmax over (0, z[0], ..., z[count-1]), i.e. count + 1 outputs.
  template <class It>
  [[nodiscard]] static std::vector<double> softmax_with_pinned_zero(It first, std::size_t count) {
    std::vector<double> logits{0.0};
    logits.insert(logits.end(), first, first + static_cast<std::ptrdiff_t>(count));
    return normalise(logits);
  }

  [[nodiscard]] static std::vector<double> normalise(const std::vector<double>& logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      out[i] = std::exp(logits[i] - mx);
      sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
  }

  std::size_t n_;
  double t_final_;
};

// ---------------------------------------------------------------------------
// GSA optimisation
// ---------------------------------------------------------------------------

struct OptimizationResult {
  ShaperDesign design;
  double objective_value = 0.0;   // at the full evaluation degree
  double initial_objective = 0.0; // init design, full degree
  double search_objective = 0.0;  // best value seen by the optimiser at search degree
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  bool kept_initial = false;      // full-degree re-check did not improve on the seed
  ShaperDesign initial_design;
  ObjectiveSpec objective;
};

struct GsaOptions {
  NelderMeadOptions nelder_mead{};
};

/**
 * Local minimiser of the selected residual-energy statistic over feasible
 * N-delay filters with T_N = t_f. The search uses objective.evaluation.search_degree;
 * the optimum and the seed are then re-evaluated at the full degree and the
 * better of the two is returned, so the result is never worse than the seed.
 */
[[nodiscard]] inline OptimizationResult optimize_gsa(const ObjectiveSpec& objective, std::size_t n_delays, double t_f,
                                                     const ShaperDesign& init, const GsaOptions& options = {}) {
  objective.evaluation.validate();
  try {
    validate(init, t_f * (1.0 + 1e-12));
  } catch (const ConfigurationError& e) {
    throw ConfigurationError(std::string("optimize_gsa: infeasible initial design: ") + e.what());
  }
  if (init.delays.size() != n_delays) throw ConfigurationError("optimize_gsa: initial design has wrong N");
  if (std::abs(init.final_delay() - t_f) > 1e-12 * std::max(1.0, t_f)) {
    throw ConfigurationError("optimize_gsa: initial design must end at t_f");
  }

  const DesignParameterization param(n_delays, t_f);
  const int search_degree = objective.evaluation.search_degree;
  auto f = [&](const std::vector<double>& z) { return evaluate_objective(param.decode(z), objective, search_degree); };
  const NelderMeadResult nm = nelder_mead(f, param.encode(init), options.nelder_mead);

  OptimizationResult out;
  out.objective = objective;
  out.initial_design = init;
  out.iterations = nm.iterations;
  out.evaluations = nm.evaluations;
  out.converged = nm.converged;
  out.search_objective = nm.value;
  out.initial_objective = evaluate_objective(init, objective);

  ShaperDesign best = param.decode(nm.x);
  best.damping = init.damping;
  best.design_freq = init.design_freq;
  const double best_value = evaluate_objective(best, objective);
  if (best_value <= out.initial_objective) {
    out.design = best;
    out.objective_value = best_value;
  } else {
    out.design = init;
    out.design.kind = ShaperKind::Gsa;
    out.objective_value = out.initial_objective;
    out.kept_initial = true;
  }
  return out;
}

/// Independent runs from several seeds (in parallel); returns all results, best first.
[[nodiscard]] inline std::vector<OptimizationResult> optimize_gsa_multistart(const ObjectiveSpec& objective,
                                                                             std::size_t n_delays, double t_f,
                                                                             const std::vector<ShaperDesign>& inits,
                                                                             const GsaOptions& options = {}) {
  std::vector<std::future<OptimizationResult>> jobs;
  jobs.reserve(inits.size());
  for (const ShaperDesign& init : inits) {
    jobs.push_back(std::async(std::launch::async, [&, init] { return optimize_gsa(objective, n_delays, t_f, init, options); }));
  }
  std::vector<OptimizationResult> results;
  results.reserve(jobs.size());
  for (auto& j : jobs) results.push_back(j.get());
  std::stable_sort(results.begin(), results.end(),
                   [](const OptimizationResult& a, const OptimizationResult& b) { return a.objective_value < b.objective_value; });
  return results;
}

/// Perturbs the amplitudes of a seed design multiplicatively and renormalises.
[[nodiscard]] inline ShaperDesign perturb_amplitudes(const ShaperDesign& d, const std::vector<double>& factors) {
  ShaperDesign out = d;
  double sum = 0.0;
  for (std::size_t i = 0; i < out.amplitudes.size(); ++i) {
    out.amplitudes[i] *= i < factors.size() ? factors[i] : 1.0;
    sum += out.amplitudes[i];
  }
  for (double& a : out.amplitudes) a /= sum;
  return out;
}

// ---------------------------------------------------------------------------
// Serialisation
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const EvaluationConfig& c) {
  j = nlohmann::json{{"params", c.params},
                     {"schedule", c.schedule},
                     {"degree", c.degree},
                     {"search_degree", c.search_degree},
                     {"truncation", to_string(c.truncation)},
                     {"tol", c.tol},
                     {"level", c.level},
                     {"energy", c.energy}};
}

inline void from_json(const nlohmann::json& j, EvaluationConfig& c) {
  if (j.contains("params")) c.params = j.at("params").get<SystemParams>();
  if (j.contains("schedule")) c.schedule = j.at("schedule").get<UncertaintySchedule>();
  c.degree = j.value("degree", c.degree);
  c.search_degree = j.value("search_degree", c.search_degree);
  if (j.contains("truncation")) c.truncation = truncation_from_string(j.at("truncation").get<std::string>());
  c.tol = j.value("tol", c.tol);
  c.level = j.value("level", c.level);
  if (j.contains("energy")) c.energy = j.at("energy").get<ResidualEnergySpec>();
}

inline void to_json(nlohmann::json& j, const ObjectiveSpec& o) {
  j = nlohmann::json{{"target", to_string(o.target)}, {"evaluation", o.evaluation}};
}

inline void from_json(const nlohmann::json& j, ObjectiveSpec& o) {
  if (j.contains("target")) o.target = objective_target_from_string(j.at("target").get<std::string>());
  if (j.contains("evaluation")) o.evaluation = j.at("evaluation").get<EvaluationConfig>();
}

inline void to_json(nlohmann::json& j, const OptimizationResult& r) {
  j = nlohmann::json{{"design", r.design},
                     {"objective_value", r.objective_value},
                     {"initial_objective", r.initial_objective},
                     {"search_objective", r.search_objective},
                     {"iterations", r.iterations},
                     {"evaluations", r.evaluations},
                     {"converged", r.converged},
                     {"kept_initial", r.kept_initial},
                     {"initial_design", r.initial_design},
                     {"objective", r.objective}};
}

}  // namespace pcshaper
