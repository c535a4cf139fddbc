/**
 * @file uq.hpp
 * @brief Residual-energy statistics: chaos-surrogate moments and the Monte Carlo reference.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pcshaper/basis.hpp"
#include "pcshaper/dynamics.hpp"
#include "pcshaper/errors.hpp"
#include "pcshaper/ode.hpp"
#include "pcshaper/shaper.hpp"

namespace pcshaper {

// ---------------------------------------------------------------------------
// Residual energy
// ---------------------------------------------------------------------------

enum class EnergyForm {
  Nominal,        ///< m/2 v^2 + k/2 (x_f - x)^2 with k = m w^2
  UnitStiffness,  ///< 1/2 v^2 + 1/2 (x - x_f)^2
};

[[nodiscard]] inline std::string to_string(EnergyForm f) {
  return f == EnergyForm::Nominal ? "Nominal" : "UnitStiffness";
}

[[nodiscard]] inline EnergyForm energy_form_from_string(const std::string& s) {
  if (s == "Nominal" || s == "nominal") return EnergyForm::Nominal;
  if (s == "UnitStiffness" || s == "unit" || s == "unit-stiffness") return EnergyForm::UnitStiffness;
  throw ConfigurationError("unknown energy form '" + s + "'");
}

struct ResidualEnergySpec {
  EnergyForm form = EnergyForm::UnitStiffness;
  double target = 1.0;
  double mass = 1.0;

  void validate() const {
    if (!std::isfinite(target)) throw ConfigurationError("ResidualEnergySpec: target must be finite");
    if (!(mass > 0.0)) throw ConfigurationError("ResidualEnergySpec: mass must be positive");
  }
};

/// Residual energy of one realisation; omega is the frequency active at the evaluation time.
[[nodiscard]] inline double residual_energy(double x, double v, double omega, const ResidualEnergySpec& spec) noexcept {
  const double dx = x - spec.target;
  if (spec.form == EnergyForm::UnitStiffness) return 0.5 * v * v + 0.5 * dx * dx;
  return 0.5 * spec.mass * v * v + 0.5 * spec.mass * omega * omega * dx * dx;
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

struct MomentReport {
  std::vector<double> times;
  std::vector<double> mean_x;
  std::vector<double> var_x;
  std::vector<double> mean_v;
  std::vector<double> var_v;
  std::optional<double> e_vres;
  std::optional<double> var_vres;

  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }

  void append(double t, double mx, double vx, double mv, double vv) {
    times.push_back(t);
    mean_x.push_back(mx);
    var_x.push_back(vx);
    mean_v.push_back(mv);
    var_v.push_back(vv);
  }
};

/// Variances within rounding of zero are reported as zero.
[[nodiscard]] inline double clamp_variance(double v) noexcept { return v < 0.0 && v >= -1e-12 ? 0.0 : v; }

/// Mean is coefficient 0; variance is sum_{i>0} c_i^2 <Psi_i^2>.
[[nodiscard]] inline std::pair<double, double> coefficient_moments(std::span<const double> c, const BasisSpec& basis) {
  double var = 0.0;
  const auto& norms = basis.norms();
  for (std::size_t i = 1; i < c.size(); ++i) var += c[i] * c[i] * norms[i];
  return {c[0], clamp_variance(var)};
}

[[nodiscard]] inline MomentReport pce_moments(const PceTrajectory& traj) {
  MomentReport r;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto [mx, vx] = coefficient_moments(traj.coeffs_a[k], traj.basis);
    const auto [mv, vv] = coefficient_moments(traj.coeffs_b[k], traj.basis);
    r.append(traj.times[k], mx, vx, mv, vv);
  }
  return r;
}

/// Moments of both intervals on one time axis; the switch time appears once per interval.
[[nodiscard]] inline MomentReport pce_moments(const PropagationResult& result) {
  MomentReport r = pce_moments(result.interval1);
  const MomentReport r2 = pce_moments(result.interval2);
  for (std::size_t k = 0; k < r2.size(); ++k) r.append(r2.times[k], r2.mean_x[k], r2.var_x[k], r2.mean_v[k], r2.var_v[k]);
  return r;
}

/**
 * E and Var of the residual energy of a chaos surrogate, by tensor
 * Gauss-Legendre quadrature of V and V^2. V has degree 2P per variable
 * (2P + 2 in the active variable for the Nominal form), so 2P + 1 nodes
 * (2P + 3) integrate V^2 exactly. quad_order = 0 selects that minimum.
 */
[[nodiscard]] inline std::pair<double, double> pce_residual_moments(std::span<const double> a, std::span<const double> b,
                                                                    const BasisSpec& basis,
                                                                    const ResidualEnergySpec& spec,
                                                                    const UncertaintySchedule& schedule,
                                                                    int quad_order = 0) {
  spec.validate();
  if (a.size() != basis.size() || b.size() != basis.size()) {
    throw ConfigurationError("pce_residual_moments: coefficient size does not match basis");
  }
  const int p = basis.degree();
  const int required = spec.form == EnergyForm::Nominal ? 2 * p + 3 : 2 * p + 1;
  if (quad_order == 0) quad_order = required;
  if (quad_order < required) {
    throw ConfigurationError("pce_residual_moments: quadrature order " + std::to_string(quad_order) +
                             " cannot integrate V^2 exactly (need " + std::to_string(required) + ")");
  }
  const QuadratureRule rule = gauss_legendre(quad_order);
  const std::size_t nq = rule.size();
  std::vector<std::vector<double>> psi(nq);
  for (std::size_t q = 0; q < nq; ++q) legendre_eval_all(p, rule.nodes[q], psi[q]);

  const bool two = basis.dims() == 2;
  const std::size_t nq2 = two ? nq : 1;
  double e = 0.0;
  double e2 = 0.0;
  for (std::size_t q2 = 0; q2 < nq2; ++q2) {
    for (std::size_t q1 = 0; q1 < nq; ++q1) {
      double x = 0.0;
      double v = 0.0;
      for (std::size_t i = 0; i < basis.size(); ++i) {
        const double phi = psi[q1][basis[i].j1] * (two ? psi[q2][basis[i].j2] : 1.0);
        x += a[i] * phi;
        v += b[i] * phi;
      }
      const double omega = two ? schedule.omega_m(rule.nodes[q2]) : schedule.omega_n(rule.nodes[q1]);
      const double en = residual_energy(x, v, omega, spec);
      const double w = rule.weights[q1] * (two ? rule.weights[q2] : 1.0);
      e += w * en;
      e2 += w * en * en;
    }
  }
  return {e, clamp_variance(e2 - e * e)};
}

// ---------------------------------------------------------------------------
// Closed-form realisations
// ---------------------------------------------------------------------------

struct PointState {
  double x = 0.0;
  double v = 0.0;
};

/// Exact undamped response over dt at constant frequency omega and constant command level.
[[nodiscard]] inline PointState advance_exact(PointState s, double omega, double level, double dt) noexcept {
  const double c = std::cos(omega * dt);
  const double sn = std::sin(omega * dt);
  const double dx = s.x - level;
  return {level + dx * c + s.v / omega * sn, -dx * omega * sn + s.v * c};
}

/// Piecewise-constant segments (start, end, frequency, command level) covering [0, t].
struct Segment {
  double start;
  double end;
  double omega;
  double level;
};

[[nodiscard]] inline std::vector<Segment> realisation_segments(double omega_n, double omega_m,
                                                                const UncertaintySchedule& schedule,
                                                                const ShaperDesign& design, double u, double t) {
  std::vector<double> cuts = switch_times(design);
  cuts.push_back(schedule.t1);
  const std::vector<double> edges = ode::segment_edges(0.0, t, cuts);
  std::vector<Segment> segs;
  segs.reserve(edges.size());
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double mid = 0.5 * (edges[k] + edges[k + 1]);
    segs.push_back({edges[k], edges[k + 1], mid < schedule.t1 ? omega_n : omega_m, shaped_input(design, u, mid)});
  }
  return segs;
}

/**
 * Exact state at time t of the realisation with frequencies (omega_n, omega_m),
 * built segment by segment: x = level + (x0 - level) cos(w dt) + v0/w sin(w dt).
 */
[[nodiscard]] inline PointState closed_form_trajectory(double omega_n, double omega_m,
                                                       const UncertaintySchedule& schedule,
                                                       const ShaperDesign& design, double u, double t,
                                                       PointState initial = {}) {
  if (t < 0.0 || t > schedule.t2 * (1.0 + 1e-15)) throw DomainError("closed_form_trajectory: t outside [0, t2]");
  PointState s = initial;
  if (t == 0.0) return s;
  for (const Segment& seg : realisation_segments(omega_n, omega_m, schedule, design, u, t)) {
    s = advance_exact(s, seg.omega, seg.level, seg.end - seg.start);
  }
  return s;
}

/// Same realisation integrated numerically with Dormand-Prince at rel = abs = tol.
[[nodiscard]] inline PointState rk45_trajectory(double omega_n, double omega_m, const UncertaintySchedule& schedule,
                                                const ShaperDesign& design, double u, double t, double tol,
                                                PointState initial = {}) {
  ode::State y{initial.x, initial.v};
  ode::StepperOptions opt;
  opt.tol = {tol, tol};
  for (const Segment& seg : realisation_segments(omega_n, omega_m, schedule, design, u, t)) {
    const double w2 = seg.omega * seg.omega;
    const double level = seg.level;
    auto rhs = [w2, level](double, std::span<const double> s, std::span<double> ds) {
      ds[0] = s[1];
      ds[1] = -w2 * s[0] + w2 * level;
    };
    ode::integrate_segment(rhs, y, seg.start, seg.end, opt);
  }
  return {y[0], y[1]};
}

// ---------------------------------------------------------------------------
// Counter-based random numbers
// ---------------------------------------------------------------------------

/**
 * Philox4x32-10 (Salmon et al., SC'11). Stateless: output depends only on
 * (counter, key), so sample i can be drawn by any worker.
 */
[[nodiscard]] inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                                            std::array<std::uint32_t, 2> key) noexcept {
  constexpr std::uint32_t m0 = 0xD2511F53u;
  constexpr std::uint32_t m1 = 0xCD9E8D57u;
  constexpr std::uint32_t w0 = 0x9E3779B9u;
  constexpr std::uint32_t w1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += w0;
    key[1] += w1;
  }
  return ctr;
}

/// Two independent U(-1, 1) variates for sample `index` under `seed`.
[[nodiscard]] inline std::pair<double, double> sample_zeta_pair(std::uint64_t seed, std::uint64_t index) noexcept {
  const auto r = philox4x32({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0u, 0u},
                            {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  auto unit = [](std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;  // 53 bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;                              // (0, 1)
  };
  return {2.0 * unit(r[0], r[1]) - 1.0, 2.0 * unit(r[2], r[3]) - 1.0};
}

// ---------------------------------------------------------------------------
// Monte Carlo reference
// ---------------------------------------------------------------------------

enum class Sampler { ClosedForm, Rk45 };

[[nodiscard]] inline std::string to_string(Sampler s) { return s == Sampler::ClosedForm ? "ClosedForm" : "Rk45"; }

[[nodiscard]] inline Sampler sampler_from_string(const std::string& s) {
  if (s == "ClosedForm" || s == "closed-form") return Sampler::ClosedForm;
  if (s == "Rk45" || s == "rk45") return Sampler::Rk45;
  throw ConfigurationError("unknown sampler '" + s + "'");
}

struct McConfig {
  std::size_t sample_count = 100'000;
  std::uint64_t seed = 20240917;
  Sampler sampler = Sampler::ClosedForm;
  double rk45_tol = 1e-12;
  unsigned workers = 0;  // 0: hardware concurrency

  void validate() const {
    if (sample_count < 1) throw ConfigurationError("McConfig: sample_count must be >= 1");
  }
};

namespace detail {

/// Runs body(i) for i in [0, n) on a fixed number of workers with static index blocks.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(1, n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = n * w / workers;
    const std::size_t hi = n * (w + 1) / workers;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

struct SampleStatistics {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;         // unbiased
  double stderr_mean = 0.0;
  double stderr_variance = 0.0;  // sqrt((m4 - s^4) / n)
};

/// Two-pass sample statistics in index order (bit-reproducible).
[[nodiscard]] inline SampleStatistics summarize(std::span<const double> v) {
  SampleStatistics s;
  s.count = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  // one correction pass removes the rounding left by sum / n (identical samples give zero spread)
  double resid = 0.0;
  for (double x : v) resid += x - s.mean;
  s.mean += resid / static_cast<double>(v.size());
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : v) {
    const double d = x - s.mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  const auto n = static_cast<double>(v.size());
  s.variance = v.size() > 1 ? m2 / (n - 1.0) : 0.0;
  const double biased = m2 / n;
  s.stderr_mean = std::sqrt(s.variance / n);
  s.stderr_variance = std::sqrt(std::max(0.0, m4 / n - biased * biased) / n);
  return s;
}

/// Residual energy at t2 of every sample (indexed, deterministic for a given seed).
[[nodiscard]] inline std::vector<double> mc_residual_samples(const McConfig& cfg, const UncertaintySchedule& schedule,
                                                             const ShaperDesign& design, double u,
                                                             const ResidualEnergySpec& spec,
                                                             PointState initial = {}) {
  cfg.validate();
  schedule.validate();
  spec.validate();
  validate(design);
  std::vector<double> energies(cfg.sample_count);
  detail::parallel_for(cfg.sample_count, cfg.workers, [&](std::size_t i) {
    const auto [z1, z2] = sample_zeta_pair(cfg.seed, i);
    const double wn = schedule.omega_n(z1);
    const double wm = schedule.omega_m(z2);
    const PointState s = cfg.sampler == Sampler::ClosedForm
                             ? closed_form_trajectory(wn, wm, schedule, design, u, schedule.t2, initial)
                             : rk45_trajectory(wn, wm, schedule, design, u, schedule.t2, cfg.rk45_tol, initial);
    energies[i] = residual_energy(s.x, s.v, wm, spec);
  });
  return energies;
}

/// Sample mean and unbiased sample variance of V_res(t2), with standard errors.
[[nodiscard]] inline SampleStatistics mc_residual_moments(const McConfig& cfg, const UncertaintySchedule& schedule,
                                                          const ShaperDesign& design, double u,
                                                          const ResidualEnergySpec& spec, PointState initial = {}) {
  const std::vector<double> v = mc_residual_samples(cfg, schedule, design, u, spec, initial);
  return summarize(v);
}

/// Closed-form Monte Carlo mean/variance of x and x' on a time grid.
[[nodiscard]] inline MomentReport mc_moment_trajectory(const McConfig& cfg, const UncertaintySchedule& schedule,
                                                       const ShaperDesign& design, double u,
                                                       std::span<const double> times, PointState initial = {}) {
  cfg.validate();
  schedule.validate();
  const std::size_t nt = times.size();
  const std::size_t ns = cfg.sample_count;
  // per-time accumulators are filled per sample block, then reduced in block order
  constexpr std::size_t block = 1024;
  const std::size_t nblocks = (ns + block - 1) / block;
  std::vector<std::vector<double>> acc(nblocks, std::vector<double>(4 * nt, 0.0));
  detail::parallel_for(nblocks, cfg.workers, [&](std::size_t bidx) {
    auto& a = acc[bidx];
    const std::size_t lo = bidx * block;
    const std::size_t hi = std::min(ns, lo + block);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto [z1, z2] = sample_zeta_pair(cfg.seed, i);
      const double wn = schedule.omega_n(z1);
      const double wm = schedule.omega_m(z2);
      const auto segs = realisation_segments(wn, wm, schedule, design, u, schedule.t2);
      std::size_t k = 0;
      PointState s = initial;
      double seg_t = 0.0;
      for (std::size_t ti = 0; ti < nt; ++ti) {
        const double t = times[ti];
        while (k < segs.size() && segs[k].end <= t) {
          s = advance_exact(s, segs[k].omega, segs[k].level, segs[k].end - seg_t);
          seg_t = segs[k].end;
          ++k;
        }
        PointState here = s;
        if (k < segs.size() && t > seg_t) here = advance_exact(s, segs[k].omega, segs[k].level, t - seg_t);
        a[4 * ti + 0] += here.x;
        a[4 * ti + 1] += here.x * here.x;
        a[4 * ti + 2] += here.v;
        a[4 * ti + 3] += here.v * here.v;
      }
    }
  });
  MomentReport r;
  const auto n = static_cast<double>(ns);
  for (std::size_t ti = 0; ti < nt; ++ti) {
    double sx = 0.0, sxx = 0.0, sv = 0.0, svv = 0.0;
    for (const auto& a : acc) {
      sx += a[4 * ti];
      sxx += a[4 * ti + 1];
      sv += a[4 * ti + 2];
      svv += a[4 * ti + 3];
    }
    const double mx = sx / n;
    const double mv = sv / n;
    const double denom = ns > 1 ? n - 1.0 : 1.0;
    r.append(times[ti], mx, std::max(0.0, (sxx - n * mx * mx) / denom), mv, std::max(0.0, (svv - n * mv * mv) / denom));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Serialisation
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const ResidualEnergySpec& s) {
  j = nlohmann::json{{"form", to_string(s.form)}, {"target", s.target}, {"mass", s.mass}};
}

inline void from_json(const nlohmann::json& j, ResidualEnergySpec& s) {
  if (j.contains("form")) s.form = energy_form_from_string(j.at("form").get<std::string>());
  s.target = j.value("target", s.target);
  s.mass = j.value("mass", s.mass);
}

inline void to_json(nlohmann::json& j, const McConfig& c) {
  j = nlohmann::json{{"sample_count", c.sample_count},
                     {"seed", c.seed},
                     {"sampler", to_string(c.sampler)},
                     {"rk45_tol", c.rk45_tol}};
}

inline void from_json(const nlohmann::json& j, McConfig& c) {
  c.sample_count = j.value("sample_count", c.sample_count);
  c.seed = j.value("seed", c.seed);
  if (j.contains("sampler")) c.sampler = sampler_from_string(j.at("sampler").get<std::string>());
  c.rk45_tol = j.value("rk45_tol", c.rk45_tol);
  c.workers = j.value("workers", c.workers);
}

}  // namespace pcshaper
