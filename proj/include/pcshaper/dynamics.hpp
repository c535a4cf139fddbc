/**
 * @file dynamics.hpp
 * @brief Intrusive (Galerkin) chaos propagation of the uncertain spring-mass system.
 *
 * The plant is  x'' + w^2 x = w^2 u  with m = 1. On [0, t1] the frequency is
 * w_n = mu + h1 zeta1, on [t1, t2] it is w_m = mu + h2 zeta2. Expanding x in the
 * Legendre chaos basis and projecting onto every basis function gives the linear
 * coefficient system  a'' = -M a + g u(t).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pcshaper/basis.hpp"
#include "pcshaper/errors.hpp"
#include "pcshaper/ode.hpp"
#include "pcshaper/shaper.hpp"

namespace pcshaper {

struct SystemParams {
  double mass = 1.0;
  double target = 1.0;  // x_f
  double initial_position = 0.0;
  double initial_velocity = 0.0;

  void validate() const {
    if (!(mass > 0.0)) throw ConfigurationError("SystemParams: mass must be positive");
    if (!std::isfinite(target)) throw ConfigurationError("SystemParams: target must be finite");
  }
};

struct FrequencyBounds {
  double lb = 0.0;
  double ub = 0.0;

  [[nodiscard]] double halfwidth() const noexcept { return 0.5 * (ub - lb); }
  [[nodiscard]] double midpoint() const noexcept { return 0.5 * (ub + lb); }
};

/**
 * Two-interval frequency model. Both intervals are uniform and centred on
 * mean_freq; t1 switches from the first to the second distribution.
 * Zero-width bounds (lb == ub) describe a deterministic interval.
 */
struct UncertaintySchedule {
  double mean_freq = std::numbers::pi;
  FrequencyBounds interval1{0.75 * std::numbers::pi, 1.25 * std::numbers::pi};
  FrequencyBounds interval2{0.5 * std::numbers::pi, 1.5 * std::numbers::pi};
  double t1 = 100.0;
  double t2 = 200.0;

  void validate() const {
    for (const FrequencyBounds& b : {interval1, interval2}) {
      if (!(b.lb <= b.ub)) throw ConfigurationError("UncertaintySchedule: lb must not exceed ub");
      if (std::abs(b.midpoint() - mean_freq) > 1e-12 * std::max(1.0, std::abs(mean_freq))) {
        throw ConfigurationError("UncertaintySchedule: bounds must be centred on mean_freq");
      }
      if (!(b.lb > 0.0)) throw ConfigurationError("UncertaintySchedule: frequencies must be positive");
    }
    if (!(t1 > 0.0 && t2 > t1)) throw ConfigurationError("UncertaintySchedule: need 0 < t1 < t2");
  }

  [[nodiscard]] double omega_n(double zeta1) const noexcept { return mean_freq + interval1.halfwidth() * zeta1; }
  [[nodiscard]] double omega_m(double zeta2) const noexcept { return mean_freq + interval2.halfwidth() * zeta2; }
};

/// w_n ~ U(0.75 pi, 1.25 pi), w_m ~ U(0.5 pi, 1.5 pi), t1 = 100 s, t2 = 200 s.
[[nodiscard]] inline UncertaintySchedule default_schedule() { return UncertaintySchedule{}; }

/// Same frequency model on the short horizon t1 = 10 s, t2 = 20 s.
[[nodiscard]] inline UncertaintySchedule reduced_schedule() {
  UncertaintySchedule s;
  s.t1 = 10.0;
  s.t2 = 20.0;
  return s;
}

/// Deterministic schedule: both intervals collapse to mean_freq.
[[nodiscard]] inline UncertaintySchedule deterministic_schedule(double mean_freq, double t1, double t2) {
  return UncertaintySchedule{mean_freq, {mean_freq, mean_freq}, {mean_freq, mean_freq}, t1, t2};
}

/**
 * Projected coefficient system: row j of M holds <w^2 Psi_i Psi_j>/<Psi_j^2>,
 * g[j] = <w^2 Psi_j>/<Psi_j^2>. M is stored in compressed-row form; each row has
 * at most five entries because w^2 is quadratic in the active variable.
 */
class GalerkinSystem {
 public:
  GalerkinSystem() = default;

  [[nodiscard]] const BasisSpec& basis() const noexcept { return basis_; }
  [[nodiscard]] std::size_t size() const noexcept { return forcing_.size(); }
  [[nodiscard]] const std::vector<double>& forcing_vector() const noexcept { return forcing_; }
  [[nodiscard]] int active_dim() const noexcept { return active_dim_; }
  [[nodiscard]] double mean_freq() const noexcept { return mean_; }
  [[nodiscard]] double halfwidth() const noexcept { return halfwidth_; }

  /// out = M x
  void apply(std::span<const double> x, std::span<double> out) const noexcept {
    for (std::size_t r = 0; r < size(); ++r) {
      double acc = 0.0;
      for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) acc += values_[p] * x[cols_[p]];
      out[r] = acc;
    }
  }

  [[nodiscard]] double entry(std::size_t row, std::size_t col) const noexcept {
    for (std::size_t p = row_ptr_[row]; p < row_ptr_[row + 1]; ++p)
      if (cols_[p] == col) return values_[p];
    return 0.0;
  }

  /// Dense row-major copy of M.
  [[nodiscard]] std::vector<double> stiffness_matrix() const {
    const std::size_t n = size();
    std::vector<double> dense(n * n, 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) dense[r * n + cols_[p]] = values_[p];
    return dense;
  }

  [[nodiscard]] std::size_t nonzeros() const noexcept { return values_.size(); }

  friend GalerkinSystem assemble_galerkin(const BasisSpec&, double, double, int);

 private:
  BasisSpec basis_;
  int active_dim_ = 1;
  double mean_ = 0.0;
  double halfwidth_ = 0.0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
  std::vector<double> forcing_;
};

/**
 * Projects a'' = -w^2 a + w^2 u with w = mu + halfwidth * zeta_{active_dim}.
 * The square (mu + h zeta)^2 is written exactly in Legendre form
 *   (mu^2 + h^2/3) Psi_0 + 2 mu h Psi_1 + (2 h^2 / 3) Psi_2
 * and contracted against the triple-product table.
 */
[[nodiscard]] inline GalerkinSystem assemble_galerkin(const BasisSpec& basis, double mean, double halfwidth,
                                                      int active_dim) {
  if (!(halfwidth >= 0.0)) throw ConfigurationError("assemble_galerkin: halfwidth must be >= 0");
  if (active_dim < 1 || active_dim > basis.dims()) throw ConfigurationError("assemble_galerkin: bad active_dim");

  GalerkinSystem sys;
  sys.basis_ = basis;
  sys.active_dim_ = active_dim;
  sys.mean_ = mean;
  sys.halfwidth_ = halfwidth;

  const double c[3] = {mean * mean + halfwidth * halfwidth / 3.0, 2.0 * mean * halfwidth,
                       2.0 * halfwidth * halfwidth / 3.0};
  const TripleProductTable triple(basis.degree() + 2, 2);
  auto active = [active_dim](const MultiIndex& m) { return active_dim == 1 ? m.j1 : m.j2; };
  auto other = [active_dim](const MultiIndex& m) { return active_dim == 1 ? m.j2 : m.j1; };
  auto with_active = [active_dim](const MultiIndex& m, int v) {
    MultiIndex r = m;
    (active_dim == 1 ? r.j1 : r.j2) = v;
    return r;
  };

  const std::size_t n = basis.size();
  sys.forcing_.assign(n, 0.0);
  sys.row_ptr_.assign(1, 0);
  for (std::size_t row = 0; row < n; ++row) {
    const MultiIndex& mj = basis[row];
    const int ja = active(mj);
    const double inv_norm = 1.0 / basis_norm_sq(ja);
    for (int ia = std::max(0, ja - 2); ia <= ja + 2; ++ia) {
      const std::size_t col = basis.position(with_active(mj, ia));
      if (col >= n) continue;
      double v = 0.0;
      for (int k = 0; k <= 2; ++k) v += c[k] * triple(ia, ja, k);
      v *= inv_norm;
      if (v != 0.0) {
        sys.cols_.push_back(col);
        sys.values_.push_back(v);
      }
    }
    sys.row_ptr_.push_back(sys.cols_.size());
    if (other(mj) == 0 && ja <= 2) {
      double v = 0.0;
      for (int k = 0; k <= 2; ++k) v += c[k] * triple(0, ja, k);
      sys.forcing_[row] = v * inv_norm;
    }
  }
  return sys;
}

/// Coefficient trajectories a(t) (position) and b(t) = a'(t) (velocity).
struct PceTrajectory {
  BasisSpec basis;
  int interval_tag = 1;
  std::vector<double> times;
  std::vector<std::vector<double>> coeffs_a;
  std::vector<std::vector<double>> coeffs_b;

  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
  [[nodiscard]] const std::vector<double>& final_a() const { return coeffs_a.back(); }
  [[nodiscard]] const std::vector<double>& final_b() const { return coeffs_b.back(); }
};

struct IntegrationOptions {
  double tol = 1e-12;            // relative and absolute
  int samples_per_period = 20;   // output grid density per nominal period 2 pi / mu
};

/// Uniform grid on [t_start, t_end] with spacing at most dt; both ends included exactly.
[[nodiscard]] inline std::vector<double> uniform_grid(double t_start, double t_end, double dt) {
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((t_end - t_start) / dt - 1e-9)));
  std::vector<double> ts(n + 1);
  for (std::size_t k = 0; k <= n; ++k) ts[k] = t_start + (t_end - t_start) * static_cast<double>(k) / static_cast<double>(n);
  ts.back() = t_end;
  return ts;
}

/**
 * Integrates a'' = -M a + g u(t) on [t_start, t_end] with Dormand-Prince 5(4)
 * at rel = abs = tol. The range is cut at every switch of the shaped input so
 * the command is constant on each piece. Output is sampled on `output_times`
 * (values outside the range are ignored) via cubic Hermite interpolation of the
 * accepted steps; t_start and t_end are always present.
 */
[[nodiscard]] inline PceTrajectory integrate_interval(const GalerkinSystem& system, std::span<const double> a0,
                                                      std::span<const double> b0, const ShapedInput& input,
                                                      double t_start, double t_end, double tol,
                                                      std::span<const double> output_times,
                                                      ode::IntegrationStats* stats_out = nullptr) {
  const std::size_t n = system.size();
  if (a0.size() != n || b0.size() != n) throw ConfigurationError("integrate_interval: state size mismatch");
  if (!(t_start < t_end)) throw ConfigurationError("integrate_interval: need t_start < t_end");
  if (!(tol > 0.0)) throw ConfigurationError("integrate_interval: tol must be positive");

  std::vector<double> grid;
  grid.push_back(t_start);
  for (double t : output_times)
    if (t > t_start && t < t_end) grid.push_back(t);
  grid.push_back(t_end);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  PceTrajectory traj;
  traj.basis = system.basis();
  traj.times = grid;
  traj.coeffs_a.reserve(grid.size());
  traj.coeffs_b.reserve(grid.size());

  ode::State y(2 * n);
  std::copy(a0.begin(), a0.end(), y.begin());
  std::copy(b0.begin(), b0.end(), y.begin() + static_cast<std::ptrdiff_t>(n));
  traj.coeffs_a.emplace_back(a0.begin(), a0.end());
  traj.coeffs_b.emplace_back(b0.begin(), b0.end());
  std::size_t next = 1;

  const std::vector<double> switches = input.breakpoints();
  const std::vector<double> edges = ode::segment_edges(t_start, t_end, switches);
  const std::vector<double>& g = system.forcing_vector();
  std::vector<double> ma(n);

  ode::StepperOptions opt;
  opt.tol = {tol, tol};
  ode::IntegrationStats total;

  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    const double lo = edges[s];
    const double hi = edges[s + 1];
    const double level = input(0.5 * (lo + hi));
    auto rhs = [&](double, std::span<const double> x, std::span<double> dx) {
      system.apply(x.subspan(0, n), ma);
      for (std::size_t i = 0; i < n; ++i) {
        dx[i] = x[n + i];
        dx[n + i] = -ma[i] + g[i] * level;
      }
    };
    auto observer = [&](const ode::StepView& step) {
      while (next < grid.size() && grid[next] <= step.t1) {
        const double t = grid[next];
        std::vector<double> a(n), b(n);
        if (t == step.t1) {
          std::copy_n(step.y1.begin(), n, a.begin());
          std::copy_n(step.y1.begin() + static_cast<std::ptrdiff_t>(n), n, b.begin());
        } else {
          for (std::size_t i = 0; i < n; ++i) {
            a[i] = ode::dense_output(step, i, t);
            b[i] = ode::dense_output(step, n + i, t);
          }
        }
        traj.coeffs_a.push_back(std::move(a));
        traj.coeffs_b.push_back(std::move(b));
        ++next;
      }
    };
    const ode::IntegrationStats st = ode::integrate_segment(rhs, y, lo, hi, opt, observer);
    total.accepted += st.accepted;
    total.rejected += st.rejected;
    total.rhs_evals += st.rhs_evals;
  }
  if (stats_out != nullptr) *stats_out = total;
  return traj;
}

/**
 * Embeds one-variable coefficients into a two-variable basis at the switch:
 *   a_{(j1, j2)} = a_{j1} if j2 = 0, otherwise 0   (same for b).
 * This is exact; the surrogate is unchanged pointwise.
 */
[[nodiscard]] inline std::pair<std::vector<double>, std::vector<double>> restart_at_switch(
    std::span<const double> a, std::span<const double> b, const BasisSpec& basis1, const BasisSpec& basis2) {
  if (basis1.dims() != 1 || basis2.dims() != 2) throw ConfigurationError("restart_at_switch: need d=1 -> d=2");
  if (a.size() != basis1.size() || b.size() != basis1.size()) {
    throw ConfigurationError("restart_at_switch: coefficient size does not match interval-1 basis");
  }
  std::vector<double> a2(basis2.size(), 0.0);
  std::vector<double> b2(basis2.size(), 0.0);
  for (std::size_t i = 0; i < basis1.size(); ++i) {
    const std::size_t pos = basis2.position({basis1[i].j1, 0});
    if (pos >= basis2.size()) throw ConfigurationError("restart_at_switch: interval-2 basis lacks index (j1, 0)");
    a2[pos] = a[i];
    b2[pos] = b[i];
  }
  return {std::move(a2), std::move(b2)};
}

/// Pointwise value of sum_i c_i Psi_i(zeta1, zeta2).
[[nodiscard]] inline double evaluate_surrogate(const BasisSpec& basis, std::span<const double> coeffs, double zeta1,
                                               double zeta2 = 0.0) {
  std::vector<double> p1, p2;
  legendre_eval_all(basis.degree(), zeta1, p1);
  legendre_eval_all(basis.degree(), basis.dims() == 2 ? zeta2 : 0.0, p2);
  double acc = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) acc += coeffs[i] * p1[basis[i].j1] * p2[basis[i].j2];
  return acc;
}

struct PropagationResult {
  PceTrajectory interval1;
  PceTrajectory interval2;
  ode::IntegrationStats stats1;
  ode::IntegrationStats stats2;
};

/**
 * Full two-interval pipeline: one-variable system on [0, t1], exact restart,
 * two-variable system on [t1, t2]. The same total degree P is used on both
 * intervals; `truncation` selects the interval-2 index set.
 */
[[nodiscard]] inline PropagationResult propagate(const SystemParams& params, const UncertaintySchedule& schedule,
                                                 int degree, Truncation truncation, const ShapedInput& input,
                                                 const IntegrationOptions& options = {}) {
  params.validate();
  schedule.validate();
  validate(input.design);

  const BasisSpec basis1(1, degree, Truncation::TotalDegree);
  const BasisSpec basis2(2, degree, truncation);
  const GalerkinSystem sys1 = assemble_galerkin(basis1, schedule.mean_freq, schedule.interval1.halfwidth(), 1);
  const GalerkinSystem sys2 = assemble_galerkin(basis2, schedule.mean_freq, schedule.interval2.halfwidth(), 2);

  const double dt = 2.0 * std::numbers::pi / schedule.mean_freq / options.samples_per_period;
  const std::vector<double> grid = uniform_grid(0.0, schedule.t2, dt);

  std::vector<double> a0(basis1.size(), 0.0);
  std::vector<double> b0(basis1.size(), 0.0);
  a0[0] = params.initial_position;
  b0[0] = params.initial_velocity;

  PropagationResult out;
  out.interval1 = integrate_interval(sys1, a0, b0, input, 0.0, schedule.t1, options.tol, grid, &out.stats1);
  out.interval1.interval_tag = 1;
  auto [a1, b1] = restart_at_switch(out.interval1.final_a(), out.interval1.final_b(), basis1, basis2);
  out.interval2 = integrate_interval(sys2, a1, b1, input, schedule.t1, schedule.t2, options.tol, grid, &out.stats2);
  out.interval2.interval_tag = 2;
  return out;
}

inline void to_json(nlohmann::json& j, const UncertaintySchedule& s) {
  j = nlohmann::json{{"mean_freq", s.mean_freq},
                     {"interval1_bounds", {s.interval1.lb, s.interval1.ub}},
                     {"interval2_bounds", {s.interval2.lb, s.interval2.ub}},
                     {"t1", s.t1},
                     {"t2", s.t2}};
}

/// Bounds may be given absolutely or as multiples of pi via "*_bounds_over_pi".
inline void from_json(const nlohmann::json& j, UncertaintySchedule& s) {
  const double pi = std::numbers::pi;
  auto bounds = [&](const char* key, const char* key_pi, FrequencyBounds fallback) {
    if (j.contains(key)) {
      const auto v = j.at(key).get<std::vector<double>>();
      if (v.size() != 2) throw ConfigurationError(std::string(key) + " needs two values");
      return FrequencyBounds{v[0], v[1]};
    }
    if (j.contains(key_pi)) {
      const auto v = j.at(key_pi).get<std::vector<double>>();
      if (v.size() != 2) throw ConfigurationError(std::string(key_pi) + " needs two values");
      return FrequencyBounds{v[0] * pi, v[1] * pi};
    }
    return fallback;
  };
  if (j.contains("mean_freq_over_pi")) s.mean_freq = j.at("mean_freq_over_pi").get<double>() * pi;
  s.mean_freq = j.value("mean_freq", s.mean_freq);
  s.interval1 = bounds("interval1_bounds", "interval1_bounds_over_pi", s.interval1);
  s.interval2 = bounds("interval2_bounds", "interval2_bounds_over_pi", s.interval2);
  s.t1 = j.value("t1", s.t1);
  s.t2 = j.value("t2", s.t2);
}

inline void to_json(nlohmann::json& j, const SystemParams& p) {
  j = nlohmann::json{{"mass", p.mass},
                     {"target", p.target},
                     {"initial_position", p.initial_position},
                     {"initial_velocity", p.initial_velocity}};
}

inline void from_json(const nlohmann::json& j, SystemParams& p) {
  p.mass = j.value("mass", p.mass);
  p.target = j.value("target", p.target);
  p.initial_position = j.value("initial_position", p.initial_position);
  p.initial_velocity = j.value("initial_velocity", p.initial_velocity);
}

}  // namespace pcshaper
