/**
 * @file ode.hpp
 * @brief Embedded Dormand-Prince 5(4) integrator with PI step control.
 *
 * The integrator works on std::vector<double> states and a right-hand side
 * callable `void(double t, std::span<const double> y, std::span<double> dydt)`.
 * Integration over a range is split at caller-supplied breakpoints; the step
 * controller is restarted on each piece and no step ever crosses a breakpoint.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "pcshaper/errors.hpp"

namespace pcshaper::ode {

using State = std::vector<double>;

struct Tolerances {
  double rel = 1e-12;
  double abs = 1e-12;
};

struct StepperOptions {
  Tolerances tol{};
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 50'000'000;
};

struct IntegrationStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
};

/// Accepted step handed to observers: values and slopes at both ends.
struct StepView {
  double t0;
  double t1;
  std::span<const double> y0;
  std::span<const double> f0;
  std::span<const double> y1;
  std::span<const double> f1;
  std::span<const double> dense;  // h * sum_j d_j k_j, the quartic term of the continuous extension
};

/// Cubic Hermite interpolation of one component inside an accepted step.
[[nodiscard]] inline double hermite(const StepView& s, std::size_t i, double t) noexcept {
  const double h = s.t1 - s.t0;
  const double th = (t - s.t0) / h;
  const double th2 = th * th;
  const double th3 = th2 * th;
  const double h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
  const double h10 = th3 - 2.0 * th2 + th;
  const double h01 = -2.0 * th3 + 3.0 * th2;
  const double h11 = th3 - th2;
  return h00 * s.y0[i] + h10 * h * s.f0[i] + h01 * s.y1[i] + h11 * h * s.f1[i];
}

/// Fourth-order Dormand-Prince continuous extension of one component inside an accepted step.
[[nodiscard]] inline double dense_output(const StepView& s, std::size_t i, double t) noexcept {
  const double h = s.t1 - s.t0;
  const double th = (t - s.t0) / h;
  const double th1 = 1.0 - th;
  const double r2 = s.y1[i] - s.y0[i];
  const double r3 = h * s.f0[i] - r2;
  const double r4 = r2 - h * s.f1[i] - r3;
  return s.y0[i] + th * (r2 + th1 * (r3 + th * (r4 + th1 * s.dense[i])));
}

namespace detail {

// Dormand & Prince (1980) tableau.
inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                        a65 = -5103.0 / 18656.0;
inline constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                        b6 = 11.0 / 84.0;
// b - b_hat
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                        e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// dense output weights (Hairer, Norsett & Wanner, DOPRI5)
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

}  // namespace detail

/**
 * Integrates y' = rhs(t, y) from t0 to t1 (t1 > t0) in place. The observer is
 * called once per accepted step with a StepView. Throws IntegrationError when
 * the step size underflows or the step budget is exhausted.
 */
template <class Rhs, class Observer>
IntegrationStats integrate_segment(Rhs&& rhs, State& y, double t0, double t1, const StepperOptions& opt,
                                   Observer&& observer) {
  using namespace detail;
  const std::size_t n = y.size();
  IntegrationStats stats;
  if (!(t1 > t0)) return stats;

  State k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), dense(n);
  auto eval = [&](double t, const State& x, State& out) {
    rhs(t, std::span<const double>(x), std::span<double>(out));
    ++stats.rhs_evals;
  };

  auto scaled_norm = [&](const State& v, const State& ref_a, const State& ref_b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = opt.tol.abs + opt.tol.rel * std::max(std::abs(ref_a[i]), std::abs(ref_b[i]));
      const double r = v[i] / sc;
      acc += r * r;
    }
    return n == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(n));
  };

  eval(t0, y, k1);

  // Hairer's starting step heuristic.
  double h;
  {
    const double d0 = scaled_norm(y, y, y);
    const double d1 = scaled_norm(k1, y, y);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, t1 - t0);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h0 * k1[i];
    eval(t0 + h0, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i) k3[i] = (k2[i] - k1[i]) / h0;
    const double d2 = scaled_norm(k3, y, y);
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 1.0 / 5.0);
    h = std::min({100.0 * h0, h1, t1 - t0, opt.max_step});
  }

  constexpr double safety = 0.9;
  constexpr double fac_min = 0.2;
  constexpr double fac_max = 10.0;
  constexpr double alpha = 0.17;  // 1/5 - 0.75 * beta
  constexpr double beta = 0.04;
  double err_prev = 1e-4;
  bool last_rejected = false;
  double t = t0;

  while (t < t1) {
    if (stats.accepted + stats.rejected >= opt.max_steps) {
      throw IntegrationError("integrate_segment: step budget exhausted", t);
    }
    bool final_step = false;
    if (t + h >= t1 || t1 - (t + h) < 1e-12 * std::max(1.0, std::abs(t1))) {
      h = t1 - t;
      final_step = true;
    }
    if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      throw IntegrationError("integrate_segment: step size underflow", t);
    }

    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    eval(t + c2 * h, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    eval(t + c3 * h, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    eval(t + c4 * h, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    eval(t + c5 * h, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    const double t_new = final_step ? t1 : t + h;
    eval(t_new, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    eval(t_new, ynew, k7);

    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    const double err = scaled_norm(ytmp, y, ynew);
    if (!std::isfinite(err)) throw IntegrationError("integrate_segment: non-finite error estimate", t);

    if (err <= 1.0) {
      for (std::size_t i = 0; i < n; ++i)
        dense[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      observer(StepView{t, t_new, y, k1, ynew, k7, dense});
      ++stats.accepted;
      t = t_new;
      y.swap(ynew);
      k1.swap(k7);
      double fac = err == 0.0 ? fac_max : safety * std::pow(err, -alpha) * std::pow(err_prev, beta);
      fac = std::clamp(fac, fac_min, fac_max);
      if (last_rejected) fac = std::min(fac, 1.0);
      h = std::min(h * fac, opt.max_step);
      err_prev = std::max(err, 1e-4);
      last_rejected = false;
    } else {
      ++stats.rejected;
      h *= std::max(fac_min, safety * std::pow(err, -alpha));
      last_rejected = true;
    }
  }
  return stats;
}

template <class Rhs>
IntegrationStats integrate_segment(Rhs&& rhs, State& y, double t0, double t1, const StepperOptions& opt) {
  return integrate_segment(std::forward<Rhs>(rhs), y, t0, t1, opt, [](const StepView&) {});
}

/// Sorted, unique breakpoints strictly inside (t0, t1), with t0 and t1 appended.
[[nodiscard]] inline std::vector<double> segment_edges(double t0, double t1, std::span<const double> breakpoints) {
  std::vector<double> edges{t0};
  std::vector<double> inner;
  for (double b : breakpoints)
    if (b > t0 && b < t1) inner.push_back(b);
  std::sort(inner.begin(), inner.end());
  inner.erase(std::unique(inner.begin(), inner.end()), inner.end());
  edges.insert(edges.end(), inner.begin(), inner.end());
  edges.push_back(t1);
  return edges;
}

}  // namespace pcshaper::ode
