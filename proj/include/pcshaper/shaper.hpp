/**
 * @file shaper.hpp
 * @brief Time-delay filter (input shaper) designs and their time-domain staircase.
 *
 * A design holds amplitudes A_0..A_N and delays T_1..T_N. The shaped command is
 *   u_t = (A_0 + sum_i A_i H(t - T_i)) u,   H(0) = 1.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pcshaper/errors.hpp"

namespace pcshaper {

enum class ShaperKind { Unshaped, NonRobust, Robust, Gsa };

[[nodiscard]] inline std::string to_string(ShaperKind k) {
  switch (k) {
    case ShaperKind::Unshaped: return "Unshaped";
    case ShaperKind::NonRobust: return "NonRobust";
    case ShaperKind::Robust: return "Robust";
    case ShaperKind::Gsa: return "Gsa";
  }
  return "Unshaped";
}

[[nodiscard]] inline ShaperKind shaper_kind_from_string(const std::string& s) {
  if (s == "Unshaped" || s == "none") return ShaperKind::Unshaped;
  if (s == "NonRobust" || s == "nonrobust") return ShaperKind::NonRobust;
  if (s == "Robust" || s == "robust") return ShaperKind::Robust;
  if (s == "Gsa" || s == "gsa") return ShaperKind::Gsa;
  throw ConfigurationError("unknown shaper kind '" + s + "'");
}

struct ShaperDesign {
  std::vector<double> amplitudes{1.0};
  std::vector<double> delays{};
  ShaperKind kind = ShaperKind::Unshaped;
  double damping = 0.0;
  double design_freq = 0.0;

  [[nodiscard]] std::size_t n_delays() const noexcept { return delays.size(); }
  [[nodiscard]] double final_delay() const noexcept { return delays.empty() ? 0.0 : delays.back(); }
};

inline constexpr double kAmplitudeSumTol = 1e-12;

/**
 * Checks the filter constraints: unity amplitude sum, non-negative amplitudes,
 * strictly increasing positive delays (bounded by t_final when given), and the
 * structural shape implied by the kind.
 */
inline void validate(const ShaperDesign& d, double t_final = std::numeric_limits<double>::infinity()) {
  if (d.amplitudes.size() != d.delays.size() + 1) {
    throw ConfigurationError("shaper: need exactly one more amplitude than delays");
  }
  double sum = 0.0;
  for (double a : d.amplitudes) {
    if (!std::isfinite(a) || a < 0.0) throw ConfigurationError("shaper: amplitudes must be finite and >= 0");
    sum += a;
  }
  if (std::abs(sum - 1.0) > kAmplitudeSumTol) throw ConfigurationError("shaper: amplitudes must sum to 1");
  double prev = 0.0;
  for (double t : d.delays) {
    if (!std::isfinite(t) || !(t > prev)) {
      throw ConfigurationError("shaper: delays must be positive and strictly increasing");
    }
    prev = t;
  }
  if (!d.delays.empty() && d.delays.back() > t_final) throw ConfigurationError("shaper: delay beyond t_f");
  if (d.kind == ShaperKind::Unshaped && !d.delays.empty()) throw ConfigurationError("shaper: unshaped has delays");
  if (d.kind == ShaperKind::NonRobust && d.delays.size() != 1) throw ConfigurationError("shaper: non-robust needs N=1");
  if (d.kind == ShaperKind::Robust && d.delays.size() != 2) throw ConfigurationError("shaper: robust needs N=2");
}

[[nodiscard]] inline ShaperDesign unshaped() { return ShaperDesign{}; }

/// Single-delay filter cancelling one pole pair at the damped frequency omega_d.
[[nodiscard]] inline ShaperDesign design_nonrobust(double damping, double omega_d) {
  if (!(damping >= 0.0 && damping < 1.0)) throw DomainError("design_nonrobust: damping must lie in [0, 1)");
  if (!(omega_d > 0.0)) throw DomainError("design_nonrobust: omega_d must be positive");
  const double e = std::exp(damping * std::numbers::pi / std::sqrt(1.0 - damping * damping));
  const double a0 = e / (1.0 + e);
  ShaperDesign d;
  d.amplitudes = {a0, 1.0 - a0};
  d.delays = {std::numbers::pi / omega_d};
  d.kind = ShaperKind::NonRobust;
  d.damping = damping;
  d.design_freq = omega_d;
  return d;
}

/// Square of the non-robust filter: amplitudes (A0^2, 2 A0 A1, A1^2), delays (T, 2T).
[[nodiscard]] inline ShaperDesign design_robust(double damping, double omega_d) {
  const ShaperDesign base = design_nonrobust(damping, omega_d);
  const double a0 = base.amplitudes[0];
  const double a1 = base.amplitudes[1];
  const double t = base.delays[0];
  ShaperDesign d = base;
  d.amplitudes = {a0 * a0, 2.0 * a0 * a1, a1 * a1};
  d.delays = {t, 2.0 * t};
  d.kind = ShaperKind::Robust;
  return d;
}

/// Fraction of the base command active at time t (H(0) = 1).
[[nodiscard]] inline double shaped_gain(const ShaperDesign& d, double t) noexcept {
  double g = d.amplitudes.front();
  for (std::size_t i = 0; i < d.delays.size(); ++i)
    if (t >= d.delays[i]) g += d.amplitudes[i + 1];
  return g;
}

[[nodiscard]] inline double shaped_input(const ShaperDesign& d, double u, double t) noexcept {
  if (d.delays.empty() || t >= d.final_delay()) return u;
  return shaped_gain(d, t) * u;
}

/// Discontinuity times of the staircase, in increasing order.
[[nodiscard]] inline std::vector<double> switch_times(const ShaperDesign& d) { return d.delays; }

/// Shaped command u_t of a fixed base level.
struct ShapedInput {
  ShaperDesign design{};
  double level = 1.0;

  [[nodiscard]] double operator()(double t) const noexcept { return shaped_input(design, level, t); }
  [[nodiscard]] std::vector<double> breakpoints() const { return switch_times(design); }
};

/// Discrete convolution of two impulse sequences (amplitudes at times 0, T_1, ...).
[[nodiscard]] inline ShaperDesign convolve(const ShaperDesign& a, const ShaperDesign& b) {
  std::vector<std::pair<double, double>> impulses;  // (time, amplitude)
  auto times = [](const ShaperDesign& d) {
    std::vector<double> ts{0.0};
    ts.insert(ts.end(), d.delays.begin(), d.delays.end());
    return ts;
  };
  const auto ta = times(a);
  const auto tb = times(b);
  for (std::size_t i = 0; i < ta.size(); ++i)
    for (std::size_t j = 0; j < tb.size(); ++j) impulses.emplace_back(ta[i] + tb[j], a.amplitudes[i] * b.amplitudes[j]);
  std::sort(impulses.begin(), impulses.end());
  ShaperDesign out;
  out.amplitudes.clear();
  constexpr double merge_tol = 1e-12;
  for (const auto& [t, amp] : impulses) {
    const double last = out.delays.empty() ? 0.0 : out.delays.back();
    if (!out.amplitudes.empty() && std::abs(t - last) <= merge_tol) {
      out.amplitudes.back() += amp;
    } else {
      if (!out.amplitudes.empty()) out.delays.push_back(t);
      out.amplitudes.push_back(amp);
    }
  }
  out.kind = ShaperKind::Gsa;
  return out;
}

inline void to_json(nlohmann::json& j, const ShaperDesign& d) {
  j = nlohmann::json{{"kind", to_string(d.kind)},
                     {"amplitudes", d.amplitudes},
                     {"delays", d.delays},
                     {"damping", d.damping},
                     {"design_freq", d.design_freq}};
}

inline void from_json(const nlohmann::json& j, ShaperDesign& d) {
  d.kind = shaper_kind_from_string(j.at("kind").get<std::string>());
  d.amplitudes = j.at("amplitudes").get<std::vector<double>>();
  d.delays = j.value("delays", std::vector<double>{});
  d.damping = j.value("damping", 0.0);
  d.design_freq = j.value("design_freq", 0.0);
  validate(d);
}

}  // namespace pcshaper
