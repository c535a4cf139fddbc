/**
 * @file basis.hpp
 * @brief Legendre chaos basis under the uniform density f(zeta) = 1/2 on [-1, 1].
 *
 * Provides point evaluation of Legendre polynomials, pdf-weighted Gauss-Legendre
 * rules, norms and triple products, and the one/two-variable index sets used by
 * the Galerkin systems.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "pcshaper/errors.hpp"

namespace pcshaper {

/// Largest per-dimension degree accepted by BasisSpec.
inline constexpr int kMaxBasisDegree = 60;

/**
 * Evaluates the Legendre polynomial P_n at zeta with the three-term recurrence
 *   (k+1) P_{k+1} = (2k+1) zeta P_k - k P_{k-1}.
 */
[[nodiscard]] inline double legendre_eval(int n, double zeta) {
  if (n < 0) throw DomainError("legendre_eval: negative degree");
  if (!(std::abs(zeta) <= 1.0)) throw DomainError("legendre_eval: zeta outside [-1, 1]");
  if (n == 0) return 1.0;
  double prev = 1.0;
  double cur = zeta;
  for (int k = 1; k < n; ++k) {
    const double next = ((2.0 * k + 1.0) * zeta * cur - k * prev) / (k + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Fills out[0..n] with P_0(zeta) .. P_n(zeta).
inline void legendre_eval_all(int n, double zeta, std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(n) + 1);
  out[0] = 1.0;
  if (n == 0) return;
  out[1] = zeta;
  for (int k = 1; k < n; ++k) {
    out[k + 1] = ((2.0 * k + 1.0) * zeta * out[k] - k * out[k - 1]) / (k + 1.0);
  }
}

/// <Psi_w^2> under the uniform pdf.
[[nodiscard]] constexpr double basis_norm_sq(int w) noexcept { return 1.0 / (2.0 * w + 1.0); }

/// Gauss-Legendre rule normalised so the weights sum to one (pdf-weighted form).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
};

/**
 * n-point Gauss-Legendre rule. Nodes are the roots of P_n found by Newton
 * iteration from the Tricomi initial guess; they are returned in ascending
 * order and the rule is symmetrised about zero.
 */
[[nodiscard]] inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw ConfigurationError("gauss_legendre: need at least one node");
  QuadratureRule rule;
  rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
  rule.weights.assign(static_cast<std::size_t>(n), 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 1; k < n; ++k) {
        const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
      }
      // P_n' from P_n and P_{n-1}
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0;
    double p1 = x;
    for (int k = 1; k < n; ++k) {
      const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 1.0 / ((1.0 - x * x) * dp * dp);  // 2/((1-x^2)P'^2) times 1/2
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = -x;
    rule.nodes[hi] = x;
    rule.weights[lo] = w;
    rule.weights[hi] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

/// Smallest node count integrating polynomials of the given degree exactly.
[[nodiscard]] constexpr int nodes_for_exact_degree(int degree) noexcept {
  return degree <= 0 ? 1 : (degree + 2) / 2;
}

/**
 * <Psi_i Psi_j Psi_k> under the uniform pdf, by Gauss-Legendre quadrature of
 * exactly sufficient order. Zero by parity or the triangle inequality.
 */
[[nodiscard]] inline double inner_triple(int i, int j, int k) {
  if (i < 0 || j < 0 || k < 0) throw DomainError("inner_triple: negative degree");
  if ((i + j + k) % 2 != 0) return 0.0;
  if (i > j + k || j > i + k || k > i + j) return 0.0;
  const QuadratureRule rule = gauss_legendre(nodes_for_exact_degree(i + j + k));
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double z = rule.nodes[q];
    sum += rule.weights[q] * legendre_eval(i, z) * legendre_eval(j, z) * legendre_eval(k, z);
  }
  return sum;
}

enum class Truncation { TotalDegree, TensorProduct };

[[nodiscard]] inline std::string to_string(Truncation t) {
  return t == Truncation::TotalDegree ? "TotalDegree" : "TensorProduct";
}

[[nodiscard]] inline Truncation truncation_from_string(const std::string& s) {
  if (s == "TotalDegree" || s == "total" || s == "total-degree") return Truncation::TotalDegree;
  if (s == "TensorProduct" || s == "tensor" || s == "tensor-product") return Truncation::TensorProduct;
  throw ConfigurationError("unknown truncation '" + s + "'");
}

/// Per-variable degrees (j1, j2). For one-variable bases j2 is always 0.
struct MultiIndex {
  int j1 = 0;
  int j2 = 0;

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

/// Orthogonality norm <Psi_j^2> of a product basis function.
[[nodiscard]] constexpr double basis_norm_sq(const MultiIndex& m) noexcept {
  return basis_norm_sq(m.j1) * basis_norm_sq(m.j2);
}

/**
 * Legendre chaos basis descriptor.
 *
 * The index set is ordered with j2 as the outer loop and j1 inner, so the
 * one-variable indices (j1, 0) always occupy positions 0..degree. TotalDegree
 * keeps j1 + j2 <= degree, TensorProduct keeps both <= degree.
 */
class BasisSpec {
 public:
  BasisSpec() : BasisSpec(1, 0, Truncation::TotalDegree) {}

  BasisSpec(int dims, int degree, Truncation truncation = Truncation::TotalDegree, int quad_order = 0)
      : dims_(dims), degree_(degree), truncation_(truncation) {
    if (dims != 1 && dims != 2) throw ConfigurationError("BasisSpec: dims must be 1 or 2");
    if (degree < 0 || degree > kMaxBasisDegree) {
      throw ConfigurationError("BasisSpec: degree must lie in [0, " + std::to_string(kMaxBasisDegree) + "]");
    }
    const int required = min_quad_order(degree);
    if (quad_order == 0) quad_order = required;
    if (quad_order < required) {
      throw ConfigurationError("BasisSpec: quad_order " + std::to_string(quad_order) +
                               " below required " + std::to_string(required));
    }
    quad_order_ = quad_order;
    build();
  }

  /// Nodes needed to integrate Psi_i Psi_j Psi_k times a quadratic exactly.
  [[nodiscard]] static constexpr int min_quad_order(int degree) noexcept {
    return std::max(degree + 2, (3 * degree + 3 + 1) / 2);
  }

  [[nodiscard]] int dims() const noexcept { return dims_; }
  [[nodiscard]] int degree() const noexcept { return degree_; }
  [[nodiscard]] Truncation truncation() const noexcept { return truncation_; }
  [[nodiscard]] int quad_order() const noexcept { return quad_order_; }
  [[nodiscard]] std::size_t size() const noexcept { return index_set_.size(); }
  [[nodiscard]] const std::vector<MultiIndex>& index_set() const noexcept { return index_set_; }
  [[nodiscard]] const MultiIndex& operator[](std::size_t i) const { return index_set_[i]; }
  [[nodiscard]] const std::vector<double>& norms() const noexcept { return norms_; }

  /// Position of a multi-index, or size() if absent.
  [[nodiscard]] std::size_t position(const MultiIndex& m) const noexcept {
    if (m.j1 < 0 || m.j2 < 0 || m.j1 > degree_ || m.j2 > degree_) return size();
    if (dims_ == 1) return m.j2 == 0 ? static_cast<std::size_t>(m.j1) : size();
    return lookup_[static_cast<std::size_t>(m.j2 * (degree_ + 1) + m.j1)];
  }

  [[nodiscard]] bool contains(const MultiIndex& m) const noexcept { return position(m) < size(); }

  /// Evaluates Psi_i at (zeta1, zeta2); zeta2 ignored for one-variable bases.
  [[nodiscard]] double evaluate(std::size_t i, double zeta1, double zeta2 = 0.0) const {
    const MultiIndex& m = index_set_[i];
    return legendre_eval(m.j1, zeta1) * (m.j2 == 0 ? 1.0 : legendre_eval(m.j2, zeta2));
  }

  friend bool operator==(const BasisSpec& a, const BasisSpec& b) {
    return a.dims_ == b.dims_ && a.degree_ == b.degree_ && a.truncation_ == b.truncation_;
  }

 private:
  void build() {
    index_set_.clear();
    if (dims_ == 1) {
      for (int j = 0; j <= degree_; ++j) index_set_.push_back({j, 0});
    } else {
      lookup_.assign(static_cast<std::size_t>((degree_ + 1) * (degree_ + 1)), 0);
      for (int j2 = 0; j2 <= degree_; ++j2) {
        const int j1_max = truncation_ == Truncation::TotalDegree ? degree_ - j2 : degree_;
        for (int j1 = 0; j1 <= j1_max; ++j1) index_set_.push_back({j1, j2});
      }
      std::fill(lookup_.begin(), lookup_.end(), index_set_.size());
      for (std::size_t i = 0; i < index_set_.size(); ++i) {
        lookup_[static_cast<std::size_t>(index_set_[i].j2 * (degree_ + 1) + index_set_[i].j1)] = i;
      }
    }
    norms_.resize(index_set_.size());
    std::transform(index_set_.begin(), index_set_.end(), norms_.begin(),
                   [](const MultiIndex& m) { return basis_norm_sq(m); });
  }

  int dims_;
  int degree_;
  Truncation truncation_;
  int quad_order_ = 0;
  std::vector<MultiIndex> index_set_;
  std::vector<double> norms_;
  std::vector<std::size_t> lookup_;
};

/// Returns the ordered index set of a basis specification.
[[nodiscard]] inline std::vector<MultiIndex> build_index_set(const BasisSpec& spec) { return spec.index_set(); }

/// Number of total-degree multi-indices, (P+d)!/(P! d!).
[[nodiscard]] constexpr std::size_t total_degree_count(int degree, int dims) noexcept {
  std::size_t num = 1;
  for (int i = 1; i <= dims; ++i) num = num * static_cast<std::size_t>(degree + i) / static_cast<std::size_t>(i);
  return num;
}

/**
 * Precomputed one-dimensional triple products T(i, j, k) = <Psi_i Psi_j Psi_k>
 * for i, j <= max_degree and k <= max_k. Immutable after construction.
 */
class TripleProductTable {
 public:
  TripleProductTable(int max_degree, int max_k) : n_(max_degree + 1), nk_(max_k + 1) {
    values_.assign(static_cast<std::size_t>(n_ * n_ * nk_), 0.0);
    const QuadratureRule rule = gauss_legendre(nodes_for_exact_degree(2 * max_degree + max_k));
    std::vector<double> psi;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      legendre_eval_all(std::max(max_degree, max_k), rule.nodes[q], psi);
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
          for (int k = 0; k < nk_; ++k) values_[idx(i, j, k)] += rule.weights[q] * psi[i] * psi[j] * psi[k];
    }
    // exact zeros where parity or the triangle inequality forbids a value
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < nk_; ++k)
          if ((i + j + k) % 2 != 0 || i > j + k || j > i + k || k > i + j) values_[idx(i, j, k)] = 0.0;
  }

  [[nodiscard]] double operator()(int i, int j, int k) const { return values_[idx(i, j, k)]; }
  [[nodiscard]] int max_degree() const noexcept { return n_ - 1; }
  [[nodiscard]] int max_k() const noexcept { return nk_ - 1; }

 private:
  [[nodiscard]] std::size_t idx(int i, int j, int k) const noexcept {
    return static_cast<std::size_t>((i * n_ + j) * nk_ + k);
  }

  int n_;
  int nk_;
  std::vector<double> values_;
};

}  // namespace pcshaper
