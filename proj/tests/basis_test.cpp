#include <gtest/gtest.h>

#include <random>
#include <set>
#include <utility>

#include "oracles.hpp"
#include "pcshaper/basis.hpp"

using namespace pcshaper;

TEST(LegendreEval, LowDegreeValues) {
  EXPECT_DOUBLE_EQ(legendre_eval(0, 0.3), 1.0);
  EXPECT_DOUBLE_EQ(legendre_eval(1, -1.0), -1.0);
  EXPECT_DOUBLE_EQ(legendre_eval(2, 0.5), -0.125);
}

TEST(LegendreEval, MatchesExplicitMonomialForm) {
  for (int n = 0; n <= 12; ++n) {
    const auto c = oracle::legendre_monomials(n);
    for (double z : {-1.0, -0.77, -0.2, 0.0, 0.31, 0.9, 1.0}) {
      EXPECT_NEAR(legendre_eval(n, z), oracle::eval_poly(c, z), 1e-13) << "n=" << n << " z=" << z;
    }
  }
}

TEST(LegendreEval, EndpointsAndDomain) {
  for (int n = 0; n <= 60; ++n) {
    EXPECT_NEAR(legendre_eval(n, 1.0), 1.0, 1e-12);
    EXPECT_NEAR(legendre_eval(n, -1.0), n % 2 == 0 ? 1.0 : -1.0, 1e-12);
  }
  EXPECT_THROW((void)legendre_eval(2, 1.5), DomainError);
  EXPECT_THROW((void)legendre_eval(2, -1.0000001), DomainError);
  EXPECT_THROW((void)legendre_eval(-1, 0.0), DomainError);
}

TEST(BasisNorm, Values) {
  EXPECT_DOUBLE_EQ(basis_norm_sq(0), 1.0);
  EXPECT_DOUBLE_EQ(basis_norm_sq(1), 1.0 / 3.0);
  // P_5^2 integrated exactly from its monomial expansion
  const auto p5 = oracle::legendre_monomials(5);
  const double exact = oracle::uniform_expectation(oracle::poly_mul(p5, p5));
  EXPECT_NEAR(exact, 1.0 / 11.0, 1e-15);
  EXPECT_DOUBLE_EQ(basis_norm_sq(5), 1.0 / 11.0);
}

TEST(GaussLegendre, SmallRules) {
  const auto r1 = gauss_legendre(1);
  ASSERT_EQ(r1.size(), 1u);
  EXPECT_DOUBLE_EQ(r1.nodes[0], 0.0);
  EXPECT_DOUBLE_EQ(r1.weights[0], 1.0);

  const auto r2 = gauss_legendre(2);
  ASSERT_EQ(r2.size(), 2u);
  EXPECT_NEAR(r2.nodes[0], -1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(r2.nodes[1], 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(r2.weights[0], 0.5, 1e-15);
  EXPECT_NEAR(r2.weights[1], 0.5, 1e-15);

  const auto r5 = gauss_legendre(5);
  double m4 = 0.0;
  for (std::size_t q = 0; q < r5.size(); ++q) m4 += r5.weights[q] * std::pow(r5.nodes[q], 4);
  EXPECT_NEAR(m4, 0.2, 1e-15);
  EXPECT_THROW((void)gauss_legendre(0), ConfigurationError);
}

TEST(GaussLegendre, MomentExactness) {
  for (int n : {1, 2, 3, 4, 7, 10, 16, 31, 61}) {
    const auto rule = gauss_legendre(n);
    double wsum = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      EXPECT_GT(rule.weights[q], 0.0);
      EXPECT_LT(std::abs(rule.nodes[q]), 1.0);
      wsum += rule.weights[q];
    }
    EXPECT_NEAR(wsum, 1.0, 1e-14);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double m = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q) m += rule.weights[q] * std::pow(rule.nodes[q], k);
      const double exact = (k % 2 == 1) ? 0.0 : 1.0 / (k + 1.0);
      EXPECT_NEAR(m, exact, 1e-14) << "n=" << n << " k=" << k;
    }
  }
}

TEST(InnerProducts, OrthogonalityAndNormsUpToDegree40) {
  const auto rule = gauss_legendre(45);
  std::vector<double> psi;
  std::vector<std::vector<double>> table(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) legendre_eval_all(40, rule.nodes[q], table[q]);
  for (int i = 0; i <= 40; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q) s += rule.weights[q] * table[q][i] * table[q][j];
      if (i == j) {
        EXPECT_NEAR(s, basis_norm_sq(i), 1e-13) << i;
      } else {
        EXPECT_NEAR(s, 0.0, 1e-13) << i << "," << j;
      }
    }
  }
}

TEST(InnerTriple, ExamplesAgainstExactMonomialIntegration) {
  EXPECT_NEAR(inner_triple(0, 0, 0), 1.0, 1e-15);
  EXPECT_NEAR(inner_triple(0, 3, 3), 1.0 / 7.0, 1e-15);
  EXPECT_NEAR(inner_triple(1, 1, 2), 2.0 / 15.0, 1e-15);
  for (int i = 0; i <= 6; ++i)
    for (int j = 0; j <= 6; ++j)
      for (int k = 0; k <= 6; ++k) {
        const auto prod = oracle::poly_mul(oracle::poly_mul(oracle::legendre_monomials(i), oracle::legendre_monomials(j)),
                                           oracle::legendre_monomials(k));
        EXPECT_NEAR(inner_triple(i, j, k), oracle::uniform_expectation(prod), 1e-13);
      }
}

TEST(InnerTriple, SymmetryAndSelectionRules) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> deg(0, 25);
  for (int trial = 0; trial < 300; ++trial) {
    const int i = deg(rng), j = deg(rng), k = deg(rng);
    const double v = inner_triple(i, j, k);
    EXPECT_NEAR(v, inner_triple(j, i, k), 1e-14);
    EXPECT_NEAR(v, inner_triple(k, j, i), 1e-14);
    EXPECT_NEAR(v, inner_triple(i, k, j), 1e-14);
    if ((i + j + k) % 2 == 1 || i > j + k || j > i + k || k > i + j) {
      EXPECT_EQ(v, 0.0);
    } else {
      EXPECT_GT(v, 0.0);
    }
  }
}

TEST(TripleProductTable, AgreesWithInnerTriple) {
  const TripleProductTable t(12, 2);
  for (int i = 0; i <= 12; ++i)
    for (int j = 0; j <= 12; ++j)
      for (int k = 0; k <= 2; ++k) EXPECT_NEAR(t(i, j, k), inner_triple(i, j, k), 1e-15);
}

TEST(IndexSet, Examples) {
  const BasisSpec one(1, 2);
  const std::vector<MultiIndex> expected1{{0, 0}, {1, 0}, {2, 0}};
  EXPECT_EQ(build_index_set(one), expected1);

  const BasisSpec td(2, 2, Truncation::TotalDegree);
  EXPECT_EQ(td.size(), 6u);  // K = 5
  EXPECT_EQ(td.size(), total_degree_count(2, 2));

  const BasisSpec tp(2, 2, Truncation::TensorProduct);
  EXPECT_EQ(tp.size(), 9u);
}

TEST(IndexSet, CountsOrderingAndLookup) {
  for (int p = 0; p <= 30; ++p) {
    for (Truncation tr : {Truncation::TotalDegree, Truncation::TensorProduct}) {
      const BasisSpec b(2, p, tr);
      const std::size_t expected = tr == Truncation::TotalDegree ? static_cast<std::size_t>((p + 2) * (p + 1) / 2)
                                                                 : static_cast<std::size_t>((p + 1) * (p + 1));
      ASSERT_EQ(b.size(), expected);
      EXPECT_EQ(b[0], (MultiIndex{0, 0}));
      std::set<std::pair<int, int>> seen;
      for (std::size_t i = 0; i < b.size(); ++i) {
        EXPECT_TRUE(seen.insert({b[i].j1, b[i].j2}).second);
        EXPECT_EQ(b.position(b[i]), i);
        EXPECT_NEAR(b.norms()[i], 1.0 / ((2.0 * b[i].j1 + 1) * (2.0 * b[i].j2 + 1)), 1e-16);
      }
      // one-variable indices occupy the leading block
      for (int j1 = 0; j1 <= p; ++j1) EXPECT_EQ(b.position({j1, 0}), static_cast<std::size_t>(j1));
      EXPECT_FALSE(b.contains({p + 1, 0}));
    }
  }
  // row-major for tensor product: j2 outer, j1 inner
  const BasisSpec tp(2, 1, Truncation::TensorProduct);
  const std::vector<MultiIndex> expected{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  EXPECT_EQ(tp.index_set(), expected);
}

TEST(BasisSpec, QuadOrderAndValidation) {
  for (int p = 0; p <= 60; ++p) {
    const BasisSpec b(1, p);
    EXPECT_GE(b.quad_order(), p + 2);
    EXPECT_GE(2 * b.quad_order() - 1, 3 * p + 2);
  }
  EXPECT_THROW(BasisSpec(3, 2), ConfigurationError);
  EXPECT_THROW(BasisSpec(1, 61), ConfigurationError);
  EXPECT_THROW(BasisSpec(1, -1), ConfigurationError);
  EXPECT_THROW(BasisSpec(1, 4, Truncation::TotalDegree, 3), ConfigurationError);
  EXPECT_NO_THROW(BasisSpec(1, 4, Truncation::TotalDegree, 20));
}
