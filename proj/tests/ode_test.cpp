#include <gtest/gtest.h>

#include <cmath>

#include "pcshaper/ode.hpp"

using namespace pcshaper;

TEST(DormandPrince, HarmonicOscillatorAtTightTolerance) {
  const double w = 2.5;
  ode::State y{1.0, 0.0};
  auto rhs = [w](double, std::span<const double> s, std::span<double> ds) {
    ds[0] = s[1];
    ds[1] = -w * w * s[0];
  };
  ode::StepperOptions opt;
  opt.tol = {1e-12, 1e-12};
  const auto stats = ode::integrate_segment(rhs, y, 0.0, 20.0, opt);
  EXPECT_NEAR(y[0], std::cos(w * 20.0), 1e-9);
  EXPECT_NEAR(y[1], -w * std::sin(w * 20.0), 1e-9);
  EXPECT_GT(stats.accepted, 100u);
  EXPECT_EQ(stats.rhs_evals, 2 + 6 * (stats.accepted + stats.rejected));
}

TEST(DormandPrince, FifthOrderConvergence) {
  // error ratio between tolerances reflects the local error model err ~ h^5
  auto run = [](double tol) {
    ode::State y{1.0};
    auto rhs = [](double t, std::span<const double> s, std::span<double> ds) { ds[0] = -2.0 * t * s[0]; };
    ode::StepperOptions opt;
    opt.tol = {tol, tol};
    ode::integrate_segment(rhs, y, 0.0, 2.0, opt);
    return std::abs(y[0] - std::exp(-4.0));
  };
  EXPECT_LT(run(1e-6), 1e-5);
  EXPECT_LT(run(1e-10), 1e-9);
  EXPECT_LT(run(1e-10), run(1e-6));
}

TEST(DormandPrince, HermiteDenseOutputTracksSolution) {
  const double w = 3.0;
  ode::State y{0.0, w};
  auto rhs = [w](double, std::span<const double> s, std::span<double> ds) {
    ds[0] = s[1];
    ds[1] = -w * w * s[0];
  };
  ode::StepperOptions opt;
  opt.tol = {1e-12, 1e-12};
  double worst = 0.0;
  ode::integrate_segment(rhs, y, 0.0, 5.0, opt, [&](const ode::StepView& s) {
    for (double f : {0.25, 0.5, 0.75}) {
      const double t = s.t0 + f * (s.t1 - s.t0);
      worst = std::max(worst, std::abs(ode::hermite(s, 0, t) - std::sin(w * t)));
    }
  });
  EXPECT_LT(worst, 1e-8);
}

TEST(DormandPrince, ContinuousExtensionBeatsHermiteOnVelocity) {
  const double w = 3.0;
  ode::State y{0.0, w};
  auto rhs = [w](double, std::span<const double> s, std::span<double> ds) {
    ds[0] = s[1];
    ds[1] = -w * w * s[0];
  };
  ode::StepperOptions opt;
  opt.tol = {1e-12, 1e-12};
  double worst_dense = 0.0, worst_hermite = 0.0, ends = 0.0;
  ode::integrate_segment(rhs, y, 0.0, 5.0, opt, [&](const ode::StepView& s) {
    ends = std::max({ends, std::abs(ode::dense_output(s, 1, s.t0) - s.y0[1]),
                     std::abs(ode::dense_output(s, 1, s.t1) - s.y1[1])});
    for (double f : {0.2, 0.5, 0.8}) {
      const double t = s.t0 + f * (s.t1 - s.t0);
      worst_dense = std::max(worst_dense, std::abs(ode::dense_output(s, 1, t) - w * std::cos(w * t)));
      worst_hermite = std::max(worst_hermite, std::abs(ode::hermite(s, 1, t) - w * std::cos(w * t)));
    }
  });
  EXPECT_LT(ends, 1e-15);
  EXPECT_LT(worst_dense, 1e-9);
  EXPECT_LT(worst_dense, 0.5 * worst_hermite);
}

TEST(DormandPrince, ZeroLengthSegmentIsNoop) {
  ode::State y{3.0};
  auto rhs = [](double, std::span<const double>, std::span<double> ds) { ds[0] = 1.0; };
  const auto stats = ode::integrate_segment(rhs, y, 1.0, 1.0, {});
  EXPECT_EQ(y[0], 3.0);
  EXPECT_EQ(stats.accepted, 0u);
}

TEST(DormandPrince, BlowUpReportsFailureTime) {
  // y' = y^2, y(0) = 1 has a pole at t = 1
  ode::State y{1.0};
  auto rhs = [](double, std::span<const double> s, std::span<double> ds) { ds[0] = s[0] * s[0]; };
  ode::StepperOptions opt;
  opt.tol = {1e-10, 1e-10};
  try {
    ode::integrate_segment(rhs, y, 0.0, 2.0, opt);
    FAIL() << "expected IntegrationError";
  } catch (const IntegrationError& e) {
    EXPECT_GT(e.failure_time(), 0.9);
    EXPECT_LE(e.failure_time(), 1.0 + 1e-6);
  }
}

TEST(SegmentEdges, SortsDeduplicatesAndClips) {
  const std::vector<double> bps{3.0, 1.0, 1.0, -2.0, 10.0, 5.0};
  const auto edges = ode::segment_edges(0.0, 5.0, bps);
  const std::vector<double> expected{0.0, 1.0, 3.0, 5.0};
  EXPECT_EQ(edges, expected);
}
