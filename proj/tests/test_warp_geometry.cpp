#include "warpspec/curvature.hpp"
#include "warpspec/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace warpspec;

namespace {

WarpProfile on_grid(int n, WarpModelPtr model, double lo, double hi, double h) {
  return WarpProfile(n, std::move(model), uniform_grid(lo, hi, h));
}

// Independent integration of f' = -f^2 - K(r) with an embedded RK78 stepper.
double riccati_oracle(const std::function<double(double)>& K, double f0, double r0, double r1) {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 1>;
  State y{f0};
  auto stepper = odeint::make_controlled(1e-14, 1e-14, odeint::runge_kutta_fehlberg78<State>());
  odeint::integrate_adaptive(stepper, [&](const State& s, State& d, double r) { d[0] = -s[0] * s[0] - K(r); }, y, r0,
                             r1, 1e-3);
  return y[0];
}

}  // namespace

TEST(Curvature, ExponentialWarpIsExact) {
  const CurvatureField f = curvature_of_profile(on_grid(4, std::make_shared<ExponentialWarp>(), 0.0, 30.0, 0.05));
  for (Eigen::Index i = 0; i < f.r.size(); ++i) {
    EXPECT_EQ(f.S[i], 1.0);
    EXPECT_EQ(f.K_rad[i], -1.0);
    EXPECT_EQ(f.laplacian_r[i], 3.0);
    EXPECT_EQ(f.ricci_rr[i], -3.0);
  }
  EXPECT_LE(bochner_residual(f), 1e-10);
}

TEST(Curvature, HyperbolicMatchesCothAndConstantCurvature) {
  const CurvatureField f = curvature_of_profile(on_grid(3, std::make_shared<HyperbolicWarp>(), 0.01, 40.0, 0.01));
  for (Eigen::Index i = 0; i < f.r.size(); i += 37) {
    const double coth = std::cosh(f.r[i]) / std::sinh(f.r[i]);
    EXPECT_NEAR(f.S[i], coth, 1e-13 * coth);
    EXPECT_NEAR(f.laplacian_r[i], 2 * coth, 2e-13 * coth);
    EXPECT_NEAR(f.K_rad[i], -1.0, 1e-10);
  }
  EXPECT_LE(bochner_residual(f), 1e-6);
}

TEST(Curvature, OscillatoryShapeAtTen) {
  WvnWarp w(2.0);
  EXPECT_NEAR(w.at(10.0).shape, 1.0 + 2.0 * std::sin(20.0) / 10.0, 1e-14);
  EXPECT_NEAR(w.at(10.0).shape, 1.1825890, 1e-7);
}

TEST(Curvature, OscillatoryLogFMatchesQuadratureOfShape) {
  WvnWarp w(1.3);
  auto S = [](double r) { return 1.0 + 1.3 * std::sin(2 * r) / r; };
  for (double r : {1.5, 7.0, 42.0, 300.0}) {
    double integral = 0;
    for (double a = 1.0; a < r; a += 0.5)
      integral += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(S, a, std::min(a + 0.5, r), 0);
    EXPECT_NEAR(w.at(r).log_f, integral, 1e-11 * std::max(1.0, r)) << r;
  }
}

TEST(Curvature, TraceResidualOnOscillatoryProfile) {
  const CurvatureField f = curvature_of_profile(on_grid(3, std::make_shared<WvnWarp>(1.0), 1.0, 100.0, 1e-3));
  EXPECT_LE(bochner_residual(f), 1e-5);
}

TEST(Curvature, CoarseGridIsRejected) {
  EXPECT_THROW(curvature_of_profile(on_grid(3, std::make_shared<WvnWarp>(1.0), 1.0, 100.0, 0.5)), ResolutionError);
}

TEST(Curvature, TabulatedDerivativesAgreeWithSamples) {
  const VectorXd r = uniform_grid(1.0, 6.0, 0.01);
  VectorXd f = r.array().sinh(), fp = r.array().cosh(), fpp = r.array().sinh();
  const WarpProfile p = WarpProfile::tabulated(3, r, f, fp, fpp);
  EXPECT_LE(p.derivative_mismatch(), 1e-6);
  const CurvatureField field = curvature_of_profile(p);
  for (Eigen::Index i = 0; i < r.size(); ++i) EXPECT_NEAR(field.K_rad[i], -1.0, 1e-12);
}

TEST(Profile, JsonRoundTrip) {
  const WarpProfile a = on_grid(3, std::make_shared<WvnWarp>(0.75), 1.0, 20.0, 0.05);
  const WarpProfile b = WarpProfile::from_json(a.to_json());
  EXPECT_EQ(b.n(), 3);
  EXPECT_EQ(b.model().name(), "wvn");
  ASSERT_EQ(a.grid().size(), b.grid().size());
  for (Eigen::Index i = 0; i < a.grid().size(); ++i) EXPECT_EQ(a.shape()[i], b.shape()[i]);

  const VectorXd r = uniform_grid(1.0, 3.0, 0.1);
  const WarpProfile t = WarpProfile::tabulated(2, r, r.array().exp(), r.array().exp(), r.array().exp());
  const WarpProfile u = WarpProfile::from_json(t.to_json());
  EXPECT_EQ(u.kind(), ProfileKind::tabulated);
  for (Eigen::Index i = 0; i < r.size(); ++i) EXPECT_DOUBLE_EQ(u.log_f()[i], r[i]);
}

TEST(Riccati, ConstantCurvatureIsTanh) {
  const VectorXd grid = uniform_grid(0.5, 20.0, 0.1);
  const RiccatiBound b = solve_riccati_bound(0.0, 0.0, 0.5, 1.0, grid);
  for (Eigen::Index i = 0; i < b.r.size(); ++i) {
    EXPECT_NEAR(b.f1_curve[i], std::tanh(b.r[i] - 0.5), 1e-10);
    EXPECT_NEAR(b.f2_curve[i], 1.0, 1e-10);
  }
}

TEST(Riccati, LowerSolutionAgreesWithIndependentIntegrator) {
  const VectorXd grid = uniform_grid(1.0, 100.0, 0.5);
  const RiccatiBound b = solve_riccati_bound(0.5, 0.5, 1.0, 1.5, grid);
  const double oracle = riccati_oracle([](double r) { return -1.0 + 1.0 / r; }, 0.0, 1.0, 100.0);
  EXPECT_NEAR(b.f1_curve[b.f1_curve.size() - 1], oracle, 1e-10);
  // Second-order expansion 1 - A/r - (A + A^2)/(2 r^2) at r = 100.
  EXPECT_NEAR(oracle, 1 - 0.005 - 0.75 / 2e4, 1e-6);
  const double upper = riccati_oracle([](double r) { return -1.0 - 1.0 / r; }, 1.5, 1.0, 100.0);
  EXPECT_NEAR(b.f2_curve[b.f2_curve.size() - 1], upper, 1e-10);
  for (Eigen::Index i = 0; i < b.r.size(); ++i) {
    EXPECT_GE(b.f1_curve[i], 0.0);
    EXPECT_LE(b.f1_curve[i], b.f2_curve[i]);
  }
}

TEST(Riccati, SecondOrderTermOfLowerSolution) {
  // f = 1 - A/r - (A + A^2)/(2 r^2) + O(r^-3) solves f' + f^2 - 1 + 2A/r = 0.
  const double A = 0.5;
  const VectorXd grid = uniform_grid(1.0, 400.0, 1.0);
  const RiccatiBound b = solve_riccati_bound(A, A, 1.0, 1.5, grid);
  const Eigen::Index last = b.r.size() - 1;
  const double r = b.r[last];
  EXPECT_NEAR(r * r * (1.0 - A / r - b.f1_curve[last]), 0.5 * (A + A * A), 0.01);
}

TEST(Riccati, BlowUpIsReported) {
  const VectorXd grid = uniform_grid(1.0, 50.0, 0.5);
  try {
    solve_riccati_bound(0.1, 0.1, 1.0, -2.0, grid);
    FAIL() << "expected a comparison failure";
  } catch (const ComparisonFailure& e) {
    EXPECT_GT(e.radius(), 1.0);
    EXPECT_LT(e.radius(), 50.0);
  }
}

TEST(Comparison, ExponentialAlwaysInsideBounds) {
  const WarpProfile p = on_grid(3, std::make_shared<ExponentialWarp>(), 0.0, 50.0, 0.1);
  EXPECT_TRUE(hessian_comparison_check(p, 0.3, 0.2, 1.0).holds);
}

TEST(Comparison, HyperbolicViolatesNearStart) {
  const WarpProfile p = on_grid(3, std::make_shared<HyperbolicWarp>(), 0.1, 50.0, 0.01);
  const ComparisonCheck c = hessian_comparison_check(p, 0.1, 0.1, 1.0);
  EXPECT_FALSE(c.holds);
  ASSERT_TRUE(c.first_violation.has_value());
  EXPECT_NEAR(*c.first_violation, 1.0, 0.011);
}

TEST(Comparison, RandomOscillatoryProfilesAreSandwiched) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> kd(-0.8, 0.8), wd(1.0, 3.0), pd(0.0, 6.28);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<OscillatoryWarp::Mode> modes{{kd(rng), wd(rng), pd(rng)}, {kd(rng), wd(rng), pd(rng)}};
    const WarpProfile p = on_grid(3, std::make_shared<OscillatoryWarp>(modes), 1.0, 400.0, 0.01);
    const CurvatureField f = curvature_of_profile(p);
    double A = 0, B = 0;
    for (Eigen::Index i = 0; i < f.r.size(); ++i) {
      if (f.r[i] < 5) continue;
      A = std::max(A, 0.5 * f.r[i] * (f.K_rad[i] + 1.0));
      B = std::max(B, -0.5 * f.r[i] * (f.K_rad[i] + 1.0));
    }
    A += 0.05;
    B += 0.05;
    const double r0 = std::max(5.0, 2 * A);
    const RiccatiBound bound = solve_riccati_bound(A, B, r0, 3.0, p.grid());
    const ComparisonCheck c = riccati_sandwich(p, bound);
    EXPECT_TRUE(c.holds) << "trial " << trial << " at " << c.first_violation.value_or(-1);
  }
}

TEST(Fit, LogLogSlopeOfPowerLaw) {
  const VectorXd r = uniform_grid(1.0, 1000.0, 0.5);
  const VectorXd y = r.array().pow(-1.5);
  EXPECT_NEAR(log_log_slope(r, y, 10, 1000).slope, -1.5, 1e-12);
}
