#include "warpspec/errors.hpp"
#include "warpspec/halfline.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/numeric/odeint.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

using namespace warpspec;

namespace {

std::array<double, 2> odeint_oracle(const Potential& q, double lambda, double w0, double dw0, double a, double b) {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 2>;
  State y{w0, dw0};
  auto stepper = odeint::make_controlled(1e-14, 1e-14, odeint::runge_kutta_fehlberg78<State>());
  odeint::integrate_adaptive(
      stepper, [&](const State& s, State& d, double x) { d = {s[1], (q.q(x) - lambda) * s[0]}; }, y, a, b, 1e-3);
  return y;
}

Potential centrifugal(double l) {
  Potential p;
  p.q = [l](double x) { return l * (l + 1) / (x * x); };
  p.regular_part = [](double) { return 0.0; };
  p.origin_exponent = l + 1;
  p.limit = 0;
  p.tail.present = false;
  return p;
}

}  // namespace

TEST(Shooting, FreeWaveIsCosine) {
  const Potential q = constant_potential(0.5);
  const ShootingResult r = integrate_schrodinger(q, 0.5 + 4.0, 1.0, 0.0, 0.0, 300.0);
  const VectorXd w = r.true_w(), dw = r.true_w_prime();
  for (Eigen::Index i = 0; i < r.x.size(); ++i) {
    EXPECT_NEAR(w[i], std::cos(2 * r.x[i]), 1e-8);
    EXPECT_NEAR(dw[i], -2 * std::sin(2 * r.x[i]), 2e-8);
  }
}

TEST(Shooting, GrowthIsCarriedByLogScale) {
  const Potential q = constant_potential(1.0);
  const ShootingResult r = integrate_schrodinger(q, 0.0, 1.0, 0.0, 0.0, 800.0);
  const Eigen::Index last = r.x.size() - 1;
  // w = cosh x, far beyond the range of a double.
  const double log_w = r.log_scale[last] + std::log(std::abs(r.w[last]));
  EXPECT_NEAR(log_w, 800.0 - std::log(2.0), 1e-9 * 800);
}

TEST(Shooting, AgreesWithIndependentIntegrator) {
  const Potential q = wvn_potential(2.5);
  const ShootingResult r = integrate_schrodinger(q, 1.3, 0.2, -0.7, 1.0, 60.0);
  const auto y = odeint_oracle(q, 1.3, 0.2, -0.7, 1.0, 60.0);
  const Eigen::Index last = r.x.size() - 1;
  EXPECT_NEAR(r.true_w()[last], y[0], 1e-9);
  EXPECT_NEAR(r.true_w_prime()[last], y[1], 1e-9);
}

TEST(Shooting, BackwardRunReturnsToStart) {
  const Potential q = wvn_potential(3.0);
  const ShootingResult f = integrate_schrodinger(q, 1.0, 1.0, 0.0, 1.0, 500.0);
  const Eigen::Index last = f.x.size() - 1;
  const ShootingResult b =
      integrate_schrodinger(q, 1.0, f.true_w()[last], f.true_w_prime()[last], 500.0, 1.0);
  // Samples are stored in increasing x whatever the direction.
  EXPECT_EQ(b.direction, Direction::backward);
  EXPECT_NEAR(b.x[0], 1.0, 1e-14);
  EXPECT_NEAR(b.true_w()[0], 1.0, 1e-6);
  EXPECT_NEAR(b.true_w_prime()[0], 0.0, 1e-6);
}

TEST(Shooting, RegularSolutionIsRiccatiBessel) {
  const double kappa = 1.3;
  const Potential q = centrifugal(1);
  const ShootingResult r = regular_solution(q, kappa * kappa, 40.0);
  const VectorXd w = r.true_w();
  auto exact = [&](double x) { return x * boost::math::sph_bessel(1, kappa * x); };
  const double scale = w[w.size() - 1] / exact(r.x[r.x.size() - 1]);
  for (Eigen::Index i = 0; i < r.x.size(); ++i) {
    if (std::abs(exact(r.x[i])) < 0.05) continue;
    EXPECT_NEAR(w[i] / exact(r.x[i]), scale, 1e-7 * std::abs(scale)) << r.x[i];
  }
}

TEST(Shooting, FrobeniusStartLeadingTerm) {
  const FrobeniusStart s = frobenius_start(centrifugal(2), 1.0, 0.01);
  EXPECT_NEAR(s.log_scale, 3 * std::log(0.01), 1e-14);
  EXPECT_NEAR(s.w, 1.0, 1e-4);
  EXPECT_NEAR(s.w_prime * 0.01, 3.0, 1e-3);
}

TEST(Prufer, CosineHasUnitAmplitudeAndLinearPhase) {
  ShootingResult r = integrate_schrodinger(constant_potential(0.0), 4.0, 1.0, 0.0, 0.0, 100.0);
  prufer_series(r);
  for (Eigen::Index i = 0; i < r.x.size(); ++i) {
    EXPECT_NEAR(r.log_amplitude[i], 0.0, 1e-8);
    EXPECT_NEAR(r.phase[i] - r.phase[0], 2 * r.x[i], 1e-7);
  }
  ShootingResult below = integrate_schrodinger(constant_potential(1.0), 0.5, 1.0, 0.0, 0.0, 1.0);
  EXPECT_THROW(prufer_series(below), NonOscillatory);
}

TEST(DecayFit, PowerLawAmplitude) {
  const VectorXd x = uniform_grid(1.0, 2000.0, 0.5);
  VectorXd la = (-0.3 * x.array().log()).matrix();
  const DecayFit f = fit_power_decay(x, la, 100, 1000);
  EXPECT_NEAR(f.exponent, -0.3, 1e-12);
  EXPECT_THROW(fit_power_decay(x, la, 100, 500), InsufficientData);
}

TEST(Detector, StrongCouplingFiresAtResonance) {
  const Potential q = wvn_potential(4.0);
  DetectorOptions o;
  o.x_start = 1.0;
  const DetectionReport rep = detect_embedded_eigenvalue(q, lambda_grid(0.9, 1.1, 0.02), OriginCondition::free, o);
  ASSERT_EQ(rep.eigenvalues.size(), 1u);
  EXPECT_NEAR(rep.eigenvalues[0].lambda, 1.0, 2e-3);
  EXPECT_NEAR(rep.eigenvalues[0].exponent, -1.0, 0.05);
  EXPECT_LE(rep.max_wronskian_drift, 1e-6);
}

TEST(Detector, WeakCouplingStaysSilent) {
  const Potential q = wvn_potential(1.0);
  DetectorOptions o;
  o.x_start = 1.0;
  const DetectionReport rep = detect_embedded_eigenvalue(q, lambda_grid(0.9, 1.1, 0.02), OriginCondition::free, o);
  EXPECT_TRUE(rep.eigenvalues.empty());
}

TEST(Detector, RefusesWithoutTailData) {
  Potential q = constant_potential(0.0);
  q.tail.present = false;
  EXPECT_THROW(detect_embedded_eigenvalue(q, {0.5}, OriginCondition::free), DetectorRefused);
}

TEST(Decaying, ResonantAmplitudeExponent) {
  ShootingResult r = decaying_solution(wvn_potential(3.0), 1.0, 1000.0);
  if (r.log_amplitude.size() != r.x.size()) prufer_series(r);
  const DecayFit f = fit_power_decay(r.x, r.log_amplitude, 100, 1000);
  EXPECT_NEAR(f.exponent, -0.75, 0.05);
}

TEST(Wronskian, ConstantForTwoSolutions) {
  const Potential q = wvn_potential(2.0);
  const ShootingResult a = integrate_schrodinger(q, 1.2, 1.0, 0.0, 1.0, 2000.0);
  const ShootingResult b = integrate_schrodinger(q, 1.2, 0.0, 1.0, 1.0, 2000.0);
  EXPECT_LE(wronskian_drift(a, b), 1e-6);
}

TEST(Grid, LambdaGridEndpoints) {
  const auto g = lambda_grid(1.5, 2.5, 1e-3);
  ASSERT_EQ(g.size(), 1001u);
  EXPECT_EQ(g.front(), 1.5);
  EXPECT_NEAR(g.back(), 2.5, 1e-12);
  EXPECT_THROW(lambda_grid(1.0, 0.0, 0.1), ConfigError);
}

TEST(Threads, EnvironmentCapsWorkers) {
  setenv("WARPSPEC_THREADS", "2", 1);
  EXPECT_EQ(worker_threads(8), 2u);
  EXPECT_EQ(worker_threads(1), 1u);
  unsetenv("WARPSPEC_THREADS");
  EXPECT_EQ(worker_threads(3), 3u);
}
