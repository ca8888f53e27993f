#include "warpspec/errors.hpp"
#include "warpspec/growth.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace warpspec;

namespace {

const std::vector<RadialFunction> kWeights{constant_function(0.0), linear_weight(0.2), log_weight(2.0)};

const IdentityCheck& find(const std::vector<IdentityCheck>& list, const std::string& name) {
  for (const IdentityCheck& c : list)
    if (c.name == name) return c;
  throw std::runtime_error("missing check " + name);
}

}  // namespace

TEST(Conjugation, ConstantIsReciprocalOfLargestEigenvalue) {
  for (int n = 2; n <= 8; ++n) {
    const double c = 0.5 * (n - 1);
    Eigen::Matrix2d M;
    M << 1, c, c, c * c + 1;
    const double top = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(M).eigenvalues()[1];
    EXPECT_NEAR(conjugation_constant(n), 1 / top, 1e-14) << n;
  }
}

TEST(Conjugation, EnergyInequalityOnRandomData) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int n = 2; n <= 6; ++n) {
    const double c = 0.5 * (n - 1), cn = conjugation_constant(n);
    for (int k = 0; k < 2000; ++k) {
      const double r = 10 * std::abs(g(rng)), phi = g(rng), dphi = g(rng);
      const double u = std::exp(c * r) * phi, du = std::exp(c * r) * (dphi + c * phi);
      const double lhs = cn * (du * du + u * u) * std::exp(-2 * c * r);
      EXPECT_LE(lhs, (dphi * dphi + phi * phi) * (1 + 1e-12));
    }
  }
}

TEST(Potential, UnweightedReducesToShiftedLambda) {
  HyperbolicWarp h;
  const WarpPoint p = h.at(1.7);
  const auto q = conjugated_potential(3, p, {0, 0, 0, 0}, 0.6);
  EXPECT_NEAR(q[0], 0.6 + 1.0 * (2.0 - 2 * p.shape), 1e-14);
  const auto e = conjugated_potential(5, ExponentialWarp().at(3.0), {0, 0, 0, 0}, 0.6);
  EXPECT_EQ(e[0], 0.6);
  EXPECT_EQ(e[1], 0.0);
}

TEST(Identities, ExponentialEndTrivialCase) {
  const WarpProfile p(3, std::make_shared<ExponentialWarp>(), uniform_grid(0.0, 30.0, 0.05));
  IdentityOptions o;
  const auto checks = check_parts_identities(p, {constant_function(1.0)}, {constant_function(0.0)}, o);
  const IdentityCheck& m = find(checks, "radial_mass");
  EXPECT_NEAR(m.lhs, 0.0, 1e-13);
  EXPECT_NEAR(m.rhs, 0.0, 1e-13);
  for (const IdentityCheck& c : checks) EXPECT_TRUE(c.passed()) << c.name << " " << c.residual;
}

TEST(Identities, DivergenceIntegralMatchesIndependentQuadrature) {
  const WarpProfile p(3, std::make_shared<HyperbolicWarp>(), uniform_grid(0.01, 25.0, 0.01));
  IdentityOptions o;
  o.s = 1;
  o.t = 20;
  const auto checks = check_parts_identities(p, default_test_functions(), kWeights, o);
  const IdentityCheck& d = find(checks, "parts_divergence");
  auto integrand = [](double r) {
    const double X = std::exp(-r / 3), dX = -X / 3, s = std::sinh(r);
    return 4 * std::numbers::pi * std::exp(-2 * r) * s * s * (dX + 2 * std::cosh(r) / s * X);
  };
  const double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 1.0, 20.0, 20, 1e-15);
  EXPECT_NEAR(d.lhs, oracle, 1e-12 * std::abs(oracle));
}

TEST(Identities, AllPassOnModelSpaces) {
  IdentityOptions o;
  o.s = 1;
  o.t = 20;
  for (int n : {2, 3, 5}) {
    for (WarpModelPtr m : {WarpModelPtr(std::make_shared<HyperbolicWarp>()), WarpModelPtr(std::make_shared<EuclideanWarp>())}) {
      const WarpProfile p(n, m, uniform_grid(0.01, 25.0, 0.01));
      for (const IdentityCheck& c : check_parts_identities(p, default_test_functions(), kWeights, o))
        EXPECT_LE(c.residual, 1e-7) << m->name() << " n=" << n << " " << c.name << " [" << c.data << "]";
    }
  }
}

TEST(Identities, NonzeroBetaAndEpsilon) {
  IdentityOptions o;
  o.s = 2;
  o.t = 15;
  o.beta = 1.5;
  o.gamma = 0.7;
  o.epsilon = 0.3;
  const WarpProfile p(4, std::make_shared<WvnWarp>(1.2), uniform_grid(1.0, 20.0, 0.01));
  for (const IdentityCheck& c : check_parts_identities(p, default_test_functions(), kWeights, o))
    EXPECT_LE(c.residual, 1e-7) << c.name << " [" << c.data << "]";
}

TEST(Identities, WindowMustLieInDomain) {
  const WarpProfile p(3, std::make_shared<WvnWarp>(1.0), uniform_grid(1.0, 20.0, 0.01));
  IdentityOptions o;
  o.s = 0.5;
  EXPECT_THROW(check_parts_identities(p, default_test_functions(), kWeights, o), ConfigError);
  o.s = 3;
  o.t = 2;
  EXPECT_THROW(check_parts_identities(p, default_test_functions(), kWeights, o), ConfigError);
}

TEST(Growth, SeriesMatchesClosedFormOnHyperbolicSpace) {
  const double kappa = 1.1, alpha = 1 + kappa * kappa;
  const WarpProfile p(3, std::make_shared<HyperbolicWarp>(), uniform_grid(0.5, 60.0, 0.01));
  SolverOptions so;
  so.spacing = 0.05;
  // w = sinh(r) phi with phi = sin(kappa r) / sinh(r), so w = sin(kappa r).
  const ShootingResult w = integrate_schrodinger(constant_potential(1.0), alpha, std::sin(kappa), kappa * std::cos(kappa),
                                                 1.0, 50.0, so);
  const GrowthSeries g = growth_series(p, w, alpha, 1.0);
  EXPECT_LE(g.residual, 1e-4);
  for (Eigen::Index i = 0; i < g.t.size(); i += 17) {
    const double r = g.t[i], s = std::sinh(r);
    const double phi = std::sin(kappa * r) / s;
    const double dphi = (kappa * std::cos(kappa * r) * s - std::sin(kappa * r) * std::cosh(r)) / (s * s);
    const double I = 4 * std::numbers::pi * s * s * (dphi * dphi + phi * phi);
    EXPECT_NEAR(g.I[i], I, 1e-8 * I) << r;
    EXPECT_NEAR(g.t_gamma_I[i], r * I, 1e-8 * r * I);
  }
  EXPECT_THROW(growth_series(p, w, 0.9, 1.0), OutsideRegime);
}

TEST(Growth, DecayingCurvatureGivesGrowingSolutions) {
  const WarpProfile p(3, std::make_shared<PowerTailWarp>(1.0, 1.5), uniform_grid(1.0, 1000.0, 0.05));
  const GrowthVerdict v = verify_growth_theorem(p, 2.0, 1.0);
  EXPECT_TRUE(v.passed);
  EXPECT_LT(v.decay_slope, -0.4);
  ASSERT_EQ(v.trials.size(), 5u);
  const GrowthVerdict again = verify_growth_theorem(p, 2.0, 1.0);
  for (std::size_t i = 0; i < v.trials.size(); ++i) EXPECT_EQ(v.trials[i].theta, again.trials[i].theta);
  GrowthTrialOptions other;
  other.seed = 5;
  EXPECT_NE(verify_growth_theorem(p, 2.0, 1.0, other).trials[0].theta, v.trials[0].theta);
}

TEST(Growth, NonDecayingCurvatureIsRefused) {
  const WarpProfile p(3, std::make_shared<WvnWarp>(1.0), uniform_grid(1.0, 1000.0, 0.05));
  EXPECT_THROW(verify_growth_theorem(p, 2.0, 1.0), HypothesisViolated);
}

TEST(Growth, HarmonicDecayMakesShellEnergyDiverge) {
  // t I(t) = 1 gives int_1^R I = log R.
  GrowthSeries s;
  s.t = uniform_grid(1.0, 1e4, 0.01);
  s.I = s.t.cwiseInverse();
  s.t_gamma_I = VectorXd::Ones(s.t.size());
  for (double R : {10.0, 100.0, 1e4}) EXPECT_NEAR(shell_energy(s, 1, R), std::log(R), 1e-5 * std::log(R));
  EXPECT_NEAR(windowed_mean(s, 500, 3.0), 1.0, 1e-14);
  // t I = 1/t stays bounded.
  s.I = s.t.array().square().inverse();
  EXPECT_NEAR(shell_energy(s, 1, 1e4), 1 - 1e-4, 1e-4);
}

TEST(Conditions, HatConstantsAndThresholds) {
  const GrowthConditions zero = shape_bound_conditions(3, 1.0, 0, 0, 0, 1.01);
  EXPECT_DOUBLE_EQ(zero.alpha_threshold, 1.0);
  EXPECT_TRUE(zero.holds());
  EXPECT_FALSE(shape_bound_conditions(3, 1.0, 0, 0, 0, 1.0).holds());

  // n = 3, A1 = B1 = b1 = 0.1: hats 0.2, m1 = max(1/1.6, 1/1.6) = 0.625.
  const GrowthConditions s = shape_bound_conditions(3, 1.0, 0.1, 0.1, 0.1, 2.0);
  EXPECT_NEAR(s.A_hat, 0.2, 1e-15);
  EXPECT_NEAR(s.m1, 0.625, 1e-15);
  EXPECT_NEAR(s.alpha_threshold, 1 + 2 * (0.4 + 0.2) * 0.625, 1e-14);
  const GrowthConditions k = curvature_bound_conditions(3, 1.0, 0.1, 0.1, 2.0);
  EXPECT_NEAR(k.alpha_threshold, 1 + 4 * 0.4 * 0.625, 1e-14);
  EXPECT_FALSE(k.holds());

  // gamma enters only through the second denominator.
  EXPECT_NEAR(shape_bound_conditions(3, 0.5, 0.1, 0.1, 0.0, 5).m1, 1 / (1.0 - 0.4), 1e-14);
  EXPECT_FALSE(shape_bound_conditions(3, 1.0, 0.5, 0.0, 0.0, 100).positivity);
  EXPECT_FALSE(shape_bound_conditions(3, 0.2, 0.1, 0.1, 0.0, 100).positivity);
}
