#include "warpspec/construction.hpp"
#include "warpspec/curvature.hpp"
#include "warpspec/errors.hpp"
#include "warpspec/growth.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

using namespace warpspec;

namespace {

const GluedConstruction& example() {
  static const GluedConstruction g = [] {
    ConstructionOptions o;
    o.R_max = 1000;
    return build_example(o);
  }();
  return g;
}

}  // namespace

TEST(Threshold, CouplingThresholdForThreeSpace) {
  EXPECT_NEAR(coupling_threshold(3), 1 / std::sqrt(2.0), 1e-15);
  for (int n = 2; n <= 7; ++n) {
    const double m = n - 1;
    EXPECT_NEAR(coupling_threshold(n), 4 / (m * std::sqrt(m * m + 4)), 1e-14);
    EXPECT_DOUBLE_EQ(resonance_eigenvalue(n), m * m / 4 + 1);
  }
  EXPECT_THROW(reference_profile(3, 0.5, 100.0), CouplingTooWeak);
}

TEST(Disk, FirstZeroMatchesBesselOracle) {
  for (int n = 2; n <= 6; ++n) {
    const DiskEigenfunction d = disk_eigenfunction(n);
    const double nu = 0.5 * (n - 2);
    const double b = resonance_eigenvalue(n);
    const double zero = boost::math::cyl_bessel_j_zero(nu, 1);
    EXPECT_NEAR(d.r1, zero / std::sqrt(b), 1e-12 * d.r1) << n;
    EXPECT_NEAR(d.value(d.r1), 0.0, 1e-12);
    EXPECT_NEAR(d.value(0.0), 1.0, 1e-14);
    for (double r : {0.3, 1.0, 0.9 * d.r1}) {
      const double x = std::sqrt(b) * r;
      const double H = boost::math::tgamma(nu + 1) * std::pow(2 / x, nu) * boost::math::cyl_bessel_j(nu, x);
      EXPECT_NEAR(d.value(r), H, 1e-12) << n << " " << r;
    }
  }
  EXPECT_NEAR(disk_eigenfunction(3).r1, std::numbers::pi / std::sqrt(2.0), 1e-9);
}

TEST(Disk, SecondDerivativeSolvesRadialEquation) {
  const DiskEigenfunction d = disk_eigenfunction(4);
  for (double r : {0.2, 1.0, 2.0}) {
    const double lhs = d.second_derivative(r) + 3.0 / r * d.derivative(r) + d.b * d.value(r);
    EXPECT_NEAR(lhs, 0.0, 1e-11);
  }
}

TEST(Jet, RadialJetOnExponentialEnd) {
  // psi'' + 2 psi' + 2 psi = 0 with psi = 1, psi' = 0.
  const auto jet = radial_jet([](int k) { return k == 0 ? 1.0 : 0.0; }, 1.0, 0.0, 3, 2.0, 4);
  ASSERT_GE(jet.size(), 5u);
  EXPECT_DOUBLE_EQ(jet[2], -2.0);
  EXPECT_DOUBLE_EQ(jet[3], 4.0);
  EXPECT_DOUBLE_EQ(jet[4], -4.0);
}

TEST(Jet, LogDerivativeOfGaussian) {
  // u = -exp(x^2) at x = 0.5: log(-u) = x^2.
  const double x = 0.5, e = std::exp(x * x);
  const std::vector<double> u{-e, -2 * x * e, -(2 + 4 * x * x) * e};
  const auto g = log_derivative_jet(u);
  EXPECT_NEAR(g[0], x * x, 1e-15);
  EXPECT_NEAR(g[1], 2 * x, 1e-14);
  EXPECT_NEAR(g[2], 2.0, 1e-13);
}

TEST(Junction, CandidatesNeedBothNegative) {
  const VectorXd r = uniform_grid(0.0, 10.0, 0.01);
  VectorXd h = r.array().cos(), dh = -r.array().sin();
  const auto c = junction_candidates(r, h, dh, 1.0, 0.1, 3, 0.05);
  ASSERT_FALSE(c.empty());
  for (double x : c) {
    EXPECT_LT(std::cos(x), -0.1);
    EXPECT_LT(-std::sin(x), -0.1);
  }
  EXPECT_GT(c.front(), std::numbers::pi / 2);
  EXPECT_THROW(choose_junction(r, VectorXd::Ones(r.size()), VectorXd::Ones(r.size()), 1.0), ConnectorFailure);
}

TEST(Glued, PiecesAndJunctions) {
  const GluedConstruction& g = example();
  EXPECT_NEAR(g.connector.r1, std::numbers::pi / std::sqrt(2.0), 1e-9);
  EXPECT_GT(g.connector.r2, g.connector.r1);
  EXPECT_GT(g.connector.monotonicity_margin(), 0.0);
  EXPECT_LE(f_prime_jump(g), 1e-6);
  EXPECT_LE(disk_identity_error(g.connector), 1e-8);
  const WarpProfile& p = *g.profile;
  for (Eigen::Index i = 0; i < p.grid().size(); ++i) {
    const double r = p.grid()[i];
    if (r <= g.connector.r1) EXPECT_NEAR(std::exp(p.log_f()[i]) / r, 1.0, 1e-8);
    if (r > g.connector.r2 + 1e-9) EXPECT_NEAR(p.shape()[i], 1.0 + std::sin(2 * r) / r, 1e-12);
  }
}

TEST(Glued, EigenEquationResidual) {
  const VectorXd res = glued_ode_residual(example());
  double worst = 0;
  for (Eigen::Index i = 0; i < res.size(); ++i)
    if (std::isfinite(res[i])) worst = std::max(worst, res[i]);
  EXPECT_LE(worst, 1e-6);
}

TEST(Glued, WarpUnchangedWhenEigenfunctionRescaled) {
  const GluedConstruction& g = example();
  const GluedConstruction h = glue_profile(g.connector.scaled(3.0), g.resonant, 0.01);
  ASSERT_EQ(h.profile->log_f().size(), g.profile->log_f().size());
  EXPECT_EQ(std::memcmp(h.profile->log_f().data(), g.profile->log_f().data(),
                        sizeof(double) * g.profile->log_f().size()),
            0);
  EXPECT_NEAR(h.psi[5] / g.psi[5], 3.0, 1e-14);
}

TEST(Glued, ShapeBoundsBeyondJunction) {
  const GluedConstruction& g = example();
  EXPECT_TRUE(hessian_comparison_check(*g.profile, 2.0, 2.0, g.connector.r2).holds);
}

TEST(Glued, ModelRoundTripsThroughJson) {
  const GluedConstruction& g = example();
  const WarpModelPtr m = make_model("glued", g.model->params(), 3);
  for (double r : {0.5, g.connector.r1 + 0.3, g.connector.r2 - 0.1, g.connector.r2 + 2.0}) {
    EXPECT_NEAR(m->at(r).shape, g.model->at(r).shape, 1e-13) << r;
    EXPECT_NEAR(m->at(r).log_f, g.model->at(r).log_f, 1e-12) << r;
  }
}

TEST(Glued, IdentitiesAcrossJunctionsNeedSplitting) {
  const GluedConstruction& g = example();
  IdentityOptions o;
  o.s = 1;
  o.t = g.connector.r2 + 20;
  const std::vector<RadialFunction> weights{constant_function(0.0), log_weight(2.0)};
  EXPECT_THROW(check_parts_identities(*g.profile, default_test_functions(), weights, o), ResolutionError);
  o.split_at_junctions = true;
  for (const IdentityCheck& c : check_parts_identities(*g.profile, default_test_functions(), weights, o))
    EXPECT_LE(c.residual, 1e-7) << c.name << " [" << c.data << "]";
}
