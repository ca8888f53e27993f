#include "warpspec/channels.hpp"
#include "warpspec/construction.hpp"
#include "warpspec/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace warpspec;

TEST(Spectrum, CircleTwoSphereThreeSphere) {
  const auto s2 = sphere_spectrum(2, 4);
  for (int j = 0; j <= 4; ++j) {
    EXPECT_EQ(s2[j].lambda, double(j * j));
    EXPECT_EQ(s2[j].multiplicity, j == 0 ? 1 : 2);
  }
  const auto s3 = sphere_spectrum(3, 6);
  for (int j = 0; j <= 6; ++j) {
    EXPECT_EQ(s3[j].lambda, double(j * (j + 1)));
    EXPECT_EQ(s3[j].multiplicity, 2 * j + 1);
  }
  const auto s4 = sphere_spectrum(4, 6);
  for (int j = 0; j <= 6; ++j) {
    EXPECT_EQ(s4[j].lambda, double(j * (j + 2)));
    EXPECT_EQ(s4[j].multiplicity, (j + 1) * (j + 1));
  }
}

TEST(ChannelValue, ExponentialEnd) {
  ExponentialWarp e;
  for (double x : {0.5, 2.0, 10.0}) {
    EXPECT_NEAR(channel_value(5, e, 0.0, x), 4.0, 1e-14);
    EXPECT_NEAR(channel_value(5, e, 12.0, x), 4.0 + 12.0 * std::exp(-2 * x), 1e-13);
  }
}

TEST(ChannelValue, HyperbolicThreeSpace) {
  // n = 3: q_j = 1 + j (j + 1) / sinh^2 x.
  HyperbolicWarp h;
  for (double x : {0.3, 1.0, 4.0}) {
    const double s = std::sinh(x);
    EXPECT_NEAR(channel_value(3, h, 0.0, x), 1.0, 1e-12);
    EXPECT_NEAR(channel_value(3, h, 6.0, x), 1.0 + 6.0 / (s * s), 1e-11);
  }
}

TEST(ChannelValue, FlatSpaceCentrifugalTerm) {
  // n = 3, f = r: q_j = j (j + 1) / x^2 (the l(l+1)/r^2 barrier).
  EuclideanWarp e;
  EXPECT_NEAR(channel_value(3, e, 2.0, 0.5), 8.0, 1e-12);
  EXPECT_NEAR(channel_value(3, e, 0.0, 0.5), 0.0, 1e-12);
}

TEST(Liouville, HyperbolicRadialWaveBecomesSine) {
  const double kappa = 1.7;
  const WarpProfile p(3, std::make_shared<HyperbolicWarp>(), uniform_grid(0.2, 15.0, 0.01));
  const VectorXd& r = p.grid();
  VectorXd h(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) h[i] = std::sin(kappa * r[i]) / std::sinh(r[i]);
  const VectorXd w = liouville_transform(h, p);
  for (Eigen::Index i = 0; i < r.size(); ++i) EXPECT_NEAR(w[i], std::sin(kappa * r[i]), 1e-12);
  const VectorXd back = inverse_liouville_transform(w, p);
  for (Eigen::Index i = 0; i < r.size(); ++i) EXPECT_NEAR(back[i], h[i], 1e-12 * std::max(1.0, std::abs(h[i])));
  EXPECT_LE(radial_eigen_residual(p, h, 1 + kappa * kappa), 1e-6);
}

TEST(Measure, ExponentialDensityIsConstant) {
  const WarpProfile p(4, std::make_shared<ExponentialWarp>(), uniform_grid(0.0, 10.0, 0.1));
  const WeightedMeasure m = weighted_measure(p);
  EXPECT_DOUBLE_EQ(m.c, 1.5);
  EXPECT_NEAR(m.omega, 2 * std::numbers::pi * std::numbers::pi, 1e-13);
  for (Eigen::Index i = 0; i < m.r.size(); ++i) EXPECT_NEAR(m.log_density[i], std::log(m.omega), 1e-12);
}

TEST(Conjugation, HyperbolicSolutionIsConjugated) {
  const double kappa = 0.8;
  const WarpProfile p(3, std::make_shared<HyperbolicWarp>(), uniform_grid(0.5, 12.0, 0.005));
  const VectorXd& r = p.grid();
  VectorXd phi(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) phi[i] = std::sin(kappa * r[i]) / std::sinh(r[i]);
  const Conjugation c = exp_conjugation(p, phi, 1 + kappa * kappa);
  EXPECT_NEAR(c.lambda, kappa * kappa, 1e-15);
  EXPECT_FALSE(c.outside_regime);
  EXPECT_LE(c.output_residual, 1e-6);
  for (Eigen::Index i = 0; i < r.size(); i += 101) EXPECT_NEAR(c.u[i], std::exp(r[i]) * phi[i], 1e-12 * std::exp(r[i]));
  EXPECT_TRUE(exp_conjugation(p, phi, 0.5).outside_regime);
}

TEST(Tail, FitRecoversOscillatingCoefficient) {
  auto q = [](double x) { return 0.25 - 1.6 * std::sin(2 * x + 0.4) / x + 1.0 / (x * x); };
  const TailFit f = fit_tail(q, 0.25, 100, 800);
  ASSERT_TRUE(f.present);
  EXPECT_NEAR(f.k_eff, 1.6, 2e-3);
  EXPECT_GT(f.r_squared, 0.99);
}

TEST(Tail, ShortRangeAndMonotoneTails) {
  const TailFit none = fit_tail([](double) { return 1.0; }, 1.0, 100, 800);
  EXPECT_TRUE(none.present);
  EXPECT_EQ(none.k_eff, 0.0);
  const TailFit coulomb = fit_tail([](double x) { return 1.0 + 1.0 / x; }, 1.0, 100, 800);
  EXPECT_FALSE(coulomb.present);
}

TEST(Channel, ReferenceTailAmplitude) {
  const WarpProfile p = reference_profile(3, 1.0, 1000.0, 0.01);
  const ChannelPotential cp = channel_potential(p, sphere_spectrum(3, 0)[0]);
  EXPECT_DOUBLE_EQ(cp.limit, 1.0);
  ASSERT_TRUE(cp.k_eff.has_value());
  // q - 1 = S' + S^2 - 1 = k (2 cos 2x + 2 sin 2x) / x + O(x^-2): amplitude 2 sqrt(2) k.
  EXPECT_NEAR(*cp.k_eff, 2 * std::sqrt(2.0), 0.01);
  EXPECT_NEAR(tail_amplitude(3, 1.0), 2 * std::sqrt(2.0), 1e-12);
}

TEST(Channel, ShapeMismatchIsRejected) {
  const WarpProfile p(3, std::make_shared<HyperbolicWarp>(), uniform_grid(0.5, 2.0, 0.1));
  EXPECT_THROW(liouville_transform(VectorXd::Ones(3), p), ShapeError);
}
