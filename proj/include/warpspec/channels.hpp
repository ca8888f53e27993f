#pragma once

#include "warpspec/warp_profile.hpp"

#include <functional>
#include <optional>

namespace warpspec {

struct ChannelSpec {
  int j = 0;
  double lambda = 0;  ///< j (j + n - 2)
  long long multiplicity = 1;
};

/// Distinct eigenvalues of the Laplacian on the unit sphere S^{n-1}, j = 0..j_max.
std::vector<ChannelSpec> sphere_spectrum(int n, int j_max);

/// Least-squares fit of x (q(x) - limit) ~ k_eff sin(2x + phase).
struct TailFit {
  bool present = false;
  double k_eff = 0;
  double phase = 0;
  double r_squared = 0;
  double window_lo = 0, window_hi = 0;
  /// Log-log slope of the block envelope of x |q - limit - fit/x|; the
  /// remainder is O(x^{-1-eps}) when this is negative.
  double remainder_exponent = 0;
};

/// A half-line potential q(x) with its asymptotic data.
struct Potential {
  std::function<double(double)> q;
  double limit = 0;
  TailFit tail;
  /// Indicial exponent s of a regular-singular origin (q ~ s (s-1) / x^2), if any.
  std::optional<double> origin_exponent;
  /// Part of q that stays bounded at the origin: q - s (s-1) / x^2.
  std::function<double(double)> regular_part;
  /// Points where q is not smooth; the integrator never steps across them.
  std::vector<double> breakpoints;
  std::string label;
};

/// q(x) = -k sin(2x) / x + remainder(x) on [0, inf), the family of the
/// Atkinson-type resonance lemma. Tail data is filled in analytically.
Potential wvn_potential(double k, std::function<double(double)> remainder = {});

/// Constant potential q = value.
Potential constant_potential(double value);

/// Fit on samples y_i = x_i (q(x_i) - limit).
TailFit fit_tail_samples(const std::vector<double>& x, const std::vector<double>& y);

/// Fit the oscillating x^{-1} tail of `q` on [lo, hi] sampled at `spacing`.
TailFit fit_tail(const std::function<double(double)>& q, double limit, double lo, double hi, double spacing = 0.05);

/// q_j = (n-1)(n-3)/4 S^2 + (n-1)/2 f''/f + lambda_j / f^2 for a warp model.
struct ChannelPotential {
  int j = 0;
  double lambda_j = 0;
  long long multiplicity = 1;
  VectorXd x;
  VectorXd q;
  double limit = 0;
  std::optional<double> k_eff;  ///< absent when the tail is not oscillatory
  double phase = 0;
  TailFit tail;
  Potential potential;  ///< callable form, for the half-line solver
};

/// Evaluates q_j at x from the model (closed form, no sampling).
double channel_value(int n, const WarpModel& model, double lambda_j, double x);

/// Sample q_j on the profile grid and fit its tail over the last quarter of
/// the grid restricted to x >= 50 (the fit is skipped when the grid ends before 50).
ChannelPotential channel_potential(const WarpProfile& profile, const ChannelSpec& spec);

/// Columns x, q, x_times_q_minus_limit.
std::vector<std::string> channel_columns();

/// w = f^{(n-1)/2} h and its inverse, on a shared grid.
VectorXd liouville_transform(const VectorXd& h, const WarpProfile& profile);
VectorXd inverse_liouville_transform(const VectorXd& w, const WarpProfile& profile);

/// c = (n-1)/2, the radial weight e^{-2cr} and the area weight omega_{n-1} f^{n-1}.
struct WeightedMeasure {
  double c = 0;
  double omega = 0;
  VectorXd r;
  VectorXd radial_weight;      ///< e^{-2 c r}
  VectorXd log_area_weight;    ///< log(omega f^{n-1})
  VectorXd log_density;        ///< log(omega e^{-2 c r} f^{n-1}), the density of d mu_c in dr
};
WeightedMeasure weighted_measure(const WarpProfile& profile);

/// u = e^{c r} phi for a radial solution of Delta phi + alpha phi = 0; u then
/// solves L u + lambda u = 0 with lambda = alpha - c^2.
struct Conjugation {
  VectorXd u;
  double lambda = 0;
  bool outside_regime = false;  ///< lambda <= 0
  double input_residual = 0;    ///< relative residual of Delta phi + alpha phi
  double output_residual = 0;   ///< relative residual of L u + lambda u
};
Conjugation exp_conjugation(const WarpProfile& profile, const VectorXd& phi, double alpha);

/// Relative residual of -(h'' + (n-1) S h') = eigen * h from samples (7-point
/// differences, one-sided at breaks).
double radial_eigen_residual(const WarpProfile& profile, const VectorXd& h, double eigen);

}  // namespace warpspec
