#pragma once

#include "warpspec/construction.hpp"
#include "warpspec/halfline.hpp"
#include "warpspec/warp_profile.hpp"

#include <array>
#include <cstdint>

namespace warpspec {

/// Samples of the surface functional of a radial solution phi of
/// Delta phi + alpha phi = 0:
///   I(t) = omega_{n-1} f^{n-1}(t) (phi'(t)^2 + phi(t)^2),
/// computed in Liouville form as omega ((w' - c S w)^2 + w^2).
struct GrowthSeries {
  double gamma = 1;
  double alpha = 0;
  VectorXd t;
  VectorXd I;
  VectorXd t_gamma_I;
  double residual = 0;  ///< relative residual of the Liouville equation on the samples
};

/// Residual of w'' = (q - lambda) w from 5-point differences of w', relative to
/// (|q - lambda| + 1) |(w, w')|,
/// at samples whose stencil is uniformly spaced.
double liouville_residual(const ShootingResult& w, const std::function<double(double)>& q);

struct GrowthOptions {
  double residual_tolerance = 1e-4;
};

/// Throws OutsideRegime when alpha <= (n-1)^2/4 and ResolutionError when the
/// samples do not solve the equation to the tolerance.
GrowthSeries growth_series(const WarpProfile& profile, const ShootingResult& w, double alpha, double gamma,
                           const GrowthOptions& options = {});

/// Growth series of the eigenfunction psi of a glued construction (alpha = b).
GrowthSeries eigenfunction_growth(const GluedConstruction& g, double gamma, const GrowthOptions& options = {});

/// Column names t, I, t_gamma_I.
std::vector<std::string> growth_columns();

/// Mean of t^gamma I over [t - half_window, t + half_window].
double windowed_mean(const GrowthSeries& series, double t, double half_window);

/// Slope of log(block max of r |K + 1|) against log r on [lo, hi]; -inf when
/// r |K + 1| vanishes there to rounding.
double curvature_decay_slope(const WarpProfile& profile, double lo, double hi, double block = 2 * std::numbers::pi);

struct GrowthTrialOptions {
  double t0 = 1.0;
  double R_max = 1000.0;
  int trials = 5;
  std::uint64_t seed = 20240601;
  double spacing = 0.025;
  double slope_limit = -0.05;  ///< hypothesis: decay slope of r |K + 1| below this
  GrowthOptions growth{};
};

struct GrowthTrial {
  double theta = 0;          ///< (phi(t0), phi'(t0)) = (cos theta, sin theta)
  double initial = 0;        ///< t0^gamma I(t0)
  double final_min = 0;      ///< min of t^gamma I on the final decade
  bool exceeds_initial = false;
  bool increasing = false;   ///< block minima strictly increasing on the final decade
  std::optional<double> first_failure;
  bool passed() const { return exceeds_initial && increasing; }
};

struct GrowthVerdict {
  double alpha = 0, gamma = 1;
  double decay_slope = 0;
  std::uint64_t seed = 0;
  std::vector<GrowthTrial> trials;
  int worst = -1;  ///< trial with the smallest final_min / initial
  GrowthSeries worst_series;
  bool passed = false;
};

/// Radial solutions from random unit data at t0 must have t^gamma I growing on
/// [R_max / 10, R_max]. Throws HypothesisViolated when r |K + 1| is not seen
/// to decay on [R_max / 100, R_max].
GrowthVerdict verify_growth_theorem(const WarpProfile& profile, double alpha, double gamma,
                                    const GrowthTrialOptions& options = {});

/// Value and derivatives 0..3 of a radial function.
struct RadialFunction {
  std::string name;
  std::function<std::array<double, 4>(double)> jet;
};

RadialFunction constant_function(double value);
RadialFunction linear_weight(double slope);   ///< rho = slope r
RadialFunction log_weight(double power);      ///< rho = power log r
std::vector<RadialFunction> default_test_functions();

struct IdentityCheck {
  std::string name;
  std::string profile;
  std::string data;
  double lhs = 0, rhs = 0;
  double residual = 0;  ///< |lhs - rhs| / (|lhs| + |rhs| + 1)
  double tolerance = 1e-7;
  bool passed() const { return residual <= tolerance; }
};

/// q = rho'^2 - rho'' + (2c - Delta r)(rho' + c) + lambda and its r-derivative.
std::array<double, 2> conjugated_potential(int n, const WarpPoint& p,
                                           const std::array<double, 4>& rho, double lambda);

struct IdentityOptions {
  double s = 1.0, t = 20.0;
  double lambda = 1.0;          ///< for the solution u of L u + lambda u = 0
  double gamma = 1.0, epsilon = 1.0, beta = 0.0;
  double tolerance = 1e-7;
  double cell = 0.05;           ///< Gauss-Legendre cell width
  bool split_at_junctions = false;
  std::string label;            ///< profile label for the report
};

/// Radial forms of the integration by parts lemma (both parts), the weighted
/// energy identity, the r^beta v^2 identity and the two r^gamma energy
/// identities on B(s, t). Test functions feed the calculus identities; the
/// energy identities use v = e^rho u with u solving L u + lambda u = 0 from
/// (cos, sin) data at s. Throws ResolutionError if a breakpoint of the profile
/// lies inside (s, t) and splitting is off.
std::vector<IdentityCheck> check_parts_identities(const WarpProfile& profile,
                                                  const std::vector<RadialFunction>& tests,
                                                  const std::vector<RadialFunction>& weights,
                                                  const IdentityOptions& options = {});

/// Largest c(n) with c(n) (u'^2 + u^2) e^{-2cr} <= phi'^2 + phi^2 for u = e^{cr} phi:
/// the smallest eigenvalue of [[1, -c], [-c, c^2 + 1]].
double conjugation_constant(int n);

/// Admissibility of (gamma, A1, B1, b1, alpha) for the growth estimate, with
/// hatted constants X^ = (n-1) X and
/// m1 = max{1 / (2 (1 - A^)), 1 / (2 gamma - A^ - B^)} (infinite when a denominator is <= 0).
struct GrowthConditions {
  double A_hat = 0, B_hat = 0, b_hat = 0;
  double m1 = 0;
  bool positivity = false;        ///< 1 - A^ > 0 and 2 gamma > A^ + B^
  double alpha_threshold = 0;     ///< alpha must exceed this
  bool alpha_admissible = false;
  bool holds() const { return positivity && alpha_admissible; }
};

/// Shape operator bounds (1 - A1/r) <= S <= (1 + B1/r), Ric >= -(n-1)(1 + b1/r):
/// threshold (n-1)^2/4 + (n-1)(2 A^ + b^) m1.
GrowthConditions shape_bound_conditions(int n, double gamma, double A1, double B1, double b1, double alpha);

/// Radial curvature bounds -1 - 2 B1/r <= K <= -1 + 2 A1/r:
/// threshold (n-1)^2/4 + 2 (n-1)(A^ + B^) m1.
GrowthConditions curvature_bound_conditions(int n, double gamma, double A1, double B1, double alpha);

/// Trapezoid integral of I over the samples with t in [lo, hi].
double shell_energy(const GrowthSeries& series, double lo, double hi);

}  // namespace warpspec
