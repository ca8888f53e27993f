#pragma once

#include "warpspec/warp_profile.hpp"

#include <optional>

namespace warpspec {

/// Radial curvature data of a warped product sampled on the profile grid.
struct CurvatureField {
  int n = 0;
  VectorXd r;
  VectorXd S;            ///< f'/f
  VectorXd K_rad;        ///< -f''/f
  VectorXd laplacian_r;  ///< (n - 1) S
  VectorXd ricci_rr;     ///< (n - 1) K_rad
  /// Dimensionless trace residual per grid point; NaN where not evaluated.
  VectorXd trace_residual;
  std::vector<double> breaks;
};

/// Largest grid spacing accepted for curvature work (20 samples per period pi).
inline constexpr double max_curvature_spacing = std::numbers::pi / 20;

CurvatureField curvature_of_profile(const WarpProfile& profile);

/// max |d_r(Delta r) + (n-1) S^2 + Ric(dr, dr)| / max(1, (n-1) S^2 + |Ric(dr, dr)|)
/// over interior grid points, with d_r taken by 7-point finite differences.
double bochner_residual(const CurvatureField& field);

/// Comparison solutions of f' + f^2 + K_i = 0 with K_1 = -1 + 2 A1 / r and
/// K_2 = -1 - 2 B1 / r, started at r0 with f_1(r0) = 0, f_2(r0) = upper value.
struct RiccatiBound {
  double A1 = 0, B1 = 0, r0 = 0;
  VectorXd r;
  VectorXd f1_curve, f2_curve;
  VectorXd lower_residual;  ///< r^3 |f_1 - (1 - A1/r)|
  VectorXd upper_residual;  ///< r^3 |f_2 - (1 + B1/r)|
};

/// Integrates both comparison equations and samples them on the points of
/// `grid` that are >= r0. Throws ComparisonFailure when a solution leaves
/// [-1e3, 1e3].
RiccatiBound solve_riccati_bound(double A1, double B1, double r0, double upper_initial, const VectorXd& grid,
                                 double rtol = 1e-12);

struct ComparisonCheck {
  bool holds = true;
  std::optional<double> first_violation;
};

/// (1 - A1/r) <= S(r) <= (1 + B1/r) at every grid point r >= r0.
ComparisonCheck hessian_comparison_check(const WarpProfile& profile, double A1, double B1, double r0);

/// f_1 <= S <= f_2 at every grid point shared by the profile and the bound.
ComparisonCheck riccati_sandwich(const WarpProfile& profile, const RiccatiBound& bound, double slack = 1e-10);

/// Growth exponent of a positive series against r on [lo, hi]
/// (slope of log y versus log r).
LinearFit log_log_slope(const VectorXd& r, const VectorXd& y, double lo, double hi);

}  // namespace warpspec
