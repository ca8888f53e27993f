#include "warpspec/curvature.hpp"

#include "warpspec/errors.hpp"
#include "warpspec/ode.hpp"

#include <limits>

namespace warpspec {

namespace {

double max_spacing(const VectorXd& r) {
  double worst = 0;
  for (Eigen::Index i = 1; i < r.size(); ++i) worst = std::max(worst, r[i] - r[i - 1]);
  return worst;
}

}  // namespace

CurvatureField curvature_of_profile(const WarpProfile& profile) {
  const VectorXd& r = profile.grid();
  if (max_spacing(r) > max_curvature_spacing * (1 + 1e-12))
    throw ResolutionError("grid spacing exceeds pi/20; at least 20 samples per oscillation period are required");
  for (Eigen::Index i = 0; i < r.size(); ++i)
    if (!std::isfinite(profile.log_f()[i])) throw InvalidProfile("non-positive f sample");
  const double m = profile.n() - 1;
  CurvatureField field;
  field.n = profile.n();
  field.r = r;
  field.S = profile.shape();
  field.K_rad = -(profile.shape_prime().array() + profile.shape().array().square()).matrix();
  field.laplacian_r = m * field.S;
  field.ricci_rr = m * field.K_rad;
  field.breaks = profile.breakpoints();

  field.trace_residual = VectorXd::Constant(r.size(), std::numeric_limits<double>::quiet_NaN());
  if (r.size() < 7) return field;
  const VectorXd d_lap = finite_difference(r, field.laplacian_r, 1, 7, field.breaks);
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double h = (i + 1 < r.size()) ? r[i + 1] - r[i] : r[i] - r[i - 1];
    if (profile.model().has_pole() && r[i] < 24 * h) continue;
    const double sq = m * field.S[i] * field.S[i];
    const double res = d_lap[i] + sq + field.ricci_rr[i];
    field.trace_residual[i] = std::abs(res) / std::max(1.0, sq + std::abs(field.ricci_rr[i]));
  }
  return field;
}

double bochner_residual(const CurvatureField& field) {
  if (max_spacing(field.r) > max_curvature_spacing * (1 + 1e-12))
    throw ResolutionError("grid too coarse for the trace residual");
  if (field.r.size() < 7) throw ResolutionError("fewer than seven samples");
  double worst = 0;
  bool any = false;
  for (Eigen::Index i = 1; i + 1 < field.r.size(); ++i) {
    const double v = field.trace_residual[i];
    if (std::isnan(v)) continue;
    worst = std::max(worst, v);
    any = true;
  }
  if (!any) throw ResolutionError("no interior grid point could be evaluated");
  return worst;
}

RiccatiBound solve_riccati_bound(double A1, double B1, double r0, double upper_initial, const VectorXd& grid,
                                 double rtol) {
  if (!(r0 > 0)) throw OutsideRegime("riccati bound: r0 must be positive");
  if (!(A1 >= 0) || !(B1 >= 0)) throw OutsideRegime("riccati bound: decay constants must be non-negative");
  if (2 * A1 / r0 > 1 + 1e-15) throw OutsideRegime("riccati bound: K_upper = -1 + 2A1/r must be <= 0 on [r0, inf)");
  std::vector<double> pts;
  for (double r : grid)
    if (r >= r0) pts.push_back(r);
  if (pts.empty()) throw ShapeError("riccati bound: grid has no point >= r0");

  RiccatiBound out;
  out.A1 = A1;
  out.B1 = B1;
  out.r0 = r0;
  out.r = Eigen::Map<VectorXd>(pts.data(), static_cast<Eigen::Index>(pts.size()));
  out.f1_curve.resize(out.r.size());
  out.f2_curve.resize(out.r.size());

  using State = Eigen::Vector2d;
  auto rhs = [A1, B1](double r, const State& y, State& dy) {
    dy[0] = -y[0] * y[0] + 1.0 - 2.0 * A1 / r;
    dy[1] = -y[1] * y[1] + 1.0 + 2.0 * B1 / r;
  };
  OdeOptions opt;
  opt.rtol = rtol;
  opt.atol = 1e-14;
  opt.h_max = 0.5;
  auto solver = make_dop853<State>(rhs, opt);
  double r = r0;
  State y(0.0, upper_initial);
  if (std::abs(upper_initial) > 1e3) throw ComparisonFailure("riccati bound: initial value exceeds 1e3", r0);
  for (Eigen::Index i = 0; i < out.r.size(); ++i) {
    // March in sub-intervals so a blow-up is caught near where it happens.
    while (r < out.r[i]) {
      const double next = std::min(out.r[i], r + 0.25);
      try {
        solver.integrate(r, y, next);
      } catch (const IntegrationError&) {
        throw ComparisonFailure("riccati comparison solution blew up", r);
      }
      if (std::abs(y[0]) > 1e3 || std::abs(y[1]) > 1e3 || !y.allFinite())
        throw ComparisonFailure("riccati comparison solution left [-1e3, 1e3]", r);
    }
    out.f1_curve[i] = y[0];
    out.f2_curve[i] = y[1];
  }
  const auto cube = out.r.array().cube();
  out.lower_residual = (cube * (out.f1_curve.array() - (1.0 - A1 / out.r.array())).abs()).matrix();
  out.upper_residual = (cube * (out.f2_curve.array() - (1.0 + B1 / out.r.array())).abs()).matrix();
  return out;
}

ComparisonCheck hessian_comparison_check(const WarpProfile& profile, double A1, double B1, double r0) {
  ComparisonCheck check;
  const VectorXd& r = profile.grid();
  if (r0 < r[0] || r0 > r[r.size() - 1]) throw ShapeError("hessian comparison: r0 outside grid");
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (r[i] < r0) continue;
    const double s = profile.shape()[i];
    if (s < 1.0 - A1 / r[i] || s > 1.0 + B1 / r[i]) {
      check.holds = false;
      check.first_violation = r[i];
      break;
    }
  }
  return check;
}

ComparisonCheck riccati_sandwich(const WarpProfile& profile, const RiccatiBound& bound, double slack) {
  ComparisonCheck check;
  const VectorXd& r = profile.grid();
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < r.size() && j < bound.r.size(); ++i) {
    while (j < bound.r.size() && bound.r[j] < r[i] - 1e-12) ++j;
    if (j >= bound.r.size() || std::abs(bound.r[j] - r[i]) > 1e-12) continue;
    const double s = profile.shape()[i];
    if (s < bound.f1_curve[j] - slack || s > bound.f2_curve[j] + slack) {
      check.holds = false;
      check.first_violation = r[i];
      break;
    }
  }
  return check;
}

LinearFit log_log_slope(const VectorXd& r, const VectorXd& y, double lo, double hi) {
  std::vector<double> lx, ly;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (r[i] < lo || r[i] > hi || !(y[i] > 0)) continue;
    lx.push_back(std::log(r[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lx, ly);
}

}  // namespace warpspec
