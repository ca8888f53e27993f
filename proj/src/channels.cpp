#include "warpspec/channels.hpp"

#include "warpspec/errors.hpp"

#include <cmath>
#include <limits>

namespace warpspec {

namespace {

double binomial(long long n, long long k) {
  if (k < 0 || n < 0 || k > n) return 0;
  double b = 1;
  for (long long i = 1; i <= k; ++i) b = b * double(n - k + i) / double(i);
  return std::round(b);
}

double remainder_slope(const std::vector<double>& x, const std::vector<double>& resid, double scale) {
  // Envelope: maxima over blocks of length pi.
  std::vector<double> lx, ly;
  std::size_t i = 0;
  double peak = 0;
  while (i < x.size()) {
    const double start = x[i];
    double m = 0;
    double centre = 0;
    std::size_t count = 0;
    for (; i < x.size() && x[i] < start + std::numbers::pi; ++i) {
      m = std::max(m, std::abs(resid[i]));
      centre += x[i];
      ++count;
    }
    if (count < 4) continue;
    peak = std::max(peak, m);
    lx.push_back(std::log(centre / double(count)));
    ly.push_back(m);
  }
  if (peak <= 1e-12 * (1.0 + scale) || lx.size() < 3) return -std::numeric_limits<double>::infinity();
  for (double& v : ly) v = std::log(std::max(v, 1e-300));
  return fit_line(lx, ly).slope;
}

}  // namespace

std::vector<ChannelSpec> sphere_spectrum(int n, int j_max) {
  if (n < 2) throw InvalidProfile("sphere_spectrum: n must be at least 2");
  if (j_max < 0) throw InvalidProfile("sphere_spectrum: j_max must be non-negative");
  std::vector<ChannelSpec> out;
  for (int j = 0; j <= j_max; ++j) {
    ChannelSpec s;
    s.j = j;
    s.lambda = double(j) * double(j + n - 2);
    // Harmonic homogeneous polynomials of degree j in n variables.
    s.multiplicity = static_cast<long long>(binomial(j + n - 1, n - 1) - binomial(j + n - 3, n - 1));
    out.push_back(s);
  }
  return out;
}

TailFit fit_tail_samples(const std::vector<double>& x, const std::vector<double>& y) {
  TailFit fit;
  if (x.size() < 20) return fit;
  fit.window_lo = x.front();
  fit.window_hi = x.back();
  const SinusoidFit s = fit_sinusoid(x, y, 2.0);
  double rms = 0;
  for (double v : y) rms += v * v;
  rms = std::sqrt(rms / double(y.size()));
  if (rms <= 1e-12) {
    // No tail at all: the potential is short range.
    fit.present = true;
    fit.k_eff = 0.0;
    fit.r_squared = 1.0;
    fit.remainder_exponent = -std::numeric_limits<double>::infinity();
    return fit;
  }
  fit.r_squared = s.r_squared;
  if (s.r_squared < 0.9) return fit;
  fit.present = true;
  fit.k_eff = s.amplitude;
  fit.phase = s.phase;
  std::vector<double> resid(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) resid[i] = y[i] - s.amplitude * std::sin(2.0 * x[i] + s.phase);
  fit.remainder_exponent = remainder_slope(x, resid, s.amplitude);
  return fit;
}

TailFit fit_tail(const std::function<double(double)>& q, double limit, double lo, double hi, double spacing) {
  std::vector<double> x, y;
  for (double v = lo; v <= hi + 1e-12; v += spacing) {
    x.push_back(v);
    y.push_back(v * (q(v) - limit));
  }
  return fit_tail_samples(x, y);
}

Potential wvn_potential(double k, std::function<double(double)> remainder) {
  Potential p;
  if (remainder) {
    p.q = [k, remainder](double x) { return -k * std::sin(2.0 * x) / x + remainder(x); };
  } else {
    p.q = [k](double x) { return -k * std::sin(2.0 * x) / x; };
  }
  p.limit = 0.0;
  p.regular_part = p.q;
  if (remainder) {
    p.tail = fit_tail(p.q, 0.0, 100.0, 2000.0);
  } else {
    p.tail.present = true;
    p.tail.k_eff = std::abs(k);
    p.tail.phase = k >= 0 ? std::numbers::pi : 0.0;
    p.tail.r_squared = 1.0;
    p.tail.window_lo = 0;
    p.tail.window_hi = std::numeric_limits<double>::infinity();
    p.tail.remainder_exponent = -std::numeric_limits<double>::infinity();
  }
  p.label = "wvn(k=" + std::to_string(k) + ")";
  return p;
}

Potential constant_potential(double value) {
  Potential p;
  p.q = [value](double) { return value; };
  p.regular_part = p.q;
  p.limit = value;
  p.tail.present = true;
  p.tail.r_squared = 1.0;
  p.tail.remainder_exponent = -std::numeric_limits<double>::infinity();
  p.label = "constant";
  return p;
}

double channel_value(int n, const WarpModel& model, double lambda_j, double x) {
  const double c = 0.5 * (n - 1);
  if (lambda_j == 0.0) {
    const WarpPoint p = model.shape_at(x);
    return c * c * p.shape * p.shape + c * p.shape_prime;
  }
  if (lambda_j * std::exp(-2.0 * model.log_f_floor(x)) < 1e-20 * std::max(1.0, c * c)) {
    // The angular term is below double resolution of anything it is added to.
    const WarpPoint p = model.shape_at(x);
    return c * c * p.shape * p.shape + c * p.shape_prime;
  }
  const WarpPoint p = model.at(x);
  return c * c * p.shape * p.shape + c * p.shape_prime + lambda_j * std::exp(-2.0 * p.log_f);
}

ChannelPotential channel_potential(const WarpProfile& profile, const ChannelSpec& spec) {
  const int n = profile.n();
  const double c = 0.5 * (n - 1);
  ChannelPotential out;
  out.j = spec.j;
  out.lambda_j = spec.lambda;
  out.multiplicity = spec.multiplicity;
  out.x = profile.grid();
  out.q.resize(out.x.size());
  out.limit = c * c;
  for (Eigen::Index i = 0; i < out.x.size(); ++i) {
    const double e = spec.lambda == 0 ? 0.0 : spec.lambda * std::exp(-2.0 * profile.log_f()[i]);
    out.q[i] = c * c * profile.shape()[i] * profile.shape()[i] + c * profile.shape_prime()[i] + e;
    if (!std::isfinite(out.q[i])) throw InvalidProfile("channel potential not finite at x = " + std::to_string(out.x[i]));
  }

  const WarpModelPtr model = profile.model_ptr();
  const double lambda_j = spec.lambda;
  Potential& p = out.potential;
  p.q = [model, n, lambda_j](double x) { return channel_value(n, *model, lambda_j, x); };
  p.limit = out.limit;
  p.label = model->name() + " j=" + std::to_string(spec.j);
  p.breakpoints = model->breakpoints();
  if (model->has_pole()) {
    const double s = spec.j + c;
    p.origin_exponent = s;
    const double sing = s * (s - 1.0);
    p.regular_part = [model, n, lambda_j, sing](double x) {
      return channel_value(n, *model, lambda_j, x) - sing / (x * x);
    };
  } else {
    p.regular_part = p.q;
  }

  const double x_end = out.x[out.x.size() - 1];
  const double x_begin = out.x[0];
  const double lo = std::max(50.0, x_end - 0.25 * (x_end - x_begin));
  if (x_end > lo + 10.0) {
    std::vector<double> xs, ys;
    for (Eigen::Index i = 0; i < out.x.size(); ++i) {
      if (out.x[i] < lo) continue;
      xs.push_back(out.x[i]);
      ys.push_back(out.x[i] * (out.q[i] - out.limit));
    }
    out.tail = fit_tail_samples(xs, ys);
  }
  p.tail = out.tail;
  if (out.tail.present) {
    out.k_eff = out.tail.k_eff;
    out.phase = out.tail.phase;
  }
  return out;
}

std::vector<std::string> channel_columns() { return {"x", "q", "x_times_q_minus_limit"}; }

VectorXd liouville_transform(const VectorXd& h, const WarpProfile& profile) {
  if (h.size() != profile.grid().size()) throw ShapeError("liouville_transform: grid mismatch");
  const double c = 0.5 * (profile.n() - 1);
  return ((c * profile.log_f().array()).exp() * h.array()).matrix();
}

VectorXd inverse_liouville_transform(const VectorXd& w, const WarpProfile& profile) {
  if (w.size() != profile.grid().size()) throw ShapeError("inverse_liouville_transform: grid mismatch");
  const double c = 0.5 * (profile.n() - 1);
  return ((-c * profile.log_f().array()).exp() * w.array()).matrix();
}

WeightedMeasure weighted_measure(const WarpProfile& profile) {
  WeightedMeasure m;
  const int n = profile.n();
  m.c = 0.5 * (n - 1);
  m.omega = unit_sphere_volume(n - 1);
  m.r = profile.grid();
  m.radial_weight = (-2.0 * m.c * m.r.array()).exp();
  m.log_area_weight = (std::log(m.omega) + (n - 1) * profile.log_f().array()).matrix();
  m.log_density = (m.log_area_weight.array() - 2.0 * m.c * m.r.array()).matrix();
  return m;
}

namespace {

double relative_residual(const VectorXd& residual, const VectorXd& scale) {
  double worst = 0;
  for (Eigen::Index i = 0; i < residual.size(); ++i)
    worst = std::max(worst, std::abs(residual[i]) / std::max(scale[i], 1e-300));
  return worst;
}

}  // namespace

double radial_eigen_residual(const WarpProfile& profile, const VectorXd& h, double eigen) {
  const VectorXd& r = profile.grid();
  if (h.size() != r.size()) throw ShapeError("radial_eigen_residual: grid mismatch");
  const std::vector<double> breaks = profile.breakpoints();
  const VectorXd d1 = finite_difference(r, h, 1, 7, breaks);
  const VectorXd d2 = finite_difference(r, h, 2, 7, breaks);
  const VectorXd lap_r = (profile.n() - 1) * profile.shape();
  const VectorXd res = (d2.array() + lap_r.array() * d1.array() + eigen * h.array()).matrix();
  const VectorXd scale = (d2.array().abs() + (lap_r.array() * d1.array()).abs() + (eigen * h.array()).abs()).matrix();
  return relative_residual(res, scale);
}

Conjugation exp_conjugation(const WarpProfile& profile, const VectorXd& phi, double alpha) {
  const VectorXd& r = profile.grid();
  if (phi.size() != r.size()) throw ShapeError("exp_conjugation: grid mismatch");
  const double c = 0.5 * (profile.n() - 1);
  Conjugation out;
  out.lambda = alpha - c * c;
  out.outside_regime = !(out.lambda > 0);
  out.u = ((c * r.array()).exp() * phi.array()).matrix();
  out.input_residual = radial_eigen_residual(profile, phi, alpha);

  const std::vector<double> breaks = profile.breakpoints();
  const VectorXd d1 = finite_difference(r, out.u, 1, 7, breaks);
  const VectorXd d2 = finite_difference(r, out.u, 2, 7, breaks);
  const VectorXd lap_r = (profile.n() - 1) * profile.shape();
  // L u + lambda u = u'' + (Delta r - 2c) u' + (c (2c - Delta r) + lambda) u.
  const VectorXd drift = (lap_r.array() - 2 * c).matrix();
  const VectorXd zero = (c * (2 * c - lap_r.array()) + out.lambda).matrix();
  const VectorXd res = (d2.array() + drift.array() * d1.array() + zero.array() * out.u.array()).matrix();
  const VectorXd scale =
      (d2.array().abs() + (drift.array() * d1.array()).abs() + (zero.array() * out.u.array()).abs()).matrix();
  out.output_residual = relative_residual(res, scale);
  return out;
}

}  // namespace warpspec
