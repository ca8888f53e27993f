#include "warpspec/construction.hpp"

#include "warpspec/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace warpspec {

namespace {

double inverse_power(double r, int order) {
  // d^order (1/r) = (-1)^order order! / r^(order+1)
  double v = 1.0 / r;
  for (int i = 1; i <= order; ++i) v *= -double(i) / r;
  return v;
}

double choose(int n, int k) {
  double b = 1;
  for (int i = 1; i <= k; ++i) b = b * double(n - k + i) / double(i);
  return b;
}

VectorXd pad(const VectorXd& v, Eigen::Index size) {
  VectorXd out = VectorXd::Zero(std::max(size, v.size()));
  out.head(v.size()) = v;
  return out;
}

VectorXd poly_mul(const VectorXd& a, const VectorXd& b) {
  VectorXd out = VectorXd::Zero(a.size() + b.size() - 1);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    for (Eigen::Index j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

VectorXd poly_derivative(const VectorXd& a) {
  if (a.size() <= 1) return VectorXd::Zero(1);
  VectorXd out(a.size() - 1);
  for (Eigen::Index i = 1; i < a.size(); ++i) out[i - 1] = double(i) * a[i];
  return out;
}

double poly_integral_unit(const VectorXd& a) {
  double acc = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) acc += a[i] / double(i + 1);
  return acc;
}

/// Among g + sum beta_i t^m (1-t)^m t^i (which keep the jets of g at both
/// ends), the one with least int_0^1 g''(t)^2 dt.
VectorXd least_curvature(const VectorXd& g, int m, int bubbles) {
  VectorXd base = VectorXd::Ones(1);
  VectorXd one_minus_t(2);
  one_minus_t << 1.0, -1.0;
  VectorXd t_power(2);
  t_power << 0.0, 1.0;
  for (int i = 0; i < m; ++i) base = poly_mul(poly_mul(base, t_power), one_minus_t);
  std::vector<VectorXd> b(bubbles), b2(bubbles);
  for (int i = 0; i < bubbles; ++i) {
    b[i] = i == 0 ? base : poly_mul(b[i - 1], t_power);
    b2[i] = poly_derivative(poly_derivative(b[i]));
  }
  const VectorXd g2 = poly_derivative(poly_derivative(g));
  Eigen::MatrixXd mat(bubbles, bubbles);
  VectorXd rhs(bubbles);
  for (int i = 0; i < bubbles; ++i) {
    rhs[i] = -poly_integral_unit(poly_mul(b2[i], g2));
    for (int j = 0; j < bubbles; ++j) mat(i, j) = poly_integral_unit(poly_mul(b2[i], b2[j]));
  }
  const VectorXd beta = mat.ldlt().solve(rhs);
  VectorXd out = pad(g, b[bubbles - 1].size());
  for (int i = 0; i < bubbles; ++i) out += beta[i] * pad(b[i], out.size());
  return out;
}

void require_coupling(int n, double k) {
  if (n < 2) throw InvalidProfile("dimension must be at least 2");
  const double threshold = coupling_threshold(n);
  if (!(std::abs(k) > threshold)) {
    std::ostringstream msg;
    msg.precision(10);
    msg << "coupling |k| = " << std::abs(k) << " is below the threshold " << threshold << " for n = " << n;
    throw CouplingTooWeak(msg.str(), threshold);
  }
}

}  // namespace

double coupling_threshold(int n) {
  const double m = n - 1;
  return 4.0 / (m * std::sqrt(m * m + 4.0));
}

double tail_amplitude(int n, double k) {
  const double m = n - 1;
  return k * m * std::sqrt(m * m + 4.0) / 2.0;
}

double tail_phase(int n) { return std::atan2(2.0, double(n - 1)); }

double resonance_eigenvalue(int n) { return 0.25 * (n - 1) * (n - 1) + 1.0; }

WarpProfile reference_profile(int n, double k, double R_max, double spacing) {
  require_coupling(n, k);
  if (!(R_max > 1)) throw InvalidProfile("reference profile: R_max must exceed 1");
  return WarpProfile(n, std::make_shared<WvnWarp>(k), uniform_grid(1.0, R_max, spacing));
}

Potential reference_channel(int n, double k) {
  auto model = std::make_shared<WvnWarp>(k);
  Potential p;
  p.q = [model, n](double x) { return channel_value(n, *model, 0.0, x); };
  p.regular_part = p.q;
  const double c = 0.5 * (n - 1);
  p.limit = c * c;
  const double amp = tail_amplitude(n, k);
  p.tail.present = true;
  p.tail.k_eff = std::abs(amp);
  p.tail.phase = amp >= 0 ? tail_phase(n) : tail_phase(n) - std::numbers::pi;
  p.tail.r_squared = 1.0;
  p.tail.window_lo = 1.0;
  p.tail.window_hi = std::numeric_limits<double>::infinity();
  p.tail.remainder_exponent = -1.0;
  p.label = "f1 channel 0";
  return p;
}

double DiskEigenfunction::value(double radius) const {
  if (radius == 0) return 1.0;
  const double z = std::sqrt(b) * radius;
  return std::tgamma(nu + 1) * std::pow(2.0 / z, nu) * std::cyl_bessel_j(nu, z);
}

double DiskEigenfunction::derivative(double radius) const {
  if (radius == 0) return 0.0;
  const double z = std::sqrt(b) * radius;
  return -std::sqrt(b) * std::tgamma(nu + 1) * std::pow(2.0, nu) * std::pow(z, -nu) * std::cyl_bessel_j(nu + 1, z);
}

double DiskEigenfunction::second_derivative(double radius) const {
  if (radius == 0) return -b / n;
  const double z = std::sqrt(b) * radius;
  const double g = std::pow(z, -nu - 1) * std::cyl_bessel_j(nu + 1, z) - std::pow(z, -nu) * std::cyl_bessel_j(nu + 2, z);
  return -b * std::tgamma(nu + 1) * std::pow(2.0, nu) * g;
}

DiskEigenfunction disk_eigenfunction(int n, int samples) {
  if (n < 2) throw InvalidProfile("disk eigenfunction: n must be at least 2");
  DiskEigenfunction d;
  d.n = n;
  d.b = resonance_eigenvalue(n);
  d.nu = 0.5 * (n - 2);
  d.r1 = bessel_first_zero(d.nu) / std::sqrt(d.b);
  d.r = VectorXd::LinSpaced(std::max(samples, 2), 0.0, d.r1);
  d.H.resize(d.r.size());
  for (Eigen::Index i = 0; i < d.r.size(); ++i) d.H[i] = d.value(d.r[i]);
  d.H[d.r.size() - 1] = 0.0;
  return d;
}

std::vector<double> radial_jet(const std::function<double(int)>& shape_derivative, double psi, double psi_prime,
                               int n, double b, int order) {
  std::vector<double> jet(std::max(order + 1, 2));
  jet[0] = psi;
  jet[1] = psi_prime;
  std::vector<double> s;
  for (int k = 0; k + 2 <= order; ++k) {
    s.push_back(shape_derivative(k));
    double acc = 0;
    for (int i = 0; i <= k; ++i) acc += choose(k, i) * s[i] * jet[k - i + 1];
    jet[k + 2] = -(n - 1) * acc - b * jet[k];
  }
  jet.resize(order + 1);
  return jet;
}

VectorXd ResonantSolution::h() const { return (log_norm.array().exp() * h_hat.array()).matrix(); }

VectorXd ResonantSolution::h_prime() const { return (log_norm.array().exp() * h_prime_hat.array()).matrix(); }

ResonantSolution resonant_h(int n, double k, double R_max, const ResonantOptions& options) {
  require_coupling(n, k);
  const double c = 0.5 * (n - 1);
  const Potential q = reference_channel(n, k);
  DecayingOptions d = options.decay;
  d.solver.spacing = options.spacing;
  d.x_min = 1.0;
  ResonantSolution out;
  out.n = n;
  out.k = k;
  out.w = decaying_solution(q, c * c + 1.0, R_max, d);
  out.r = out.w.x;
  const Eigen::Index size = out.r.size();
  out.log_f.resize(size);
  out.shape.resize(size);
  out.h_hat.resize(size);
  out.h_prime_hat.resize(size);
  out.log_norm.resize(size);
  const WvnWarp f1(k);
  for (Eigen::Index i = 0; i < size; ++i) {
    const WarpPoint p = f1.at(out.r[i]);
    out.log_f[i] = p.log_f;
    out.shape[i] = p.shape;
    const double a = out.w.w[i];
    const double b = out.w.w_prime[i] - c * p.shape * a;
    const double norm = std::hypot(a, b);
    out.h_hat[i] = a / norm;
    out.h_prime_hat[i] = b / norm;
    out.log_norm[i] = out.w.log_scale[i] - c * p.log_f + std::log(norm);
  }
  return out;
}

std::vector<double> junction_candidates(const VectorXd& r, const VectorXd& h, const VectorXd& h_prime, double r_min,
                                        double delta, std::size_t max_count, double stride) {
  if (r.size() != h.size() || r.size() != h_prime.size()) throw ShapeError("junction: sample sizes differ");
  auto ok = [&](Eigen::Index i) {
    const double norm = std::hypot(h[i], h_prime[i]);
    return norm > 0 && h[i] < -delta * norm && h_prime[i] < -delta * norm;
  };
  std::vector<double> out;
  bool in_run = false;
  for (Eigen::Index i = 1; i + 1 < r.size() && out.size() < max_count; ++i) {
    const bool hit = r[i] > r_min && ok(i - 1) && ok(i) && ok(i + 1);
    if (hit && (!in_run || r[i] >= out.back() + stride * (1 - 1e-9))) out.push_back(r[i]);
    in_run = hit;
  }
  return out;
}

double choose_junction(const VectorXd& r, const VectorXd& h, const VectorXd& h_prime, double r1, double delta) {
  const auto c = junction_candidates(r, h, h_prime, std::max(r1, 1.0), delta, 1);
  if (c.empty()) throw ConnectorFailure("no grid point with h < 0 and h' < 0 beyond max(r1, 1)");
  return c.front();
}

MonotoneJoin::MonotoneJoin(LocalPolynomial g, double r1, double r2) : g_(std::move(g)), r1_(r1), r2_(r2) {
  if (!(r2 > r1)) throw ConnectorFailure("join: r2 must exceed r1");
  const int cells = std::max(64, static_cast<int>(std::ceil((r2 - r1) / 0.01)));
  cell_width_ = (r2 - r1) / cells;
  cumulative_.assign(cells + 1, 0.0);
  auto slope = [this](double x) { return std::exp(g_(x)); };
  for (int i = 0; i < cells; ++i) {
    const double lo = r1 + i * cell_width_;
    cumulative_[i + 1] = cumulative_[i] + integrate_gauss(slope, lo, lo + cell_width_, 1, 16);
  }
  node_slope_.resize(cells + 1);
  node_curvature_.resize(cells + 1);
  for (int i = 0; i <= cells; ++i) {
    const double x = i == cells ? r2 : r1 + i * cell_width_;
    node_slope_[i] = std::exp(g_(x));
    node_curvature_[i] = node_slope_[i] * g_.derivative(x, 1);
  }
}

double MonotoneJoin::derivative(double x, int k) const {
  if (k == 0) {
    // Quintic Hermite interpolant of the cell integrals.
    const int cells = static_cast<int>(cumulative_.size()) - 1;
    const int i = std::clamp(static_cast<int>(std::floor((x - r1_) / cell_width_)), 0, cells - 1);
    const double h = cell_width_;
    const double t = (x - (r1_ + i * h)) / h;
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5, h5 = 1 - h0;
    const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5, h4 = -4 * t3 + 7 * t4 - 3 * t5;
    const double h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5), h3 = 0.5 * (t3 - 2 * t4 + t5);
    return -(h0 * cumulative_[i] + h5 * cumulative_[i + 1] + h * (h1 * node_slope_[i] + h4 * node_slope_[i + 1]) +
             h * h * (h2 * node_curvature_[i] + h3 * node_curvature_[i + 1]));
  }
  const double e = -std::exp(g_(x));
  if (k == 1) return e;
  const double g1 = g_.derivative(x, 1);
  if (k == 2) return e * g1;
  if (k == 3) return e * (g_.derivative(x, 2) + g1 * g1);
  throw ShapeError("join: derivative order must be at most 3");
}

std::vector<double> log_derivative_jet(std::span<const double> u) {
  if (u.empty() || !(u[0] < 0)) throw ConnectorFailure("log jet: the slope must be negative");
  // v = log(-u): u^(k+1) = sum_i C(k,i) u^(k-i) v^(i+1).
  std::vector<double> v(u.size());
  v[0] = std::log(-u[0]);
  for (std::size_t k = 0; k + 1 < u.size(); ++k) {
    double acc = u[k + 1];
    for (std::size_t i = 0; i < k; ++i) acc -= choose(int(k), int(i)) * u[k - i] * v[i + 1];
    v[k + 1] = acc / u[0];
  }
  return v;
}

double Connector::unit_derivative(double radius, int k) const {
  if (k < 0 || k > 2) throw ShapeError("connector: derivative order must be 0, 1 or 2");
  if (radius <= r1) {
    const double slope = disk.derivative(r1);
    const double v = k == 0 ? disk.value(radius) : k == 1 ? disk.derivative(radius) : disk.second_derivative(radius);
    return -v / slope;
  }
  if (radius <= r2 * (1 + 1e-15)) return join.derivative(radius, k);
  throw ShapeError("connector: unit form is stored only on [0, r2]");
}

Connector Connector::scaled(double factor) const {
  if (!(factor > 0)) throw ShapeError("connector: scale factor must be positive");
  Connector c = *this;
  c.amplitude *= factor;
  return c;
}

double Connector::monotonicity_margin(int samples) const {
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const double x = r1 + (r2 - r1) * double(i) / double(samples - 1);
    worst = std::min(worst, -join.derivative(x, 1));
  }
  return worst;
}

Connector build_connector(const DiskEigenfunction& disk, const ResonantSolution& tail,
                          const std::vector<double>& candidates, int m, double max_log_scale) {
  if (m < 1) throw ConnectorFailure("join order m must be at least 1");
  const int n = disk.n;
  const double b = disk.b;
  const double r1 = disk.r1;
  const std::vector<double> left_psi =
      radial_jet([r1](int i) { return inverse_power(r1, i); }, 0.0, -1.0, n, b, m);
  const std::vector<double> left = log_derivative_jet(std::span<const double>(left_psi).subspan(1));
  const WvnWarp f1(tail.k);
  int attempts = 0;
  std::ostringstream diag;
  for (std::size_t ci = 0; ci < candidates.size() && ci < 20; ++ci) {
    ++attempts;
    const double r2 = candidates[ci];
    Eigen::Index idx = bracket_index(tail.r, r2);
    if (tail.r[idx] < r2) ++idx;
    if (idx >= tail.r.size() || std::abs(tail.r[idx] - r2) > 1e-12 * r2)
      throw ConnectorFailure("junction candidate is not a grid point of the tail");
    const double hh = tail.h_hat[idx], hp = tail.h_prime_hat[idx];
    if (!(hh < 0 && hp < 0)) {
      diag << " r2=" << r2 << " h or h' not negative;";
      continue;
    }
    const std::vector<double> base =
        radial_jet([&f1, r2](int i) { return f1.shape_derivative(r2, i); }, hh, hp, n, b, m);
    const std::vector<double> right = log_derivative_jet(std::span<const double>(base).subspan(1));
    std::vector<double> zeros(m, 0.0), unit(m, 0.0);
    unit[0] = 1.0;
    const LocalPolynomial step = hermite_two_point(r1, zeros, r2, unit);
    // Base log-slope of least curvature; the smoothstep term carries log of the tail scale.
    const double len = r2 - r1;
    const VectorXd base_g = least_curvature(hermite_two_point(r1, left, r2, right).coefficients(), m, 4);
    const VectorXd ramp = least_curvature(step.coefficients(), m, 4);
    const LocalPolynomial G(pad(base_g, ramp.size()), r1, len);
    const LocalPolynomial ramp_poly(pad(ramp, base_g.size()), r1, len);
    // psi(r2) = -e^s int exp(G + s (step - 1)) must equal e^s hh.
    auto mismatch = [&](double s) {
      double peak = -std::numeric_limits<double>::infinity();
      for (int i = 0; i <= 1000; ++i) {
        const double x = r1 + (r2 - r1) * i / 1000.0;
        peak = std::max(peak, G(x) + s * (ramp_poly(x) - 1.0));
      }
      auto integrand = [&](double x) { return std::exp(G(x) + s * (ramp_poly(x) - 1.0) - peak); };
      return peak + std::log(integrate_gauss(integrand, r1, r2, 64, 16)) - std::log(-hh);
    };
    double lo = -1, hi = 1;
    for (int i = 0; i < 60 && mismatch(lo) < 0; ++i) lo *= 2;
    for (int i = 0; i < 60 && mismatch(hi) > 0; ++i) hi *= 2;
    if (!(mismatch(lo) >= 0 && mismatch(hi) <= 0)) {
      diag << " r2=" << r2 << " tail scale not bracketed;";
      continue;
    }
    const double s = find_root(mismatch, lo, hi, 1e-14);
    if (std::abs(s) > max_log_scale) {
      diag << " r2=" << r2 << " tail scale e^" << s << " out of range;";
      continue;
    }
    const VectorXd coeffs = G.coefficients() + s * ramp_poly.coefficients();
    Connector c;
    c.n = n;
    c.b = b;
    c.r1 = r1;
    c.r2 = r2;
    c.m = m;
    c.disk = disk;
    c.join = MonotoneJoin(LocalPolynomial(coeffs, G.origin(), G.scale()), r1, r2);
    c.tail_scale = std::exp(s - tail.log_norm[idx]);
    c.attempts = attempts;
    const double end_value = c.join(r2), target = std::exp(s) * hh;
    if (c.monotonicity_margin() > 0 && std::abs(end_value - target) <= 1e-9 * std::abs(target)) return c;
    diag << " r2=" << r2 << " end value mismatch " << end_value - target << ";";
  }
  throw ConnectorFailure("no admissible join found:" + diag.str());
}

GluedWarp::GluedWarp(int n, double k, double r1, double r2, LocalPolynomial log_slope)
    : n_(n), k_(k), b_(resonance_eigenvalue(n)), r1_(r1), r2_(r2), tail_(k) {
  if (!(r1 > 0) || !(r2 > r1)) throw InvalidProfile("glued warp: need 0 < r1 < r2");
  join_ = MonotoneJoin(std::move(log_slope), r1, r2);
  if (r2 < 1.0) throw InvalidProfile("glued warp: r2 must be at least 1");
  const int cells = std::max(64, static_cast<int>(std::ceil((r2 - r1) / 0.01)));
  cell_width_ = (r2 - r1) / cells;
  cumulative_.assign(cells + 1, 0.0);
  auto s = [this](double x) { return join_shape(x); };
  for (int i = 0; i < cells; ++i) {
    const double lo = r1 + i * cell_width_;
    cumulative_[i + 1] = cumulative_[i] + integrate_gauss(s, lo, lo + cell_width_, 1, 16);
  }
  log_c_ = std::log(r1) + cumulative_.back() - tail_.at(r2).log_f;
  node_shape_.resize(cells + 1);
  node_shape_prime_.resize(cells + 1);
  for (int i = 0; i <= cells; ++i) {
    const WarpPoint w = shape_at(i == cells ? r2 : r1 + i * cell_width_);
    node_shape_[i] = w.shape;
    node_shape_prime_[i] = w.shape_prime;
  }
}

double GluedWarp::join_shape(double r) const {
  const double p = join_.derivative(r, 0), p1 = join_.derivative(r, 1), p2 = join_.derivative(r, 2);
  if (!(p1 < 0)) throw InvalidProfile("glued warp: psi' vanishes inside [r1, r2]");
  return -(b_ * p + p2) / ((n_ - 1) * p1);
}

double GluedWarp::join_log_f(double r) const {
  const int cells = static_cast<int>(cumulative_.size()) - 1;
  const int i = std::clamp(static_cast<int>(std::floor((r - r1_) / cell_width_)), 0, cells - 1);
  // Quintic Hermite interpolant of log f from log f, S and S' at the cell ends.
  const double h = cell_width_;
  const double t = (r - (r1_ + i * h)) / h;
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5, h5 = 1 - h0;
  const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5, h4 = -4 * t3 + 7 * t4 - 3 * t5;
  const double h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5), h3 = 0.5 * (t3 - 2 * t4 + t5);
  return std::log(r1_) + h0 * cumulative_[i] + h5 * cumulative_[i + 1] +
         h * (h1 * node_shape_[i] + h4 * node_shape_[i + 1]) +
         h * h * (h2 * node_shape_prime_[i] + h3 * node_shape_prime_[i + 1]);
}

double GluedWarp::log_f_floor(double r) const {
  return r >= r2_ ? tail_.log_f_floor(r) + log_c_ : -std::numeric_limits<double>::infinity();
}

WarpPoint GluedWarp::shape_at(double r) const {
  if (r < 0) throw InvalidProfile("glued warp: negative radius");
  if (r <= r1_) return {std::log(r), 1.0 / r, -1.0 / (r * r)};
  if (r < r2_) {
    const double p = join_.derivative(r, 0), p1 = join_.derivative(r, 1), p2 = join_.derivative(r, 2),
                 p3 = join_.derivative(r, 3);
    if (!(p1 < 0)) throw InvalidProfile("glued warp: psi' vanishes inside [r1, r2]");
    const double num = b_ * p + p2, num1 = b_ * p1 + p3;
    const double s = -num / ((n_ - 1) * p1);
    const double s1 = -(num1 * p1 - num * p2) / ((n_ - 1) * p1 * p1);
    return {std::numeric_limits<double>::quiet_NaN(), s, s1};
  }
  return tail_.shape_at(r);
}

WarpPoint GluedWarp::at(double r) const {
  WarpPoint p = shape_at(r);
  if (r <= r1_) return p;
  if (r < r2_) {
    p.log_f = join_log_f(r);
    return p;
  }
  p.log_f = tail_.at(r).log_f + log_c_;
  return p;
}

double GluedWarp::shape_derivative(double r, int order) const {
  if (r <= r1_) return inverse_power(r, order);
  if (r >= r2_) return tail_.shape_derivative(r, order);
  return WarpModel::shape_derivative(r, order);
}

json GluedWarp::params() const {
  const LocalPolynomial& g = join_.log_slope();
  const VectorXd& c = g.coefficients();
  return {{"k", k_},
          {"r1", r1_},
          {"r2", r2_},
          {"join", {{"origin", g.origin()},
                    {"scale", g.scale()},
                    {"coefficients", std::vector<double>(c.data(), c.data() + c.size())}}}};
}

WarpModelPtr GluedWarp::from_params(const json& params, int n) {
  const json& j = params.at("join");
  const auto coeffs = j.at("coefficients").get<std::vector<double>>();
  VectorXd v = Eigen::Map<const VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
  return std::make_shared<GluedWarp>(n, params.at("k").get<double>(), params.at("r1").get<double>(),
                                     params.at("r2").get<double>(),
                                     LocalPolynomial(v, j.at("origin").get<double>(), j.at("scale").get<double>()));
}

GluedConstruction glue_profile(const Connector& psi, const ResonantSolution& tail, double spacing) {
  if (!(psi.monotonicity_margin() > 0)) throw ConnectorFailure("psi' vanishes inside [r1, r2]");
  const int n = psi.n;
  const double c = 0.5 * (n - 1);
  auto model = std::make_shared<GluedWarp>(n, tail.k, psi.r1, psi.r2, psi.join.log_slope());

  const VectorXd inner = uniform_grid(spacing, psi.r1, spacing);
  const VectorXd middle = uniform_grid(psi.r1, psi.r2, spacing);
  Eigen::Index first_tail = 0;
  while (first_tail < tail.r.size() && tail.r[first_tail] <= psi.r2) ++first_tail;
  const Eigen::Index size = inner.size() + middle.size() - 1 + (tail.r.size() - first_tail);
  VectorXd grid(size);
  grid << inner, middle.tail(middle.size() - 1), tail.r.tail(tail.r.size() - first_tail);

  GluedConstruction g;
  g.n = n;
  g.k = tail.k;
  g.b = psi.b;
  g.m = psi.m;
  g.resonant = tail;
  g.connector = psi;
  g.model = model;
  g.profile = std::make_shared<const WarpProfile>(n, model, grid);
  const WarpProfile& prof = *g.profile;
  g.psi.resize(size);
  g.psi_prime.resize(size);
  g.w.resize(size);
  g.w_prime.resize(size);
  const double log_amp = std::log(psi.amplitude * psi.tail_scale) + c * model->log_tail_scale();
  const Eigen::Index tail_start = size - (tail.r.size() - first_tail);
  for (Eigen::Index i = 0; i < size; ++i) {
    const double lf = prof.log_f()[i];
    const double s = prof.shape()[i];
    if (i < tail_start) {
      const double u = psi.amplitude * psi.unit_derivative(grid[i], 0);
      const double up = psi.amplitude * psi.unit_derivative(grid[i], 1);
      const double e = std::exp(c * lf);
      g.psi[i] = u;
      g.psi_prime[i] = up;
      g.w[i] = e * u;
      g.w_prime[i] = e * (up + c * s * u);
    } else {
      const Eigen::Index j = first_tail + (i - tail_start);
      const double scale = log_amp + tail.w.log_scale[j];
      const double a = tail.w.w[j], ap = tail.w.w_prime[j];
      g.w[i] = std::exp(scale) * a;
      g.w_prime[i] = std::exp(scale) * ap;
      const double e = std::exp(scale - c * lf);
      g.psi[i] = e * a;
      g.psi_prime[i] = e * (ap - c * s * a);
    }
  }
  return g;
}

GluedConstruction build_example(const ConstructionOptions& options) {
  require_coupling(options.n, options.k);
  const DiskEigenfunction disk = disk_eigenfunction(options.n);
  ResonantOptions ro;
  ro.spacing = options.spacing;
  ro.decay = options.decay;
  const ResonantSolution res = resonant_h(options.n, options.k, options.R_max, ro);
  const auto candidates =
      junction_candidates(res.r, res.h_hat, res.h_prime_hat, std::max(disk.r1, 1.0), options.delta, 20);
  if (candidates.empty()) throw ConnectorFailure("no junction candidate with h < 0 and h' < 0");
  const Connector conn = build_connector(disk, res, candidates, options.m);
  GluedConstruction g = glue_profile(conn, res, options.spacing);
  g.delta = options.delta;
  return g;
}

VectorXd glued_ode_residual(const GluedConstruction& g) {
  const WarpProfile& p = *g.profile;
  const VectorXd& r = p.grid();
  const double c = 0.5 * (g.n - 1);
  const std::vector<double> breaks = p.breakpoints();
  const VectorXd w2 = finite_difference(r, g.w_prime, 1, 7, breaks);
  VectorXd out = VectorXd::Constant(r.size(), std::numeric_limits<double>::quiet_NaN());
  const double h0 = r.size() > 1 ? r[1] - r[0] : 1.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (r[i] < 8 * h0) continue;
    const double s = p.shape()[i];
    const double v = c * c * s * s + c * p.shape_prime()[i] - g.b;
    const double res = w2[i] - v * g.w[i];
    out[i] = std::abs(res) / (std::hypot(g.w[i], g.w_prime[i]) * (1.0 + std::abs(v)));
  }
  return out;
}

double f_prime_jump(const GluedConstruction& g) {
  const WarpProfile& p = *g.profile;
  const VectorXd& r = p.grid();
  Eigen::Index i2 = 0;
  while (i2 < r.size() && r[i2] < g.connector.r2) ++i2;
  if (i2 < 6 || i2 + 6 >= r.size()) throw ShapeError("f_prime_jump: r2 too close to the grid ends");
  std::vector<double> left(r.data() + i2 - 6, r.data() + i2 + 1), right(r.data() + i2, r.data() + i2 + 7);
  const VectorXd wl = fornberg_weights<double>(r[i2], left, 1);
  const VectorXd wr = fornberg_weights<double>(r[i2], right, 1);
  double dl = 0, dr = 0;
  for (int k = 0; k < 7; ++k) {
    dl += wl[k] * p.log_f()[i2 - 6 + k];
    dr += wr[k] * p.log_f()[i2 + k];
  }
  // f continuous, so the relative jump of f' is that of (log f)'.
  return std::abs(dl - dr) / std::abs(dr);
}

double disk_identity_error(const Connector& connector, double width) {
  const DiskEigenfunction& d = connector.disk;
  const double r1 = d.r1;
  auto s = [&d](double x) { return -(d.b * d.value(x) + d.second_derivative(x)) / ((d.n - 1) * d.derivative(x)); };
  double worst = 0;
  for (int i = 0; i <= 100; ++i) {
    const double r = r1 - width + width * double(i) / 100.0;
    const double f = r1 * std::exp(-integrate_gauss(s, r, r1, 8, 16));
    worst = std::max(worst, std::abs(f / r - 1.0));
  }
  return worst;
}

std::vector<ChannelScan> channel_scan(const WarpProfile& profile, int j_max, const std::vector<double>& lambdas,
                                      const DetectorOptions& detector) {
  std::vector<ChannelScan> out;
  for (const ChannelSpec& spec : sphere_spectrum(profile.n(), j_max)) {
    const ChannelPotential cp = channel_potential(profile, spec);
    ChannelScan s;
    s.j = spec.j;
    s.detection = detect_embedded_eigenvalue(cp.potential, lambdas, OriginCondition::regular, detector, spec.j);
    out.push_back(std::move(s));
  }
  return out;
}

ConstructionReport verify_construction(const GluedConstruction& g, const VerifyOptions& options) {
  ConstructionReport rep;
  const WarpProfile& p = *g.profile;
  const VectorXd& r = p.grid();
  const double r1 = g.connector.r1, r2 = g.connector.r2;
  rep.r1 = r1;
  rep.r2 = r2;
  auto fail = [&rep](const std::string& what) { rep.failed.push_back(what); };

  const VectorXd res = glued_ode_residual(g);
  for (Eigen::Index i = 0; i < res.size(); ++i)
    if (std::isfinite(res[i])) rep.ode_residual = std::max(rep.ode_residual, res[i]);
  if (!(rep.ode_residual <= 1e-6)) fail("(a) eigen-equation residual of psi exceeds 1e-6");

  rep.l2_norm = trapezoid(r, g.w.array().square().matrix());
  VectorXd log_w2(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) log_w2[i] = 2.0 * std::log(std::abs(g.w[i]));
  try {
    rep.l2_integrand_exponent = fit_integrand_decay(r, log_w2, 100.0, std::min(1000.0, r[r.size() - 1])).exponent;
  } catch (const InsufficientData&) {
    rep.l2_integrand_exponent = std::numeric_limits<double>::quiet_NaN();
  }
  if (!(rep.l2_integrand_exponent < -1.1)) fail("(b) integrand psi^2 f^{n-1} does not decay faster than r^-1.1");

  std::vector<double> fx, fy;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double s = p.shape()[i];
    const double kp1 = 1.0 - (p.shape_prime()[i] + s * s);
    if (r[i] >= r2) {
      rep.curvature_sup = std::max(rep.curvature_sup, r[i] * std::abs(kp1));
      rep.shape_sup = std::max(rep.shape_sup, r[i] * std::abs(s - 1.0));
    }
    if (r[i] >= 100 && r[i] <= 500) {
      fx.push_back(r[i]);
      fy.push_back(r[i] * kp1);
    }
    if (r[i] <= r1) rep.pole_error = std::max(rep.pole_error, std::abs(std::exp(p.log_f()[i]) / r[i] - 1.0));
  }
  const double amp = 2.0 * std::sqrt(2.0) * std::abs(g.k);
  if (fx.size() > 20) rep.curvature_amplitude = fit_sinusoid(fx, fy, 2.0).amplitude;
  if (!(rep.curvature_sup <= 1.1 * amp)) fail("(c) sup r|K+1| on [r2, R_max] exceeds 2 sqrt(2) |k| + 10%");
  if (!(rep.shape_sup <= std::abs(g.k) * (1 + 1e-12))) fail("(d) sup r|S-1| on [r2, R_max] exceeds |k|");

  rep.f_prime_jump = f_prime_jump(g);
  if (!(rep.f_prime_jump <= 1e-6)) fail("f' jump at r2 exceeds 1e-6");
  if (!(rep.pole_error <= 1e-8)) fail("f(r) = r violated on [0, r1]");
  rep.disk_identity = disk_identity_error(g.connector);
  if (!(rep.disk_identity <= 1e-8)) fail("gluing integral with psi = H does not reproduce f = r");

  if (options.scan) {
    const auto lambdas = lambda_grid(g.b - options.half_width, g.b + options.half_width, options.step);
    rep.scans = channel_scan(p, options.j_max, lambdas, options.detector);
    for (const ChannelScan& s : rep.scans)
      for (const EigenDetection& d : s.detection.eigenvalues) {
        rep.detections.push_back(d);
        if (s.j >= 1) {
          std::ostringstream msg;
          msg.precision(10);
          msg << "detection in channel j = " << s.j << " at lambda = " << d.lambda;
          rep.findings.push_back(msg.str());
        }
      }
    const bool single = rep.detections.size() == 1 && rep.detections[0].j == 0 &&
                        std::abs(rep.detections[0].lambda - g.b) <= options.lambda_tolerance;
    if (!single) fail("(e) channel scan does not fire exactly once, at j = 0 and lambda = b_n");
  }
  return rep;
}

}  // namespace warpspec
