#include "warpspec/numerics.hpp"

#include "warpspec/errors.hpp"

#include <algorithm>
#include <complex>
#include <limits>
#include <map>
#include <mutex>

namespace warpspec {

SineCosineIntegral sine_cosine_integral(double x) {
  constexpr double euler = 0.57721566490153286061;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (x < 0) throw std::domain_error("sine_cosine_integral: negative argument");
  if (x == 0) return {0.0, -std::numeric_limits<double>::infinity()};
  if (x <= 2.0) {
    double si = 0, ci = 0;
    double term = x;  // x^{2k+1}/(2k+1)!
    for (int k = 0; k < 40; ++k) {
      const double s = term / (2 * k + 1);
      si += (k % 2 == 0) ? s : -s;
      term *= x / (2 * k + 2);  // x^{2k+2}/(2k+2)!
      const double c = term / (2 * k + 2);
      ci += (k % 2 == 0) ? -c : c;
      term *= x / (2 * k + 3);
      if (std::abs(s) < eps * std::abs(si) && std::abs(c) < eps * std::abs(ci) + 1e-300) break;
    }
    return {si, ci + euler + std::log(x)};
  }
  // Modified Lentz evaluation of E1(ix) as a continued fraction.
  constexpr double tiny = 1e-300;
  std::complex<double> b(1.0, x);
  std::complex<double> c(1.0 / tiny, 0.0);
  std::complex<double> d = 1.0 / b;
  std::complex<double> h = d;
  for (int i = 2; i < 10000; ++i) {
    const double a = -double(i - 1) * double(i - 1);
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const std::complex<double> del = c * d;
    h *= del;
    if (std::abs(del.real() - 1.0) + std::abs(del.imag()) < eps) break;
  }
  h *= std::complex<double>(std::cos(x), -std::sin(x));
  return {std::numbers::pi / 2 + h.imag(), -h.real()};
}

double unit_sphere_volume(int d) {
  if (d < 0) throw std::domain_error("unit_sphere_volume: negative dimension");
  const double m = 0.5 * (d + 1);
  return 2.0 * std::pow(std::numbers::pi, m) / std::tgamma(m);
}

double bessel_first_zero(double nu) {
  if (nu < 0) throw std::domain_error("bessel_first_zero: negative order");
  auto j = [nu](double x) { return std::cyl_bessel_j(nu, x); };
  double a = 0.5, fa = j(a);
  for (double b = a + 0.05;; b += 0.05) {
    const double fb = j(b);
    if ((fa > 0) != (fb > 0)) return find_root(j, a, b, 1e-15);
    a = b;
    fa = fb;
    if (b > 1e4) throw std::runtime_error("bessel_first_zero: no zero found");
  }
}

const GaussRule& gauss_legendre(int points) {
  static std::mutex mutex;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(points);
  if (it != cache.end()) return it->second;
  if (points < 1) throw std::domain_error("gauss_legendre: need at least one point");
  GaussRule rule{VectorXd(points), VectorXd(points)};
  const int half = (points + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
    double dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1, p1 = 0;
      for (int k = 1; k <= points; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = points * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1, p1 = 0;
    for (int k = 1; k <= points; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
    }
    dp = points * (z * p0 - p1) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = -z;
    rule.nodes[points - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[points - 1 - i] = w;
  }
  return cache.emplace(points, std::move(rule)).first->second;
}

double trapezoid(const VectorXd& x, const VectorXd& y) {
  if (x.size() != y.size()) throw ShapeError("trapezoid: size mismatch");
  double total = 0;
  for (Eigen::Index i = 1; i < x.size(); ++i) total += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return total;
}

VectorXd cumulative_trapezoid(const VectorXd& x, const VectorXd& y) {
  if (x.size() != y.size()) throw ShapeError("cumulative_trapezoid: size mismatch");
  VectorXd out = VectorXd::Zero(x.size());
  for (Eigen::Index i = 1; i < x.size(); ++i) out[i] = out[i - 1] + 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return out;
}

VectorXd finite_difference(const VectorXd& x, const VectorXd& y, int order, int width,
                           std::span<const double> breaks) {
  const Eigen::Index n = x.size();
  if (y.size() != n) throw ShapeError("finite_difference: size mismatch");
  if (n < width) throw ResolutionError("finite_difference: fewer samples than stencil width");
  // Split the grid into smooth pieces. A grid point lying on a break ends the
  // left piece and starts the right one; it is differentiated from the right.
  std::vector<Eigen::Index> seg_start(n), seg_end(n);
  {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> segments;
    Eigen::Index lo = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
      bool cut_at = false, cut_between = false;
      for (double b : breaks) {
        const double tol = 1e-12 * std::max(1.0, std::abs(b));
        if (std::abs(x[i] - b) <= tol && i < n - 1) cut_at = true;
        if (b > x[i - 1] + tol && b < x[i] - tol) cut_between = true;
      }
      if (cut_between) {
        segments.emplace_back(lo, i - 1);
        lo = i;
      } else if (cut_at) {
        segments.emplace_back(lo, i);
        lo = i;
      }
    }
    segments.emplace_back(lo, n - 1);
    for (const auto& [a, b] : segments)
      for (Eigen::Index i = a; i <= b; ++i) {
        seg_start[i] = a;
        seg_end[i] = b;
      }
  }
  VectorXd out(n);
  std::vector<double> stencil(width);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index a = seg_start[i], b = seg_end[i];
    if (b - a + 1 < width) throw ResolutionError("finite_difference: segment shorter than stencil");
    Eigen::Index lo = i - width / 2;
    lo = std::clamp<Eigen::Index>(lo, a, b - width + 1);
    for (int k = 0; k < width; ++k) stencil[k] = x[lo + k];
    const VectorXd w = fornberg_weights<double>(x[i], std::span<const double>(stencil), order);
    double acc = 0;
    for (int k = 0; k < width; ++k) acc += w[k] * y[lo + k];
    out[i] = acc;
  }
  return out;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("fit_line: size mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw InsufficientData("fit_line: need at least three samples");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0) throw InsufficientData("fit_line: degenerate abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ssr += r * r;
  }
  fit.slope_stderr = std::sqrt(ssr / double(n - 2) / sxx);
  fit.samples = static_cast<int>(n);
  return fit;
}

SinusoidFit fit_sinusoid(std::span<const double> x, std::span<const double> y, double omega, bool with_offset) {
  if (x.size() != y.size()) throw ShapeError("fit_sinusoid: size mismatch");
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  const int cols = with_offset ? 3 : 2;
  if (n < cols + 2) throw InsufficientData("fit_sinusoid: too few samples");
  Eigen::MatrixXd a(n, cols);
  VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = std::sin(omega * x[i]);
    a(i, 1) = std::cos(omega * x[i]);
    if (with_offset) a(i, 2) = 1.0;
    rhs[i] = y[i];
  }
  const VectorXd coef = a.colPivHouseholderQr().solve(rhs);
  SinusoidFit fit;
  fit.amplitude = std::hypot(coef[0], coef[1]);
  fit.phase = std::atan2(coef[1], coef[0]);
  fit.offset = with_offset ? coef[2] : 0.0;
  const double mean = rhs.mean();
  const double ss_tot = (rhs.array() - (with_offset ? mean : 0.0)).square().sum();
  const double ss_res = (rhs - a * coef).squaredNorm();
  fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0;
  fit.signal_rms = std::sqrt(rhs.squaredNorm() / n);
  return fit;
}

double find_root(const std::function<double(double)>& fn, double a, double b, double tol, int max_iter) {
  double fa = fn(a), fb = fn(b);
  if (fa == 0) return a;
  if (fb == 0) return b;
  if ((fa > 0) == (fb > 0)) throw std::domain_error("find_root: interval does not bracket a root");
  double c = a, fc = fa, d = b - a, e = d;
  for (int iter = 0; iter < max_iter; ++iter) {
    if ((fb > 0) == (fc > 0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * tol;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      const double s = fb / fa;
      double p, q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc, r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol1 ? d : (xm > 0 ? tol1 : -tol1);
    fb = fn(b);
  }
  return b;
}

GoldenResult golden_minimize(const std::function<double(double)>& fn, double a, double b, int iterations) {
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  double fc = fn(c), fd = fn(d);
  GoldenResult best = fc <= fd ? GoldenResult{c, fc} : GoldenResult{d, fd};
  for (int i = 0; i < iterations; ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = fn(c);
      if (fc < best.value) best = {c, fc};
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = fn(d);
      if (fd < best.value) best = {d, fd};
    }
  }
  return best;
}

double LocalPolynomial::derivative(double x, int k) const {
  const Eigen::Index deg = coeffs_.size() - 1;
  if (k > deg) return 0.0;
  const double t = (x - origin_) / scale_;
  // Compensated Horner: the monomial coefficients can be large and of mixed sign.
  double acc = 0, err = 0;
  for (Eigen::Index i = deg; i >= k; --i) {
    double falling = 1;
    for (int j = 0; j < k; ++j) falling *= double(i - j);
    const double prod = acc * t;
    const double prod_err = std::fma(acc, t, -prod);
    const double c = falling * coeffs_[i];
    const double sum = prod + c;
    const double bb = sum - prod;
    const double sum_err = (prod - (sum - bb)) + (c - bb);
    err = err * t + (prod_err + sum_err);
    acc = sum;
  }
  return (acc + err) / std::pow(scale_, k);
}

LocalPolynomial hermite_two_point(double a, std::span<const double> left, double b, std::span<const double> right) {
  if (left.size() != right.size() || left.empty()) throw ShapeError("hermite_two_point: mismatched data");
  const int m = static_cast<int>(left.size()) - 1;
  const int size = 2 * m + 2;
  const double scale = b - a;
  Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(size, size);
  VectorXd rhs(size);
  for (int k = 0; k <= m; ++k) {
    // k-th t-derivative at t = 0 and at t = 1.
    for (int i = k; i < size; ++i) {
      double falling = 1;
      for (int j = 0; j < k; ++j) falling *= double(i - j);
      if (i == k) mat(k, i) = falling;
      mat(m + 1 + k, i) = falling;
    }
    rhs[k] = left[k] * std::pow(scale, k);
    rhs[m + 1 + k] = right[k] * std::pow(scale, k);
  }
  VectorXd coeffs = mat.fullPivLu().solve(rhs);
  return LocalPolynomial(std::move(coeffs), a, scale);
}

VectorXd uniform_grid(double start, double stop, double max_step) {
  if (!(stop > start) || !(max_step > 0)) throw std::domain_error("uniform_grid: bad range");
  const auto cells = static_cast<Eigen::Index>(std::ceil((stop - start) / max_step - 1e-9));
  VectorXd g(cells + 1);
  for (Eigen::Index i = 0; i <= cells; ++i) g[i] = start + (stop - start) * double(i) / double(cells);
  g[cells] = stop;
  return g;
}

VectorXd merge_points(const VectorXd& grid, std::span<const double> extra, double tol) {
  std::vector<double> all(grid.data(), grid.data() + grid.size());
  all.insert(all.end(), extra.begin(), extra.end());
  std::sort(all.begin(), all.end());
  std::vector<double> out;
  for (double v : all) {
    if (!out.empty() && std::abs(v - out.back()) <= tol * std::max(1.0, std::abs(v))) continue;
    out.push_back(v);
  }
  return Eigen::Map<VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

Eigen::Index bracket_index(const VectorXd& x, double value) {
  const double* begin = x.data();
  const double* end = x.data() + x.size();
  auto it = std::upper_bound(begin, end, value);
  Eigen::Index i = static_cast<Eigen::Index>(it - begin) - 1;
  return std::clamp<Eigen::Index>(i, 0, x.size() - 2);
}

}  // namespace warpspec
