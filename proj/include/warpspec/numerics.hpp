#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace warpspec {

using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Special functions

/// Sine and cosine integrals Si(x), Ci(x) for x > 0 (Si also for x = 0).
/// Power series below x = 2, complex continued fraction above.
struct SineCosineIntegral {
  double si;
  double ci;
};
SineCosineIntegral sine_cosine_integral(double x);

inline double sine_integral(double x) {
  return x < 0 ? -sine_cosine_integral(-x).si : sine_cosine_integral(x).si;
}

/// Volume of the unit sphere S^{d} embedded in R^{d+1}.
double unit_sphere_volume(int d);

/// First positive zero of the Bessel function J_nu.
double bessel_first_zero(double nu);

// ---------------------------------------------------------------------------
// Quadrature

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  VectorXd nodes;
  VectorXd weights;
};
const GaussRule& gauss_legendre(int points);

/// Integral of `fn` over [a, b] by composite Gauss-Legendre on `cells` equal cells.
template <class Fn>
double integrate_gauss(Fn&& fn, double a, double b, int cells = 1, int points = 16) {
  const GaussRule& rule = gauss_legendre(points);
  const double width = (b - a) / cells;
  double total = 0.0;
  for (int c = 0; c < cells; ++c) {
    const double lo = a + c * width;
    const double mid = lo + 0.5 * width;
    double acc = 0.0;
    for (int i = 0; i < points; ++i) acc += rule.weights[i] * fn(mid + 0.5 * width * rule.nodes[i]);
    total += 0.5 * width * acc;
  }
  return total;
}

/// Composite trapezoid rule on sampled data.
double trapezoid(const VectorXd& x, const VectorXd& y);

/// Running trapezoid integral, same length as x, starting at 0.
VectorXd cumulative_trapezoid(const VectorXd& x, const VectorXd& y);

// ---------------------------------------------------------------------------
// Finite differences

/// Fornberg weights for the derivative of order `order` at `x0` from `stencil`.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> fornberg_weights(Scalar x0, std::span<const Scalar> stencil,
                                                          int order) {
  const int n = static_cast<int>(stencil.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> c =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, order + 1);
  Scalar c1 = 1, c4 = stencil[0] - x0;
  c(0, 0) = 1;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, order);
    Scalar c2 = 1;
    const Scalar c5 = c4;
    c4 = stencil[i] - x0;
    for (int j = 0; j < i; ++j) {
      const Scalar c3 = stencil[i] - stencil[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
        c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
      }
      for (int k = mn; k >= 1; --k) c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
      c(j, 0) = c4 * c(j, 0) / c3;
    }
    c1 = c2;
  }
  return c.col(order);
}

/// Derivative of sampled data at every grid point using `width`-point stencils.
/// Stencils never cross an entry of `breaks` (a break may be an endpoint of a
/// stencil but not an interior point); near breaks and ends they go one-sided.
VectorXd finite_difference(const VectorXd& x, const VectorXd& y, int order, int width = 5,
                           std::span<const double> breaks = {});

// ---------------------------------------------------------------------------
// Fitting

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double slope_stderr = 0;
  int samples = 0;
};

/// Ordinary least squares y = intercept + slope * x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Least-squares fit y ~ a sin(omega x) + b cos(omega x) (+ offset when requested).
struct SinusoidFit {
  double amplitude = 0;
  double phase = 0;  ///< y ~ amplitude * sin(omega x + phase)
  double offset = 0;
  double r_squared = 0;
  double signal_rms = 0;
};
SinusoidFit fit_sinusoid(std::span<const double> x, std::span<const double> y, double omega,
                         bool with_offset = false);

// ---------------------------------------------------------------------------
// Root finding and optimisation

/// Brent's method on a bracketing interval.
double find_root(const std::function<double(double)>& fn, double a, double b, double tol = 1e-15,
                 int max_iter = 200);

struct GoldenResult {
  double x;
  double value;
};
/// Golden-section minimisation on [a, b]; returns the best point evaluated.
GoldenResult golden_minimize(const std::function<double(double)>& fn, double a, double b, int iterations);

// ---------------------------------------------------------------------------
// Polynomials

/// Polynomial in the local variable t = (x - origin) / scale, coefficients
/// ascending in t.
class LocalPolynomial {
 public:
  LocalPolynomial() = default;
  LocalPolynomial(VectorXd coeffs, double origin, double scale)
      : coeffs_(std::move(coeffs)), origin_(origin), scale_(scale) {}

  /// k-th derivative with respect to x.
  double derivative(double x, int k) const;
  double operator()(double x) const { return derivative(x, 0); }

  const VectorXd& coefficients() const { return coeffs_; }
  double origin() const { return origin_; }
  double scale() const { return scale_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

 private:
  VectorXd coeffs_;
  double origin_ = 0;
  double scale_ = 1;
};

/// Two-point Hermite interpolant on [a, b] matching derivatives 0..m of the
/// given data at both ends (degree 2m + 1).
LocalPolynomial hermite_two_point(double a, std::span<const double> left, double b,
                                  std::span<const double> right);

// ---------------------------------------------------------------------------
// Grids

VectorXd uniform_grid(double start, double stop, double max_step);

/// Merge sorted grids (and single points), dropping near-duplicates.
VectorXd merge_points(const VectorXd& grid, std::span<const double> extra, double tol = 1e-12);

/// Largest index i with x[i] <= value (clamped to [0, size - 2]).
Eigen::Index bracket_index(const VectorXd& x, double value);

}  // namespace warpspec
