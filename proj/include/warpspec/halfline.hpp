#pragma once

#include "warpspec/channels.hpp"
#include "warpspec/ode.hpp"

#include <optional>

namespace warpspec {

enum class Direction { forward, backward };

/// Samples of a solution of -w'' + q w = lambda w. The true solution is
/// e^{log_scale[i]} * (w[i], w_prime[i]); the scale absorbs exponential growth.
struct ShootingResult {
  VectorXd x;
  VectorXd w;
  VectorXd w_prime;
  VectorXd log_scale;
  double lambda = 0;
  double q_limit = 0;
  Direction direction = Direction::forward;
  /// Prufer data, filled by prufer_series: w = rho sin(theta), w' = kappa rho cos(theta).
  VectorXd log_amplitude;
  VectorXd phase;

  /// Unscaled samples (may under- or overflow).
  VectorXd true_w() const;
  VectorXd true_w_prime() const;
  VectorXd amplitude() const { return log_amplitude.array().exp(); }
};

struct SolverOptions {
  OdeOptions ode{};
  double spacing = 0.25;  ///< output node spacing
};

/// Integrate from x_start (with data (w0, w0')) to x_end; direction follows the
/// order of the endpoints. Throws SingularOrigin when the step size collapses
/// at a regular-singular origin.
ShootingResult integrate_schrodinger(const Potential& q, double lambda, double w0, double w0_prime, double x_start,
                                     double x_end, const SolverOptions& options = {});

/// Start data at x0 from the Frobenius series w = x^s sum a_m x^{2m} of the
/// origin-regular solution. Returns (w, w') / x0^s and sets log_scale = s log x0.
struct FrobeniusStart {
  double x0;
  double w;
  double w_prime;
  double log_scale;
};
FrobeniusStart frobenius_start(const Potential& q, double lambda, double x0);

/// Forward integration of the origin-regular solution from x0 to x_end.
ShootingResult regular_solution(const Potential& q, double lambda, double x_end, const SolverOptions& options = {},
                                double x0 = 0.05);

/// Adds Prufer amplitude and phase. Throws NonOscillatory when lambda <= q_limit.
void prufer_series(ShootingResult& result);

/// Wavenumber used for the amplitude: sqrt(|lambda - q_limit|) (1 when equal).
double prufer_wavenumber(double lambda, double q_limit);

struct DecayFit {
  double exponent = 0;
  double stderr_ = 0;
  double x_lo = 0, x_hi = 0;
  int samples = 0;
};

/// Least-squares slope of log rho against log x on [x_lo, x_hi].
/// Requires x_hi >= 10 x_lo and at least 50 samples in the window.
DecayFit fit_power_decay(const VectorXd& x, const VectorXd& log_amplitude, double x_lo, double x_hi);

/// Slope of log(block mean of w^2) against log x over blocks of length pi.
DecayFit fit_integrand_decay(const VectorXd& x, const VectorXd& log_w2, double x_lo, double x_hi);

enum class OriginCondition {
  regular,  ///< solution regular at a (possibly singular) origin
  free      ///< existence of any L^2 solution on [x_start, inf)
};

struct DetectorOptions {
  SolverOptions solver{};
  double x_start = 1.0;  ///< start of the half-line in free mode
  double x0 = 0.05;      ///< Frobenius start in regular mode (pole profiles)
  double x_end = 2000.0;
  double fit_lo = 100.0, fit_hi = 1000.0;
  double exponent_threshold = -0.55;
  double integrand_threshold = -1.1;
  int golden_iterations = 24;
  bool refine = true;
  unsigned threads = 0;  ///< 0: WARPSPEC_THREADS or hardware concurrency
};

struct EigenDetection {
  int j = 0;
  double lambda = 0;
  bool eigenvalue = false;
  double exponent = 0;
  double stderr_ = 0;
  double integrand_exponent = 0;
  std::optional<double> k_eff;
  /// Partial integrals of w^2 from x_start to 250, 500, 1000, 2000 (clipped to x_end),
  /// relative to the first one.
  std::vector<double> partial_l2;
  double wronskian_drift = 0;  ///< max relative change of the Wronskian over the run
};

struct DetectionReport {
  std::vector<EigenDetection> per_lambda;  ///< one verdict per grid lambda
  std::vector<EigenDetection> eigenvalues; ///< one refined detection per fired cluster
  double max_wronskian_drift = 0;
};

/// Evaluate the verdict at a single lambda.
EigenDetection evaluate_lambda(const Potential& q, double lambda, OriginCondition origin, const DetectorOptions& options,
                               int j = 0);

/// Scan a lambda grid. Refuses (DetectorRefused) when the tail fit of q is absent.
DetectionReport detect_embedded_eigenvalue(const Potential& q, const std::vector<double>& lambda_grid,
                                           OriginCondition origin, const DetectorOptions& options = {}, int j = 0);

/// Lambda grid lo, lo + step, ..., hi computed as lo + i * step.
std::vector<double> lambda_grid(double lo, double hi, double step);

/// The solution decaying at infinity, obtained by backward integration. At
/// resonance the start point is pushed beyond R_max so that the growing mode
/// is suppressed by at least `contamination` on [x_min, R_max / 4]. The result
/// is normalized to rho(x_min) = 1.
struct DecayingOptions {
  SolverOptions solver{};
  double x_min = 1.0;
  double contamination = 2e-4;
  double resonance_tolerance = 1e-6;
  double max_start = 5e6;
};
ShootingResult decaying_solution(const Potential& q, double lambda, double R_max, const DecayingOptions& options = {});

/// Start radius used by decaying_solution for tail strength k_eff.
double decaying_start_radius(double R_max, double k_eff, double contamination, double max_start);

/// Max relative deviation of the Wronskian of two results sampled on the same grid.
double wronskian_drift(const ShootingResult& a, const ShootingResult& b);

/// Columns x, w, w_prime, amplitude, phase.
std::vector<std::string> shooting_columns();

/// Number of worker threads: WARPSPEC_THREADS if set, else hardware concurrency.
unsigned worker_threads(unsigned requested = 0);

}  // namespace warpspec
