#pragma once

#include "warpspec/channels.hpp"
#include "warpspec/halfline.hpp"
#include "warpspec/warp_profile.hpp"

#include <memory>
#include <optional>

namespace warpspec {

/// Smallest |k| for which the reference profile produces an embedded eigenvalue:
/// |k| (n-1) sqrt((n-1)^2 + 4) > 4.
double coupling_threshold(int n);

/// Coefficient A of the 1/x tail A sin(2x + c_n) / x of the channel-0 potential of f1.
double tail_amplitude(int n, double k);

/// Phase c_n = atan2(2, n - 1) of that tail.
double tail_phase(int n);

/// b_n = (n-1)^2/4 + 1.
double resonance_eigenvalue(int n);

/// f1 with S = 1 + k sin(2r)/r on a uniform grid of [1, R_max].
/// Throws CouplingTooWeak below the threshold.
WarpProfile reference_profile(int n, double k, double R_max, double spacing = 0.01);

/// Channel-0 potential of f1 with its tail data filled in analytically.
Potential reference_channel(int n, double k);

/// First Dirichlet eigenfunction of the flat ball with eigenvalue b_n,
/// H(r) = Gamma(nu+1) (2 / (sqrt(b) r))^nu J_nu(sqrt(b) r), nu = (n-2)/2, H(0) = 1.
struct DiskEigenfunction {
  int n = 3;
  double b = 2;
  double nu = 0.5;
  double r1 = 0;
  VectorXd r;  ///< samples on [0, r1]
  VectorXd H;

  double value(double radius) const;
  double derivative(double radius) const;
  /// H'' from the Bessel recurrence (not from the ODE).
  double second_derivative(double radius) const;
};
DiskEigenfunction disk_eigenfunction(int n, int samples = 1001);

/// Derivatives psi^(0..order) at a point for a solution of
/// psi'' + (n-1) S psi' + b psi = 0, given S^(i) and (psi, psi').
std::vector<double> radial_jet(const std::function<double(int)>& shape_derivative, double psi, double psi_prime,
                               int n, double b, int order);

/// The radial eigenfunction h = f1^{-(n-1)/2} w on [1, R_max], where w is the
/// decaying solution of the channel-0 equation at lambda = lim q + 1.
/// h itself underflows far out, so it is stored as a unit direction and a log norm.
struct ResonantSolution {
  int n = 3;
  double k = 1;
  ShootingResult w;     ///< Liouville form
  VectorXd r;           ///< same as w.x
  VectorXd log_f;       ///< log f1
  VectorXd shape;       ///< S of f1
  VectorXd h_hat;       ///< h / |(h, h')|
  VectorXd h_prime_hat; ///< h' / |(h, h')|
  VectorXd log_norm;    ///< log |(h, h')|

  VectorXd h() const;
  VectorXd h_prime() const;
};

struct ResonantOptions {
  double spacing = 0.01;
  DecayingOptions decay{};
};
ResonantSolution resonant_h(int n, double k, double R_max, const ResonantOptions& options = {});

/// Grid points r > r_min where h < -delta |(h,h')| and h' < -delta |(h,h')|, with
/// strict inequality at both neighbours: the first point of each run, then
/// further points of the run at least `stride` apart.
std::vector<double> junction_candidates(const VectorXd& r, const VectorXd& h, const VectorXd& h_prime, double r_min,
                                        double delta, std::size_t max_count = 20, double stride = 0.05);

/// First junction candidate beyond max(r1, 1). Throws ConnectorFailure if none.
double choose_junction(const VectorXd& r, const VectorXd& h, const VectorXd& h_prime, double r1, double delta = 0.1);

/// psi on [r1, r2] with psi(r1) = 0 and psi' = -exp(g) for a polynomial g, so
/// psi is strictly decreasing whatever g is.
class MonotoneJoin {
 public:
  MonotoneJoin() = default;
  MonotoneJoin(LocalPolynomial g, double r1, double r2);

  /// k-th derivative of psi, k = 0..3.
  double derivative(double x, int k) const;
  double operator()(double x) const { return derivative(x, 0); }
  const LocalPolynomial& log_slope() const { return g_; }
  double r1() const { return r1_; }
  double r2() const { return r2_; }

 private:
  LocalPolynomial g_;
  double r1_ = 0, r2_ = 1;
  double cell_width_ = 1;
  std::vector<double> cumulative_;
  std::vector<double> node_slope_, node_curvature_;
};

/// Derivatives 0..m-1 of log(-u) from derivatives 0..m-1 of u < 0.
std::vector<double> log_derivative_jet(std::span<const double> u);

/// The eigenfunction psi of the glued manifold, in unit form (psi'(r1) = -1)
/// times `amplitude`:
///   -H / H'(r1) on [0, r1], `join` on [r1, r2], tail_scale * h on [r2, inf).
struct Connector {
  int n = 3;
  double b = 2;
  double r1 = 0, r2 = 0;
  int m = 4;
  DiskEigenfunction disk;
  MonotoneJoin join;
  double tail_scale = 1;
  double amplitude = 1;
  int attempts = 0;

  /// k-th derivative (k <= 2) of the unit form on [0, r2].
  double unit_derivative(double radius, int k) const;
  Connector scaled(double factor) const;
  /// Minimum over >= samples points of [r1, r2] of -psi'/amplitude (positive iff monotone).
  double monotonicity_margin(int samples = 4001) const;
};

/// Join H and h with m matched derivatives: g is the Hermite interpolant of the
/// jets of log(-psi') (derivatives 0..m-1) plus a multiple of the smoothstep
/// that fixes the tail scale, chosen so that psi(r2) matches. Tries the
/// junction candidates in order (at most 20), rejecting joins whose tail scale
/// needs a slope ratio |psi'(r2) / psi'(r1)| beyond e^max_log_scale relative to
/// the unit tail direction; throws ConnectorFailure when none passes.
Connector build_connector(const DiskEigenfunction& disk, const ResonantSolution& tail,
                          const std::vector<double>& candidates, int m = 4, double max_log_scale = 12);

/// The glued warp: f = r on [0, r1], f = r1 exp(int_{r1}^r S) with
/// S = -(b psi + psi'') / ((n-1) psi') on [r1, r2], and f = C f1 beyond r2.
class GluedWarp final : public WarpModel {
 public:
  /// `log_slope` is the polynomial g of the join psi' = -exp(g).
  GluedWarp(int n, double k, double r1, double r2, LocalPolynomial log_slope);

  WarpPoint at(double r) const override;
  WarpPoint shape_at(double r) const override;
  double shape_derivative(double r, int order) const override;
  std::string name() const override { return "glued"; }
  json params() const override;
  std::vector<double> breakpoints() const override { return {r1_, r2_}; }
  double log_f_floor(double r) const override;

  double r1() const { return r1_; }
  double r2() const { return r2_; }
  double log_tail_scale() const { return log_c_; }
  /// S on [r1, r2] from the join polynomial (also the left limit at r2).
  double join_shape(double r) const;

  static WarpModelPtr from_params(const json& params, int n);

 private:
  double join_log_f(double r) const;

  int n_;
  double k_, b_, r1_, r2_;
  MonotoneJoin join_;
  WvnWarp tail_;
  double cell_width_ = 0;
  std::vector<double> cumulative_;
  std::vector<double> node_shape_, node_shape_prime_;
  double log_c_ = 0;
};

struct ConstructionOptions {
  int n = 3;
  double k = 1;
  double R_max = 2000;
  int m = 4;
  double delta = 0.1;
  double spacing = 0.01;
  DecayingOptions decay{};
};

/// The assembled example: every piece plus the glued profile and psi sampled on it.
struct GluedConstruction {
  int n = 3;
  double k = 1;
  double b = 2;
  int m = 4;
  double delta = 0.1;
  ResonantSolution resonant;
  Connector connector;
  std::shared_ptr<const GluedWarp> model;
  std::shared_ptr<const WarpProfile> profile;
  VectorXd psi, psi_prime;  ///< may underflow far out
  VectorXd w, w_prime;      ///< f^{(n-1)/2} psi and its derivative
};

/// Glue the connector onto its tail; the profile grid is the tail grid beyond r2
/// and a uniform grid of the given spacing before it.
GluedConstruction glue_profile(const Connector& psi, const ResonantSolution& tail, double spacing = 0.01);

/// Full pipeline: f1, h, H, r2, psi, f.
GluedConstruction build_example(const ConstructionOptions& options = {});

/// Relative residual of w'' = (q_0 - b) w with w = f^{(n-1)/2} psi on the glued
/// grid; w'' by differences of the w' samples that do not cross r1 or r2.
VectorXd glued_ode_residual(const GluedConstruction& g);

/// Relative jump of f' at r2 from one-sided differences of log f.
double f_prime_jump(const GluedConstruction& g);

/// max |f(r)/r - 1| with f from the gluing integral applied to psi = H on [r1 - width, r1].
double disk_identity_error(const Connector& connector, double width = 0.5);

struct ChannelScan {
  int j = 0;
  DetectionReport detection;
};

struct VerifyOptions {
  bool scan = true;
  int j_max = 5;
  double half_width = 0.5;
  double step = 1e-3;
  double lambda_tolerance = 2e-3;
  DetectorOptions detector{};
};

struct ConstructionReport {
  double ode_residual = 0;             ///< (a)
  double l2_norm = 0;                  ///< (b) int psi^2 f^{n-1} dr over the grid
  double l2_integrand_exponent = 0;
  double curvature_sup = 0;            ///< (c) sup r |K + 1| on [r2, R_max]
  double curvature_amplitude = 0;      ///< fitted amplitude of r (K + 1) on [100, 500]
  double shape_sup = 0;                ///< (d) sup r |S - 1| on [r2, R_max]
  double f_prime_jump = 0;
  double pole_error = 0;               ///< max |f/r - 1| on (0, r1]
  double disk_identity = 0;
  double r1 = 0, r2 = 0;
  std::vector<ChannelScan> scans;      ///< (e)
  std::vector<EigenDetection> detections;
  std::vector<std::string> findings;   ///< detections in channels j >= 1
  std::vector<std::string> failed;
  bool passed() const { return failed.empty(); }
};

ConstructionReport verify_construction(const GluedConstruction& g, const VerifyOptions& options = {});

/// Channel scan of a profile over lambda in [lo, hi] for j = 0..j_max.
std::vector<ChannelScan> channel_scan(const WarpProfile& profile, int j_max, const std::vector<double>& lambdas,
                                      const DetectorOptions& detector);

}  // namespace warpspec
