#pragma once

#include <limits>

#include "warpspec/numerics.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace warpspec {

using nlohmann::json;

/// Warping data at one radius. The warping function itself is kept as log f
/// because the profiles of interest grow like e^r.
struct WarpPoint {
  double log_f;
  double shape;        ///< S = f'/f
  double shape_prime;  ///< S'
};

/// A rotationally symmetric metric dr^2 + f(r)^2 g_sphere, described by f.
class WarpModel {
 public:
  virtual ~WarpModel() = default;

  virtual WarpPoint at(double r) const = 0;
  /// S and S' only; log_f may be left unset (NaN) when it is expensive.
  virtual WarpPoint shape_at(double r) const { return at(r); }
  /// d^order S / dr^order. Models without closed forms throw.
  virtual double shape_derivative(double r, int order) const;

  virtual std::string name() const = 0;
  virtual json params() const = 0;
  /// Radii where the model switches between analytic pieces.
  virtual std::vector<double> breakpoints() const { return {}; }
  /// Smallest radius at which the model is defined (0 for a smooth pole).
  virtual double domain_start() const { return 0.0; }
  virtual bool has_pole() const { return domain_start() == 0.0; }
  /// A cheap lower bound for log f at r (-inf when unknown).
  virtual double log_f_floor(double) const { return -std::numeric_limits<double>::infinity(); }
};

using WarpModelPtr = std::shared_ptr<const WarpModel>;

/// f(r) = r: flat space in polar coordinates.
class EuclideanWarp final : public WarpModel {
 public:
  WarpPoint at(double r) const override;
  double shape_derivative(double r, int order) const override;
  std::string name() const override { return "euclidean"; }
  json params() const override { return json::object(); }
};

/// f(r) = sinh r: hyperbolic space of curvature -1.
class HyperbolicWarp final : public WarpModel {
 public:
  WarpPoint at(double r) const override;
  std::string name() const override { return "hyperbolic"; }
  json params() const override { return json::object(); }
};

/// f(r) = e^r: exact cusp-type end with K_rad = -1.
class ExponentialWarp final : public WarpModel {
 public:
  WarpPoint at(double r) const override { return {r, 1.0, 0.0}; }
  double shape_derivative(double, int order) const override { return order == 0 ? 1.0 : 0.0; }
  std::string name() const override { return "exponential"; }
  json params() const override { return json::object(); }
  double domain_start() const override { return -1e300; }
  bool has_pole() const override { return false; }
};

/// log f(r) = (r - 1) + k (Si(2r) - Si(2)), so that S = 1 + k sin(2r)/r, r >= 1.
class WvnWarp final : public WarpModel {
 public:
  explicit WvnWarp(double k);
  WarpPoint at(double r) const override;
  WarpPoint shape_at(double r) const override;
  double shape_derivative(double r, int order) const override;
  std::string name() const override { return "wvn"; }
  json params() const override { return {{"k", k_}}; }
  double domain_start() const override { return 1.0; }
  /// |Si(2r) - Si(2)| < 1/2 for r >= 1.
  double log_f_floor(double r) const override { return r - 1.0 - 0.5 * std::abs(k_); }
  double k() const { return k_; }

 private:
  double k_;
  double si2_;
};

/// S = 1 + a r^{-p} for r >= 1, f(1) = 1.
class PowerTailWarp final : public WarpModel {
 public:
  PowerTailWarp(double a, double p);
  WarpPoint at(double r) const override;
  std::string name() const override { return "power_tail"; }
  json params() const override { return {{"a", a_}, {"p", p_}}; }
  double domain_start() const override { return 1.0; }

 private:
  double a_, p_;
};

/// S = 1 + a / (r log r) for r >= e, f(e) = 1.
class LogTailWarp final : public WarpModel {
 public:
  explicit LogTailWarp(double a) : a_(a) {}
  WarpPoint at(double r) const override;
  std::string name() const override { return "log_tail"; }
  json params() const override { return {{"a", a_}}; }
  double domain_start() const override { return std::numbers::e; }

 private:
  double a_;
};

/// S = 1 + sum_i k_i sin(omega_i r + phi_i) / r for r >= 1, f(1) = 1.
class OscillatoryWarp final : public WarpModel {
 public:
  struct Mode {
    double k, omega, phi;
  };
  explicit OscillatoryWarp(std::vector<Mode> modes);
  WarpPoint at(double r) const override;
  WarpPoint shape_at(double r) const override;
  std::string name() const override { return "oscillatory"; }
  json params() const override;
  double domain_start() const override { return 1.0; }
  const std::vector<Mode>& modes() const { return modes_; }

 private:
  std::vector<Mode> modes_;
  std::vector<SineCosineIntegral> base_;
};

/// Samples of f, f', f'' interpolated by cubic Hermite pieces in (log f, S).
class TabulatedWarp final : public WarpModel {
 public:
  TabulatedWarp(VectorXd grid, VectorXd f, VectorXd f_prime, VectorXd f_second);
  WarpPoint at(double r) const override;
  std::string name() const override { return "tabulated"; }
  json params() const override { return json::object(); }
  double domain_start() const override { return grid_[0]; }
  bool has_pole() const override { return false; }

  const VectorXd& grid() const { return grid_; }
  const VectorXd& f() const { return f_; }
  const VectorXd& f_prime() const { return fp_; }
  const VectorXd& f_second() const { return fpp_; }

 private:
  VectorXd grid_, f_, fp_, fpp_;
  VectorXd log_f_, shape_, shape_prime_;
};

enum class ProfileKind { closed_form, glued, tabulated };

std::string to_string(ProfileKind kind);

/// A warping model sampled on a radial grid, together with the dimension n.
class WarpProfile {
 public:
  WarpProfile(int n, WarpModelPtr model, VectorXd grid);

  static WarpProfile tabulated(int n, VectorXd grid, VectorXd f, VectorXd f_prime, VectorXd f_second);

  int n() const { return n_; }
  ProfileKind kind() const { return kind_; }
  const WarpModel& model() const { return *model_; }
  const WarpModelPtr& model_ptr() const { return model_; }
  const VectorXd& grid() const { return grid_; }
  const VectorXd& log_f() const { return log_f_; }
  const VectorXd& shape() const { return shape_; }
  const VectorXd& shape_prime() const { return shape_prime_; }
  std::vector<double> breakpoints() const { return model_->breakpoints(); }

  /// f, f', f'' in linear scale (may overflow to +inf on long grids).
  VectorXd f() const;
  VectorXd f_prime() const;
  VectorXd f_second() const;

  WarpPoint at(double r) const { return model_->at(r); }
  WarpProfile resampled(VectorXd grid) const;

  /// Max relative mismatch between stored derivatives and centered 4th order
  /// finite differences of f (evaluated in log form).
  double derivative_mismatch() const;

  json to_json() const;
  static WarpProfile from_json(const json& doc);

 private:
  int n_;
  ProfileKind kind_;
  WarpModelPtr model_;
  VectorXd grid_, log_f_, shape_, shape_prime_;
};

/// Build a closed-form model from its JSON name and parameters.
WarpModelPtr make_model(const std::string& name, const json& params, int n);

}  // namespace warpspec
