#include "warpspec/warp_profile.hpp"

#include "warpspec/construction.hpp"
#include "warpspec/errors.hpp"

#include <cmath>
#include <limits>

namespace warpspec {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

// d^l/dr^l of 1/r.
double inverse_power_derivative(double r, int l) {
  double v = 1.0 / r;
  for (int i = 1; i <= l; ++i) v *= -double(i) / r;
  return v;
}

double binomial(int n, int k) {
  double b = 1;
  for (int i = 1; i <= k; ++i) b = b * double(n - k + i) / double(i);
  return b;
}

}  // namespace

double WarpModel::shape_derivative(double r, int order) const {
  if (order == 0) return shape_at(r).shape;
  if (order == 1) return shape_at(r).shape_prime;
  throw InvalidProfile(name() + ": higher shape derivatives are not available");
}

WarpPoint EuclideanWarp::at(double r) const {
  if (!(r > 0)) throw InvalidProfile("euclidean warp: r must be positive");
  return {std::log(r), 1.0 / r, -1.0 / (r * r)};
}

double EuclideanWarp::shape_derivative(double r, int order) const { return inverse_power_derivative(r, order); }

WarpPoint HyperbolicWarp::at(double r) const {
  if (!(r > 0)) throw InvalidProfile("hyperbolic warp: r must be positive");
  const double log_f = r + std::log1p(-std::exp(-2.0 * r)) - std::numbers::ln2;
  const double coth = 1.0 / std::tanh(r);
  const double sinh = std::sinh(r);
  return {log_f, coth, std::isfinite(sinh) ? -1.0 / (sinh * sinh) : -0.0};
}

WvnWarp::WvnWarp(double k) : k_(k), si2_(sine_integral(2.0)) {}

WarpPoint WvnWarp::at(double r) const {
  WarpPoint p = shape_at(r);
  p.log_f = (r - 1.0) + k_ * (sine_integral(2.0 * r) - si2_);
  return p;
}

WarpPoint WvnWarp::shape_at(double r) const {
  const double s = std::sin(2.0 * r), c = std::cos(2.0 * r);
  return {nan_value, 1.0 + k_ * s / r, 2.0 * k_ * c / r - k_ * s / (r * r)};
}

double WvnWarp::shape_derivative(double r, int order) const {
  // S = 1 + k sin(2r) * (1/r); Leibniz rule on the product.
  double acc = 0;
  for (int i = 0; i <= order; ++i) {
    const double trig = std::pow(2.0, i) * std::sin(2.0 * r + i * std::numbers::pi / 2);
    acc += binomial(order, i) * trig * inverse_power_derivative(r, order - i);
  }
  return (order == 0 ? 1.0 : 0.0) + k_ * acc;
}

PowerTailWarp::PowerTailWarp(double a, double p) : a_(a), p_(p) {
  if (p == 1.0) throw InvalidProfile("power_tail: exponent 1 is the log case");
}

WarpPoint PowerTailWarp::at(double r) const {
  if (r < 1.0) throw InvalidProfile("power_tail: defined for r >= 1");
  const double log_f = (r - 1.0) + a_ * (std::pow(r, 1.0 - p_) - 1.0) / (1.0 - p_);
  return {log_f, 1.0 + a_ * std::pow(r, -p_), -a_ * p_ * std::pow(r, -p_ - 1.0)};
}

WarpPoint LogTailWarp::at(double r) const {
  if (r < std::numbers::e) throw InvalidProfile("log_tail: defined for r >= e");
  const double lr = std::log(r);
  const double shape = 1.0 + a_ / (r * lr);
  const double shape_prime = -a_ * (lr + 1.0) / (r * r * lr * lr);
  return {(r - std::numbers::e) + a_ * std::log(lr), shape, shape_prime};
}

OscillatoryWarp::OscillatoryWarp(std::vector<Mode> modes) : modes_(std::move(modes)) {
  for (const Mode& m : modes_) {
    if (!(m.omega > 0)) throw InvalidProfile("oscillatory: frequencies must be positive");
    base_.push_back(sine_cosine_integral(m.omega));
  }
}

WarpPoint OscillatoryWarp::at(double r) const {
  WarpPoint p = shape_at(r);
  double log_f = r - 1.0;
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    const Mode& m = modes_[i];
    const SineCosineIntegral v = sine_cosine_integral(m.omega * r);
    log_f += m.k * (std::cos(m.phi) * (v.si - base_[i].si) + std::sin(m.phi) * (v.ci - base_[i].ci));
  }
  p.log_f = log_f;
  return p;
}

WarpPoint OscillatoryWarp::shape_at(double r) const {
  if (r < 1.0) throw InvalidProfile("oscillatory: defined for r >= 1");
  double s = 1.0, sp = 0.0;
  for (const Mode& m : modes_) {
    const double arg = m.omega * r + m.phi;
    s += m.k * std::sin(arg) / r;
    sp += m.k * (m.omega * std::cos(arg) / r - std::sin(arg) / (r * r));
  }
  return {nan_value, s, sp};
}

json OscillatoryWarp::params() const {
  json modes = json::array();
  for (const Mode& m : modes_) modes.push_back({{"k", m.k}, {"omega", m.omega}, {"phi", m.phi}});
  return {{"modes", modes}};
}

TabulatedWarp::TabulatedWarp(VectorXd grid, VectorXd f, VectorXd f_prime, VectorXd f_second)
    : grid_(std::move(grid)), f_(std::move(f)), fp_(std::move(f_prime)), fpp_(std::move(f_second)) {
  const Eigen::Index n = grid_.size();
  if (n < 2 || f_.size() != n || fp_.size() != n || fpp_.size() != n)
    throw ShapeError("tabulated warp: grid and samples differ in length");
  for (Eigen::Index i = 1; i < n; ++i)
    if (!(grid_[i] > grid_[i - 1])) throw InvalidProfile("tabulated warp: grid not strictly increasing");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(f_[i] > 0) || !std::isfinite(f_[i]))
      throw InvalidProfile("tabulated warp: non-positive f at r = " + std::to_string(grid_[i]));
  log_f_ = f_.array().log();
  shape_ = fp_.array() / f_.array();
  shape_prime_ = fpp_.array() / f_.array() - shape_.array().square();
}

WarpPoint TabulatedWarp::at(double r) const {
  if (r < grid_[0] - 1e-12 || r > grid_[grid_.size() - 1] + 1e-12)
    throw InvalidProfile("tabulated warp: r outside grid");
  const Eigen::Index i = bracket_index(grid_, r);
  const double h = grid_[i + 1] - grid_[i];
  const double t = (r - grid_[i]) / h;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
  const double d00 = 6 * t * t - 6 * t, d10 = 3 * t * t - 4 * t + 1;
  const double d01 = -d00, d11 = 3 * t * t - 2 * t;
  const double log_f = h00 * log_f_[i] + h10 * h * shape_[i] + h01 * log_f_[i + 1] + h11 * h * shape_[i + 1];
  const double shape = h00 * shape_[i] + h10 * h * shape_prime_[i] + h01 * shape_[i + 1] + h11 * h * shape_prime_[i + 1];
  const double shape_prime =
      (d00 * shape_[i] + d10 * h * shape_prime_[i] + d01 * shape_[i + 1] + d11 * h * shape_prime_[i + 1]) / h;
  return {log_f, shape, shape_prime};
}

std::string to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::closed_form:
      return "closed-form";
    case ProfileKind::glued:
      return "glued";
    case ProfileKind::tabulated:
      return "tabulated";
  }
  return "unknown";
}

WarpProfile::WarpProfile(int n, WarpModelPtr model, VectorXd grid)
    : n_(n), model_(std::move(model)), grid_(std::move(grid)) {
  if (n < 2) throw InvalidProfile("dimension n must be at least 2");
  if (!model_) throw InvalidProfile("missing warp model");
  const Eigen::Index size = grid_.size();
  if (size < 2) throw InvalidProfile("grid needs at least two points");
  for (Eigen::Index i = 1; i < size; ++i)
    if (!(grid_[i] > grid_[i - 1])) throw InvalidProfile("grid not strictly increasing");
  if (grid_[0] < model_->domain_start() - 1e-12 || (model_->has_pole() && !(grid_[0] > 0)))
    throw InvalidProfile(model_->name() + ": grid starts outside the model domain");
  const std::string name = model_->name();
  kind_ = name == "glued" ? ProfileKind::glued : name == "tabulated" ? ProfileKind::tabulated : ProfileKind::closed_form;
  log_f_.resize(size);
  shape_.resize(size);
  shape_prime_.resize(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    const WarpPoint p = model_->at(grid_[i]);
    if (!std::isfinite(p.log_f))
      throw InvalidProfile("non-positive f at r = " + std::to_string(grid_[i]));
    log_f_[i] = p.log_f;
    shape_[i] = p.shape;
    shape_prime_[i] = p.shape_prime;
  }
}

WarpProfile WarpProfile::tabulated(int n, VectorXd grid, VectorXd f, VectorXd f_prime, VectorXd f_second) {
  VectorXd g = grid;
  auto model = std::make_shared<TabulatedWarp>(std::move(grid), std::move(f), std::move(f_prime), std::move(f_second));
  return WarpProfile(n, std::move(model), std::move(g));
}

VectorXd WarpProfile::f() const { return log_f_.array().exp(); }

VectorXd WarpProfile::f_prime() const { return (log_f_.array().exp() * shape_.array()).matrix(); }

VectorXd WarpProfile::f_second() const {
  return (log_f_.array().exp() * (shape_prime_.array() + shape_.array().square())).matrix();
}

WarpProfile WarpProfile::resampled(VectorXd grid) const { return WarpProfile(n_, model_, std::move(grid)); }

double WarpProfile::derivative_mismatch() const {
  const std::vector<double> breaks = breakpoints();
  const VectorXd dlog = finite_difference(grid_, log_f_, 1, 5, breaks);
  const VectorXd dshape = finite_difference(grid_, shape_, 1, 5, breaks);
  double worst = 0;
  for (Eigen::Index i = 0; i < grid_.size(); ++i) {
    const double scale = 1.0 + std::abs(shape_[i]) + std::abs(shape_prime_[i]);
    worst = std::max(worst, std::abs(dlog[i] - shape_[i]) / scale);
    worst = std::max(worst, std::abs(dshape[i] - shape_prime_[i]) / scale);
  }
  return worst;
}

json WarpProfile::to_json() const {
  json doc;
  doc["n"] = n_;
  doc["kind"] = model_->name();
  doc["params"] = model_->params();
  if (kind_ == ProfileKind::tabulated) {
    const auto& tab = static_cast<const TabulatedWarp&>(*model_);
    doc["grid"] = std::vector<double>(tab.grid().begin(), tab.grid().end());
    doc["f"] = std::vector<double>(tab.f().begin(), tab.f().end());
    doc["f_prime"] = std::vector<double>(tab.f_prime().begin(), tab.f_prime().end());
    doc["f_second"] = std::vector<double>(tab.f_second().begin(), tab.f_second().end());
  } else {
    doc["grid"] = std::vector<double>(grid_.begin(), grid_.end());
  }
  return doc;
}

namespace {

VectorXd vector_from(const json& value, const char* key) {
  if (!value.contains(key) || !value.at(key).is_array()) throw ConfigError(std::string("profile JSON lacks ") + key);
  const auto v = value.at(key).get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

WarpProfile WarpProfile::from_json(const json& doc) {
  try {
    const int n = doc.at("n").get<int>();
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "tabulated")
      return tabulated(n, vector_from(doc, "grid"), vector_from(doc, "f"), vector_from(doc, "f_prime"),
                       vector_from(doc, "f_second"));
    const json params = doc.value("params", json::object());
    return WarpProfile(n, make_model(kind, params, n), vector_from(doc, "grid"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed profile JSON: ") + e.what());
  }
}

WarpModelPtr make_model(const std::string& name, const json& params, int n) {
  try {
    if (name == "euclidean") return std::make_shared<EuclideanWarp>();
    if (name == "hyperbolic") return std::make_shared<HyperbolicWarp>();
    if (name == "exponential") return std::make_shared<ExponentialWarp>();
    if (name == "wvn") return std::make_shared<WvnWarp>(params.at("k").get<double>());
    if (name == "power_tail") return std::make_shared<PowerTailWarp>(params.at("a").get<double>(), params.at("p").get<double>());
    if (name == "log_tail") return std::make_shared<LogTailWarp>(params.at("a").get<double>());
    if (name == "oscillatory") {
      std::vector<OscillatoryWarp::Mode> modes;
      for (const json& m : params.at("modes"))
        modes.push_back({m.at("k").get<double>(), m.at("omega").get<double>(), m.at("phi").get<double>()});
      return std::make_shared<OscillatoryWarp>(std::move(modes));
    }
    if (name == "glued") return GluedWarp::from_params(params, n);
  } catch (const json::exception& e) {
    throw ConfigError("bad parameters for profile kind " + name + ": " + e.what());
  }
  throw ConfigError("unknown profile kind: " + name);
}

}  // namespace warpspec
