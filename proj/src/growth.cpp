#include "warpspec/growth.hpp"

#include "warpspec/channels.hpp"
#include "warpspec/errors.hpp"
#include "warpspec/numerics.hpp"
#include "warpspec/ode.hpp"

#include <random>
#include <sstream>

namespace warpspec {

namespace {

bool uniform_stencil(const VectorXd& x, Eigen::Index i) {
  const double h = x[i + 1] - x[i];
  for (Eigen::Index k = i - 2; k < i + 2; ++k)
    if (std::abs((x[k + 1] - x[k]) - h) > 1e-9 * h) return false;
  return true;
}

std::string number(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

struct Node {
  double x, weight;
};

/// Gauss-Legendre nodes covering [a, b] in increasing order.
std::vector<Node> quadrature_nodes(const std::vector<double>& cuts, double cell) {
  const GaussRule& rule = gauss_legendre(16);
  std::vector<Node> nodes;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k], b = cuts[k + 1];
    const int cells = std::max(1, static_cast<int>(std::ceil((b - a) / cell - 1e-9)));
    const double width = (b - a) / cells;
    for (int c = 0; c < cells; ++c) {
      const double mid = a + (c + 0.5) * width;
      for (int i = 0; i < 16; ++i) nodes.push_back({mid + 0.5 * width * rule.nodes[i], 0.5 * width * rule.weights[i]});
    }
  }
  std::stable_sort(nodes.begin(), nodes.end(), [](const Node& l, const Node& r) { return l.x < r.x; });
  return nodes;
}

}  // namespace

double liouville_residual(const ShootingResult& w, const std::function<double(double)>& q) {
  const Eigen::Index n = w.x.size();
  double worst = 0;
  for (Eigen::Index i = 2; i + 2 < n; ++i) {
    if (!uniform_stencil(w.x, i)) continue;
    const double h = w.x[i + 1] - w.x[i];
    auto wp = [&](Eigen::Index k) { return w.w_prime[k] * std::exp(w.log_scale[k] - w.log_scale[i]); };
    const double second = (wp(i - 2) - 8 * wp(i - 1) + 8 * wp(i + 1) - wp(i + 2)) / (12 * h);
    const double v = q(w.x[i]) - w.lambda;
    const double rhs = v * w.w[i];
    const double scale = std::abs(second) + std::abs(rhs) + (std::abs(v) + 1) * std::hypot(w.w[i], w.w_prime[i]);
    worst = std::max(worst, std::abs(second - rhs) / scale);
  }
  return worst;
}

GrowthSeries growth_series(const WarpProfile& profile, const ShootingResult& w, double alpha, double gamma,
                           const GrowthOptions& options) {
  const int n = profile.n();
  const double c = 0.5 * (n - 1);
  if (!(alpha > c * c)) throw OutsideRegime("growth series: alpha must exceed (n-1)^2/4 = " + number(c * c));
  const WarpModelPtr model = profile.model_ptr();
  ShootingResult sol = w;
  sol.lambda = alpha;
  GrowthSeries out;
  out.gamma = gamma;
  out.alpha = alpha;
  out.residual = liouville_residual(sol, [&](double x) { return channel_value(n, *model, 0.0, x); });
  if (!(out.residual <= options.residual_tolerance))
    throw ResolutionError("growth series: samples do not solve the radial equation (residual " +
                          number(out.residual) + ")");
  const double omega = unit_sphere_volume(n - 1);
  const Eigen::Index size = w.x.size();
  out.t = w.x;
  out.I.resize(size);
  out.t_gamma_I.resize(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    const double S = model->shape_at(w.x[i]).shape;
    const double d = w.w_prime[i] - c * S * w.w[i];
    out.I[i] = omega * std::exp(2 * w.log_scale[i]) * (d * d + w.w[i] * w.w[i]);
    out.t_gamma_I[i] = std::pow(w.x[i], gamma) * out.I[i];
  }
  return out;
}

GrowthSeries eigenfunction_growth(const GluedConstruction& g, double gamma, const GrowthOptions& options) {
  ShootingResult w;
  w.x = g.profile->grid();
  w.w = g.w;
  w.w_prime = g.w_prime;
  w.log_scale = VectorXd::Zero(w.x.size());
  w.lambda = g.b;
  w.q_limit = 0.25 * (g.n - 1) * (g.n - 1);
  return growth_series(*g.profile, w, g.b, gamma, options);
}

std::vector<std::string> growth_columns() { return {"t", "I", "t_gamma_I"}; }

double windowed_mean(const GrowthSeries& series, double t, double half_window) {
  double acc = 0, len = 0;
  for (Eigen::Index i = 1; i < series.t.size(); ++i) {
    const double a = std::max(series.t[i - 1], t - half_window), b = std::min(series.t[i], t + half_window);
    if (b <= a) continue;
    const double h = series.t[i] - series.t[i - 1];
    auto at = [&](double x) {
      const double u = (x - series.t[i - 1]) / h;
      return (1 - u) * series.t_gamma_I[i - 1] + u * series.t_gamma_I[i];
    };
    acc += 0.5 * (b - a) * (at(a) + at(b));
    len += b - a;
  }
  if (!(len > 0)) throw InsufficientData("windowed mean: no samples near t = " + number(t));
  return acc / len;
}

double curvature_decay_slope(const WarpProfile& profile, double lo, double hi, double block) {
  const VectorXd& r = profile.grid();
  std::vector<double> lx, ly;
  double largest = 0;
  for (double a = lo; a + block <= hi + 1e-9; a += block) {
    double peak = 0;
    int count = 0;
    for (Eigen::Index i = bracket_index(r, a); i < r.size() && r[i] <= a + block; ++i) {
      if (r[i] < a) continue;
      const double S = profile.shape()[i], K = -(profile.shape_prime()[i] + S * S);
      peak = std::max(peak, r[i] * std::abs(K + 1));
      ++count;
    }
    if (count < 4) throw InsufficientData("curvature decay: grid too coarse for blocks of length " + number(block));
    largest = std::max(largest, peak);
    lx.push_back(std::log(a + 0.5 * block));
    ly.push_back(peak);
  }
  if (lx.size() < 10) throw InsufficientData("curvature decay: window holds fewer than 10 blocks");
  if (largest <= 1e-12) return -std::numeric_limits<double>::infinity();
  for (double& y : ly) y = std::log(std::max(y, 1e-300));
  return fit_line(lx, ly).slope;
}

GrowthVerdict verify_growth_theorem(const WarpProfile& profile, double alpha, double gamma,
                                    const GrowthTrialOptions& options) {
  const int n = profile.n();
  const double c = 0.5 * (n - 1);
  if (!(alpha > c * c)) throw OutsideRegime("growth theorem: alpha must exceed (n-1)^2/4 = " + number(c * c));
  const double R = options.R_max;
  if (profile.grid()[profile.grid().size() - 1] < R * (1 - 1e-12))
    throw InsufficientData("growth theorem: profile grid ends before R_max");
  GrowthVerdict verdict;
  verdict.alpha = alpha;
  verdict.gamma = gamma;
  verdict.seed = options.seed;
  verdict.decay_slope = curvature_decay_slope(profile, R / 100, R);
  if (!(verdict.decay_slope < options.slope_limit))
    throw HypothesisViolated("r |K + 1| does not decay on [" + number(R / 100) + ", " + number(R) +
                             "]: log-log slope " + number(verdict.decay_slope));

  const WarpModelPtr model = profile.model_ptr();
  Potential q;
  q.q = [model, n](double x) { return channel_value(n, *model, 0.0, x); };
  q.limit = c * c;
  SolverOptions solver;
  solver.spacing = options.spacing;
  solver.ode.rtol = 1e-12;
  const double kappa = std::sqrt(alpha - c * c);
  const double block = 2 * std::numbers::pi / kappa;

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi);
  const WarpPoint p0 = model->at(options.t0);
  double worst_ratio = std::numeric_limits<double>::infinity();
  verdict.passed = true;
  for (int k = 0; k < options.trials; ++k) {
    GrowthTrial trial;
    trial.theta = angle(rng);
    const double phi = std::cos(trial.theta), dphi = std::sin(trial.theta);
    // w = f^c phi, w' = f^c (phi' + c S phi), with f^c(t0) factored out.
    const ShootingResult w =
        integrate_schrodinger(q, alpha, phi, dphi + c * p0.shape * phi, options.t0, R, solver);
    ShootingResult scaled = w;
    scaled.log_scale.array() += c * p0.log_f;
    const GrowthSeries series = growth_series(profile, scaled, alpha, gamma, options.growth);
    trial.initial = series.t_gamma_I[0];
    trial.final_min = std::numeric_limits<double>::infinity();
    trial.exceeds_initial = true;
    for (Eigen::Index i = 0; i < series.t.size(); ++i) {
      if (series.t[i] < R / 10) continue;
      trial.final_min = std::min(trial.final_min, series.t_gamma_I[i]);
      if (!(series.t_gamma_I[i] > trial.initial) && trial.exceeds_initial) {
        trial.exceeds_initial = false;
        trial.first_failure = series.t[i];
      }
    }
    trial.increasing = true;
    double previous = -std::numeric_limits<double>::infinity();
    for (double a = R / 10; a + block <= R + 1e-9; a += block) {
      double lowest = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = bracket_index(series.t, a); i < series.t.size() && series.t[i] <= a + block; ++i)
        if (series.t[i] >= a) lowest = std::min(lowest, series.t_gamma_I[i]);
      if (!(lowest > previous)) {
        trial.increasing = false;
        if (!trial.first_failure) trial.first_failure = a;
        break;
      }
      previous = lowest;
    }
    const double ratio = trial.final_min / trial.initial;
    if (ratio < worst_ratio) {
      worst_ratio = ratio;
      verdict.worst = k;
      verdict.worst_series = series;
    }
    verdict.passed = verdict.passed && trial.passed();
    verdict.trials.push_back(trial);
  }
  return verdict;
}

RadialFunction constant_function(double value) {
  return {"const(" + number(value) + ")", [value](double) { return std::array<double, 4>{value, 0, 0, 0}; }};
}

RadialFunction linear_weight(double slope) {
  return {"linear(" + number(slope) + ")", [slope](double r) { return std::array<double, 4>{slope * r, slope, 0, 0}; }};
}

RadialFunction log_weight(double power) {
  return {"log(" + number(power) + ")", [power](double r) {
            return std::array<double, 4>{power * std::log(r), power / r, -power / (r * r), 2 * power / (r * r * r)};
          }};
}

std::vector<RadialFunction> default_test_functions() {
  return {
      {"exp(-r/3)", [](double r) {
         const double e = std::exp(-r / 3);
         return std::array<double, 4>{e, -e / 3, e / 9, -e / 27};
       }},
      {"cos(r)", [](double r) { return std::array<double, 4>{std::cos(r), -std::sin(r), -std::cos(r), std::sin(r)}; }},
      {"r exp(-r/4)", [](double r) {
         const double e = std::exp(-0.25 * r);
         return std::array<double, 4>{r * e, (1 - 0.25 * r) * e, (-0.5 + 0.0625 * r) * e, (0.1875 - 0.015625 * r) * e};
       }},
  };
}

std::array<double, 2> conjugated_potential(int n, const WarpPoint& p, const std::array<double, 4>& rho,
                                           double lambda) {
  const double c = 0.5 * (n - 1);
  const double lap = (n - 1) * p.shape, lap1 = (n - 1) * p.shape_prime;
  const double q = rho[1] * rho[1] - rho[2] + (2 * c - lap) * (rho[1] + c) + lambda;
  const double q1 = 2 * rho[1] * rho[2] - rho[3] - lap1 * (rho[1] + c) + (2 * c - lap) * rho[2];
  return {q, q1};
}

std::vector<IdentityCheck> check_parts_identities(const WarpProfile& profile,
                                                  const std::vector<RadialFunction>& tests,
                                                  const std::vector<RadialFunction>& weights,
                                                  const IdentityOptions& options) {
  const int n = profile.n();
  const double c = 0.5 * (n - 1);
  const double s = options.s, t = options.t;
  if (!(t > s) || !(s > 0)) throw ConfigError("identities: need 0 < s < t");
  if (tests.empty()) throw ConfigError("identities: no test functions");
  const WarpModelPtr model = profile.model_ptr();
  if (s < model->domain_start()) throw ConfigError("identities: s lies before the start of the profile");
  std::vector<double> cuts{s};
  for (double b : model->breakpoints()) {
    if (b <= s || b >= t) continue;
    if (!options.split_at_junctions)
      throw ResolutionError("identities: junction at r = " + number(b) +
                            " inside [s, t]; enable junction-aware splitting");
    cuts.push_back(b);
  }
  cuts.push_back(t);
  const std::vector<Node> nodes = quadrature_nodes(cuts, options.cell);
  const double log_omega = std::log(unit_sphere_volume(n - 1));
  auto density = [&](double r, const WarpPoint& p) { return std::exp(log_omega - 2 * c * r + (n - 1) * p.log_f); };
  std::vector<WarpPoint> geo(nodes.size());
  std::vector<double> dmu(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    geo[i] = model->at(nodes[i].x);
    dmu[i] = nodes[i].weight * density(nodes[i].x, geo[i]);
  }
  const WarpPoint ps = model->at(s), pt = model->at(t);
  const double area_s = density(s, ps), area_t = density(t, pt);

  std::vector<IdentityCheck> out;
  auto record = [&](std::string name, std::string data, double lhs, double rhs) {
    IdentityCheck chk;
    chk.name = std::move(name);
    chk.profile = options.label.empty() ? model->name() : options.label;
    chk.data = std::move(data);
    chk.lhs = lhs;
    chk.rhs = rhs;
    chk.residual = std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + 1);
    chk.tolerance = options.tolerance;
    out.push_back(chk);
  };

  const std::size_t count = tests.size();
  for (std::size_t k = 0; k < count; ++k) {
    const auto& f1 = tests[k];
    const auto& h1 = tests[(k + 1) % count];
    // int (Delta f1) h1 = [f1' h1 A_c] - int f1' (h1' - 2c h1)
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double r = nodes[i].x;
      const auto a = f1.jet(r), b = h1.jet(r);
      const double lap = a[2] + (n - 1) * geo[i].shape * a[1];
      lhs += dmu[i] * lap * b[0];
      rhs -= dmu[i] * a[1] * (b[1] - 2 * c * b[0]);
    }
    rhs += f1.jet(t)[1] * h1.jet(t)[0] * area_t - f1.jet(s)[1] * h1.jet(s)[0] * area_s;
    record("parts_function", f1.name + " x " + h1.name, lhs, rhs);

    // int div(X dr) = [X A_c] + 2c int X
    lhs = rhs = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto a = f1.jet(nodes[i].x);
      lhs += dmu[i] * (a[1] + (n - 1) * geo[i].shape * a[0]);
      rhs += dmu[i] * 2 * c * a[0];
    }
    rhs += f1.jet(t)[0] * area_t - f1.jet(s)[0] * area_s;
    record("parts_divergence", f1.name, lhs, rhs);

    // [r^beta v^2 A_c] = int r^beta ((Delta r - 2c + beta/r) v^2 + 2 v v')
    const double beta = options.beta;
    lhs = rhs = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double r = nodes[i].x;
      const auto v = f1.jet(r);
      rhs += dmu[i] * std::pow(r, beta) * (((n - 1) * geo[i].shape - 2 * c + beta / r) * v[0] * v[0] + 2 * v[0] * v[1]);
    }
    lhs = std::pow(t, beta) * f1.jet(t)[0] * f1.jet(t)[0] * area_t - std::pow(s, beta) * f1.jet(s)[0] * f1.jet(s)[0] * area_s;
    record("radial_mass", f1.name + " beta=" + number(beta), lhs, rhs);
  }

  // u'' + ((n-1) S - 2c) u' + (c (2c - (n-1) S) + lambda) u = 0
  const double lambda = options.lambda;
  using State = Eigen::Vector2d;
  auto rhs_u = [&](double r, const State& y, State& dy) {
    const double S = model->shape_at(r).shape;
    dy[0] = y[1];
    dy[1] = -((n - 1) * S - 2 * c) * y[1] - (c * (2 * c - (n - 1) * S) + lambda) * y[0];
  };
  OdeOptions ode;
  ode.rtol = 1e-13;
  ode.atol = 1e-16;
  ode.block = 2;
  const double gamma = options.gamma, eps = options.epsilon;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const auto& rho = weights[k];
    const auto& psi = tests[k % count];
    const double theta = 0.3 + 2 * std::numbers::pi * double(k) / double(std::max<std::size_t>(weights.size(), 1));
    std::vector<State> u(nodes.size());
    State y(std::cos(theta), std::sin(theta));
    const State y_s = y;
    double x = s;
    auto solver = make_dop853<State>(rhs_u, ode);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      solver.integrate(x, y, nodes[i].x);
      u[i] = y;
    }
    solver.integrate(x, y, t);
    const State y_t = y;

    auto v_of = [&](double r, const State& uu) {
      const auto w = rho.jet(r);
      const double e = std::exp(w[0]);
      return std::array<double, 2>{e * uu[0], e * (uu[1] + w[1] * uu[0])};
    };
    const auto vs = v_of(s, y_s), vt = v_of(t, y_t);
    const auto qs = conjugated_potential(n, ps, rho.jet(s), lambda), qt = conjugated_potential(n, pt, rho.jet(t), lambda);
    const std::string data = rho.name + ", psi=" + psi.name;

    double e_lhs = 0, e_rhs = 0, m_rhs = 0, f_rhs = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double r = nodes[i].x;
      const auto v = v_of(r, u[i]);
      const auto w = rho.jet(r);
      const auto q = conjugated_potential(n, geo[i], w, lambda);
      const auto ps_ = psi.jet(r);
      const double lap = (n - 1) * geo[i].shape;
      const double v2 = v[0] * v[0], d2 = v[1] * v[1], vd = v[0] * v[1];
      e_lhs += dmu[i] * (d2 - q[0] * v2) * ps_[0];
      e_rhs -= dmu[i] * (ps_[1] + 2 * ps_[0] * w[1]) * vd;
      const double rg = std::pow(r, gamma - 1);
      m_rhs += dmu[i] * rg *
               ((0.5 * (gamma - r * lap + 2 * c * r) + 2 * r * w[1]) * d2 +
                0.5 * ((gamma + r * lap - 2 * c * r) * q[0] + r * q[1]) * v2);
      f_rhs += dmu[i] * rg *
               ((gamma - 0.5 * (r * lap - 2 * c * r + eps) + 2 * r * w[1]) * d2 +
                0.5 * (r * q[1] + q[0] * (r * lap - 2 * c * r + eps)) * v2 +
                0.5 * (gamma - eps) * ((gamma - 1) / r + 2 * w[1]) * vd);
    }
    e_rhs += vt[1] * psi.jet(t)[0] * vt[0] * area_t - vs[1] * psi.jet(s)[0] * vs[0] * area_s;
    record("weighted_energy", data, e_lhs, e_rhs);

    auto flux = [&](double r, const std::array<double, 2>& v, double q, double area) {
      return std::pow(r, gamma) * (0.5 * v[1] * v[1] + 0.5 * q * v[0] * v[0]) * area;
    };
    record("radial_flux", rho.name + " gamma=" + number(gamma), flux(t, vt, qt[0], area_t) - flux(s, vs, qs[0], area_s),
           m_rhs);

    auto flux_eps = [&](double r, const std::array<double, 2>& v, double q, double area) {
      return flux(r, v, q, area) + std::pow(r, gamma) * (gamma - eps) / (2 * r) * v[0] * v[1] * area;
    };
    record("radial_flux_epsilon", rho.name + " gamma=" + number(gamma) + " eps=" + number(eps),
           flux_eps(t, vt, qt[0], area_t) - flux_eps(s, vs, qs[0], area_s), f_rhs);
  }
  return out;
}

double conjugation_constant(int n) {
  const double c = 0.5 * (n - 1);
  const double tr = c * c + 2;
  return 0.5 * (tr - std::sqrt(tr * tr - 4));
}

namespace {

GrowthConditions base_conditions(int n, double gamma, double A1, double B1, double b1) {
  if (n < 2) throw ConfigError("growth conditions: n must be at least 2");
  GrowthConditions g;
  g.A_hat = (n - 1) * A1;
  g.B_hat = (n - 1) * B1;
  g.b_hat = (n - 1) * b1;
  const double d1 = 1 - g.A_hat, d2 = 2 * gamma - g.A_hat - g.B_hat;
  g.positivity = d1 > 0 && d2 > 0;
  g.m1 = g.positivity ? std::max(1 / (2 * d1), 1 / d2) : std::numeric_limits<double>::infinity();
  return g;
}

}  // namespace

GrowthConditions shape_bound_conditions(int n, double gamma, double A1, double B1, double b1, double alpha) {
  GrowthConditions g = base_conditions(n, gamma, A1, B1, b1);
  const double c = 0.5 * (n - 1);
  const double load = (n - 1) * (2 * g.A_hat + g.b_hat);
  g.alpha_threshold = c * c + (load == 0 ? 0.0 : load * g.m1);
  g.alpha_admissible = alpha > g.alpha_threshold;
  return g;
}

GrowthConditions curvature_bound_conditions(int n, double gamma, double A1, double B1, double alpha) {
  GrowthConditions g = base_conditions(n, gamma, A1, B1, 2 * B1);
  const double c = 0.5 * (n - 1);
  const double load = 2.0 * (n - 1) * (g.A_hat + g.B_hat);
  g.alpha_threshold = c * c + (load == 0 ? 0.0 : load * g.m1);
  g.alpha_admissible = alpha > g.alpha_threshold;
  return g;
}

double shell_energy(const GrowthSeries& series, double lo, double hi) {
  double acc = 0;
  for (Eigen::Index i = 1; i < series.t.size(); ++i) {
    const double a = std::max(series.t[i - 1], lo), b = std::min(series.t[i], hi);
    if (b <= a) continue;
    const double h = series.t[i] - series.t[i - 1];
    auto at = [&](double x) {
      const double u = (x - series.t[i - 1]) / h;
      return (1 - u) * series.I[i - 1] + u * series.I[i];
    };
    acc += 0.5 * (b - a) * (at(a) + at(b));
  }
  return acc;
}

}  // namespace warpspec
