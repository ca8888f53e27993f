#include "warpspec/halfline.hpp"

#include "warpspec/errors.hpp"

#include <atomic>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>

namespace warpspec {

namespace {

constexpr double renormalize_above = 1e50;
constexpr double renormalize_below = 1e-50;
constexpr double max_growth = 20.0;

std::vector<double> node_grid(double a, double b, double spacing) {
  const double len = std::abs(b - a);
  const auto cells = std::max<long>(1, static_cast<long>(std::ceil(len / spacing - 1e-9)));
  std::vector<double> nodes(cells + 1);
  for (long i = 0; i <= cells; ++i) nodes[i] = a + (b - a) * double(i) / double(cells);
  nodes[cells] = b;
  return nodes;
}

/// K solutions of the same linear equation integrated together, each pair
/// (w, w') forming one error block and carrying its own log scale.
template <int K>
struct LinearRun {
  std::vector<double> x;
  std::vector<Eigen::Matrix<double, 2 * K, 1>> y;
  std::vector<Eigen::Matrix<double, K, 1>> log_scale;
};

template <int K>
LinearRun<K> integrate_linear(const Potential& q, double lambda, Eigen::Matrix<double, 2 * K, 1> y,
                              Eigen::Matrix<double, K, 1> log_scale, double x_start, double x_end,
                              const SolverOptions& options, bool record = true) {
  using State = Eigen::Matrix<double, 2 * K, 1>;
  const auto& qfun = q.q;
  auto rhs = [&qfun, lambda](double x, const State& s, State& ds) {
    const double v = qfun(x) - lambda;
    for (int c = 0; c < K; ++c) {
      ds[2 * c] = s[2 * c + 1];
      ds[2 * c + 1] = v * s[2 * c];
    }
  };
  OdeOptions ode = options.ode;
  ode.block = 2;
  auto solver = make_dop853<State>(rhs, ode);
  LinearRun<K> run;
  const std::vector<double> nodes = node_grid(x_start, x_end, options.spacing);
  if (record) {
    run.x.reserve(nodes.size());
    run.y.reserve(nodes.size());
    run.log_scale.reserve(nodes.size());
  }
  double x = x_start;
  auto renormalize = [&]() {
    for (int c = 0; c < K; ++c) {
      const double norm = y.template segment<2>(2 * c).norm();
      if (norm > renormalize_above || (norm < renormalize_below && norm > 0)) {
        y.template segment<2>(2 * c) /= norm;
        log_scale[c] += std::log(norm);
      }
    }
  };
  // Sub-interval ending no further than growth e^max_growth under a barrier.
  auto next_stop = [&](double target) {
    double d = target - x;
    for (int tries = 0; tries < 8; ++tries) {
      const double v = std::max({qfun(x), qfun(x + 0.5 * d), qfun(x + d)}) - lambda;
      if (!(v > 0) || std::sqrt(v) * std::abs(d) <= max_growth) break;
      d = std::copysign(max_growth / std::sqrt(v), d);
    }
    double stop = std::abs(target - (x + d)) < 1e-12 * std::max(1.0, std::abs(target)) ? target : x + d;
    for (double b : q.breakpoints)
      if ((b - x) * (stop - b) > 0) stop = b;
    return stop;
  };
  auto store = [&]() {
    renormalize();
    if (record) {
      run.x.push_back(x);
      run.y.push_back(y);
      run.log_scale.push_back(log_scale);
    }
  };
  store();
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    try {
      while (x != nodes[i]) {
        solver.integrate(x, y, next_stop(nodes[i]));
        renormalize();
      }
    } catch (const IntegrationError& e) {
      if (q.origin_exponent && std::abs(x) < 1.0)
        throw SingularOrigin(std::string(e.what()) +
                             "; the origin is regular-singular, start with frobenius_start / regular_solution");
      throw;
    }
    if (!y.allFinite()) {
      if (q.origin_exponent && std::abs(x) < 1.0)
        throw SingularOrigin("solution not finite near a regular-singular origin; use frobenius_start");
      throw IntegrationError("solution became non-finite at x = " + std::to_string(x));
    }
    store();
  }
  if (!record) {
    run.x.push_back(x);
    run.y.push_back(y);
    run.log_scale.push_back(log_scale);
  }
  return run;
}

ShootingResult to_result(const LinearRun<1>& run, double lambda, double q_limit, Direction dir) {
  ShootingResult r;
  const auto n = static_cast<Eigen::Index>(run.x.size());
  r.x.resize(n);
  r.w.resize(n);
  r.w_prime.resize(n);
  r.log_scale.resize(n);
  const bool reverse = run.x.size() > 1 && run.x.back() < run.x.front();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index k = reverse ? n - 1 - i : i;
    r.x[i] = run.x[k];
    r.w[i] = run.y[k][0];
    r.w_prime[i] = run.y[k][1];
    r.log_scale[i] = run.log_scale[k][0];
  }
  r.lambda = lambda;
  r.q_limit = q_limit;
  r.direction = dir;
  return r;
}

double log_abs_or_min(double v) { return std::log(std::max(std::abs(v), 1e-300)); }

}  // namespace

VectorXd ShootingResult::true_w() const { return (log_scale.array().exp() * w.array()).matrix(); }

VectorXd ShootingResult::true_w_prime() const { return (log_scale.array().exp() * w_prime.array()).matrix(); }

ShootingResult integrate_schrodinger(const Potential& q, double lambda, double w0, double w0_prime, double x_start,
                                     double x_end, const SolverOptions& options) {
  if (!std::isfinite(lambda)) throw IntegrationError("lambda must be finite");
  if (x_start == x_end) throw ShapeError("empty integration range");
  Eigen::Vector2d y(w0, w0_prime);
  Eigen::Matrix<double, 1, 1> s;
  s[0] = 0.0;
  const auto run = integrate_linear<1>(q, lambda, y, s, x_start, x_end, options);
  return to_result(run, lambda, q.limit, x_end > x_start ? Direction::forward : Direction::backward);
}

FrobeniusStart frobenius_start(const Potential& q, double lambda, double x0) {
  if (!(x0 > 0)) throw IntegrationError("frobenius_start: x0 must be positive");
  const double s = q.origin_exponent.value_or(1.0);
  const double lam = lambda - (q.regular_part ? q.regular_part(x0) : q.q(x0));
  double a = 1.0, w = 1.0, wp = s / x0;
  const double x2 = x0 * x0;
  double power = 1.0;
  for (int m = 1; m < 200; ++m) {
    a *= -lam / (2.0 * m * (2.0 * s + 2.0 * m - 1.0));
    power *= x2;
    const double tw = a * power;
    w += tw;
    wp += a * (s + 2.0 * m) * power / x0;
    if (std::abs(tw) < 1e-18 * std::abs(w)) break;
  }
  return {x0, w, wp, s * std::log(x0)};
}

ShootingResult regular_solution(const Potential& q, double lambda, double x_end, const SolverOptions& options,
                                double x0) {
  const FrobeniusStart st = frobenius_start(q, lambda, q.origin_exponent ? x0 : 1e-8);
  Eigen::Vector2d y(st.w, st.w_prime);
  Eigen::Matrix<double, 1, 1> s;
  s[0] = st.log_scale;
  const auto run = integrate_linear<1>(q, lambda, y, s, st.x0, x_end, options);
  return to_result(run, lambda, q.limit, Direction::forward);
}

double prufer_wavenumber(double lambda, double q_limit) {
  const double d = std::abs(lambda - q_limit);
  return d > 0 ? std::sqrt(d) : 1.0;
}

void prufer_series(ShootingResult& result) {
  if (!(result.lambda > result.q_limit))
    throw NonOscillatory("prufer_series: lambda must exceed the limit of q");
  const double kappa = prufer_wavenumber(result.lambda, result.q_limit);
  const Eigen::Index n = result.x.size();
  result.log_amplitude.resize(n);
  result.phase.resize(n);
  double previous = 0;
  double offset = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = result.w[i], b = result.w_prime[i] / kappa;
    result.log_amplitude[i] = result.log_scale[i] + 0.5 * std::log(a * a + b * b);
    double theta = std::atan2(a, b);
    if (i > 0) {
      while (theta + offset - previous > std::numbers::pi) offset -= 2 * std::numbers::pi;
      while (theta + offset - previous < -std::numbers::pi) offset += 2 * std::numbers::pi;
    }
    result.phase[i] = theta + offset;
    previous = result.phase[i];
  }
}

DecayFit fit_power_decay(const VectorXd& x, const VectorXd& log_amplitude, double x_lo, double x_hi) {
  if (x_hi < 10.0 * x_lo * (1 - 1e-12)) throw InsufficientData("decay fit window must span a decade");
  std::vector<double> lx, ly;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < x_lo || x[i] > x_hi) continue;
    if (!std::isfinite(log_amplitude[i])) throw InsufficientData("non-positive amplitude in fit window");
    lx.push_back(std::log(x[i]));
    ly.push_back(log_amplitude[i]);
  }
  if (lx.size() < 50) throw InsufficientData("fewer than 50 samples in the decay fit window");
  const LinearFit f = fit_line(lx, ly);
  return {f.slope, f.slope_stderr, x_lo, x_hi, f.samples};
}

DecayFit fit_integrand_decay(const VectorXd& x, const VectorXd& log_w2, double x_lo, double x_hi) {
  std::vector<double> lx, ly;
  Eigen::Index i = 0;
  while (i < x.size() && x[i] < x_lo) ++i;
  while (i < x.size() && x[i] <= x_hi) {
    const double start = x[i];
    // Block mean of w^2 in log form: log sum exp, then minus log count.
    double peak = -std::numeric_limits<double>::infinity();
    Eigen::Index j = i;
    for (; j < x.size() && x[j] < start + std::numbers::pi && x[j] <= x_hi; ++j) peak = std::max(peak, log_w2[j]);
    if (j - i < 4) break;
    double acc = 0, centre = 0;
    for (Eigen::Index k = i; k < j; ++k) {
      acc += std::exp(log_w2[k] - peak);
      centre += x[k];
    }
    lx.push_back(std::log(centre / double(j - i)));
    ly.push_back(peak + std::log(acc / double(j - i)));
    i = j;
  }
  if (lx.size() < 10) throw InsufficientData("too few blocks for the integrand fit");
  const LinearFit f = fit_line(lx, ly);
  return {f.slope, f.slope_stderr, x_lo, x_hi, f.samples};
}

unsigned worker_threads(unsigned requested) {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  unsigned n = requested > 0 ? requested : hw;
  if (const char* env = std::getenv("WARPSPEC_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return std::max(1u, n);
}

std::vector<double> lambda_grid(double lo, double hi, double step) {
  if (!(step > 0) || hi < lo) throw ConfigError("lambda grid: need lo <= hi and step > 0");
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  std::vector<double> grid(count + 1);
  for (long i = 0; i <= count; ++i) grid[i] = lo + double(i) * step;
  return grid;
}

/// Node after the last point of [x_start, x_end] where q - lambda > 1.
static double last_barrier(const Potential& q, double lambda, double x_start, double x_end) {
  constexpr double spacing = 0.05;
  double last = x_start;
  for (double x = x_start; x <= x_end; x += spacing)
    if (q.q(x) - lambda > 1.0) last = x + spacing;
  return std::min(last, x_end);
}

EigenDetection evaluate_lambda(const Potential& q, double lambda, OriginCondition origin, const DetectorOptions& options,
                               int j) {
  if (!(lambda > q.limit)) throw OutsideRegime("detector: lambda must exceed the limit of q");
  EigenDetection det;
  det.j = j;
  det.lambda = lambda;
  if (q.tail.present) det.k_eff = q.tail.k_eff;
  const double kappa = prufer_wavenumber(lambda, q.limit);
  const double x_start = options.x_start;

  LinearRun<2> pair;
  LinearRun<1> lead;
  if (origin == OriginCondition::regular) {
    const double x0 = q.origin_exponent ? options.x0 : 1e-8;
    const FrobeniusStart st = frobenius_start(q, lambda, x0);
    Eigen::Vector2d y(st.w, st.w_prime);
    Eigen::Matrix<double, 1, 1> s;
    s[0] = st.log_scale;
    const auto head = integrate_linear<1>(q, lambda, y, s, st.x0, x_start, options.solver, false);
    // The pair starts past the last barrier, where the companion can no longer
    // collapse onto the growing mode.
    const double x_pair = last_barrier(q, lambda, x_start, options.x_end);
    Eigen::Vector2d hy = head.y.back();
    Eigen::Matrix<double, 1, 1> hs = head.log_scale.back();
    if (x_pair > x_start) {
      lead = integrate_linear<1>(q, lambda, hy, hs, x_start, x_pair, options.solver);
      hy = lead.y.back();
      hs = lead.log_scale.back();
      lead.x.pop_back();
      lead.y.pop_back();
      lead.log_scale.pop_back();
    }
    const double norm = hy.norm();
    Eigen::Vector4d y4(hy[0], hy[1], -hy[1] / norm, hy[0] / norm);
    Eigen::Vector2d s2(hs[0], 0.0);
    pair = integrate_linear<2>(q, lambda, y4, s2, x_pair, options.x_end, options.solver);
  } else {
    pair = integrate_linear<2>(q, lambda, Eigen::Vector4d(1, 0, 0, 1), Eigen::Vector2d::Zero(), x_start, options.x_end,
                               options.solver);
  }

  const auto lead_n = static_cast<Eigen::Index>(lead.x.size());
  const auto n = lead_n + static_cast<Eigen::Index>(pair.x.size());
  VectorXd x(n), log_rho(n), log_w2(n);
  for (Eigen::Index i = 0; i < lead_n; ++i) {
    const auto& y = lead.y[i];
    const double a = y[0], b = y[1] / kappa;
    x[i] = lead.x[i];
    log_rho[i] = lead.log_scale[i][0] + 0.5 * std::log(a * a + b * b);
    log_w2[i] = 2.0 * (lead.log_scale[i][0] + log_abs_or_min(y[0]));
  }
  double w_ref = 0;
  for (Eigen::Index i = lead_n; i < n; ++i) {
    const auto& y = pair.y[i - lead_n];
    const auto& s = pair.log_scale[i - lead_n];
    x[i] = pair.x[i - lead_n];
    const double wr = y[0] * y[3] - y[2] * y[1];
    const double log_w = s[0] + s[1] + log_abs_or_min(wr);
    if (i == lead_n) w_ref = log_w;
    const double sign0 = (pair.y[0][0] * pair.y[0][3] - pair.y[0][2] * pair.y[0][1]) > 0 ? 1.0 : -1.0;
    const double ratio = std::exp(log_w - w_ref) * ((wr > 0 ? 1.0 : -1.0) * sign0);
    det.wronskian_drift = std::max(det.wronskian_drift, std::abs(ratio - 1.0));
    if (origin == OriginCondition::regular) {
      const double a = y[0], b = y[1] / kappa;
      log_rho[i] = s[0] + 0.5 * std::log(a * a + b * b);
      log_w2[i] = 2.0 * (s[0] + log_abs_or_min(y[0]));
    } else {
      // Smallest singular value of D Phi D^{-1}, D = diag(1, 1/kappa), via
      // sigma_min = |det| / sigma_max with a common scale factored out.
      const double m = std::max(s[0], s[1]);
      const double e0 = std::exp(s[0] - m), e1 = std::exp(s[1] - m);
      const double p00 = y[0] * e0, p10 = y[1] * e0 / kappa;
      const double p01 = y[2] * e1 * kappa, p11 = y[3] * e1;
      const double fro = p00 * p00 + p10 * p10 + p01 * p01 + p11 * p11;
      const double detm = std::abs(p00 * p11 - p01 * p10);
      const double disc = std::sqrt(std::max(0.0, fro * fro - 4.0 * detm * detm));
      const double smax = std::sqrt(0.5 * (fro + disc));
      log_rho[i] = log_w - (m + std::log(smax));
      log_w2[i] = 2.0 * log_rho[i];
    }
  }
  const double hi = std::min(options.fit_hi, options.x_end);
  const DecayFit fit = fit_power_decay(x, log_rho, options.fit_lo, hi);
  det.exponent = fit.exponent;
  det.stderr_ = fit.stderr_;
  det.integrand_exponent = fit_integrand_decay(x, log_w2, options.fit_lo, hi).exponent;

  // Partial integrals of w^2, relative to the first checkpoint.
  const double checkpoints[] = {250.0, 500.0, 1000.0, 2000.0};
  double peak = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) peak = std::max(peak, log_w2[i]);
  double acc = 0, first = 0;
  std::size_t next = 0;
  for (Eigen::Index i = 1; i < n && next < 4; ++i) {
    acc += 0.5 * (x[i] - x[i - 1]) * (std::exp(log_w2[i] - peak) + std::exp(log_w2[i - 1] - peak));
    const double target = std::min(checkpoints[next], options.x_end);
    if (x[i] >= target - 1e-9) {
      if (det.partial_l2.empty()) first = acc;
      det.partial_l2.push_back(first > 0 ? acc / first : 0.0);
      ++next;
      if (target >= options.x_end) break;
    }
  }
  det.eigenvalue = det.exponent < options.exponent_threshold && det.integrand_exponent < options.integrand_threshold;
  return det;
}

DetectionReport detect_embedded_eigenvalue(const Potential& q, const std::vector<double>& lambda_grid,
                                           OriginCondition origin, const DetectorOptions& options, int j) {
  if (!q.tail.present)
    throw DetectorRefused("tail of q is not of the oscillating x^{-1} class (k_eff fit absent); cannot certify");
  if (q.tail.k_eff > 0 && !(q.tail.remainder_exponent < 0))
    throw DetectorRefused("remainder of the tail fit does not decay faster than 1/x on the fit window");
  DetectionReport report;
  report.per_lambda.resize(lambda_grid.size());
  const unsigned threads = std::min<unsigned>(worker_threads(options.threads),
                                              static_cast<unsigned>(std::max<std::size_t>(1, lambda_grid.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= lambda_grid.size()) return;
      try {
        report.per_lambda[i] = evaluate_lambda(q, lambda_grid[i], origin, options, j);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = lambda_grid.size();
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  for (const auto& d : report.per_lambda) report.max_wronskian_drift = std::max(report.max_wronskian_drift, d.wronskian_drift);

  // One detection per contiguous cluster of fired grid points.
  std::size_t i = 0;
  while (i < report.per_lambda.size()) {
    if (!report.per_lambda[i].eigenvalue) {
      ++i;
      continue;
    }
    std::size_t k = i;
    while (k + 1 < report.per_lambda.size() && report.per_lambda[k + 1].eigenvalue) ++k;
    EigenDetection best = report.per_lambda[i];
    for (std::size_t m = i; m <= k; ++m)
      if (report.per_lambda[m].exponent < best.exponent) best = report.per_lambda[m];
    if (options.refine) {
      const double lo = i > 0 ? lambda_grid[i - 1] : lambda_grid[i];
      const double hi = k + 1 < lambda_grid.size() ? lambda_grid[k + 1] : lambda_grid[k];
      if (hi > lo) {
        std::vector<EigenDetection> seen;
        auto objective = [&](double lam) {
          seen.push_back(evaluate_lambda(q, lam, origin, options, j));
          return seen.back().exponent;
        };
        golden_minimize(objective, lo, hi, options.golden_iterations);
        for (const auto& d : seen)
          if (d.eigenvalue && d.exponent < best.exponent) best = d;
      }
    }
    report.eigenvalues.push_back(best);
    i = k + 1;
  }
  return report;
}

double decaying_start_radius(double R_max, double k_eff, double contamination, double max_start) {
  if (!(k_eff > 0)) return R_max;
  const double r = 0.25 * R_max * std::pow(contamination, -2.0 / k_eff);
  return std::clamp(r, R_max, std::max(R_max, max_start));
}

ShootingResult decaying_solution(const Potential& q, double lambda, double R_max, const DecayingOptions& options) {
  const double x_min = options.x_min;
  if (!(R_max > x_min)) throw ShapeError("decaying_solution: R_max must exceed x_min");
  Eigen::Vector2d y;
  Eigen::Matrix<double, 1, 1> s;
  s[0] = 0.0;
  double start = R_max;
  const double gap = q.limit - lambda;
  if (gap > 0) {
    y << 1.0, -std::sqrt(gap);
  } else {
    if (gap == 0) throw NoDecayingSolution("lambda equals the threshold of the essential spectrum");
    if (!q.tail.present) throw NoDecayingSolution("tail of q could not be fitted");
    if (!(q.tail.k_eff > 2.0))
      throw NoDecayingSolution("coupling |k_eff| = " + std::to_string(q.tail.k_eff) + " does not exceed 2");
    const double kappa = std::sqrt(-gap);
    if (std::abs(kappa * kappa - 1.0) > options.resonance_tolerance)
      throw NoDecayingSolution("lambda is not at the resonance lambda - lim q = 1");
    start = decaying_start_radius(R_max, q.tail.k_eff, options.contamination, options.max_start);
    const double theta = kappa * start + 0.5 * (q.tail.phase - std::numbers::pi);
    y << std::sin(theta), kappa * std::cos(theta);
  }
  if (start > R_max) {
    SolverOptions coarse = options.solver;
    coarse.spacing = std::max(coarse.spacing, 50.0);
    const auto lead = integrate_linear<1>(q, lambda, y, s, start, R_max, coarse, false);
    y = lead.y.back();
    s = lead.log_scale.back();
  }
  const auto run = integrate_linear<1>(q, lambda, y, s, R_max, x_min, options.solver);
  ShootingResult r = to_result(run, lambda, q.limit, Direction::backward);
  // Normalize: rho(x_min) = 1 and the larger Prufer component positive there.
  const double kappa = prufer_wavenumber(lambda, q.limit);
  const double a = r.w[0], b = r.w_prime[0] / kappa;
  const double shift = r.log_scale[0] + 0.5 * std::log(a * a + b * b);
  const double sign = (std::abs(a) >= std::abs(b) ? a : b) < 0 ? -1.0 : 1.0;
  r.log_scale.array() -= shift;
  r.w *= sign;
  r.w_prime *= sign;
  if (lambda > q.limit) prufer_series(r);
  else {
    r.log_amplitude = (r.log_scale.array() + 0.5 * (r.w.array().square() + (r.w_prime.array() / kappa).square()).log()).matrix();
    r.phase = VectorXd::Zero(r.x.size());
  }
  return r;
}

double wronskian_drift(const ShootingResult& a, const ShootingResult& b) {
  if (a.x.size() != b.x.size()) throw ShapeError("wronskian_drift: different grids");
  double w0 = a.w[0] * b.w_prime[0] - b.w[0] * a.w_prime[0];
  const double s0 = a.log_scale[0] + b.log_scale[0];
  double worst = 0;
  for (Eigen::Index i = 0; i < a.x.size(); ++i) {
    const double wi = a.w[i] * b.w_prime[i] - b.w[i] * a.w_prime[i];
    const double ratio = std::exp(a.log_scale[i] + b.log_scale[i] - s0) * wi / w0;
    worst = std::max(worst, std::abs(ratio - 1.0));
  }
  return worst;
}

std::vector<std::string> shooting_columns() { return {"x", "w", "w_prime", "amplitude", "phase"}; }

}  // namespace warpspec
