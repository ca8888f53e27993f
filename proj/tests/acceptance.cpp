// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "warpspec/construction.hpp"
#include "warpspec/curvature.hpp"
#include "warpspec/errors.hpp"
#include "warpspec/growth.hpp"
#include "warpspec/io.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace warpspec;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what) {
  std::printf("criterion %d %s: %s\n", id, ok ? "PASS" : "FAIL", what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// Value at r1 of the regular radial solution of H'' + (n-1)/r H' + lambda H = 0.
double ball_shot(int n, double lambda, double r1) {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 2>;
  const double r0 = 1e-4;
  State y{1 - lambda * r0 * r0 / (2 * n), -lambda * r0 / n};
  auto stepper = odeint::make_controlled(1e-15, 1e-15, odeint::runge_kutta_fehlberg78<State>());
  odeint::integrate_adaptive(
      stepper, [&](const State& s, State& d, double r) { d = {s[1], -(n - 1) / r * s[1] - lambda * s[0]}; }, y, r0, r1,
      1e-4);
  return y[0];
}

// First Dirichlet eigenvalue of the flat ball of radius r1 by shooting in lambda.
double ball_eigenvalue(int n, double r1, double guess) {
  std::uintmax_t iters = 200;
  auto [a, b] = boost::math::tools::toms748_solve([&](double l) { return ball_shot(n, l, r1); }, 0.8 * guess,
                                                  1.2 * guess, boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (a + b);
}

double worst_finite(const VectorXd& v) {
  double w = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::isfinite(v[i])) w = std::max(w, v[i]);
  return w;
}

std::string dump(const std::vector<ChannelScan>& scans) {
  json doc = json::array();
  for (const ChannelScan& s : scans) {
    json per = json::array();
    for (const EigenDetection& d : s.detection.per_lambda) per.push_back(to_json(d));
    doc.push_back({{"j", s.j}, {"per_lambda", per}});
  }
  return doc.dump();
}

}  // namespace

int main() {
  const int n = 3;
  const double k = 1.0;
  const double b = resonance_eigenvalue(n);
  const auto start = std::chrono::steady_clock::now();

  ConstructionOptions co;
  co.n = n;
  co.k = k;
  co.R_max = 2000;
  const GluedConstruction g = build_example(co);
  const WarpProfile& glued = *g.profile;
  double scan_wronskian = 0;

  // 1. Channel scan of the glued manifold.
  {
    VerifyOptions vo;
    vo.j_max = 5;
    vo.half_width = 0.5;
    vo.step = 1e-3;
    vo.lambda_tolerance = 2e-3;
    const ConstructionReport rep = verify_construction(g, vo);
    for (const ChannelScan& s : rep.scans) scan_wronskian = std::max(scan_wronskian, s.detection.max_wronskian_drift);
    bool only = rep.detections.size() == 1 && rep.detections[0].j == 0 && std::abs(rep.detections[0].lambda - b) <= 2e-3;
    std::ostringstream list;
    for (const EigenDetection& d : rep.detections) list << " (j=" << d.j << ", lambda=" << fmt("%.6f", d.lambda) << ")";
    const double runtime = seconds_since(start);
    report(1, only && runtime <= 300,
           fmt("n=3 k=1 j=0..5 lambda in [1.5, 2.5] step 1e-3: %zu detection(s)", rep.detections.size()) + list.str() +
               fmt("; expected only (0, 2.000 +- 2e-3); runtime %.0f s (target 300 s)", runtime));
  }

  // 2. Curvature decay amplitude and the exact shape bound, beyond the junction.
  {
    const CurvatureField f = curvature_of_profile(glued);
    std::vector<double> fx, fy;
    double shape_sup = 0;
    for (Eigen::Index i = 0; i < f.r.size(); ++i) {
      if (f.r[i] >= 100 && f.r[i] <= 500) {
        fx.push_back(f.r[i]);
        fy.push_back(f.r[i] * (f.K_rad[i] + 1.0));
      }
      if (f.r[i] >= g.connector.r2) shape_sup = std::max(shape_sup, f.r[i] * std::abs(f.S[i] - 1.0));
    }
    const double amp = fit_sinusoid(fx, fy, 2.0).amplitude;
    const double target = 2 * std::sqrt(2.0) * k;
    const bool ok = std::abs(amp / target - 1) <= 0.1 && shape_sup <= std::abs(k) * (1 + 1e-12);
    report(2, ok,
           fmt("fitted amplitude of r(K+1) on [100, 500] = %.6f vs 2 sqrt(2)|k| = %.6f (10%%); sup r|S-1| = %.12f <= |k| = %g",
               amp, target, shape_sup, std::abs(k)));
  }

  // 3. Coupling threshold for the oscillating half-line potential.
  {
    DetectorOptions d;
    d.x_start = 1.0;
    d.x_end = 2000;
    const auto grid = lambda_grid(0.5, 1.5, 1e-3);
    bool ok = true;
    std::ostringstream msg;
    for (double keff : {1.0, 1.9, 2.5, 4.0}) {
      const DetectionReport rep = detect_embedded_eigenvalue(wvn_potential(keff), grid, OriginCondition::free, d);
      scan_wronskian = std::max(scan_wronskian, rep.max_wronskian_drift);
      msg << "k_eff=" << keff << ": " << rep.eigenvalues.size() << " detection(s)";
      if (keff < 2) {
        ok = ok && rep.eigenvalues.empty();
      } else {
        const bool one = rep.eigenvalues.size() == 1 && std::abs(rep.eigenvalues[0].lambda - 1.0) <= 2e-3;
        const EigenDetection at = evaluate_lambda(wvn_potential(keff), 1.0, OriginCondition::free, d);
        const bool expo = std::abs(at.exponent + keff / 4) <= 0.05;
        ok = ok && one && expo;
        if (!rep.eigenvalues.empty()) msg << fmt(" at %.6f", rep.eigenvalues[0].lambda);
        msg << fmt(", exponent %.4f vs %.4f", at.exponent, -keff / 4);
      }
      msg << "; ";
    }
    report(3, ok, msg.str() + "window [100, 1000]");
  }

  // 4. Disk radius against an independent shooting oracle.
  {
    bool ok = true;
    std::ostringstream msg;
    for (int m = 2; m <= 5; ++m) {
      const DiskEigenfunction disk = disk_eigenfunction(m);
      const double lam = ball_eigenvalue(m, disk.r1, disk.b);
      const double rel = std::abs(lam - disk.b) / disk.b;
      ok = ok && rel <= 1e-8;
      msg << fmt("n=%d rel %.2e; ", m, rel);
    }
    const double r1 = disk_eigenfunction(3).r1;
    const double err = std::abs(r1 - std::numbers::pi / std::sqrt(2.0));
    ok = ok && err <= 1e-9;
    report(4, ok, msg.str() + fmt("n=3 r1 = %.12f, |r1 - pi/sqrt 2| = %.1e", r1, err));
  }

  // 5. Gluing consistency.
  {
    const double res = worst_finite(glued_ode_residual(g));
    const double jump = f_prime_jump(g);
    double pole = 0;
    for (Eigen::Index i = 0; i < glued.grid().size(); ++i)
      if (glued.grid()[i] <= g.connector.r1)
        pole = std::max(pole, std::abs(std::exp(glued.log_f()[i]) / glued.grid()[i] - 1));
    const GluedConstruction g3 = glue_profile(g.connector.scaled(3.0), g.resonant, co.spacing);
    const std::string a = csv_text(Table{{"r", "log_f"}, {glued.grid(), glued.log_f()}});
    const std::string c = csv_text(Table{{"r", "log_f"}, {g3.profile->grid(), g3.profile->log_f()}});
    const bool same = a == c;
    report(5, res <= 1e-6 && jump <= 1e-6 && pole <= 1e-8 && same,
           fmt("ODE residual %.2e (1e-6); f' jump at r2 %.2e (1e-6); max|f/r - 1| on [0, r1] %.1e (1e-8); f under psi -> 3 psi %s",
               res, jump, pole, same ? "byte-identical" : "differs"));
  }

  // 6. Growth dichotomy.
  {
    const WarpProfile tail(n, std::make_shared<PowerTailWarp>(1.0, 1.5), uniform_grid(1.0, 1000.0, 0.01));
    GrowthTrialOptions go;
    go.R_max = 1000;
    go.trials = 5;
    const GrowthVerdict v = verify_growth_theorem(tail, b, 1.0, go);
    int grown = 0;
    for (const GrowthTrial& t : v.trials) grown += t.passed() ? 1 : 0;
    const GrowthSeries eig = eigenfunction_growth(g, 1.0);
    const double at50 = windowed_mean(eig, 50, std::numbers::pi);
    const double at1000 = windowed_mean(eig, 1000, std::numbers::pi);
    const double ratio = at1000 / at50;
    report(6, v.passed && ratio < 0.01,
           fmt("K+1 = O(r^-1.5): %d/5 seeded trials (seed %llu) grow on [100, 1000]; "
               "eigenfunction tI(1000)/tI(50) = %.4f (needs < 0.01)",
               grown, static_cast<unsigned long long>(v.seed), ratio));
  }

  // 7. Comparison machinery.
  {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> kd(-0.8, 0.8), wd(1.0, 3.0), pd(0.0, 2 * std::numbers::pi);
    int held = 0;
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<OscillatoryWarp::Mode> modes{{kd(rng), wd(rng), pd(rng)}, {kd(rng), wd(rng), pd(rng)}};
      const WarpProfile p(n, std::make_shared<OscillatoryWarp>(modes), uniform_grid(1.0, 500.0, 0.01));
      const CurvatureField f = curvature_of_profile(p);
      double A = 0, B = 0;
      for (Eigen::Index i = 0; i < f.r.size(); ++i) {
        if (f.r[i] < 5) continue;
        A = std::max(A, 0.5 * f.r[i] * (f.K_rad[i] + 1));
        B = std::max(B, -0.5 * f.r[i] * (f.K_rad[i] + 1));
      }
      A += 0.05;
      B += 0.05;
      const RiccatiBound bound = solve_riccati_bound(A, B, std::max(5.0, 2 * A), 3.0, p.grid());
      held += riccati_sandwich(p, bound).holds ? 1 : 0;
    }
    const RiccatiBound asym = solve_riccati_bound(0.5, 0.5, 1.0, 1.5, uniform_grid(1.0, 500.0, 0.5));
    std::vector<double> rr, lo, hi;
    double worst = 0;
    for (Eigen::Index i = 0; i < asym.r.size(); ++i) {
      if (asym.r[i] < 50) continue;
      rr.push_back(asym.r[i]);
      lo.push_back(asym.lower_residual[i]);
      hi.push_back(asym.upper_residual[i]);
      worst = std::max({worst, asym.lower_residual[i], asym.upper_residual[i]});
    }
    const VectorXd rv = Eigen::Map<VectorXd>(rr.data(), rr.size());
    const double slope_lo = log_log_slope(rv, Eigen::Map<VectorXd>(lo.data(), lo.size()), 50, 500).slope;
    const double slope_hi = log_log_slope(rv, Eigen::Map<VectorXd>(hi.data(), hi.size()), 50, 500).slope;
    const bool bounded = slope_lo <= 0.05 && slope_hi <= 0.05;
    const RiccatiBound th = solve_riccati_bound(0.0, 0.0, 0.5, 1.0, uniform_grid(0.5, 30.0, 0.01));
    double tanh_err = 0;
    for (Eigen::Index i = 0; i < th.r.size(); ++i)
      tanh_err = std::max(tanh_err, std::abs(th.f1_curve[i] - std::tanh(th.r[i] - 0.5)));
    report(7, held == 10 && bounded && tanh_err <= 1e-10,
           fmt("sandwich held on %d/10 random profiles; r^3|f_i - (1 -+ A/r)| on [50, 500]: max %.3g, log-log slopes %.3f / %.3f "
               "(bounded needs <= 0.05); tanh case error %.1e (1e-10)",
               held, worst, slope_lo, slope_hi, tanh_err));
  }

  // 8. Identity suite and trace residual.
  {
    const std::vector<RadialFunction> weights{constant_function(0.0), linear_weight(0.2), log_weight(2.0)};
    const WarpProfile flat(n, std::make_shared<EuclideanWarp>(), uniform_grid(0.01, 25.0, 0.01));
    const WarpProfile hyp(n, std::make_shared<HyperbolicWarp>(), uniform_grid(0.01, 25.0, 0.01));
    double worst = 0;
    std::size_t count = 0;
    std::string where;
    auto run = [&](const WarpProfile& p, IdentityOptions o) {
      for (const IdentityCheck& c : check_parts_identities(p, default_test_functions(), weights, o)) {
        ++count;
        if (c.residual > worst) {
          worst = c.residual;
          where = c.profile + " " + c.name;
        }
      }
    };
    IdentityOptions o;
    o.s = 1;
    o.t = 20;
    o.label = "euclidean";
    run(flat, o);
    o.label = "hyperbolic";
    run(hyp, o);
    o.label = "glued";
    o.t = g.connector.r2 + 30;
    o.split_at_junctions = true;
    run(glued, o);
    o.s = g.connector.r2 + 1;
    o.t = g.connector.r2 + 50;
    run(glued, o);
    double trace = 0;
    for (const WarpProfile* p : {&flat, &hyp, &glued}) trace = std::max(trace, bochner_residual(curvature_of_profile(*p)));
    report(8, worst <= 1e-7 && trace <= 1e-5,
           fmt("%zu radial identity checks on euclidean, hyperbolic, glued; max residual %.2e (%s) (1e-7); "
               "max trace residual %.2e (1e-5)",
               count, worst, where.c_str(), trace));
  }

  // 9. Solver hygiene.
  {
    double rev = 0;
    const ChannelPotential c0 = channel_potential(glued, sphere_spectrum(n, 0)[0]);
    for (const Potential* q : {&c0.potential}) {
      for (double lam : {1.6, b, 2.4}) {
        const ShootingResult f = integrate_schrodinger(*q, lam, 1.0, 0.5, 1.0, 2000.0);
        const Eigen::Index e = f.x.size() - 1;
        const ShootingResult back = integrate_schrodinger(*q, lam, f.true_w()[e], f.true_w_prime()[e], 2000.0, 1.0);
        rev = std::max(rev, std::hypot(back.true_w()[0] - 1.0, back.true_w_prime()[0] - 0.5) / std::hypot(1.0, 0.5));
      }
    }
    for (double keff : {1.0, 4.0}) {
      const Potential q = wvn_potential(keff);
      const ShootingResult f = integrate_schrodinger(q, 1.0, 0.0, 1.0, 1.0, 2000.0);
      const Eigen::Index e = f.x.size() - 1;
      const ShootingResult back = integrate_schrodinger(q, 1.0, f.true_w()[e], f.true_w_prime()[e], 2000.0, 1.0);
      rev = std::max(rev, std::hypot(back.true_w()[0], back.true_w_prime()[0] - 1.0));
    }
    DetectorOptions d;
    const auto grid = lambda_grid(1.9, 2.1, 0.01);
    d.threads = 1;
    const std::string one = dump(channel_scan(glued, 1, grid, d));
    d.threads = 4;
    const std::string four = dump(channel_scan(glued, 1, grid, d));
    const std::string again = dump(channel_scan(glued, 1, grid, d));
    IdentityOptions o;
    const WarpProfile hyp(n, std::make_shared<HyperbolicWarp>(), uniform_grid(0.01, 25.0, 0.01));
    auto ident = [&] {
      json doc = json::array();
      for (const IdentityCheck& c : check_parts_identities(hyp, default_test_functions(), {constant_function(0.0)}, o))
        doc.push_back(to_json(c));
      return doc.dump();
    };
    const bool same = one == four && four == again && ident() == ident();
    report(9, scan_wronskian <= 1e-6 && rev <= 1e-6 && same,
           fmt("max Wronskian drift over all scan runs %.2e (1e-6); forward/backward on [1, 2000] %.2e (1e-6); "
               "repeated reports %s",
               scan_wronskian, rev, same ? "byte-identical" : "differ"));
  }

  std::printf("%d criterion(s) failed; total %.0f s\n", failures, seconds_since(start));
  return failures == 0 ? 0 : 1;
}
