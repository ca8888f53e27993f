#include "warpspec/run.hpp"

#include "warpspec/construction.hpp"
#include "warpspec/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

namespace warpspec {

namespace {

const std::vector<std::string> kCommands = {"build-example", "curvature-report", "scan", "verify-growth",
                                            "check-identities"};
const std::vector<std::string> kProfiles = {"euclidean", "hyperbolic", "exponential", "wvn",
                                            "power_tail", "log_tail", "glued"};

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

double as_double(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return v.get<int>();
}

std::optional<double> as_optional(const json& v, const std::string& key) {
  if (v.is_null()) return std::nullopt;
  return as_double(v, key);
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

using Setter = std::function<void(RunConfig&, const json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"command", [](RunConfig& c, const json& v) { c.command = as_string(v, "command"); }},
      {"profile",
       [](RunConfig& c, const json& v) {
         if (v.is_null()) c.profile.reset();
         else c.profile = as_string(v, "profile");
       }},
      {"n", [](RunConfig& c, const json& v) { c.n = as_int(v, "n"); }},
      {"k", [](RunConfig& c, const json& v) { c.k = as_double(v, "k"); }},
      {"a", [](RunConfig& c, const json& v) { c.a = as_double(v, "a"); }},
      {"p", [](RunConfig& c, const json& v) { c.p = as_double(v, "p"); }},
      {"R_max", [](RunConfig& c, const json& v) { c.R_max = as_optional(v, "R_max"); }},
      {"spacing", [](RunConfig& c, const json& v) { c.spacing = as_double(v, "spacing"); }},
      {"gamma", [](RunConfig& c, const json& v) { c.gamma = as_double(v, "gamma"); }},
      {"alpha", [](RunConfig& c, const json& v) { c.alpha = as_optional(v, "alpha"); }},
      {"j_max", [](RunConfig& c, const json& v) { c.j_max = as_int(v, "j_max"); }},
      {"lambda_lo", [](RunConfig& c, const json& v) { c.lambda_lo = as_optional(v, "lambda_lo"); }},
      {"lambda_hi", [](RunConfig& c, const json& v) { c.lambda_hi = as_optional(v, "lambda_hi"); }},
      {"lambda_step", [](RunConfig& c, const json& v) { c.lambda_step = as_double(v, "lambda_step"); }},
      {"seed",
       [](RunConfig& c, const json& v) {
         if (!v.is_number_unsigned()) throw ConfigError("config key 'seed' must be a non-negative integer");
         c.seed = v.get<std::uint64_t>();
       }},
      {"trials", [](RunConfig& c, const json& v) { c.trials = as_int(v, "trials"); }},
      {"t0", [](RunConfig& c, const json& v) { c.t0 = as_optional(v, "t0"); }},
      {"s", [](RunConfig& c, const json& v) { c.s = as_double(v, "s"); }},
      {"t", [](RunConfig& c, const json& v) { c.t = as_double(v, "t"); }},
      {"identity_lambda", [](RunConfig& c, const json& v) { c.identity_lambda = as_double(v, "identity_lambda"); }},
      {"identity_tolerance",
       [](RunConfig& c, const json& v) { c.identity_tolerance = as_double(v, "identity_tolerance"); }},
      {"lambda_tolerance", [](RunConfig& c, const json& v) { c.lambda_tolerance = as_double(v, "lambda_tolerance"); }},
      {"ode_tolerance", [](RunConfig& c, const json& v) { c.ode_tolerance = as_double(v, "ode_tolerance"); }},
      {"growth_residual_tolerance",
       [](RunConfig& c, const json& v) { c.growth_residual_tolerance = as_double(v, "growth_residual_tolerance"); }},
      {"wronskian_tolerance",
       [](RunConfig& c, const json& v) { c.wronskian_tolerance = as_double(v, "wronskian_tolerance"); }},
      {"threads",
       [](RunConfig& c, const json& v) {
         const int t = as_int(v, "threads");
         if (t < 0) throw ConfigError("config key 'threads' must be >= 0");
         c.threads = static_cast<unsigned>(t);
       }},
      {"output_dir", [](RunConfig& c, const json& v) { c.output_dir = as_string(v, "output_dir"); }},
  };
  return table;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

bool contains(const std::vector<std::string>& list, const std::string& value) {
  return std::find(list.begin(), list.end(), value) != list.end();
}

std::string default_profile(const std::string& command) {
  if (command == "curvature-report") return "wvn";
  if (command == "verify-growth") return "power_tail";
  if (command == "check-identities") return "hyperbolic";
  return "glued";
}

std::string profile_of(const RunConfig& c) { return c.profile.value_or(default_profile(c.command)); }

double r_max_of(const RunConfig& c) {
  if (c.R_max) return *c.R_max;
  if (c.command == "verify-growth") return 1000.0;
  if (c.command == "check-identities" && profile_of(c) != "glued") return c.t + 1.0;
  return 2000.0;
}

double domain_start_of(const std::string& profile) {
  if (profile == "wvn" || profile == "power_tail") return 1.0;
  if (profile == "log_tail") return std::numbers::e;
  return 0.0;
}

double t0_of(const RunConfig& c) {
  if (c.t0) return *c.t0;
  return std::max(1.0, std::ceil(domain_start_of(profile_of(c))));
}

std::pair<double, double> lambda_window(const RunConfig& c) {
  const double b = resonance_eigenvalue(c.n);
  return {c.lambda_lo.value_or(b - 0.5), c.lambda_hi.value_or(b + 0.5)};
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

CheckResult bound_check(const std::string& name, const std::string& invariant, double value, double tolerance,
                        std::optional<double> first = std::nullopt) {
  CheckResult r;
  r.name = name;
  r.invariant = invariant;
  r.value = value;
  r.tolerance = tolerance;
  r.passed = value <= tolerance;
  if (!r.passed) r.first_offending = first;
  return r;
}

DetectorOptions detector_of(const RunConfig& c) {
  DetectorOptions d;
  d.threads = c.threads;
  d.x_end = r_max_of(c);
  d.fit_hi = std::min(d.fit_hi, d.x_end);
  return d;
}

json detection_list(const std::vector<EigenDetection>& list) {
  json out = json::array();
  for (const EigenDetection& d : list) out.push_back(to_json(d));
  return out;
}

Table scan_table(const std::vector<ChannelScan>& scans) {
  std::vector<double> j, lam, expo, integrand, fired, drift;
  for (const ChannelScan& s : scans)
    for (const EigenDetection& d : s.detection.per_lambda) {
      j.push_back(s.j);
      lam.push_back(d.lambda);
      expo.push_back(d.exponent);
      integrand.push_back(d.integrand_exponent);
      fired.push_back(d.eigenvalue ? 1.0 : 0.0);
      drift.push_back(d.wronskian_drift);
    }
  auto vec = [](const std::vector<double>& v) { return VectorXd(Eigen::Map<const VectorXd>(v.data(), v.size())); };
  return {{"j", "lambda", "exponent", "integrand_exponent", "eigenvalue", "wronskian_drift"},
          {vec(j), vec(lam), vec(expo), vec(integrand), vec(fired), vec(drift)}};
}

class Artifacts {
 public:
  Artifacts(const RunConfig& c, RunReport& report) : dir_(c.output_dir), report_(report) {}
  bool enabled() const { return !dir_.empty(); }
  void csv(const std::string& name, const Table& table) {
    if (!enabled()) return;
    write_csv(std::filesystem::path(dir_) / name, table);
    report_.artifacts.push_back(name);
  }
  void json_file(const std::string& name, const json& doc) {
    if (!enabled()) return;
    write_atomic(std::filesystem::path(dir_) / name, doc.dump(2) + "\n");
    report_.artifacts.push_back(name);
  }

 private:
  std::string dir_;
  RunReport& report_;
};

CheckResult wronskian_check(const std::vector<ChannelScan>& scans, double tolerance) {
  double worst = 0;
  std::optional<double> first;
  for (const ChannelScan& s : scans) {
    worst = std::max(worst, s.detection.max_wronskian_drift);
    for (const EigenDetection& d : s.detection.per_lambda)
      if (!first && !(d.wronskian_drift <= tolerance)) first = d.lambda;
  }
  CheckResult r = bound_check("wronskian", "Wronskian conserved along every scan run", worst, tolerance, first);
  if (!r.passed) r.detail = "first offending entry is a lambda value";
  return r;
}

ShootingResult eigenfunction_samples(const GluedConstruction& g) {
  ShootingResult s;
  s.x = g.profile->grid();
  s.w = g.w;
  s.w_prime = g.w_prime;
  s.log_scale = VectorXd::Zero(s.x.size());
  s.lambda = g.b;
  s.q_limit = 0.25 * (g.n - 1) * (g.n - 1);
  prufer_series(s);
  return s;
}

void run_build_example(const RunConfig& c, RunReport& rep, Artifacts& out) {
  ConstructionOptions co;
  co.n = c.n;
  co.k = c.k;
  co.R_max = r_max_of(c);
  co.spacing = c.spacing;
  const GluedConstruction g = build_example(co);
  VerifyOptions vo;
  vo.scan = false;
  const ConstructionReport cr = verify_construction(g, vo);
  const WarpProfile& p = *g.profile;
  const VectorXd& r = p.grid();
  const double r1 = g.connector.r1, r2 = g.connector.r2;
  const double amp = 2.0 * std::sqrt(2.0) * std::abs(c.k);

  const VectorXd res = glued_ode_residual(g);
  std::optional<double> first_res, first_curv, first_shape, first_pole;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (!first_res && std::isfinite(res[i]) && res[i] > c.ode_tolerance) first_res = r[i];
    const double s = p.shape()[i];
    const double kp1 = 1.0 - (p.shape_prime()[i] + s * s);
    if (r[i] >= r2 && !first_curv && r[i] * std::abs(kp1) > 1.1 * amp) first_curv = r[i];
    if (r[i] >= r2 && !first_shape && r[i] * std::abs(s - 1.0) > std::abs(c.k) * (1 + 1e-12)) first_shape = r[i];
    if (r[i] <= r1 && !first_pole && std::abs(std::exp(p.log_f()[i]) / r[i] - 1.0) > 1e-8) first_pole = r[i];
  }
  rep.checks.push_back(bound_check("ode_residual", "psi solves the radial eigen-equation with the glued f",
                                   cr.ode_residual, c.ode_tolerance, first_res));
  {
    CheckResult l2;
    l2.name = "l2_decay";
    l2.invariant = "psi^2 f^{n-1} decays faster than r^-1.1";
    l2.value = cr.l2_integrand_exponent;
    l2.tolerance = -1.1;
    l2.passed = cr.l2_integrand_exponent < -1.1;
    rep.checks.push_back(l2);
  }
  rep.checks.push_back(bound_check("curvature_sup", "r |K + 1| <= 2 sqrt(2) |k| (+10%) beyond r2",
                                   cr.curvature_sup, 1.1 * amp, first_curv));
  rep.checks.push_back(bound_check("shape_sup", "r |S - 1| <= |k| beyond r2", cr.shape_sup,
                                   std::abs(c.k) * (1 + 1e-12), first_shape));
  rep.checks.push_back(bound_check("f_prime_jump", "f' continuous at r2", cr.f_prime_jump, 1e-6,
                                   cr.f_prime_jump > 1e-6 ? std::optional<double>(r2) : std::nullopt));
  rep.checks.push_back(bound_check("pole", "f(r) = r on [0, r1]", cr.pole_error, 1e-8, first_pole));
  rep.checks.push_back(bound_check("disk_identity", "gluing integral of H reproduces f = r", cr.disk_identity, 1e-8));

  const auto [lo, hi] = lambda_window(c);
  const std::vector<ChannelScan> scans = channel_scan(p, c.j_max, lambda_grid(lo, hi, c.lambda_step), detector_of(c));
  std::vector<EigenDetection> found;
  json findings = json::array();
  for (const ChannelScan& s : scans)
    for (const EigenDetection& d : s.detection.eigenvalues) {
      found.push_back(d);
      if (s.j >= 1) findings.push_back("detection in channel j = " + std::to_string(s.j) + " at lambda = " + num(d.lambda));
    }
  CheckResult single;
  single.name = "single_detection";
  single.invariant = "the channel scan fires exactly once, at j = 0 and lambda = b_n";
  single.tolerance = c.lambda_tolerance;
  single.passed = found.size() == 1 && found[0].j == 0 && std::abs(found[0].lambda - g.b) <= c.lambda_tolerance;
  single.value = found.empty() ? std::numeric_limits<double>::infinity() : std::abs(found[0].lambda - g.b);
  if (!single.passed && !found.empty()) {
    for (const EigenDetection& d : found)
      if (d.j != 0 || std::abs(d.lambda - g.b) > c.lambda_tolerance) {
        single.first_offending = d.lambda;
        break;
      }
  }
  rep.checks.push_back(single);
  rep.checks.push_back(wronskian_check(scans, c.wronskian_tolerance));

  rep.summary = {{"r1", r1},
                 {"r2", r2},
                 {"b", g.b},
                 {"connector_attempts", g.connector.attempts},
                 {"ode_residual", cr.ode_residual},
                 {"l2_norm", cr.l2_norm},
                 {"l2_integrand_exponent", cr.l2_integrand_exponent},
                 {"curvature_sup", cr.curvature_sup},
                 {"curvature_amplitude", cr.curvature_amplitude},
                 {"shape_sup", cr.shape_sup},
                 {"f_prime_jump", cr.f_prime_jump},
                 {"pole_error", cr.pole_error},
                 {"disk_identity", cr.disk_identity},
                 {"detections", detection_list(found)},
                 {"findings", findings}};
  out.json_file("profile.json", p.to_json());
  out.csv("curvature.csv", curvature_table(curvature_of_profile(p)));
  out.csv("eigenfunction.csv", shooting_table(eigenfunction_samples(g)));
  out.csv("scan.csv", scan_table(scans));
}

void run_scan(const RunConfig& c, RunReport& rep, Artifacts& out) {
  const std::string name = profile_of(c);
  const double b = resonance_eigenvalue(c.n);
  const auto [lo, hi] = lambda_window(c);
  const std::vector<double> lambdas = lambda_grid(lo, hi, c.lambda_step);
  DetectorOptions det = detector_of(c);
  std::vector<ChannelScan> scans;
  if (name == "glued") {
    ConstructionOptions co;
    co.n = c.n;
    co.k = c.k;
    co.R_max = r_max_of(c);
    co.spacing = c.spacing;
    const GluedConstruction g = build_example(co);
    scans = channel_scan(*g.profile, c.j_max, lambdas, det);
    rep.summary["r2"] = g.connector.r2;
  } else {
    const WarpProfile p = make_run_profile(c, name, r_max_of(c));
    det.x_start = p.grid()[0];
    for (const ChannelSpec& spec : sphere_spectrum(c.n, c.j_max)) {
      const ChannelPotential cp = channel_potential(p, spec);
      ChannelScan s;
      s.j = spec.j;
      s.detection = detect_embedded_eigenvalue(cp.potential, lambdas, OriginCondition::free, det, spec.j);
      scans.push_back(std::move(s));
    }
  }
  std::vector<EigenDetection> found;
  std::optional<double> offending;
  bool channel0 = false;
  for (const ChannelScan& s : scans)
    for (const EigenDetection& d : s.detection.eigenvalues) {
      found.push_back(d);
      const bool at_b = std::abs(d.lambda - b) <= c.lambda_tolerance;
      if (s.j == 0 && at_b) channel0 = true;
      const bool allowed = name == "glued" ? (s.j == 0 && at_b) : at_b;
      if (!allowed && !offending) offending = d.lambda;
    }
  CheckResult det_check;
  det_check.name = "detections";
  det_check.invariant = name == "glued" ? "eigenvalues only at (j = 0, lambda = b_n)"
                                        : "half-line L^2 solutions only at lambda = b_n";
  det_check.tolerance = c.lambda_tolerance;
  det_check.passed = channel0 && !offending && (name != "glued" || found.size() == 1);
  det_check.value = static_cast<double>(found.size());
  det_check.first_offending = offending;
  if (!channel0) det_check.detail = "no detection at b_n in channel 0";
  rep.checks.push_back(det_check);
  rep.checks.push_back(wronskian_check(scans, c.wronskian_tolerance));
  rep.summary["b"] = b;
  rep.summary["coupling_threshold"] = coupling_threshold(c.n);
  rep.summary["detections"] = detection_list(found);
  out.csv("scan.csv", scan_table(scans));
}

void run_curvature_report(const RunConfig& c, RunReport& rep, Artifacts& out) {
  const std::string name = profile_of(c);
  const WarpProfile p = make_run_profile(c, name, r_max_of(c));
  const CurvatureField field = curvature_of_profile(p);
  const double trace = bochner_residual(field);
  rep.checks.push_back(bound_check("trace_residual", "d_r(Delta r) + |grad dr|^2 + Ric(dr, dr) = 0", trace, 1e-5));
  rep.summary["trace_residual"] = trace;
  const VectorXd& r = field.r;
  if (name == "hyperbolic" || name == "exponential") {
    double worst = 0;
    std::optional<double> first;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double e = std::abs(field.K_rad[i] + 1.0);
      worst = std::max(worst, e);
      if (!first && e > 1e-8) first = r[i];
    }
    rep.checks.push_back(bound_check("constant_curvature", "K_rad = -1", worst, 1e-8, first));
  }
  if (name == "wvn" || name == "glued") {
    const double start = name == "glued" ? p.breakpoints().back() : r[0];
    const double amp = 2.0 * std::sqrt(2.0) * std::abs(c.k);
    std::vector<double> fx, fy;
    double shape_sup = 0;
    std::optional<double> first;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      if (r[i] >= 100 && r[i] <= 500) {
        fx.push_back(r[i]);
        fy.push_back(r[i] * (field.K_rad[i] + 1.0));
      }
      if (r[i] >= start) {
        const double v = r[i] * std::abs(field.S[i] - 1.0);
        shape_sup = std::max(shape_sup, v);
        if (!first && v > std::abs(c.k) * (1 + 1e-12)) first = r[i];
      }
    }
    if (fx.size() > 20) {
      const double fitted = fit_sinusoid(fx, fy, 2.0).amplitude;
      rep.summary["curvature_amplitude"] = fitted;
      rep.checks.push_back(bound_check("curvature_amplitude", "amplitude of r (K + 1) on [100, 500] is 2 sqrt(2) |k|",
                                       std::abs(fitted / amp - 1.0), 0.1));
    }
    rep.summary["shape_sup"] = shape_sup;
    rep.checks.push_back(bound_check("shape_sup", "r |S - 1| <= |k|", shape_sup, std::abs(c.k) * (1 + 1e-12), first));
  }
  out.csv("curvature.csv", curvature_table(field));
}

void run_verify_growth(const RunConfig& c, RunReport& rep, Artifacts& out) {
  const std::string name = profile_of(c);
  const double R = r_max_of(c);
  const WarpProfile p = make_run_profile(c, name, R);
  GrowthTrialOptions go;
  go.t0 = t0_of(c);
  go.R_max = R;
  go.trials = c.trials;
  go.seed = c.seed;
  go.growth.residual_tolerance = c.growth_residual_tolerance;
  const double alpha = c.alpha.value_or(resonance_eigenvalue(c.n));
  GrowthVerdict v;
  try {
    v = verify_growth_theorem(p, alpha, c.gamma, go);
  } catch (const HypothesisViolated& e) {
    CheckResult h;
    h.name = "curvature_decay";
    h.invariant = "r |K + 1| decays on [R_max / 100, R_max]";
    h.passed = false;
    h.value = curvature_decay_slope(p, R / 100, R);
    h.tolerance = go.slope_limit;
    h.detail = e.what();
    rep.checks.push_back(h);
    rep.summary["alpha"] = alpha;
    return;
  }
  CheckResult h;
  h.name = "curvature_decay";
  h.invariant = "r |K + 1| decays on [R_max / 100, R_max]";
  h.passed = true;
  h.value = v.decay_slope;
  h.tolerance = go.slope_limit;
  rep.checks.push_back(h);
  for (std::size_t i = 0; i < v.trials.size(); ++i) {
    const GrowthTrial& t = v.trials[i];
    CheckResult tr;
    tr.name = "trial_" + std::to_string(i);
    tr.invariant = "t^gamma I increases on the final decade and stays above its initial value";
    tr.passed = t.passed();
    tr.value = t.final_min / t.initial;
    tr.tolerance = 1.0;
    tr.first_offending = t.first_failure;
    rep.checks.push_back(tr);
  }
  rep.summary = to_json(v);
  rep.summary["t0"] = go.t0;
  out.csv("growth.csv", growth_table(v.worst_series));
}

std::vector<RadialFunction> default_weights() { return {constant_function(0.0), linear_weight(0.2), log_weight(2.0)}; }

void run_check_identities(const RunConfig& c, RunReport& rep, Artifacts& out) {
  const std::string name = profile_of(c);
  const WarpProfile p = make_run_profile(c, name, r_max_of(c));
  IdentityOptions io;
  io.s = c.s;
  io.t = c.t;
  io.lambda = c.identity_lambda;
  io.gamma = c.gamma;
  io.tolerance = c.identity_tolerance;
  io.split_at_junctions = true;
  io.label = name;
  const std::vector<IdentityCheck> checks = check_parts_identities(p, default_test_functions(), default_weights(), io);
  json list = json::array();
  double worst = 0;
  for (const IdentityCheck& ic : checks) {
    list.push_back(to_json(ic));
    worst = std::max(worst, ic.residual);
    CheckResult r = bound_check(ic.name + " [" + ic.data + "]", "radial identity " + ic.name + " on B(s, t)",
                                ic.residual, ic.tolerance);
    rep.checks.push_back(r);
  }
  const double trace = bochner_residual(curvature_of_profile(p));
  rep.checks.push_back(bound_check("trace_residual", "d_r(Delta r) + |grad dr|^2 + Ric(dr, dr) = 0", trace, 1e-5));
  rep.summary = {{"max_residual", worst}, {"trace_residual", trace}, {"count", checks.size()}};
  out.json_file("identities.json", list);
}

}  // namespace

std::vector<std::string> run_commands() { return kCommands; }

json RunConfig::to_json() const {
  return {{"command", command},
          {"profile", profile ? json(*profile) : json(nullptr)},
          {"n", n},
          {"k", k},
          {"a", a},
          {"p", p},
          {"R_max", optional_json(R_max)},
          {"spacing", spacing},
          {"gamma", gamma},
          {"alpha", optional_json(alpha)},
          {"j_max", j_max},
          {"lambda_lo", optional_json(lambda_lo)},
          {"lambda_hi", optional_json(lambda_hi)},
          {"lambda_step", lambda_step},
          {"seed", seed},
          {"trials", trials},
          {"t0", optional_json(t0)},
          {"s", s},
          {"t", t},
          {"identity_lambda", identity_lambda},
          {"identity_tolerance", identity_tolerance},
          {"lambda_tolerance", lambda_tolerance},
          {"ode_tolerance", ode_tolerance},
          {"growth_residual_tolerance", growth_residual_tolerance},
          {"wronskian_tolerance", wronskian_tolerance},
          {"threads", threads},
          {"output_dir", output_dir}};
}

RunConfig RunConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : doc.items()) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(c, value);
  }
  return c;
}

void validate(const RunConfig& c) {
  require(contains(kCommands, c.command), "unknown command '" + c.command + "'");
  const std::string name = profile_of(c);
  require(contains(kProfiles, name), "unknown profile '" + name + "'");
  require(c.n >= 2 && c.n <= 64, "n must lie in [2, 64]");
  require(std::isfinite(c.k), "k must be finite");
  require(c.spacing > 0 && c.spacing <= max_curvature_spacing, "spacing must lie in (0, pi/20]");
  const double R = r_max_of(c);
  require(std::isfinite(R) && R > 0, "R_max must be positive");
  require(c.gamma > 0 && std::isfinite(c.gamma), "gamma must be positive");
  require(c.j_max >= 0 && c.j_max <= 100, "j_max must lie in [0, 100]");
  require(c.trials >= 1, "trials must be at least 1");
  for (double tol : {c.identity_tolerance, c.lambda_tolerance, c.ode_tolerance, c.growth_residual_tolerance,
                     c.wronskian_tolerance})
    require(tol > 0, "tolerances must be positive");
  const bool needs_coupling = name == "glued" || c.command == "build-example" ||
                              (c.command == "scan" && name == "wvn");
  if (c.command == "build-example") require(name == "glued", "build-example builds the glued profile only");
  if (c.command == "scan") {
    require(name == "glued" || name == "wvn", "scan supports the glued and wvn profiles");
    const auto [lo, hi] = lambda_window(c);
    require(c.lambda_step > 0 && lo < hi, "lambda window must satisfy lambda_lo < lambda_hi with a positive step");
    require(R >= 1000, "scan needs R_max >= 1000 for the decay fit window");
  }
  if (c.command == "build-example") {
    const auto [lo, hi] = lambda_window(c);
    require(c.lambda_step > 0 && lo < hi, "lambda window must satisfy lambda_lo < lambda_hi with a positive step");
    require(R >= 1000, "build-example needs R_max >= 1000 for the decay fit window");
  }
  if (needs_coupling && !(std::abs(c.k) > coupling_threshold(c.n)))
    throw CouplingTooWeak("coupling |k| = " + num(std::abs(c.k)) + " is not above the threshold " +
                              num(coupling_threshold(c.n)) + " for n = " + std::to_string(c.n),
                          coupling_threshold(c.n));
  if (name == "power_tail") require(c.p > 1.0, "power_tail needs p > 1");
  if (name == "log_tail") require(c.a > 0, "log_tail needs a > 0");
  if (c.command == "verify-growth") {
    const double cc = 0.25 * (c.n - 1) * (c.n - 1);
    const double alpha = c.alpha.value_or(resonance_eigenvalue(c.n));
    if (!(alpha > cc)) throw OutsideRegime("alpha must exceed (n-1)^2/4 = " + num(cc));
    const double t0 = t0_of(c);
    require(t0 >= domain_start_of(name) && t0 > 0, "t0 must lie in the profile domain");
    require(R >= 100 * t0, "verify-growth needs R_max >= 100 t0");
  }
  if (c.command == "check-identities") {
    require(c.s > domain_start_of(name) && c.s < c.t, "identity window needs domain start < s < t");
    require(c.t <= R, "identity window must end inside the grid");
  }
  if (c.command == "curvature-report" && (name == "wvn" || name == "glued")) require(R >= 500, "curvature-report needs R_max >= 500");
}

WarpProfile make_run_profile(const RunConfig& c, const std::string& name, double R_max) {
  if (name == "glued") {
    ConstructionOptions co;
    co.n = c.n;
    co.k = c.k;
    co.R_max = std::max(R_max, 1000.0);
    co.spacing = c.spacing;
    return *build_example(co).profile;
  }
  if (name == "wvn") return WarpProfile(c.n, std::make_shared<WvnWarp>(c.k), uniform_grid(1.0, R_max, c.spacing));
  json params = json::object();
  if (name == "power_tail") params = {{"a", c.a}, {"p", c.p}};
  if (name == "log_tail") params = {{"a", c.a}};
  const double start = domain_start_of(name);
  const double first = start > 0 ? start : c.spacing;
  return WarpProfile(c.n, make_model(name, params, c.n), uniform_grid(first, R_max, c.spacing));
}

bool RunReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

json RunReport::to_json(bool with_wall_clock) const {
  json list = json::array();
  for (const CheckResult& c : checks) {
    json item = {{"name", c.name}, {"invariant", c.invariant}, {"passed", c.passed},
                 {"value", c.value}, {"tolerance", c.tolerance}};
    item["first_offending"] = c.first_offending ? json(*c.first_offending) : json(nullptr);
    if (!c.detail.empty()) item["detail"] = c.detail;
    list.push_back(item);
  }
  json out = {{"config", config.to_json()}, {"checks", list}, {"summary", summary},
              {"artifacts", artifacts},     {"passed", passed()}};
  if (with_wall_clock) out["wall_clock_seconds"] = wall_clock;
  return out;
}

RunReport run(const RunConfig& config) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.config = config;
  Artifacts out(config, rep);
  if (config.command == "build-example") run_build_example(config, rep, out);
  else if (config.command == "scan") run_scan(config, rep, out);
  else if (config.command == "curvature-report") run_curvature_report(config, rep, out);
  else if (config.command == "verify-growth") run_verify_growth(config, rep, out);
  else run_check_identities(config, rep, out);
  rep.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace warpspec
