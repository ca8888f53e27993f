// warpspec command-line entry point.
#include "warpspec/errors.hpp"
#include "warpspec/run.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using warpspec::json;

namespace {

struct Flag {
  const char* name;
  const char* key;
  const char* help;
  enum Kind { real, integer, unsigned_integer, text } kind;
};

const Flag kFlags[] = {
    {"--profile", "profile", "profile kind", Flag::text},
    {"--n", "n", "dimension", Flag::integer},
    {"--k", "k", "coupling of S = 1 + k sin(2r)/r", Flag::real},
    {"--a", "a", "tail coefficient (power_tail, log_tail)", Flag::real},
    {"--p", "p", "tail power (power_tail)", Flag::real},
    {"--R-max", "R_max", "end of the radial grid", Flag::real},
    {"--spacing", "spacing", "radial grid spacing", Flag::real},
    {"--gamma", "gamma", "growth weight exponent", Flag::real},
    {"--alpha", "alpha", "eigenvalue of the radial solutions", Flag::real},
    {"--j-max", "j_max", "largest sphere harmonic degree", Flag::integer},
    {"--lambda-lo", "lambda_lo", "scan window start", Flag::real},
    {"--lambda-hi", "lambda_hi", "scan window end", Flag::real},
    {"--lambda-step", "lambda_step", "scan step", Flag::real},
    {"--seed", "seed", "seed of the random trial data", Flag::unsigned_integer},
    {"--trials", "trials", "number of random trials", Flag::integer},
    {"--t0", "t0", "start radius of the trials", Flag::real},
    {"--s", "s", "inner identity radius", Flag::real},
    {"--t", "t", "outer identity radius", Flag::real},
    {"--lambda", "identity_lambda", "lambda of the identity solution", Flag::real},
    {"--identity-tol", "identity_tolerance", "identity residual tolerance", Flag::real},
    {"--lambda-tol", "lambda_tolerance", "detection location tolerance", Flag::real},
    {"--threads", "threads", "worker threads (0: WARPSPEC_THREADS or all cores)", Flag::integer},
    {"--out", "output_dir", "artifact directory", Flag::text},
};

void add_flags(CLI::App* app, json& patch) {
  for (const Flag& f : kFlags) {
    const std::string key = f.key;
    switch (f.kind) {
      case Flag::real:
        app->add_option_function<double>(f.name, [&patch, key](const double& v) { patch[key] = v; }, f.help);
        break;
      case Flag::integer:
        app->add_option_function<int>(f.name, [&patch, key](const int& v) { patch[key] = v; }, f.help);
        break;
      case Flag::unsigned_integer:
        app->add_option_function<std::uint64_t>(f.name, [&patch, key](const std::uint64_t& v) { patch[key] = v; },
                                                f.help);
        break;
      case Flag::text:
        app->add_option_function<std::string>(f.name, [&patch, key](const std::string& v) { patch[key] = v; },
                                               f.help);
        break;
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral experiments on rotationally symmetric warped products"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, report_path;
  bool dump_config = false;
  app.add_option("--config", config_path, "JSON config; flags override its keys");
  app.add_option("--report", report_path, "write the report here instead of stdout");
  app.add_flag("--dump-config", dump_config, "print the resolved config and exit");

  json patch = json::object();
  for (const std::string& name : warpspec::run_commands()) add_flags(app.add_subcommand(name), patch);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  warpspec::RunConfig config;
  try {
    json doc = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw warpspec::ConfigError("cannot read config file " + config_path);
      try {
        doc = json::parse(in);
      } catch (const json::exception& e) {
        throw warpspec::ConfigError(std::string("config file is not valid JSON: ") + e.what());
      }
      if (!doc.is_object()) throw warpspec::ConfigError("config file must hold a JSON object");
    }
    doc.update(patch);
    doc["command"] = app.get_subcommands().front()->get_name();
    config = warpspec::RunConfig::from_json(doc);
    warpspec::validate(config);
  } catch (const warpspec::Error& e) {
    std::cerr << "warpspec: " << e.what() << "\n";
    return 2;
  }
  if (dump_config) {
    std::cout << config.to_json().dump(2) << "\n";
    return 0;
  }

  try {
    const warpspec::RunReport report = warpspec::run(config);
    const std::string text = report.to_json().dump(2) + "\n";
    if (report_path.empty()) std::cout << text;
    else warpspec::write_atomic(report_path, text);
    for (const warpspec::CheckResult& c : report.checks)
      if (!c.passed) std::cerr << "warpspec: check failed: " << c.name << " (" << c.invariant << ")\n";
    return report.passed() ? 0 : 1;
  } catch (const warpspec::ConfigError& e) {
    std::cerr << "warpspec: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "warpspec: " << e.what() << "\n";
    return 1;
  }
}
