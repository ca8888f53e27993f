#include "warpspec/io.hpp"

#include "warpspec/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace warpspec {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string csv_text(const Table& table) {
  if (table.columns.empty() || table.columns.size() != table.data.size())
    throw ShapeError("csv: column names and data disagree");
  const Eigen::Index rows = table.rows();
  if (rows == 0) throw ShapeError("csv: empty series");
  for (const VectorXd& col : table.data)
    if (col.size() != rows) throw ShapeError("csv: ragged columns");
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < table.data.size(); ++c) {
      if (c) out += ',';
      out += format_number(table.data[c][i]);
    }
    out += '\n';
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  std::random_device rd;
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw IoError("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

void write_csv(const std::filesystem::path& path, const Table& table) { write_atomic(path, csv_text(table)); }

Table growth_table(const GrowthSeries& series) { return {growth_columns(), {series.t, series.I, series.t_gamma_I}}; }

Table shooting_table(const ShootingResult& result) {
  const Eigen::Index n = result.x.size();
  VectorXd amp = result.log_amplitude.size() == n ? result.amplitude()
                                                  : VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  VectorXd phase = result.phase.size() == n ? result.phase
                                            : VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  return {shooting_columns(), {result.x, result.true_w(), result.true_w_prime(), amp, phase}};
}

std::vector<std::string> curvature_columns() { return {"r", "S", "K_rad", "r_times_K_plus_1"}; }

Table curvature_table(const CurvatureField& field) {
  VectorXd rk = field.r.array() * (field.K_rad.array() + 1.0);
  return {curvature_columns(), {field.r, field.S, field.K_rad, rk}};
}

Table channel_table(const ChannelPotential& channel) {
  VectorXd xq = channel.x.array() * (channel.q.array() - channel.limit);
  return {channel_columns(), {channel.x, channel.q, xq}};
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty csv " + path.string());
  {
    std::stringstream ss(line);
    std::string name;
    while (std::getline(ss, name, ',')) t.columns.push_back(name);
  }
  std::vector<std::vector<double>> cols(t.columns.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= cols.size()) throw IoError("ragged csv row in " + path.string());
      cols[c++].push_back(std::strtod(cell.c_str(), nullptr));
    }
    if (c != cols.size()) throw IoError("ragged csv row in " + path.string());
  }
  for (auto& col : cols) t.data.push_back(Eigen::Map<const VectorXd>(col.data(), static_cast<Eigen::Index>(col.size())));
  return t;
}

std::filesystem::path emit_plot_data(const GrowthSeries& series, const std::filesystem::path& path) {
  write_csv(path, growth_table(series));
  return path;
}

std::filesystem::path emit_plot_data(const ShootingResult& result, const std::filesystem::path& path) {
  write_csv(path, shooting_table(result));
  return path;
}

std::filesystem::path emit_plot_data(const CurvatureField& field, const std::filesystem::path& path) {
  write_csv(path, curvature_table(field));
  return path;
}

json to_json(const IdentityCheck& check) {
  return {{"name", check.name}, {"profile", check.profile}, {"data", check.data},   {"lhs", check.lhs},
          {"rhs", check.rhs},   {"residual", check.residual}, {"tolerance", check.tolerance},
          {"passed", check.passed()}};
}

json to_json(const EigenDetection& d) {
  json out = {{"j", d.j},
              {"lambda", d.lambda},
              {"eigenvalue", d.eigenvalue},
              {"exponent", d.exponent},
              {"stderr", d.stderr_},
              {"integrand_exponent", d.integrand_exponent},
              {"partial_l2", d.partial_l2},
              {"wronskian_drift", d.wronskian_drift}};
  out["k_eff"] = d.k_eff ? json(*d.k_eff) : json(nullptr);
  return out;
}

json to_json(const GrowthVerdict& v) {
  json trials = json::array();
  for (const GrowthTrial& t : v.trials) {
    trials.push_back({{"theta", t.theta},
                      {"initial", t.initial},
                      {"final_min", t.final_min},
                      {"exceeds_initial", t.exceeds_initial},
                      {"increasing", t.increasing},
                      {"first_failure", t.first_failure ? json(*t.first_failure) : json(nullptr)},
                      {"passed", t.passed()}});
  }
  return {{"alpha", v.alpha}, {"gamma", v.gamma},   {"decay_slope", v.decay_slope}, {"seed", v.seed},
          {"worst", v.worst}, {"trials", trials},   {"passed", v.passed}};
}

}  // namespace warpspec
