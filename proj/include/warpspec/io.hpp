#pragma once

#include "warpspec/curvature.hpp"
#include "warpspec/growth.hpp"
#include "warpspec/halfline.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace warpspec {

/// Named columns of equal length.
struct Table {
  std::vector<std::string> columns;
  std::vector<VectorXd> data;

  Eigen::Index rows() const { return data.empty() ? 0 : data.front().size(); }
};

/// Shortest round-trip form is not used: every value gets 17 significant digits.
std::string format_number(double value);

/// Header row, then one line per row, comma separated, '\n' line ends.
std::string csv_text(const Table& table);

/// Writes to a temporary file in the same directory, then renames it over `path`.
/// Throws IoError.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Throws ShapeError on an empty table or ragged columns.
void write_csv(const std::filesystem::path& path, const Table& table);

Table growth_table(const GrowthSeries& series);
/// True (unscaled) w and w'; amplitude and phase from prufer_series when present.
Table shooting_table(const ShootingResult& result);
/// Columns r, S, K_rad, r_times_K_plus_1.
Table curvature_table(const CurvatureField& field);
std::vector<std::string> curvature_columns();
Table channel_table(const ChannelPotential& channel);

/// Reads a CSV written by csv_text.
Table read_csv(const std::filesystem::path& path);

/// emit_plot_data: writes the table for a series; returns the path.
std::filesystem::path emit_plot_data(const GrowthSeries& series, const std::filesystem::path& path);
std::filesystem::path emit_plot_data(const ShootingResult& result, const std::filesystem::path& path);
std::filesystem::path emit_plot_data(const CurvatureField& field, const std::filesystem::path& path);

json to_json(const IdentityCheck& check);
json to_json(const EigenDetection& detection);
json to_json(const GrowthVerdict& verdict);

}  // namespace warpspec
