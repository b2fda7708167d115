#pragma once

// CSV / JSON artifacts. CSV files open with '#'-prefixed header comments
// (command, config hash, seed, extra metadata, column list) followed by a
// header row and comma-separated rows. Numbers use the shortest round-trip
// representation.

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "divtherm/simulator.hpp"

namespace divtherm::app {

enum class OutputFormat { csv, json };

OutputFormat output_format_from_string(const std::string& name);

struct OutputHeader {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> meta;
};

/// Column-major numeric table.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;

  std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
  /// Throws std::out_of_range for an unknown column.
  const std::vector<double>& column(const std::string& name) const;
};

/// Shortest decimal that round-trips; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double v);

Table table_from_record(const MeasurementRecord& rec, const std::string& y_name);

/// Writes `stem`.csv or `stem`.json and returns the path written. IoError on failure.
std::filesystem::path write_table(const std::filesystem::path& stem, const OutputHeader& header,
                                  const Table& table, OutputFormat format);

/// Writes a JSON report with "command", "config_hash" and "seed" added at top level.
void write_report(const std::filesystem::path& path, const OutputHeader& header,
                  nlohmann::json body);

/// Reads a CSV written by write_table (or any CSV with '#' comments and one
/// header row). IoError when unreadable, ConfigError when malformed.
Table read_table_csv(const std::filesystem::path& path);

/// First column x, second y, optional third y_err.
MeasurementRecord record_from_table(const Table& table);

struct ProfileRow {
  double time;         // s since start
  double temperature;  // K
};

/// Columns time_s, temperature_k. ConfigError unless time is strictly increasing.
std::vector<ProfileRow> read_profile(const std::filesystem::path& path);

}  // namespace divtherm::app
