#include "divtherm/app/record_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "divtherm/errors.hpp"

namespace divtherm::app {

namespace fs = std::filesystem;

OutputFormat output_format_from_string(const std::string& name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  throw ConfigError("unknown output format '" + name + "' (valid: csv, json)");
}

const std::vector<double>& Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return data[i];
  throw std::out_of_range("table has no column '" + name + "'");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Table table_from_record(const MeasurementRecord& rec, const std::string& y_name) {
  Table t;
  t.columns = {rec.x_name, y_name, y_name + "_err"};
  t.data = {rec.x, rec.y, rec.y_err};
  return t;
}

namespace {

void ensure_parent(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

fs::path write_table(const fs::path& stem, const OutputHeader& header, const Table& table,
                     OutputFormat format) {
  for (const auto& col : table.data)
    if (col.size() != table.rows()) throw std::invalid_argument("table columns differ in length");

  if (format == OutputFormat::json) {
    nlohmann::json body;
    nlohmann::json meta = nlohmann::json::object();
    for (const auto& [k, v] : header.meta) meta[k] = v;
    body["meta"] = meta;
    body["columns"] = table.columns;
    nlohmann::json cols = nlohmann::json::object();
    for (std::size_t i = 0; i < table.columns.size(); ++i) cols[table.columns[i]] = table.data[i];
    body["data"] = cols;
    fs::path path = stem;
    path += ".json";
    write_report(path, header, std::move(body));
    return path;
  }

  std::string text;
  text += "# command: " + header.command + "\n";
  text += "# config_hash: " + header.config_hash + "\n";
  text += "# seed: " + std::to_string(header.seed) + "\n";
  for (const auto& [k, v] : header.meta) text += "# " + k + ": " + v + "\n";
  std::string cols;
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    cols += (i ? "," : "") + table.columns[i];
  text += "# columns: " + cols + "\n";
  text += cols + "\n";
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.data.size(); ++c) {
      if (c) text += ',';
      text += format_number(table.data[c][r]);
    }
    text += '\n';
  }
  fs::path path = stem;
  path += ".csv";
  write_text(path, text);
  return path;
}

void write_report(const fs::path& path, const OutputHeader& header, nlohmann::json body) {
  body["command"] = header.command;
  body["config_hash"] = header.config_hash;
  body["seed"] = header.seed;
  write_text(path, body.dump(2) + "\n");
}

Table read_table_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  Table t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto cells = split(s);
    if (!have_header) {
      t.columns = cells;
      t.data.assign(cells.size(), {});
      have_header = true;
      continue;
    }
    if (cells.size() != t.columns.size())
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(t.columns.size()) + " fields");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      const char* b = cells[c].data();
      const char* e = b + cells[c].size();
      const auto res = std::from_chars(b, e, v);
      if (res.ec != std::errc() || res.ptr != e)
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": '" + cells[c] +
                          "' is not a number");
      t.data[c].push_back(v);
    }
  }
  if (!have_header) throw ConfigError(path.string() + ": no header row");
  return t;
}

MeasurementRecord record_from_table(const Table& table) {
  if (table.columns.size() < 2) throw ConfigError("input needs at least two columns (x, y)");
  MeasurementRecord rec;
  rec.x_name = table.columns[0];
  rec.x = table.data[0];
  rec.y = table.data[1];
  rec.y_err = table.columns.size() >= 3 ? table.data[2] : std::vector<double>(rec.x.size(), 0.0);
  try {
    rec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("input: ") + e.what());
  }
  return rec;
}

std::vector<ProfileRow> read_profile(const fs::path& path) {
  const Table t = read_table_csv(path);
  std::vector<ProfileRow> rows;
  try {
    const auto& time = t.column("time_s");
    const auto& temp = t.column("temperature_k");
    for (std::size_t i = 0; i < time.size(); ++i) {
      if (i > 0 && !(time[i] > time[i - 1]))
        throw ConfigError(path.string() + ": time_s must be strictly increasing (row " +
                          std::to_string(i + 1) + ")");
      if (!(temp[i] > 0.0)) throw ConfigError(path.string() + ": temperature_k must be positive");
      rows.push_back({time[i], temp[i]});
    }
  } catch (const std::out_of_range& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (rows.empty()) throw ConfigError(path.string() + ": profile has no rows");
  return rows;
}

}  // namespace divtherm::app
