#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "bbcouple/harness/config.hpp"
#include "bbcouple/numerics/errors.hpp"

namespace bbcouple::harness {

using Value = std::variant<std::string, double, long long>;

/// Columns of the tabular output, in order. Records leave unused cells empty.
inline const std::vector<std::string>& table_columns() {
  static const std::vector<std::string> cols{
      "label",          "scenario",           "case",          "subdomains",        "h",
      "ratio",          "preconditioned",     "stabilized",    "status",            "dim_lambda",
      "dim_z",          "iterations",         "kappa",         "min_ritz",          "max_ritz",
      "h1_error",       "multiplier_error",   "constraint_residual", "continuity_residual", "oracle_u_diff",
      "oracle_lambda_diff", "flux_1",         "flux_2",        "flux_3",            "flux_balance",
      "flux_error",     "junction_error"};
  return cols;
}

struct RunRecord {
  Json config;
  std::map<std::string, Value> fields;
  double wall_time = 0.0;
  std::string message;

  void set(const std::string& key, Value v) { fields[key] = std::move(v); }
  std::optional<double> number(const std::string& key) const {
    auto it = fields.find(key);
    if (it == fields.end()) return std::nullopt;
    if (const double* d = std::get_if<double>(&it->second)) return *d;
    if (const long long* i = std::get_if<long long>(&it->second)) return static_cast<double>(*i);
    return std::nullopt;
  }
  std::string text(const std::string& key) const {
    auto it = fields.find(key);
    if (it == fields.end()) return {};
    if (const std::string* s = std::get_if<std::string>(&it->second)) return *s;
    return {};
  }
  bool failed() const { return text("status") == "fail"; }
};

struct ExperimentReport {
  std::string study;
  std::string name;
  std::vector<RunRecord> runs;
  Json derived = Json::object();

  bool passed() const {
    for (const auto& r : runs)
      if (r.failed()) return false;
    return true;
  }
};

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string format_value(const Value& v) {
  if (const double* d = std::get_if<double>(&v)) return format_double(*d);
  if (const long long* i = std::get_if<long long>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string json_string(const std::string& s) { return Json(s).dump(); }

// JSON writer with floats at 17 significant digits; non-finite floats become strings.
inline void write_json(std::ostream& os, const Json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  if (j.is_object()) {
    if (j.empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    bool first = true;
    for (const auto& [k, v] : j.items()) {
      if (!first) os << ",\n";
      first = false;
      os << inner << json_string(k) << ": ";
      write_json(os, v, indent + 1);
    }
    os << "\n" << pad << "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      os << "[]";
      return;
    }
    os << "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) os << ",\n";
      os << inner;
      write_json(os, j[i], indent + 1);
    }
    os << "\n" << pad << "]";
  } else if (j.is_number_float()) {
    const double d = j.get<double>();
    if (std::isfinite(d)) {
      os << format_double(d);
    } else {
      os << json_string(format_double(d));
    }
  } else {
    os << j.dump();
  }
}

inline Json to_json(const Value& v) {
  if (const double* d = std::get_if<double>(&v)) return *d;
  if (const long long* i = std::get_if<long long>(&v)) return *i;
  return std::get<std::string>(v);
}

}  // namespace detail

/// Flat table: header row, one record per line, LF endings, no wall time.
inline std::string to_table(const ExperimentReport& r) {
  std::ostringstream os;
  const auto& cols = table_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
  for (const auto& run : r.runs) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) os << ",";
      auto it = run.fields.find(cols[i]);
      if (it != run.fields.end()) os << detail::csv_escape(format_value(it->second));
    }
    os << "\n";
  }
  return os.str();
}

inline Json to_structured_json(const ExperimentReport& r) {
  Json j;
  j["study"] = r.study;
  j["name"] = r.name;
  j["passed"] = r.passed();
  Json runs = Json::array();
  for (const auto& run : r.runs) {
    Json rec;
    rec["config"] = run.config;
    for (const auto& c : table_columns()) {
      auto it = run.fields.find(c);
      if (it != run.fields.end()) rec[c] = detail::to_json(it->second);
    }
    rec["wall_time_s"] = run.wall_time;
    if (!run.message.empty()) rec["message"] = run.message;
    runs.push_back(std::move(rec));
  }
  j["runs"] = std::move(runs);
  j["derived"] = r.derived;
  return j;
}

inline std::string to_structured(const ExperimentReport& r) {
  std::ostringstream os;
  detail::write_json(os, to_structured_json(r), 0);
  os << "\n";
  return os.str();
}

enum class ReportFormat { table, structured };

/// Writes <out>/<name>.csv or <out>/<name>.json; returns the path written.
inline std::filesystem::path emit_report(const ExperimentReport& r, ReportFormat format,
                                         const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create '" + out_dir.string() + "': " + ec.message());
  const auto path = out_dir / (r.name + (format == ReportFormat::table ? ".csv" : ".json"));
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::io_error, "cannot write '" + path.string() + "'");
  f << (format == ReportFormat::table ? to_table(r) : to_structured(r));
  if (!f) throw Error(ErrorCode::io_error, "write failed for '" + path.string() + "'");
  return path;
}

/// Least-squares slope of log(err) against log(h).
inline double fit_order(const std::vector<double>& h, const std::vector<double>& err) {
  require_dims(h.size() == err.size() && h.size() >= 2, "fit_order: need at least two matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace bbcouple::harness
