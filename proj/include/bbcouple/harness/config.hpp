#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bbcouple/fem/scenario.hpp"
#include "bbcouple/numerics/errors.hpp"

namespace bbcouple::harness {

using Json = nlohmann::ordered_json;

namespace detail {

[[noreturn]] inline void bad(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::config_invalid, path + ": " + what);
}

inline void only_keys(const Json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) bad(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) bad(path.empty() ? key : path + "." + key, "unknown key");
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline double number(const Json& v, const std::string& path) {
  if (!v.is_number()) bad(path, "expected a number");
  return v.get<double>();
}

inline std::size_t count(const Json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) bad(path, "expected a non-negative integer");
  return v.get<std::size_t>();
}

inline bool boolean(const Json& v, const std::string& path) {
  if (!v.is_boolean()) bad(path, "expected true or false");
  return v.get<bool>();
}

inline std::string text(const Json& v, const std::string& path) {
  if (!v.is_string()) bad(path, "expected a string");
  return v.get<std::string>();
}

inline std::vector<double> numbers(const Json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) bad(path, "expected a number or an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace detail

/// Strict JSON to ScenarioConfig; unknown keys and wrong types are errors.
inline fem::ScenarioConfig parse_scenario(const Json& j, const std::string& path = "") {
  using namespace detail;
  only_keys(j, path,
            {"scenario", "subdomains", "h", "elements", "ratio", "kappa", "manufactured", "lengths", "loads", "solver",
             "stabilization", "preconditioner", "seed", "threads"});
  fem::ScenarioConfig c;
  if (j.contains("scenario")) c.scenario = text(j["scenario"], join(path, "scenario"));
  if (j.contains("subdomains")) {
    const auto& s = j["subdomains"];
    const std::string p = join(path, "subdomains");
    if (s.is_number()) {
      c.subdomains = {count(s, p)};
    } else if (s.is_array()) {
      for (std::size_t i = 0; i < s.size(); ++i) c.subdomains.push_back(count(s[i], p + "[" + std::to_string(i) + "]"));
    } else {
      bad(p, "expected an integer or an array of integers");
    }
  }
  if (j.contains("h")) c.h = number(j["h"], join(path, "h"));
  if (j.contains("elements")) c.elements = count(j["elements"], join(path, "elements"));
  if (j.contains("ratio")) c.ratio = number(j["ratio"], join(path, "ratio"));
  if (j.contains("kappa")) c.kappa = numbers(j["kappa"], join(path, "kappa"));
  if (j.contains("manufactured")) c.manufactured = text(j["manufactured"], join(path, "manufactured"));
  if (j.contains("lengths")) c.lengths = numbers(j["lengths"], join(path, "lengths"));
  if (j.contains("loads")) c.loads = numbers(j["loads"], join(path, "loads"));
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    const std::string p = join(path, "solver");
    only_keys(s, p, {"tol", "max_iter", "coercivity_probe"});
    if (s.contains("tol")) c.solver.tol = number(s["tol"], p + ".tol");
    if (s.contains("max_iter")) c.solver.max_iter = count(s["max_iter"], p + ".max_iter");
    if (s.contains("coercivity_probe")) c.solver.coercivity_probe = boolean(s["coercivity_probe"], p + ".coercivity_probe");
  }
  if (j.contains("stabilization")) {
    const auto& s = j["stabilization"];
    const std::string p = join(path, "stabilization");
    only_keys(s, p, {"enabled", "gamma", "coarsen"});
    if (s.contains("enabled")) c.stabilization.enabled = boolean(s["enabled"], p + ".enabled");
    if (s.contains("gamma")) c.stabilization.gamma = number(s["gamma"], p + ".gamma");
    if (s.contains("coarsen")) c.stabilization.coarsen = count(s["coarsen"], p + ".coarsen");
  }
  if (j.contains("preconditioner")) {
    const auto& s = j["preconditioner"];
    const std::string p = join(path, "preconditioner");
    only_keys(s, p, {"enabled", "d", "sigma"});
    if (s.contains("enabled")) c.preconditioner.enabled = boolean(s["enabled"], p + ".enabled");
    if (s.contains("d")) {
      const std::string d = text(s["d"], p + ".d");
      if (d == "weighted") {
        c.preconditioner.d = PrimalScalarProduct::weighted;
      } else if (d == "identity") {
        c.preconditioner.d = PrimalScalarProduct::identity;
      } else {
        bad(p + ".d", "expected \"weighted\" or \"identity\"");
      }
    }
    if (s.contains("sigma")) {
      const std::string v = text(s["sigma"], p + ".sigma");
      if (v == "mass") {
        c.preconditioner.sigma = fem::MultiplierScalarProduct::mass;
      } else if (v == "identity") {
        c.preconditioner.sigma = fem::MultiplierScalarProduct::identity;
      } else {
        bad(p + ".sigma", "expected \"mass\" or \"identity\"");
      }
    }
  }
  if (j.contains("seed")) c.seed = count(j["seed"], join(path, "seed"));
  if (j.contains("threads")) c.threads = count(j["threads"], join(path, "threads"));
  try {
    fem::validate(c);
  } catch (const Error& e) {
    bad(path.empty() ? "<config>" : path, e.what());
  }
  return c;
}

/// A study: a base scenario and a list of per-level overrides merged onto it.
struct StudyConfig {
  std::string study;
  std::string name;
  Json base;
  std::vector<Json> levels;  // merged, validated configs

  std::vector<fem::ScenarioConfig> scenarios() const {
    std::vector<fem::ScenarioConfig> out;
    for (std::size_t i = 0; i < levels.size(); ++i)
      out.push_back(parse_scenario(levels[i], "levels[" + std::to_string(i) + "]"));
    return out;
  }
};

inline StudyConfig parse_study(const Json& j, std::optional<std::uint64_t> seed_override = std::nullopt) {
  using namespace detail;
  only_keys(j, "", {"study", "name", "base", "levels"});
  StudyConfig s;
  if (!j.contains("study")) bad("study", "missing");
  s.study = text(j["study"], "study");
  static const std::set<std::string> known{"converge", "sweep", "precond", "fracture", "oracle"};
  if (!known.count(s.study)) bad("study", "unknown study '" + s.study + "'");
  s.name = j.contains("name") ? text(j["name"], "name") : s.study;
  s.base = j.contains("base") ? j["base"] : Json::object();
  if (!s.base.is_object()) bad("base", "expected an object");
  std::vector<Json> overrides;
  if (j.contains("levels")) {
    if (!j["levels"].is_array()) bad("levels", "expected an array");
    for (const auto& l : j["levels"]) overrides.push_back(l);
  } else {
    overrides.push_back(Json::object());
  }
  for (std::size_t i = 0; i < overrides.size(); ++i) {
    if (!overrides[i].is_object()) bad("levels[" + std::to_string(i) + "]", "expected an object");
    Json merged = s.base;
    merged.merge_patch(overrides[i]);
    if (seed_override) merged["seed"] = *seed_override;
    parse_scenario(merged, "levels[" + std::to_string(i) + "]");
    s.levels.push_back(std::move(merged));
  }
  return s;
}

inline StudyConfig load_study(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  Json j;
  try {
    j = Json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config_invalid, path + ": " + e.what());
  }
  return parse_study(j, seed_override);
}

}  // namespace bbcouple::harness
