#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "coordsim/coord.hpp"
#include "coordsim/errors.hpp"
#include "coordsim/graph.hpp"
#include "coordsim/objective.hpp"

namespace coordsim {

// A fully resolved experiment description: topology, objective, dynamics
// constants and seeds. Loaded from a preset name or from a flat key=value
// file (see parse_scenario_text for the key list).
struct Scenario {
  std::string id;
  TopologyKind topology_kind = TopologyKind::line;
  int topology_n = 0;
  int topology_m = -1;
  std::uint64_t topology_seed = 0;
  std::string objective_name;
  double beta = 1.0;
  std::string algorithm = "steep"; // dual | steep | ind | all
  long frames = 1000;
  double T = 10.0;
  double alpha = 0.5;
  double step_scale = 3.0;
  std::vector<std::uint64_t> seeds{1};
  std::optional<double> theta_min_override;
  std::optional<double> theta_max_override;
  std::optional<double> rate_epsilon_override;

  Network network() const {
    return build_topology(topology_kind, topology_n, topology_m, topology_seed);
  }
  ObjectiveSpec objective() const { return builtin_objective(objective_name, beta); }
  ClampBounds bounds() const {
    ClampBounds b = a1_bounds(objective(), beta);
    if (theta_min_override) b.theta_min = *theta_min_override;
    if (theta_max_override) b.theta_max = *theta_max_override;
    if (rate_epsilon_override) b.rate_epsilon = *rate_epsilon_override;
    return b;
  }
  std::vector<Algorithm> algorithms() const {
    if (algorithm == "all") {
      return {Algorithm::dual, Algorithm::steep, Algorithm::ind};
    }
    return {parse_algorithm(algorithm)};
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct KeyValue {
  std::string value;
  int line = 0;
};

inline double parse_real(const std::string& key, const KeyValue& kv) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(kv.value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != kv.value.size() || kv.value.empty()) {
    throw ConfigError("line " + std::to_string(kv.line) + ": key '" + key +
                      "' needs a real number, got '" + kv.value + "'");
  }
  return v;
}

inline long long parse_int(const std::string& key, const KeyValue& kv) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(kv.value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != kv.value.size() || kv.value.empty()) {
    throw ConfigError("line " + std::to_string(kv.line) + ": key '" + key +
                      "' needs an integer, got '" + kv.value + "'");
  }
  return v;
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& key,
                                                  const KeyValue& kv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(kv.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const KeyValue one{item, kv.line};
    const long long v = parse_int(key, one);
    if (v < 0) {
      throw ConfigError("line " + std::to_string(kv.line) + ": key '" + key +
                        "' seeds must be nonnegative");
    }
    seeds.push_back(static_cast<std::uint64_t>(v));
  }
  if (seeds.empty()) {
    throw ConfigError("line " + std::to_string(kv.line) + ": key '" + key +
                      "' needs at least one seed");
  }
  return seeds;
}

} // namespace detail

// Flat dotted-key configuration text. Recognized keys:
//   topology.kind (line|star|complete|random), topology.n, topology.m,
//   topology.seed, objective.name, run.beta, run.frames, run.T, run.alpha,
//   run.step_scale, run.seeds (comma-separated), bounds.theta_min,
//   bounds.theta_max, bounds.rate_epsilon.
// '#' starts a comment; blank lines are skipped; keys may not repeat.
inline Scenario parse_scenario_text(const std::string& text,
                                    const std::string& id) {
  std::map<std::string, detail::KeyValue> kv;
  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    raw = detail::trim(raw);
    if (raw.empty()) continue;
    const auto eq = raw.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line) +
                        ": expected key = value, got '" + raw + "'");
    }
    const std::string key = detail::trim(raw.substr(0, eq));
    const std::string value = detail::trim(raw.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line) + ": empty key");
    }
    if (kv.count(key)) {
      throw ConfigError("line " + std::to_string(line) + ": duplicate key '" +
                        key + "' (first set on line " +
                        std::to_string(kv[key].line) + ")");
    }
    kv[key] = {value, line};
  }

  static const std::vector<std::string> known = {
      "topology.kind", "topology.n",     "topology.m",
      "topology.seed", "objective.name", "run.beta",
      "run.frames",    "run.T",          "run.alpha",
      "run.step_scale", "run.seeds",     "bounds.theta_min",
      "bounds.theta_max", "bounds.rate_epsilon"};
  for (const auto& [key, val] : kv) {
    bool ok = false;
    for (const auto& k : known) ok = ok || k == key;
    if (!ok) {
      throw ConfigError("line " + std::to_string(val.line) +
                        ": unknown key '" + key + "'");
    }
  }
  const auto require = [&](const std::string& key) -> const detail::KeyValue& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
  };

  Scenario sc;
  sc.id = id;
  sc.topology_kind = parse_topology_kind(require("topology.kind").value);
  sc.topology_n = static_cast<int>(detail::parse_int("topology.n", require("topology.n")));
  if (sc.topology_kind == TopologyKind::random_gnm) {
    sc.topology_m = static_cast<int>(detail::parse_int("topology.m", require("topology.m")));
    sc.topology_seed = static_cast<std::uint64_t>(
        detail::parse_int("topology.seed", require("topology.seed")));
  } else {
    if (kv.count("topology.m") || kv.count("topology.seed")) {
      throw ConfigError(
          "topology.m / topology.seed apply only to the random topology");
    }
  }
  sc.objective_name = require("objective.name").value;
  sc.beta = detail::parse_real("run.beta", require("run.beta"));
  sc.frames = detail::parse_int("run.frames", require("run.frames"));
  if (sc.frames < 1) throw ConfigError("run.frames must be >= 1");
  if (kv.count("run.T")) sc.T = detail::parse_real("run.T", kv["run.T"]);
  if (kv.count("run.alpha")) sc.alpha = detail::parse_real("run.alpha", kv["run.alpha"]);
  if (kv.count("run.step_scale")) {
    sc.step_scale = detail::parse_real("run.step_scale", kv["run.step_scale"]);
  }
  if (kv.count("run.seeds")) sc.seeds = detail::parse_seed_list("run.seeds", kv["run.seeds"]);
  if (kv.count("bounds.theta_min")) {
    sc.theta_min_override = detail::parse_real("bounds.theta_min", kv["bounds.theta_min"]);
  }
  if (kv.count("bounds.theta_max")) {
    sc.theta_max_override = detail::parse_real("bounds.theta_max", kv["bounds.theta_max"]);
  }
  if (kv.count("bounds.rate_epsilon")) {
    sc.rate_epsilon_override =
        detail::parse_real("bounds.rate_epsilon", kv["bounds.rate_epsilon"]);
  }

  // Fail fast on anything inconsistent (bad objective name, beta <= 0,
  // malformed topology) while the file context is known.
  sc.network();
  sc.objective();
  return sc;
}

// Built-in experiment presets. Seeds 1..5 and T=10, alpha=0.5, step 3/t
// everywhere; only topology, objective, beta and length differ.
inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "LINE-EX", "STAR-C1", "COMP-C1", "RAND-C1", "RAND-C2"};
  return names;
}

inline std::optional<Scenario> preset_scenario(const std::string& name) {
  Scenario sc;
  sc.id = name;
  sc.seeds = {1, 2, 3, 4, 5};
  if (name == "LINE-EX") {
    sc.topology_kind = TopologyKind::line;
    sc.topology_n = 3;
    sc.objective_name = "line-example";
    sc.beta = 100.0;
    sc.algorithm = "steep";
    sc.frames = 20000;
  } else if (name == "STAR-C1") {
    sc.topology_kind = TopologyKind::star;
    sc.topology_n = 5;
    sc.objective_name = "C1";
    sc.beta = 5.0;
    sc.algorithm = "all";
    sc.frames = 300000;
  } else if (name == "COMP-C1") {
    sc.topology_kind = TopologyKind::complete;
    sc.topology_n = 4;
    sc.objective_name = "C1";
    sc.beta = 5.0;
    sc.algorithm = "all";
    sc.frames = 300000;
  } else if (name == "RAND-C1" || name == "RAND-C2") {
    sc.topology_kind = TopologyKind::random_gnm;
    sc.topology_n = 15;
    sc.topology_m = 21;
    sc.topology_seed = 1;
    sc.objective_name = name == "RAND-C1" ? "C1" : "C2";
    sc.beta = 4.0;
    sc.algorithm = "ind";
    sc.frames = 100000;
  } else {
    return std::nullopt;
  }
  return sc;
}

// Resolve a preset name, else read the argument as a file path.
inline Scenario load_scenario(const std::string& name_or_path) {
  if (auto preset = preset_scenario(name_or_path)) return *preset;
  const std::filesystem::path path(name_or_path);
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("'" + name_or_path +
                      "' is neither a preset (LINE-EX, STAR-C1, COMP-C1, "
                      "RAND-C1, RAND-C2) nor a readable scenario file");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path.stem().string());
}

} // namespace coordsim
