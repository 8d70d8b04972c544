#pragma once

// Run configuration: a JSON document with a fixed top-level layout
//
//   { "command": ..., "seed": ..., "output": ..., "workers": ...,
//     "system": { "name": ..., "params": {...}, "matrix": [...], "file": ... },
//     "params": { per-command numeric parameters } }
//
// validated against a per-command schema.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace erglab::cli {

using json = nlohmann::json;

enum class Kind { integer, real, string, boolean, real_list };

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::integer: return "integer";
    case Kind::real: return "real";
    case Kind::string: return "string";
    case Kind::boolean: return "boolean";
    case Kind::real_list: return "list of reals";
  }
  return "?";
}

struct Field {
  std::string key;
  Kind kind;
  json fallback;  // null: required
  std::string help;
};

struct Command {
  std::string name;
  std::string help;
  bool needs_system = true;
  bool needs_seed = false;
  std::vector<Field> fields;
};

inline const std::vector<Command>& commands() {
  static const std::vector<Command> table{
      {"spectrum",
       "Lyapunov spectra over sample points",
       true,
       false,
       {{"points", Kind::integer, 100, "number of sample points (finite systems: all states)"},
        {"n", Kind::integer, 10000, "iterates per estimate"},
        {"margin", Kind::real, 0.1, "margin for the index classification"}}},
      {"dominate",
       "domination reports along sample orbits",
       true,
       false,
       {{"index", Kind::integer, 1, "dimension of E^cu"},
        {"points", Kind::integer, 10, "number of sample points"},
        {"n", Kind::integer, 1, "domination constant n (smallest m checked)"},
        {"m_max", Kind::integer, 20, "largest m checked"},
        {"horizon", Kind::integer, 50, "splitting estimation horizon"},
        {"length", Kind::integer, 1, "orbit positions covered by each splitting"},
        {"constant", Kind::real, 2.0, "required ratio"}}},
      {"block",
       "Pesin block membership, block measure and parameter selection",
       true,
       false,
       {{"index", Kind::integer, 1, "dimension of E^cu"},
        {"ell", Kind::integer, 1, "block step ell"},
        {"side", Kind::string, "s", "s, u or both"},
        {"n_max", Kind::integer, 100, "prefix averages checked (smooth systems)"},
        {"horizon", Kind::integer, 30, "splitting estimation horizon"},
        {"points", Kind::integer, 100, "number of sample points"},
        {"eta", Kind::real, 0.1, "eta for the parameter selection"},
        {"ell_max", Kind::integer, 0, "largest ell tried by the selection (0: 10000 finite, 200 smooth)"}}},
      {"decompose",
       "exact and estimated ergodic decompositions with a variance table",
       true,
       false,
       {{"points", Kind::integer, 100, "number of sample points (torus)"},
        {"n", Kind::integer, 0, "Birkhoff horizon (0: lcm of cycle lengths, or 10000 on the torus)"},
        {"radius", Kind::real, 0.05, "clustering radius in the weak-star metric"},
        {"degree", Kind::integer, 8, "Fourier degree of the torus test family"},
        {"grid", Kind::integer, 64, "reference grid resolution per axis (torus)"}}},
      {"disk",
       "center-stable disk by graph transform and contraction check",
       true,
       false,
       {{"point", Kind::real_list, json::array({0.0, 0.0}), "base point"},
        {"index", Kind::integer, 1, "dimension of E^cu"},
        {"ell", Kind::integer, 1, "block step ell"},
        {"depth", Kind::integer, 20, "graph transform depth"},
        {"radius", Kind::real, 0.05, "disk radius r"},
        {"resolution", Kind::integer, 33, "grid nodes per axis"},
        {"aperture", Kind::real, 0.5, "cone aperture about E^cs (radians)"},
        {"iterates", Kind::integer, 30, "iterates for the contraction fit"},
        {"horizon", Kind::integer, 40, "splitting estimation horizon"},
        {"search", Kind::boolean, false, "bisect for the largest radius up to 'radius'"}}},
      {"oracle",
       "lemma fuzzing against the exact finite-system oracle",
       false,
       true,
       {{"lemma", Kind::string, nullptr, "block, varmax, varcont or hatnorm"},
        {"count", Kind::integer, 1000, "number of instances"}}},
      {"perturb",
       "continuity experiment on the perturbed cat family",
       false,
       false,
       {{"eps", Kind::real_list, json::array({0.0, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1}), "perturbation sizes"},
        {"points", Kind::integer, 50, "number of sample points"},
        {"n", Kind::integer, 2000, "iterates per sample"},
        {"degree", Kind::integer, 8, "Fourier degree of the test family"}}},
      {"sweep",
       "parameter sweep with regime classification",
       true,
       false,
       {{"param", Kind::string, nullptr, "system parameter to sweep"},
        {"from", Kind::real, nullptr, "first value"},
        {"to", Kind::real, nullptr, "last value"},
        {"steps", Kind::integer, 11, "number of values"},
        {"points", Kind::integer, 20, "sample points per value"},
        {"n", Kind::integer, 5000, "iterates per estimate"},
        {"margin", Kind::real, 0.1, "margin for the index classification"}}},
  };
  return table;
}

inline const Command* find_command(const std::string& name) {
  for (const Command& c : commands())
    if (c.name == name) return &c;
  return nullptr;
}

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] != b[j - 1])});
      diag = up;
    }
  }
  return row[b.size()];
}

// Candidates within edit distance 2 (or sharing a prefix), closest first.
inline std::vector<std::string> suggestions(const std::string& word, const std::vector<std::string>& pool) {
  std::vector<std::pair<std::size_t, std::string>> scored;
  for (const std::string& p : pool) {
    const std::size_t d = edit_distance(word, p);
    const bool prefix = !word.empty() && p.rfind(word, 0) == 0;
    if (d <= 2 || prefix) scored.emplace_back(prefix ? 0 : d, p);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<std::string> out;
  for (auto& s : scored) out.push_back(s.second);
  return out;
}

inline std::string did_you_mean(const std::string& word, const std::vector<std::string>& pool) {
  const auto s = suggestions(word, pool);
  if (s.empty()) return "";
  std::string out = " (did you mean";
  for (std::size_t k = 0; k < s.size(); ++k) out += (k ? ", '" : " '") + s[k] + "'";
  return out + "?)";
}

inline std::vector<std::string> command_names() {
  std::vector<std::string> names;
  for (const Command& c : commands()) names.push_back(c.name);
  names.push_back("validate");
  return names;
}

inline bool kind_matches(const json& v, Kind k) {
  switch (k) {
    case Kind::integer: return v.is_number_integer();
    case Kind::real: return v.is_number();
    case Kind::string: return v.is_string();
    case Kind::boolean: return v.is_boolean();
    case Kind::real_list:
      if (!v.is_array()) return false;
      return std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); });
  }
  return false;
}

// Field-level diagnostics; an empty list means the config is valid. Missing
// optional fields are filled in with their defaults.
inline std::vector<std::string> validate_config(json& cfg) {
  std::vector<std::string> errors;
  if (!cfg.is_object()) return {"config must be a JSON object"};
  static const std::vector<std::string> top{"command", "seed", "output", "workers", "system", "params"};
  for (auto it = cfg.begin(); it != cfg.end(); ++it)
    if (std::find(top.begin(), top.end(), it.key()) == top.end())
      errors.push_back("unknown field '" + it.key() + "'" + did_you_mean(it.key(), top));
  if (!cfg.contains("command") || !cfg["command"].is_string()) {
    errors.push_back("missing field 'command'");
    return errors;
  }
  const std::string name = cfg["command"];
  const Command* cmd = find_command(name);
  if (!cmd) {
    errors.push_back("unknown command '" + name + "'" + did_you_mean(name, command_names()));
    return errors;
  }
  if (cfg.contains("seed")) {
    if (!cfg["seed"].is_number_unsigned()) errors.push_back("field 'seed' must be a nonnegative integer");
  } else if (cmd->needs_seed) {
    errors.push_back("missing field 'seed' (required by '" + name + "')");
  } else {
    cfg["seed"] = std::uint64_t{0};
  }
  if (!cfg.contains("output")) cfg["output"] = "erglab-out";
  if (!cfg["output"].is_string()) errors.push_back("field 'output' must be a string");
  if (!cfg.contains("workers")) cfg["workers"] = std::uint64_t{0};
  if (!cfg["workers"].is_number_unsigned()) errors.push_back("field 'workers' must be a nonnegative integer");

  if (cmd->needs_system || cfg.contains("system")) {
    if (!cfg.contains("system")) {
      if (cmd->needs_system) errors.push_back("missing field 'system'");
    } else {
      json& sys = cfg["system"];
      static const std::vector<std::string> sys_keys{"name", "params", "matrix", "file"};
      if (!sys.is_object()) {
        errors.push_back("field 'system' must be a table");
      } else {
        for (auto it = sys.begin(); it != sys.end(); ++it)
          if (std::find(sys_keys.begin(), sys_keys.end(), it.key()) == sys_keys.end())
            errors.push_back("unknown field 'system." + it.key() + "'" + did_you_mean(it.key(), sys_keys));
        const bool has_name = sys.contains("name"), has_file = sys.contains("file");
        if (has_name == has_file) errors.push_back("field 'system' needs exactly one of 'name' and 'file'");
        if (has_name && !sys["name"].is_string()) errors.push_back("field 'system.name' must be a string");
        if (has_file && !sys["file"].is_string()) errors.push_back("field 'system.file' must be a string");
        if (sys.contains("params")) {
          if (!sys["params"].is_object()) {
            errors.push_back("field 'system.params' must be a table");
          } else {
            for (auto it = sys["params"].begin(); it != sys["params"].end(); ++it)
              if (!it.value().is_number()) errors.push_back("field 'system.params." + it.key() + "' must be a real");
          }
        }
        if (sys.contains("matrix") && !kind_matches(sys["matrix"], Kind::real_list))
          errors.push_back("field 'system.matrix' must be a list of reals");
      }
    }
  }

  if (!cfg.contains("params")) cfg["params"] = json::object();
  json& params = cfg["params"];
  if (!params.is_object()) {
    errors.push_back("field 'params' must be a table");
    return errors;
  }
  std::vector<std::string> keys;
  for (const Field& f : cmd->fields) keys.push_back(f.key);
  for (auto it = params.begin(); it != params.end(); ++it)
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
      errors.push_back("unknown field 'params." + it.key() + "' for '" + name + "'" + did_you_mean(it.key(), keys));
  for (const Field& f : cmd->fields) {
    if (!params.contains(f.key)) {
      if (f.fallback.is_null())
        errors.push_back("missing field 'params." + f.key + "' (" + f.help + ")");
      else
        params[f.key] = f.fallback;
      continue;
    }
    if (!kind_matches(params[f.key], f.kind))
      errors.push_back("field 'params." + f.key + "' must be " + std::string(kind_name(f.kind)));
    else if (f.kind == Kind::integer && params[f.key].get<long long>() < 0)
      errors.push_back("field 'params." + f.key + "' must be nonnegative");
  }
  return errors;
}

// Text of a flag value converted to the field's JSON type; nullopt if it
// does not parse (left for validate_config to report as a type error).
inline std::optional<json> parse_flag(const std::string& text, Kind kind) {
  try {
    std::size_t used = 0;
    switch (kind) {
      case Kind::integer: {
        const long long v = std::stoll(text, &used);
        if (used != text.size()) return std::nullopt;
        return json(v);
      }
      case Kind::real: {
        const double v = std::stod(text, &used);
        if (used != text.size()) return std::nullopt;
        return json(v);
      }
      case Kind::string: return json(text);
      case Kind::boolean:
        if (text == "true" || text == "1") return json(true);
        if (text == "false" || text == "0") return json(false);
        return std::nullopt;
      case Kind::real_list: {
        json list = json::array();
        std::size_t start = 0;
        while (start <= text.size()) {
          const std::size_t comma = text.find(',', start);
          const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
          const double v = std::stod(item, &used);
          if (used != item.size()) return std::nullopt;
          list.push_back(v);
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
        return list;
      }
    }
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

}  // namespace erglab::cli
