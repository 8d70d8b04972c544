#pragma once

// Structured text formats: finite systems, measures and decompositions as
// JSON documents with a schema tag, plus versioned CSV and JSON-lines writers.

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "erglab/atomic_measure.hpp"
#include "erglab/systems.hpp"

namespace erglab {

using json = nlohmann::json;

inline constexpr const char* kFsysSchema = "erglab-fsys-v1";
inline constexpr const char* kMeasSchema = "erglab-meas-v1";
inline constexpr const char* kDecompSchema = "erglab-decomp-v1";

class schema_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_schema(const json& j, const char* tag) {
  if (!j.is_object()) throw schema_error(std::string("expected a JSON object with schema ") + tag);
  if (!j.contains("schema") || j["schema"] != tag)
    throw schema_error(std::string("field 'schema' must be \"") + tag + "\"");
}

template <class T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) throw schema_error(std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw schema_error(std::string("field '") + name + "' has the wrong type");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Finite systems

inline json to_json(const FiniteSystem& sys) {
  json mats = json::array();
  for (const Matrix& a : sys.cocycle()) {
    std::vector<double> row_major;
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      for (Eigen::Index c = 0; c < a.cols(); ++c) row_major.push_back(a(r, c));
    mats.push_back(row_major);
  }
  return json{{"schema", kFsysSchema},
              {"n_states", sys.size()},
              {"dim", sys.dim()},
              {"perm", sys.permutation()},
              {"matrices", mats},
              {"weights", sys.weights()}};
}

inline FiniteSystem finite_system_from_json(const json& j) {
  detail::require_schema(j, kFsysSchema);
  const auto n = detail::field<std::size_t>(j, "n_states");
  const auto d = detail::field<int>(j, "dim");
  const auto perm = detail::field<std::vector<std::size_t>>(j, "perm");
  const auto mats = detail::field<std::vector<std::vector<double>>>(j, "matrices");
  std::vector<double> weights;
  if (j.contains("weights")) weights = detail::field<std::vector<double>>(j, "weights");
  if (d < 1) throw schema_error("field 'dim' must be positive");
  if (perm.size() != n) throw schema_error("field 'perm' must have n_states entries");
  if (mats.size() != n) throw schema_error("field 'matrices' must have n_states entries");
  std::vector<Matrix> cocycle;
  for (std::size_t s = 0; s < n; ++s) {
    if (mats[s].size() != static_cast<std::size_t>(d * d))
      throw schema_error("matrices[" + std::to_string(s) + "] must have dim*dim entries");
    Matrix a(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) a(r, c) = mats[s][static_cast<std::size_t>(r * d + c)];
    cocycle.push_back(std::move(a));
  }
  try {
    return FiniteSystem(perm, std::move(cocycle), std::move(weights));
  } catch (const std::invalid_argument& e) {
    throw schema_error(e.what());
  }
}

// ---------------------------------------------------------------------------
// Measures

inline json point_to_json(const State& s) { return s.index; }
inline json point_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

template <class P>
P point_from_json(const json& j);

template <>
inline State point_from_json<State>(const json& j) {
  if (!j.is_number_unsigned()) throw schema_error("state atoms must be nonnegative integers");
  return State{j.get<std::size_t>()};
}

template <>
inline Vector point_from_json<Vector>(const json& j) {
  if (!j.is_array()) throw schema_error("torus atoms must be coordinate lists");
  const auto c = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size()));
}

template <class P>
constexpr const char* point_kind() {
  return std::is_same_v<P, State> ? "state" : "torus";
}

template <class P>
json to_json(const AtomicMeasure<P>& mu) {
  json atoms = json::array();
  for (std::size_t a = 0; a < mu.size(); ++a)
    atoms.push_back(json{{"point", point_to_json(mu.support()[a])}, {"weight", mu.weights()[a]}});
  return json{{"schema", kMeasSchema}, {"kind", point_kind<P>()}, {"atoms", atoms}};
}

template <class P>
AtomicMeasure<P> measure_from_json(const json& j) {
  detail::require_schema(j, kMeasSchema);
  if (detail::field<std::string>(j, "kind") != point_kind<P>())
    throw schema_error(std::string("field 'kind' must be \"") + point_kind<P>() + "\"");
  const json& atoms = j.at("atoms");
  if (!atoms.is_array()) throw schema_error("field 'atoms' must be a list");
  std::vector<P> support;
  std::vector<double> weights;
  for (const json& a : atoms) {
    if (!a.is_object() || !a.contains("point") || !a.contains("weight"))
      throw schema_error("every atom needs 'point' and 'weight'");
    support.push_back(point_from_json<P>(a["point"]));
    weights.push_back(a["weight"].get<double>());
  }
  try {
    return AtomicMeasure<P>(std::move(support), std::move(weights));
  } catch (const std::invalid_argument& e) {
    throw schema_error(e.what());
  }
}

template <class P>
json to_json(const Decomposition<P>& lam) {
  json comps = json::array();
  for (std::size_t c = 0; c < lam.size(); ++c)
    comps.push_back(json{{"weight", lam.weights()[c]}, {"measure", to_json(lam.components()[c])}});
  return json{{"schema", kDecompSchema}, {"components", comps}};
}

template <class P>
Decomposition<P> decomposition_from_json(const json& j) {
  detail::require_schema(j, kDecompSchema);
  const json& comps = j.at("components");
  if (!comps.is_array()) throw schema_error("field 'components' must be a list");
  std::vector<AtomicMeasure<P>> ms;
  std::vector<double> w;
  for (const json& c : comps) {
    ms.push_back(measure_from_json<P>(c.at("measure")));
    w.push_back(c.at("weight").get<double>());
  }
  try {
    return Decomposition<P>(std::move(ms), std::move(w));
  } catch (const std::invalid_argument& e) {
    throw schema_error(e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw schema_error("cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw schema_error("'" + path + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// CSV and JSON lines

// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// CSV with a "# erglab-<name>-v1" first line and a column header.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::string& name, const std::vector<std::string>& columns)
      : out_(out), width_(columns.size()) {
    out_ << "# erglab-" << name << "-v1\n";
    for (std::size_t c = 0; c < columns.size(); ++c) out_ << (c ? "," : "") << columns[c];
    out_ << '\n';
  }

  CsvWriter& cell(double v) { return raw(format_double(v)); }
  CsvWriter& cell(long long v) { return raw(std::to_string(v)); }
  CsvWriter& cell(std::size_t v) { return raw(std::to_string(v)); }
  CsvWriter& cell(int v) { return raw(std::to_string(v)); }
  CsvWriter& cell(bool v) { return raw(v ? "true" : "false"); }
  CsvWriter& cell(const std::string& v) { return raw(v); }
  CsvWriter& cell(const char* v) { return raw(v); }

  void end_row() {
    if (col_ != width_) throw std::logic_error("CsvWriter: row has the wrong number of cells");
    out_ << '\n';
    col_ = 0;
  }

 private:
  CsvWriter& raw(const std::string& s) {
    out_ << (col_ ? "," : "") << s;
    ++col_;
    return *this;
  }

  std::ostream& out_;
  std::size_t width_;
  std::size_t col_ = 0;
};

inline void write_jsonl(std::ostream& out, const json& record) { out << record.dump() << '\n'; }

}  // namespace erglab
