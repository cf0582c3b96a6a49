#pragma once

// File formats. All analysis outputs render probabilities as exact "p/q"
// strings; serializations are canonical so equal inputs give equal bytes.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "nflow/birkhoff.hpp"
#include "nflow/constraints.hpp"
#include "nflow/flip_example.hpp"
#include "nflow/invariant.hpp"
#include "nflow/simulator.hpp"

namespace nflow {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Distribution file: {"m", "mode", "atoms": [{"map": [...], "weight": "p/q"}]}

inline Json to_json(const MapDistribution& nu_in) {
  const MapDistribution nu = validate_distribution(nu_in);
  Json atoms = Json::array();
  for (const Atom& a : nu.atoms) {
    atoms.push_back(Json{{"map", std::vector<int>(a.map.images().begin(), a.map.images().end())},
                         {"weight", to_string(a.weight)}});
  }
  return Json{{"m", nu.m}, {"mode", to_string(nu.mode)}, {"atoms", std::move(atoms)}};
}

inline MapDistribution distribution_from_json(const Json& j) {
  try {
    MapDistribution nu;
    nu.m = j.at("m").get<int>();
    FiniteSpace space(nu.m);
    nu.mode = parse_map_mode(j.at("mode").get<std::string>());
    for (const Json& a : j.at("atoms")) {
      auto images = a.at("map").get<std::vector<int>>();
      if (images.size() != static_cast<std::size_t>(nu.m)) {
        throw InputError("atom map has " + std::to_string(images.size()) + " images, expected m=" + std::to_string(nu.m));
      }
      const Json& w = a.at("weight");
      if (!w.is_string()) throw InputError("weights must be rational strings like \"1/4\"");
      nu.atoms.push_back({MapTable(std::move(images)), parse_rational(w.get<std::string>())});
    }
    return validate_distribution(nu);
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed distribution JSON: ") + e.what());
  }
}

inline std::string format_distribution(const MapDistribution& nu) { return to_json(nu).dump(2) + "\n"; }

inline MapDistribution parse_distribution(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw InputError(std::string("distribution is not valid JSON: ") + e.what());
  }
  return distribution_from_json(j);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline MapDistribution read_distribution_file(const std::string& path) { return parse_distribution(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Sparse matrix text: "# m=<m> n=<n> format=npoint-sparse-v1", then
// "row<TAB>col<TAB>p/q" sorted by (row, col).

inline std::string format_sparse_matrix(const TransitionMatrix& a) {
  std::string out = "# m=" + std::to_string(a.m()) + " n=" + std::to_string(a.level()) + " format=npoint-sparse-v1\n";
  for (StateIndex i = 0; i < a.dimension(); ++i) {
    for (const auto& [col, p] : a.row(i)) {
      out += std::to_string(i) + '\t' + std::to_string(col) + '\t' + to_string(p) + '\n';
    }
  }
  return out;
}

namespace detail {

inline std::string header_value(const std::string& header, const std::string& key) {
  std::istringstream ss(header);
  std::string token;
  while (ss >> token) {
    if (token.rfind(key + "=", 0) == 0) return token.substr(key.size() + 1);
  }
  throw InputError("header lacks '" + key + "=': " + header);
}

inline std::size_t parse_count(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw InputError("bad " + what + " '" + s + "'");
  }
  return static_cast<std::size_t>(std::stoull(s));
}

}  // namespace detail

inline TransitionMatrix parse_sparse_matrix(const std::string& text, StateIndex max_states = 10'000'000) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("#", 0) != 0) throw InputError("sparse matrix must start with a '#' header");
  if (detail::header_value(line, "format") != "npoint-sparse-v1") throw InputError("unsupported matrix format in: " + line);
  const int m = static_cast<int>(detail::parse_count(detail::header_value(line, "m"), "m"));
  const std::size_t n = detail::parse_count(detail::header_value(line, "n"), "n");
  const StateIndex dim = FiniteSpace(m).tuple_count(n);
  if (dim > max_states) throw ResourceError("matrix with " + std::to_string(dim) + " rows exceeds the guard");
  std::vector<SparseRow> rows(dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string r, c, p;
    if (!std::getline(fields, r, '\t') || !std::getline(fields, c, '\t') || !std::getline(fields, p)) {
      throw InputError("line " + std::to_string(line_no) + ": expected row<TAB>col<TAB>p/q");
    }
    const StateIndex row = detail::parse_count(r, "row index");
    const StateIndex col = detail::parse_count(c, "column index");
    if (row >= dim) throw InputError("line " + std::to_string(line_no) + ": row out of range");
    rows[row].emplace_back(col, parse_rational(p));
  }
  return TransitionMatrix(m, n, std::move(rows));
}

// ---------------------------------------------------------------------------
// Measures and bifurcation reports

inline Json tuple_json(const PointTuple& t) { return Json(t.values); }

inline Json to_json(const InvariantMeasure& v) {
  const FiniteSpace space(v.m);
  Json masses = Json::array();
  for (const auto& [i, p] : v.masses) {
    masses.push_back(Json{{"tuple", tuple_json(decode_tuple(space, v.level, i))}, {"mass", to_string(p)}});
  }
  return Json{{"level", v.level}, {"class_id", v.class_id}, {"support_size", v.masses.size()}, {"masses", std::move(masses)}};
}

namespace detail {

inline Json optional_level(const std::optional<std::size_t>& level) { return level ? Json(*level) : Json(nullptr); }

}  // namespace detail

inline Json to_json(const BifurcationReport& r) {
  Json levels = Json::array();
  for (const LevelComparison& c : r.levels) {
    Json a = Json::array(), b = Json::array();
    for (const auto& t : c.support_a.tuples) a.push_back(tuple_json(t));
    for (const auto& t : c.support_b.tuples) b.push_back(tuple_json(t));
    levels.push_back(Json{{"level", c.level},
                          {"support_a", std::move(a)},
                          {"support_b", std::move(b)},
                          {"equal", c.equal},
                          {"homeomorphic", c.homeomorphic}});
  }
  return Json{{"seed", tuple_json(r.seed)},
              {"detected_level", detail::optional_level(r.detected_level)},
              {"characteristic_level", detail::optional_level(r.characteristic_level)},
              {"levels", std::move(levels)}};
}

// ---------------------------------------------------------------------------
// Constraint systems: "# m=<m> mode=<mode> k=<k> unknowns=<N> format=dof-system-v1"
// then "u=<positions> v=<values> rhs=<p/q> cols=<idx,...>".

namespace detail {

inline std::string join(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

}  // namespace detail

inline std::string format_constraint_system(const ConstraintSystem& sys) {
  std::string out = "# m=" + std::to_string(sys.m) + " mode=" + to_string(sys.mode) + " k=" + std::to_string(sys.k) +
                    " unknowns=" + std::to_string(sys.unknown_count()) + " format=dof-system-v1\n";
  for (const ConstraintRow& row : sys.rows) {
    out += "u=" + detail::join(row.positions) + " v=" + detail::join(row.values) + " rhs=" + to_string(row.rhs) + " cols=";
    for (std::size_t i = 0; i < row.columns.size(); ++i) out += (i ? "," : "") + std::to_string(row.columns[i]);
    out += '\n';
  }
  return out;
}

/// One vector per line as space-separated "index:coeff" pairs.
inline std::string format_nullspace(const std::vector<SparseVector>& basis) {
  std::string out;
  for (const SparseVector& v : basis) {
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + std::to_string(v[i].first) + ":" + to_string(v[i].second);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulation output

/// JSON lines, one record {"t", "map"[, "K"]} per jump.
inline std::string format_trajectory(const TrajectorySample& s) {
  std::string out;
  for (std::size_t i = 0; i < s.jump_times.size(); ++i) {
    Json rec{{"t", s.jump_times[i]}, {"map", std::vector<int>(s.maps[i].images().begin(), s.maps[i].images().end())}};
    if (i < s.embedded.size()) rec["K"] = s.embedded[i];
    out += rec.dump() + '\n';
  }
  return out;
}

namespace detail {

inline std::string format_double(double x) { return Json(x).dump(); }

}  // namespace detail

inline std::string format_estimate(const EmpiricalEstimate& est) {
  std::string out = "# m=" + std::to_string(est.m) + " n=" + std::to_string(est.level) + " format=npoint-sparse-v1\n";
  out += "# empirical steps=" + std::to_string(est.steps) + " seed=" + std::to_string(est.seed) + "\n";
  for (const auto& [key, count] : est.counts) {
    out += std::to_string(key.first) + '\t' + std::to_string(key.second) + '\t' +
           detail::format_double(est.estimate(key.first, key.second)) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dense matrices (Birkhoff input): {"matrix": [["p/q", ...], ...]}

inline DenseMatrix dense_matrix_from_json(const Json& j) {
  try {
    DenseMatrix b;
    for (const Json& row : j.at("matrix")) {
      std::vector<Rational> r;
      for (const Json& cell : row) r.push_back(parse_rational(cell.is_string() ? cell.get<std::string>() : cell.dump()));
      b.push_back(std::move(r));
    }
    return b;
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed matrix JSON: ") + e.what());
  }
}

inline DenseMatrix to_dense(const TransitionMatrix& a) {
  DenseMatrix out(a.dimension(), std::vector<Rational>(a.dimension(), Rational(0)));
  for (StateIndex i = 0; i < a.dimension(); ++i) {
    for (const auto& [c, p] : a.row(i)) out[i][c] = p;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Command-line lists

/// "1,2,3" -> {"1", "2", "3"}; empty items are rejected.
inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw InputError("empty item in list '" + text + "'");
    out.push_back(item);
  }
  if (out.empty() || text.back() == ',') throw InputError("malformed list '" + text + "'");
  return out;
}

inline PointTuple parse_tuple(const std::string& text) {
  PointTuple t;
  for (const std::string& item : split_list(text)) {
    if (item.find_first_not_of("0123456789") != std::string::npos || item.size() > 9) {
      throw InputError("tuple entry '" + item + "' is not a positive state");
    }
    t.values.push_back(std::stoi(item));
  }
  return t;
}

inline std::vector<Rational> parse_rational_list(const std::string& text) {
  std::vector<Rational> out;
  for (const std::string& item : split_list(text)) out.push_back(parse_rational(item));
  return out;
}

}  // namespace nflow
