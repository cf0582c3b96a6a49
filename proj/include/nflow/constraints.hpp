#pragma once

// Linear restrictions that prescribed k-point characteristics impose on the
// coefficients alpha_f of a map distribution, the recursion counting them,
// and related checks for flows of permutations.

#include <algorithm>
#include <array>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "nflow/linalg.hpp"
#include "nflow/npoint_chain.hpp"

namespace nflow {

// ---------------------------------------------------------------------------
// Degrees-of-freedom recursion

/// R[n][k] for 0 <= k <= n <= m (entries with k > n are left at 0).
struct DofTable {
  int m = 2;
  std::vector<std::vector<Integer>> values;

  const Integer& at(std::size_t n, std::size_t k) const { return values.at(n).at(k); }
};

inline Integer binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  Integer out = 1;
  for (std::size_t i = 1; i <= k; ++i) out = out * static_cast<unsigned long>(n - k + i) / static_cast<unsigned long>(i);
  return out;
}

/// R^n_k = R^n_{k-1} + C(n,k) (m^k - R^k_{k-1}), R^n_0 = 1.
inline DofTable dof_table(int m) {
  FiniteSpace space(m);
  const std::size_t mm = static_cast<std::size_t>(m);
  DofTable t{m, std::vector<std::vector<Integer>>(mm + 1, std::vector<Integer>(mm + 1, Integer(0)))};
  for (std::size_t n = 0; n <= mm; ++n) t.values[n][0] = 1;
  // R^n_k only needs R^k_{k-1}, which sits in an earlier column.
  for (std::size_t k = 1; k <= mm; ++k) {
    const Integer mk = boost::multiprecision::pow(Integer(m), static_cast<unsigned>(k));
    for (std::size_t n = k; n <= mm; ++n) {
      t.values[n][k] = t.values[n][k - 1] + binomial(n, k) * (mk - t.values[k][k - 1]);
    }
  }
  return t;
}

inline Integer dof_recursion(int m, std::size_t n, std::size_t k) {
  if (m < 2 || k > n || n > static_cast<std::size_t>(m)) {
    throw DomainError("dof_recursion needs 0 <= k <= n <= m, got m=" + std::to_string(m) + ", n=" + std::to_string(n) +
                      ", k=" + std::to_string(k));
  }
  return dof_table(m).at(n, k);
}

/// Restrictions from 1-point characteristics on a flow of permutations.
inline std::size_t permutation_dof_k1(int m) {
  if (m < 2) throw DomainError("m must be >= 2");
  const std::size_t d = static_cast<std::size_t>(m - 1);
  return d * d + 1;
}

// ---------------------------------------------------------------------------
// Constraint systems

enum class UnknownMode { all_maps, permutations };

inline std::string to_string(UnknownMode mode) { return mode == UnknownMode::all_maps ? "all-maps" : "permutations"; }

inline UnknownMode parse_unknown_mode(std::string_view text) {
  if (text == "all-maps") return UnknownMode::all_maps;
  if (text == "permutations" || text == "bijections-only") return UnknownMode::permutations;
  throw InputError("unknown constraint mode '" + std::string(text) + "' (expected all-maps or permutations)");
}

/// All self-maps of {1..m} in index order, or all permutations in lexicographic order.
inline std::vector<MapTable> enumerate_unknowns(int m, UnknownMode mode) {
  const FiniteSpace space(m);
  std::vector<MapTable> out;
  if (mode == UnknownMode::all_maps) {
    const StateIndex count = space.tuple_count(static_cast<std::size_t>(m));
    out.reserve(count);
    for (StateIndex i = 0; i < count; ++i) out.push_back(MapTable::from_index(m, i));
  } else {
    std::vector<int> p(static_cast<std::size_t>(m));
    std::iota(p.begin(), p.end(), 1);
    do {
      out.emplace_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
  }
  return out;
}

struct ConstraintRow {
  /// Strictly increasing 1-based positions u; empty for the normalization row.
  std::vector<int> positions;
  std::vector<int> values;
  Rational rhs;
  /// Unknown indices with coefficient 1.
  std::vector<std::size_t> columns;

  bool is_normalization() const noexcept { return positions.empty(); }
};

struct ConstraintSystem {
  int m = 2;
  UnknownMode mode = UnknownMode::all_maps;
  std::size_t k = 0;
  std::vector<MapTable> unknowns;
  std::vector<ConstraintRow> rows;

  std::size_t unknown_count() const noexcept { return unknowns.size(); }
};

/// p_{u,v} lookup; nullopt means "not supplied".
using Characteristics = std::function<std::optional<Rational>(const PointTuple& positions, const PointTuple& values)>;

/// Characteristics read off a flow: p_{u,v} = P(f(u_j) = v_j for all j).
inline Characteristics characteristics_of(const MapDistribution& nu) {
  return [nu = validate_distribution(nu)](const PointTuple& u, const PointTuple& v) -> std::optional<Rational> {
    return kpoint_probability(nu, u, v);
  };
}

struct BuildOptions {
  /// Lifts the refusal of all-maps systems with m >= 6 and k >= 2.
  bool allow_large = false;
};

namespace detail {

inline bool next_combination(std::vector<int>& c, int m) {
  const int k = static_cast<int>(c.size());
  for (int i = k - 1; i >= 0; --i) {
    if (c[static_cast<std::size_t>(i)] < m - k + i + 1) {
      ++c[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
      return true;
    }
  }
  return false;
}

inline bool next_tuple(std::vector<int>& v, int m) {
  for (std::size_t i = v.size(); i-- > 0;) {
    if (v[i] < m) {
      ++v[i];
      return true;
    }
    v[i] = 1;
  }
  return false;
}

inline bool all_distinct(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) == v.end();
}

}  // namespace detail

/// Normalization row, then for j = 1..k every increasing position set u with
/// |u| = j and every value tuple v (distinct values in permutations mode).
inline ConstraintSystem build_constraints(int m, std::size_t k, const Characteristics& characteristics,
                                          UnknownMode mode, const BuildOptions& options = {}) {
  FiniteSpace space(m);
  if (k > static_cast<std::size_t>(m)) throw DomainError("level k=" + std::to_string(k) + " exceeds m=" + std::to_string(m));
  if (mode == UnknownMode::all_maps && m >= 6 && k >= 2 && !options.allow_large) {
    throw ResourceError("all-maps systems with m >= 6 and k >= 2 are refused by default (" +
                        std::to_string(space.tuple_count(static_cast<std::size_t>(m))) +
                        " unknowns); pass allow_large to override");
  }
  ConstraintSystem sys{m, mode, k, enumerate_unknowns(m, mode), {}};
  ConstraintRow norm;
  norm.rhs = 1;
  norm.columns.resize(sys.unknowns.size());
  std::iota(norm.columns.begin(), norm.columns.end(), std::size_t{0});
  sys.rows.push_back(std::move(norm));

  for (std::size_t j = 1; j <= k; ++j) {
    std::vector<int> u(j);
    std::iota(u.begin(), u.end(), 1);
    do {
      std::vector<int> v(j, 1);
      do {
        if (mode == UnknownMode::permutations && !detail::all_distinct(v)) continue;
        const auto p = characteristics(PointTuple{u}, PointTuple{v});
        if (!p) {
          throw InputError("missing characteristic p_{u,v} for u=" + to_string(PointTuple{u}) + ", v=" + to_string(PointTuple{v}));
        }
        ConstraintRow row{u, v, *p, {}};
        for (std::size_t c = 0; c < sys.unknowns.size(); ++c) {
          const MapTable& f = sys.unknowns[c];
          bool hit = true;
          for (std::size_t i = 0; i < j && hit; ++i) hit = f(u[i]) == v[i];
          if (hit) row.columns.push_back(c);
        }
        sys.rows.push_back(std::move(row));
      } while (detail::next_tuple(v, m));
    } while (detail::next_combination(u, m));
  }
  return sys;
}

namespace detail {

inline EchelonForm coefficient_echelon(const ConstraintSystem& sys) {
  EchelonForm form;
  for (const ConstraintRow& row : sys.rows) {
    IntRow r;
    r.reserve(row.columns.size());
    for (std::size_t c : row.columns) r.emplace_back(c, Integer(1));
    form.insert(std::move(r));
    if (form.rank() == sys.unknown_count()) break;
  }
  return form;
}

}  // namespace detail

/// Rank of the 0/1 coefficient matrix over the rationals.
inline std::size_t exact_rank(const ConstraintSystem& sys) { return detail::coefficient_echelon(sys).rank(); }

/// True iff the supplied right-hand sides admit a (signed) solution.
inline bool is_feasible(const ConstraintSystem& sys) {
  const std::size_t rhs_col = sys.unknown_count();
  EchelonForm plain, augmented;
  for (const ConstraintRow& row : sys.rows) {
    IntRow r;
    const Integer den = denominator_of(row.rhs);
    for (std::size_t c : row.columns) r.emplace_back(c, den);
    plain.insert(r);
    if (row.rhs != 0) r.emplace_back(rhs_col, numerator_of(row.rhs));
    augmented.insert(std::move(r));
  }
  return plain.rank() == augmented.rank();
}

/// Directions in coefficient space that leave every prescribed characteristic unchanged.
inline std::vector<SparseVector> nullspace_basis(const ConstraintSystem& sys) {
  return detail::coefficient_echelon(sys).nullspace(sys.unknown_count());
}

/// Coefficient-matrix times x, row by row.
inline std::vector<Rational> apply_constraints(const ConstraintSystem& sys, const SparseVector& x) {
  std::vector<Rational> dense(sys.unknown_count());
  for (const auto& [c, q] : x) dense.at(c) += q;
  std::vector<Rational> out;
  out.reserve(sys.rows.size());
  for (const ConstraintRow& row : sys.rows) {
    Rational s = 0;
    for (std::size_t c : row.columns) s += dense[c];
    out.push_back(std::move(s));
  }
  return out;
}

inline bool in_nullspace(const ConstraintSystem& sys, const SparseVector& x) {
  const auto image = apply_constraints(sys, x);
  return std::all_of(image.begin(), image.end(), [](const Rational& q) { return q == 0; });
}

// ---------------------------------------------------------------------------
// Printed m = 3 basis of the 2-point preserving directions

struct PaperVectorCheck {
  std::string label;
  SparseVector coefficients;
  bool in_nullspace = false;
};

struct PaperBasisReport {
  std::size_t nullspace_dimension = 0;
  std::vector<PaperVectorCheck> first_type;
  std::vector<PaperVectorCheck> second_type;
  bool first_type_sum_zero = false;
  bool any_five_first_type_independent = false;
  std::size_t first_type_rank = 0;
  std::size_t second_type_rank = 0;
  std::size_t combined_rank = 0;
  /// Filled only when some printed first-type vector fails membership: signs
  /// of the last two terms under which all six vectors pass, if any.
  std::optional<std::pair<int, int>> first_type_sign_variant;
};

namespace detail {

inline SparseVector signed_map_sum(const std::vector<std::pair<int, std::vector<int>>>& terms) {
  SparseVector v;
  for (const auto& [sign, images] : terms) v.emplace_back(static_cast<std::size_t>(MapTable(images).index()), Rational(sign));
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  SparseVector merged;
  for (auto& cell : v) {
    if (!merged.empty() && merged.back().first == cell.first) {
      merged.back().second += cell.second;
    } else {
      merged.push_back(cell);
    }
  }
  std::erase_if(merged, [](const auto& c) { return c.second == 0; });
  return merged;
}

/// f_ijk - f_jjk - f_ikk - f_jki + f_jji + f_jkk + s7 f_iji + s8 f_iki; printed signs are s7 = -1, s8 = +1.
inline SparseVector first_type_vector(int i, int j, int k, int s7 = -1, int s8 = 1) {
  return signed_map_sum({{1, {i, j, k}}, {-1, {j, j, k}}, {-1, {i, k, k}}, {-1, {j, k, i}},
                         {1, {j, j, i}}, {1, {j, k, k}}, {s7, {i, j, i}}, {s8, {i, k, i}}});
}

/// f_iii - f_iij + f_ijj - f_iji + f_jij - f_jii + f_jji - f_jjj.
inline SparseVector second_type_vector(int i, int j) {
  return signed_map_sum({{1, {i, i, i}}, {-1, {i, i, j}}, {1, {i, j, j}}, {-1, {i, j, i}},
                         {1, {j, i, j}}, {-1, {j, i, i}}, {1, {j, j, i}}, {-1, {j, j, j}}});
}

}  // namespace detail

inline PaperBasisReport verify_paper_basis_m3() {
  constexpr int m = 3;
  const Characteristics uniform = [](const PointTuple& u, const PointTuple&) -> std::optional<Rational> {
    long cells = 1;
    for (std::size_t i = 0; i < u.level(); ++i) cells *= 3;
    return Rational(1, cells);
  };
  const ConstraintSystem sys = build_constraints(m, 2, uniform, UnknownMode::all_maps);
  PaperBasisReport report;
  report.nullspace_dimension = sys.unknown_count() - exact_rank(sys);

  std::vector<int> p{1, 2, 3};
  std::vector<std::array<int, 3>> triples;
  do {
    triples.push_back({p[0], p[1], p[2]});
  } while (std::next_permutation(p.begin(), p.end()));

  std::vector<SparseVector> first;
  for (const auto& [i, j, k] : triples) {
    SparseVector v = detail::first_type_vector(i, j, k);
    const std::string label = "(i,j,k)=(" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) + ")";
    report.first_type.push_back({label, v, in_nullspace(sys, v)});
    first.push_back(std::move(v));
  }
  std::vector<SparseVector> second;
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= m; ++j) {
      if (i == j) continue;
      SparseVector v = detail::second_type_vector(i, j);
      report.second_type.push_back({"(i,j)=(" + std::to_string(i) + "," + std::to_string(j) + ")", v, in_nullspace(sys, v)});
      second.push_back(std::move(v));
    }
  }

  std::vector<Rational> sum(sys.unknown_count());
  for (const auto& v : first) {
    for (const auto& [c, q] : v) sum[c] += q;
  }
  report.first_type_sum_zero = std::all_of(sum.begin(), sum.end(), [](const Rational& q) { return q == 0; });

  report.any_five_first_type_independent = true;
  for (std::size_t skip = 0; skip < first.size(); ++skip) {
    std::vector<SparseVector> five;
    for (std::size_t i = 0; i < first.size(); ++i) {
      if (i != skip) five.push_back(first[i]);
    }
    report.any_five_first_type_independent = report.any_five_first_type_independent && rank_of(five) == 5;
  }
  report.first_type_rank = rank_of(first);
  report.second_type_rank = rank_of(second);
  std::vector<SparseVector> all = first;
  all.insert(all.end(), second.begin(), second.end());
  report.combined_rank = rank_of(all);

  const bool verbatim_ok = std::all_of(report.first_type.begin(), report.first_type.end(),
                                       [](const PaperVectorCheck& c) { return c.in_nullspace; });
  if (!verbatim_ok) {
    for (int s7 : {-1, 1}) {
      for (int s8 : {-1, 1}) {
        bool ok = true;
        for (const auto& [i, j, k] : triples) ok = ok && in_nullspace(sys, detail::first_type_vector(i, j, k, s7, s8));
        if (ok && !report.first_type_sign_variant) report.first_type_sign_variant = std::make_pair(s7, s8);
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Reconstruction from one off-diagonal m-point row

/// alpha_f = row[f(source)] for a source tuple with m distinct entries.
inline MapDistribution reconstruct_from_mpoint_row(int m, const PointTuple& source, const SparseRow& row) {
  const FiniteSpace space(m);
  if (source.level() != static_cast<std::size_t>(m)) {
    throw DomainError("source must have m=" + std::to_string(m) + " entries, got " + std::to_string(source.level()));
  }
  detail::check_states(m, source.values, "source");
  if (!detail::all_distinct(source.values)) {
    throw DomainError("source " + to_string(source) + " lies on a sub-diagonal (repeated entries)");
  }
  const StateIndex dim = space.tuple_count(static_cast<std::size_t>(m));
  MapDistribution nu{m, MapMode::all_maps, {}};
  Rational total = 0;
  std::vector<int> target(static_cast<std::size_t>(m)), images(static_cast<std::size_t>(m));
  for (const auto& [col, p] : row) {
    if (col >= dim) throw InputError("row column " + std::to_string(col) + " outside M^m");
    if (p < 0) throw InputError("negative probability in row at column " + std::to_string(col));
    detail::decode_digits(m, col, target);
    for (std::size_t j = 0; j < target.size(); ++j) images[static_cast<std::size_t>(source[j] - 1)] = target[j];
    nu.atoms.push_back({MapTable(images), p});
    total += p;
  }
  if (total != 1) throw InputError("row sums to " + to_string(total) + ", not 1");
  return validate_distribution(nu);
}

// ---------------------------------------------------------------------------
// Flows of permutations

struct ComplementarityReport {
  bool pass = false;
  Rational lhs;
  Rational rhs;
};

namespace detail {

/// Sum over orderings w of `values` of p_{points, w}; empty sets give 1.
inline Rational set_to_set_probability(const MapDistribution& nu, std::vector<int> points, std::vector<int> values) {
  if (points.empty()) return 1;
  std::sort(values.begin(), values.end());
  Rational total = 0;
  do {
    total += kpoint_probability(nu, PointTuple{points}, PointTuple{values});
  } while (std::next_permutation(values.begin(), values.end()));
  return total;
}

inline std::vector<int> complement(int m, const std::vector<int>& s) {
  std::vector<int> out;
  for (int x = 1; x <= m; ++x) {
    if (std::find(s.begin(), s.end(), x) == s.end()) out.push_back(x);
  }
  return out;
}

}  // namespace detail

/// P(f maps set u onto set v) = P(f maps the complement of u onto the complement of v).
inline ComplementarityReport verify_complementarity(const MapDistribution& nu_in, const std::vector<int>& u,
                                                    const std::vector<int>& v) {
  if (nu_in.mode != MapMode::bijections_only) {
    throw DomainError("complementarity holds for bijections-only distributions; got mode " + to_string(nu_in.mode));
  }
  const MapDistribution nu = validate_distribution(nu_in);
  if (u.size() != v.size()) throw DomainError("sets u and v must have equal size");
  detail::check_states(nu.m, u, "u");
  detail::check_states(nu.m, v, "v");
  if (!detail::all_distinct(u) || !detail::all_distinct(v)) throw DomainError("u and v must be sets (no repeats)");
  ComplementarityReport report;
  std::vector<int> su = u;
  std::sort(su.begin(), su.end());
  report.lhs = detail::set_to_set_probability(nu, su, v);
  report.rhs = detail::set_to_set_probability(nu, detail::complement(nu.m, su), detail::complement(nu.m, v));
  report.pass = report.lhs == report.rhs;
  return report;
}

struct BistochasticReport {
  bool pass = false;
  std::vector<Rational> column_sums;
  /// 1-based column of the first sum different from 1.
  std::optional<int> offending_column;
};

inline BistochasticReport onepoint_bistochastic_check(const MapDistribution& nu) {
  const TransitionMatrix a = lift_transition_matrix(nu, 1);
  BistochasticReport report;
  report.column_sums.assign(static_cast<std::size_t>(a.m()), Rational(0));
  for (StateIndex i = 0; i < a.dimension(); ++i) {
    for (const auto& [c, p] : a.row(i)) report.column_sums[c] += p;
  }
  for (std::size_t c = 0; c < report.column_sums.size(); ++c) {
    if (report.column_sums[c] != 1) {
      report.offending_column = static_cast<int>(c + 1);
      break;
    }
  }
  report.pass = !report.offending_column;
  return report;
}

}  // namespace nflow
