#pragma once

// n-point motion of a random-map flow: the m^n x m^n right stochastic matrix
// A^(n), coordinate-deletion projections A^(n-1) = P A^(n) Q, and level-wise
// comparison of two flows.

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "nflow/core.hpp"

namespace nflow {

/// (column, probability) pairs sorted by column; no explicit zeros.
using SparseRow = std::vector<std::pair<StateIndex, Rational>>;

namespace detail {

inline void sort_and_merge(SparseRow& row) {
  std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  SparseRow merged;
  merged.reserve(row.size());
  for (auto& cell : row) {
    if (!merged.empty() && merged.back().first == cell.first) {
      merged.back().second += cell.second;
    } else {
      merged.push_back(std::move(cell));
    }
  }
  std::erase_if(merged, [](const auto& c) { return c.second == 0; });
  row = std::move(merged);
}

inline std::string level_tag(int m, std::size_t n) {
  return "m=" + std::to_string(m) + ", n=" + std::to_string(n);
}

}  // namespace detail

class TransitionMatrix {
 public:
  /// Rows are canonicalized; every row must sum to exactly 1.
  TransitionMatrix(int m, std::size_t level, std::vector<SparseRow> rows)
      : m_(m), level_(level), rows_(std::move(rows)) {
    if (level_ < 1) throw DomainError("transition matrix level must be >= 1");
    const StateIndex dim = FiniteSpace(m_).tuple_count(level_);
    if (rows_.size() != dim) {
      throw InputError("matrix at " + detail::level_tag(m_, level_) + " needs " + std::to_string(dim) +
                       " rows, got " + std::to_string(rows_.size()));
    }
    for (StateIndex i = 0; i < dim; ++i) {
      SparseRow& row = rows_[i];
      detail::sort_and_merge(row);
      Rational total = 0;
      for (const auto& [col, p] : row) {
        if (col >= dim) throw InputError("column " + std::to_string(col) + " out of range in row " + std::to_string(i));
        if (p < 0) throw InputError("negative entry in row " + std::to_string(i));
        total += p;
      }
      if (total != 1) {
        throw InputError("row " + std::to_string(i) + " sums to " + to_string(total) + ", not 1");
      }
    }
  }

  int m() const noexcept { return m_; }
  std::size_t level() const noexcept { return level_; }
  StateIndex dimension() const noexcept { return rows_.size(); }
  const SparseRow& row(StateIndex i) const { return rows_.at(i); }
  const std::vector<SparseRow>& rows() const noexcept { return rows_; }

  Rational at(StateIndex i, StateIndex j) const {
    const SparseRow& r = rows_.at(i);
    auto it = std::lower_bound(r.begin(), r.end(), j, [](const auto& c, StateIndex col) { return c.first < col; });
    return (it != r.end() && it->first == j) ? it->second : Rational(0);
  }

  std::size_t nonzeros() const {
    std::size_t total = 0;
    for (const auto& r : rows_) total += r.size();
    return total;
  }

  friend bool operator==(const TransitionMatrix&, const TransitionMatrix&) = default;

 private:
  int m_;
  std::size_t level_;
  std::vector<SparseRow> rows_;
};

/// One row of A^(n): the image distribution of the tuple with index `source`.
inline SparseRow lift_row(const MapDistribution& nu, std::size_t n, StateIndex source) {
  std::vector<int> x(n);
  detail::decode_digits(nu.m, source, x);
  SparseRow row;
  row.reserve(nu.atoms.size());
  for (const Atom& a : nu.atoms) {
    StateIndex target = 0;
    for (int xi : x) target = target * static_cast<StateIndex>(nu.m) + static_cast<StateIndex>(a.map(xi) - 1);
    row.emplace_back(target, a.weight);
  }
  detail::sort_and_merge(row);
  return row;
}

struct LiftOptions {
  StateIndex max_states = 10'000'000;
  unsigned threads = 1;
};

/// Row-on-demand view of A^(n) for state spaces too large to materialize.
class LazyTransitionMatrix {
 public:
  LazyTransitionMatrix(MapDistribution nu, std::size_t level) : nu_(validate_distribution(nu)), level_(level) {
    if (level_ < 1) throw DomainError("level must be >= 1");
    dimension_ = FiniteSpace(nu_.m).tuple_count(level_);
  }

  int m() const noexcept { return nu_.m; }
  std::size_t level() const noexcept { return level_; }
  StateIndex dimension() const noexcept { return dimension_; }
  SparseRow row(StateIndex source) const {
    if (source >= dimension_) throw DomainError("row " + std::to_string(source) + " out of range");
    return lift_row(nu_, level_, source);
  }
  const MapDistribution& distribution() const noexcept { return nu_; }

 private:
  MapDistribution nu_;
  std::size_t level_;
  StateIndex dimension_ = 0;
};

/// A^(n)_{x,y} = sum of nu(f) over atoms with f(x) = y.
inline TransitionMatrix lift_transition_matrix(const MapDistribution& nu_in, std::size_t n,
                                               const LiftOptions& options = {}) {
  if (n < 1) throw DomainError("lift level must be >= 1, got " + std::to_string(n));
  const MapDistribution nu = validate_distribution(nu_in);
  const StateIndex dim = FiniteSpace(nu.m).tuple_count(n);
  if (dim > options.max_states) {
    throw ResourceError("A^(n) at " + detail::level_tag(nu.m, n) + " has " + std::to_string(dim) +
                        " rows, above the guard of " + std::to_string(options.max_states) +
                        "; use LazyTransitionMatrix for row-on-demand access");
  }
  std::vector<SparseRow> rows(dim);
  const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(std::min<StateIndex>(dim, 64))));
  if (workers == 1) {
    for (StateIndex i = 0; i < dim; ++i) rows[i] = lift_row(nu, n, i);
  } else {
    // Each worker fills a disjoint stride of rows; output is order independent.
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (StateIndex i = w; i < dim; i += workers) rows[i] = lift_row(nu, n, i);
      });
    }
  }
  return TransitionMatrix(nu.m, n, std::move(rows));
}

/// The 0/1 matrices P (m^(n-1) x m^n) and Q (m^n x m^(n-1)) stored as index
/// maps: row i of P has its 1 in column p_columns[i]; row x of Q has its 1 in
/// column q_columns[x].
struct ProjectionPair {
  int m = 2;
  std::size_t n = 2;
  std::size_t r = 1;
  int fixed_value = 1;
  std::vector<StateIndex> p_columns;
  std::vector<StateIndex> q_columns;
};

/// Deletes coordinate `r` (1-based); P pins that source coordinate to `fixed_value`.
inline ProjectionPair projection_matrices(int m, std::size_t n, std::size_t r, int fixed_value) {
  FiniteSpace space(m);
  if (n < 2) throw DomainError("projection needs n >= 2, got n=" + std::to_string(n));
  if (r < 1 || r > n) throw DomainError("deleted coordinate r=" + std::to_string(r) + " outside [1, " + std::to_string(n) + "]");
  if (fixed_value < 1 || fixed_value > m) {
    throw DomainError("fixed value i_r=" + std::to_string(fixed_value) + " outside [1, " + std::to_string(m) + "]");
  }
  ProjectionPair pair{m, n, r, fixed_value, {}, {}};
  const StateIndex lower = space.tuple_count(n - 1);
  const StateIndex upper = space.tuple_count(n);
  std::vector<int> y(n - 1), x(n);
  pair.p_columns.resize(lower);
  for (StateIndex i = 0; i < lower; ++i) {
    detail::decode_digits(m, i, y);
    std::copy(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(r - 1), x.begin());
    x[r - 1] = fixed_value;
    std::copy(y.begin() + static_cast<std::ptrdiff_t>(r - 1), y.end(), x.begin() + static_cast<std::ptrdiff_t>(r));
    pair.p_columns[i] = detail::encode_digits(m, x);
  }
  pair.q_columns.resize(upper);
  for (StateIndex j = 0; j < upper; ++j) {
    detail::decode_digits(m, j, x);
    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(r - 1), y.begin());
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(r), x.end(), y.begin() + static_cast<std::ptrdiff_t>(r - 1));
    pair.q_columns[j] = detail::encode_digits(m, y);
  }
  return pair;
}

/// P * A * Q, applied through the index maps.
inline TransitionMatrix project_matrix(const TransitionMatrix& a, const ProjectionPair& pair) {
  if (a.m() != pair.m || a.level() != pair.n || pair.q_columns.size() != a.dimension()) {
    throw DomainError("projection pair for " + detail::level_tag(pair.m, pair.n) + " does not fit a matrix at " +
                      detail::level_tag(a.m(), a.level()));
  }
  std::vector<SparseRow> rows(pair.p_columns.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const StateIndex source = pair.p_columns[i];
    if (source >= a.dimension()) throw DomainError("P selects column " + std::to_string(source) + " outside A");
    for (const auto& [col, p] : a.row(source)) rows[i].emplace_back(pair.q_columns[col], p);
  }
  return TransitionMatrix(pair.m, pair.n - 1, std::move(rows));
}

struct CellDifference {
  StateIndex row = 0;
  StateIndex col = 0;
  Rational left;
  Rational right;
};

namespace detail {

inline std::optional<CellDifference> first_row_difference(StateIndex i, const SparseRow& a, const SparseRow& b) {
  std::size_t p = 0, q = 0;
  while (p < a.size() || q < b.size()) {
    const StateIndex ca = p < a.size() ? a[p].first : UINT64_MAX;
    const StateIndex cb = q < b.size() ? b[q].first : UINT64_MAX;
    if (ca == cb) {
      if (a[p].second != b[q].second) return CellDifference{i, ca, a[p].second, b[q].second};
      ++p;
      ++q;
    } else if (ca < cb) {
      return CellDifference{i, ca, a[p].second, Rational(0)};
    } else {
      return CellDifference{i, cb, Rational(0), b[q].second};
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// First cell, in row-major order, where two same-shaped matrices differ.
inline std::optional<CellDifference> first_difference(const TransitionMatrix& a, const TransitionMatrix& b) {
  if (a.m() != b.m() || a.level() != b.level()) {
    throw DomainError("cannot compare matrices at " + detail::level_tag(a.m(), a.level()) + " and " +
                      detail::level_tag(b.m(), b.level()));
  }
  for (StateIndex i = 0; i < a.dimension(); ++i) {
    if (auto d = detail::first_row_difference(i, a.row(i), b.row(i))) return d;
  }
  return std::nullopt;
}

struct ConsistencyReport {
  bool pass = true;
  std::size_t pairs_checked = 0;
  /// Set on failure: the offending (r, i_r) and cell; `left` is P A Q, `right` the reference.
  std::optional<std::size_t> r;
  std::optional<int> fixed_value;
  std::optional<CellDifference> cell;
};

/// Checks P A^(n) Q = A^(n-1) for every (r, i_r).
inline ConsistencyReport check_consistency(const TransitionMatrix& upper, const TransitionMatrix& lower) {
  if (upper.level() < 2 || lower.level() + 1 != upper.level() || upper.m() != lower.m()) {
    throw DomainError("consistency check needs matrices at consecutive levels n >= 2");
  }
  ConsistencyReport report;
  for (std::size_t r = 1; r <= upper.level(); ++r) {
    for (int v = 1; v <= upper.m(); ++v) {
      ++report.pairs_checked;
      const TransitionMatrix projected = project_matrix(upper, projection_matrices(upper.m(), upper.level(), r, v));
      if (auto d = first_difference(projected, lower)) {
        report.pass = false;
        report.r = r;
        report.fixed_value = v;
        report.cell = std::move(d);
        return report;
      }
    }
  }
  return report;
}

/// Hand-supplied matrix without a reference: all projections must agree with
/// the standard one (r = i_r = 1).
inline ConsistencyReport check_consistency(const TransitionMatrix& upper) {
  if (upper.level() < 2) throw DomainError("consistency check needs n >= 2");
  return check_consistency(upper, project_matrix(upper, projection_matrices(upper.m(), upper.level(), 1, 1)));
}

inline ConsistencyReport check_consistency(const MapDistribution& nu, std::size_t n, const LiftOptions& options = {}) {
  if (n < 2) throw DomainError("consistency check needs n >= 2, got n=" + std::to_string(n));
  return check_consistency(lift_transition_matrix(nu, n, options), lift_transition_matrix(nu, n - 1, options));
}

/// p_{source, target}: mass of the maps sending source_j to target_j for all j.
inline Rational kpoint_probability(const MapDistribution& nu, const PointTuple& source, const PointTuple& target) {
  if (source.level() != target.level()) {
    throw DomainError("source has level " + std::to_string(source.level()) + " but target has level " +
                      std::to_string(target.level()));
  }
  detail::check_states(nu.m, source.values, "source");
  detail::check_states(nu.m, target.values, "target");
  Rational total = 0;
  for (const Atom& a : nu.atoms) {
    bool hit = true;
    for (std::size_t j = 0; j < source.level() && hit; ++j) hit = a.map(source[j]) == target[j];
    if (hit) total += a.weight;
  }
  return total;
}

/// Smallest level n <= n_max at which the two n-point chains differ.
inline std::optional<std::size_t> first_characteristic_divergence(const MapDistribution& a_in,
                                                                  const MapDistribution& b_in, std::size_t n_max) {
  if (a_in.m != b_in.m) {
    throw DomainError("flows act on different spaces (m=" + std::to_string(a_in.m) + " vs m=" + std::to_string(b_in.m) + ")");
  }
  if (n_max > static_cast<std::size_t>(a_in.m)) {
    throw DomainError("n_max=" + std::to_string(n_max) + " exceeds m=" + std::to_string(a_in.m));
  }
  const MapDistribution a = validate_distribution(a_in);
  const MapDistribution b = validate_distribution(b_in);
  for (std::size_t n = 1; n <= n_max; ++n) {
    const StateIndex dim = FiniteSpace(a.m).tuple_count(n);
    for (StateIndex i = 0; i < dim; ++i) {
      if (detail::first_row_difference(i, lift_row(a, n, i), lift_row(b, n, i))) return n;
    }
  }
  return std::nullopt;
}

}  // namespace nflow
