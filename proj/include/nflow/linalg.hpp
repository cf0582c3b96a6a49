#pragma once

// Exact sparse elimination. Rank uses fraction-free integer row reduction
// (rows kept primitive by dividing out their content); null spaces are read
// off the rational reduced row echelon form built from the same pivots.

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

#include "nflow/rational.hpp"

namespace nflow {

using IntRow = std::vector<std::pair<std::size_t, Integer>>;
using SparseVector = std::vector<std::pair<std::size_t, Rational>>;

namespace detail {

/// a*x - b*y on sorted sparse rows.
inline IntRow combine(const Integer& a, const IntRow& x, const Integer& b, const IntRow& y) {
  IntRow out;
  out.reserve(x.size() + y.size());
  std::size_t i = 0, j = 0;
  while (i < x.size() || j < y.size()) {
    if (j == y.size() || (i < x.size() && x[i].first < y[j].first)) {
      out.emplace_back(x[i].first, a * x[i].second);
      ++i;
    } else if (i == x.size() || y[j].first < x[i].first) {
      out.emplace_back(y[j].first, -(b * y[j].second));
      ++j;
    } else {
      Integer v = a * x[i].second - b * y[j].second;
      if (v != 0) out.emplace_back(x[i].first, std::move(v));
      ++i;
      ++j;
    }
  }
  return out;
}

inline void make_primitive(IntRow& row) {
  if (row.empty()) return;
  Integer g = 0;
  for (const auto& [c, v] : row) {
    g = boost::multiprecision::gcd(g, v);
    if (g == 1) break;
  }
  if (row.front().second < 0) g = -g;
  if (g != 1) {
    for (auto& [c, v] : row) v /= g;
  }
}

}  // namespace detail

/// Incrementally maintained row echelon form; pivot = first nonzero column.
class EchelonForm {
 public:
  /// Reduces `row` against the stored pivots; keeps it if it is independent.
  bool insert(IntRow row) {
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::erase_if(row, [](const auto& c) { return c.second == 0; });
    while (!row.empty()) {
      auto it = pivots_.find(row.front().first);
      if (it == pivots_.end()) {
        detail::make_primitive(row);
        const std::size_t col = row.front().first;
        pivots_.emplace(col, std::move(row));
        return true;
      }
      const IntRow& pivot = it->second;
      row = detail::combine(pivot.front().second, row, row.front().second, pivot);
      detail::make_primitive(row);
    }
    return false;
  }

  std::size_t rank() const noexcept { return pivots_.size(); }
  const std::map<std::size_t, IntRow>& pivots() const noexcept { return pivots_; }

  /// Basis of {x : A x = 0} over `columns` unknowns, one vector per free column
  /// (free column set to 1), in increasing free-column order.
  std::vector<SparseVector> nullspace(std::size_t columns) const {
    // Reduced rows over the rationals, processed right to left so every
    // referenced pivot row is already fully reduced.
    std::map<std::size_t, std::map<std::size_t, Rational>> reduced;
    for (auto it = pivots_.rbegin(); it != pivots_.rend(); ++it) {
      const Rational lead(it->second.front().second);
      std::map<std::size_t, Rational> r;
      for (const auto& [c, v] : it->second) r[c] = Rational(v) / lead;
      for (auto& [pc, prow] : reduced) {
        auto hit = r.find(pc);
        if (hit == r.end()) continue;
        const Rational factor = hit->second;
        for (const auto& [c, v] : prow) {
          Rational& cell = r[c];
          cell -= factor * v;
          if (cell == 0) r.erase(c);
        }
      }
      reduced.emplace(it->first, std::move(r));
    }
    std::vector<SparseVector> basis;
    for (std::size_t free = 0; free < columns; ++free) {
      if (pivots_.count(free)) continue;
      SparseVector v;
      for (const auto& [pc, prow] : reduced) {
        auto hit = prow.find(free);
        if (hit != prow.end()) v.emplace_back(pc, -hit->second);
      }
      v.emplace_back(free, Rational(1));
      std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      basis.push_back(std::move(v));
    }
    return basis;
  }

 private:
  std::map<std::size_t, IntRow> pivots_;
};

/// Scales a rational vector to a primitive integer row with the same span.
inline IntRow to_integer_row(const SparseVector& v) {
  Integer scale = 1;
  for (const auto& [c, q] : v) scale = boost::multiprecision::lcm(scale, denominator_of(q));
  IntRow row;
  for (const auto& [c, q] : v) {
    if (q != 0) row.emplace_back(c, numerator_of(q) * (scale / denominator_of(q)));
  }
  return row;
}

inline std::size_t rank_of(const std::vector<SparseVector>& vectors) {
  EchelonForm form;
  for (const auto& v : vectors) form.insert(to_integer_row(v));
  return form.rank();
}

}  // namespace nflow
