#pragma once

// Birkhoff-von Neumann decomposition of an exact doubly stochastic matrix.

#include <string>
#include <vector>

#include "nflow/core.hpp"

namespace nflow {

using DenseMatrix = std::vector<std::vector<Rational>>;

struct BirkhoffAtom {
  /// Permutation f; its matrix has a 1 at (i, f(i)).
  MapTable permutation;
  Rational weight;
};

/// Row i, column j holds 1 iff f(i+1) = j+1.
inline DenseMatrix permutation_matrix(const MapTable& f) {
  DenseMatrix p(static_cast<std::size_t>(f.m()), std::vector<Rational>(static_cast<std::size_t>(f.m()), Rational(0)));
  for (int i = 1; i <= f.m(); ++i) p[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(f(i) - 1)] = 1;
  return p;
}

namespace detail {

inline void check_doubly_stochastic(const DenseMatrix& b) {
  const std::size_t m = b.size();
  if (m < 2) throw InputError("doubly stochastic matrix must be at least 2x2");
  std::vector<Rational> cols(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (b[i].size() != m) throw InputError("matrix is not square (row " + std::to_string(i + 1) + ")");
    Rational row = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (b[i][j] < 0) throw InputError("negative entry at (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
      row += b[i][j];
      cols[j] += b[i][j];
    }
    if (row != 1) throw InputError("row " + std::to_string(i + 1) + " sums to " + to_string(row));
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (cols[j] != 1) throw InputError("column " + std::to_string(j + 1) + " sums to " + to_string(cols[j]));
  }
}

inline bool augment(const DenseMatrix& b, std::size_t row, std::vector<int>& col_owner, std::vector<bool>& seen) {
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (b[row][j] == 0 || seen[j]) continue;
    seen[j] = true;
    if (col_owner[j] < 0 || augment(b, static_cast<std::size_t>(col_owner[j]), col_owner, seen)) {
      col_owner[j] = static_cast<int>(row);
      return true;
    }
  }
  return false;
}

/// Perfect matching on the positive pattern (Kuhn), as row -> column.
inline std::vector<int> perfect_matching(const DenseMatrix& b) {
  const std::size_t m = b.size();
  std::vector<int> col_owner(m, -1);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<bool> seen(m, false);
    if (!augment(b, i, col_owner, seen)) throw InternalError("positive pattern has no perfect matching");
  }
  std::vector<int> row_to_col(m);
  for (std::size_t j = 0; j < m; ++j) row_to_col[static_cast<std::size_t>(col_owner[j])] = static_cast<int>(j);
  return row_to_col;
}

}  // namespace detail

/// Greedy decomposition: peel off matched permutations weighted by their
/// smallest matched entry until nothing is left. Each step moves the remainder
/// onto a proper face of the polytope, so at most (m-1)^2 + 1 atoms come out.
inline std::vector<BirkhoffAtom> birkhoff_decompose(DenseMatrix b) {
  detail::check_doubly_stochastic(b);
  const std::size_t m = b.size();
  std::vector<BirkhoffAtom> atoms;
  Rational remaining = 1;
  while (remaining != 0) {
    const std::vector<int> match = detail::perfect_matching(b);
    Rational w = b[0][static_cast<std::size_t>(match[0])];
    for (std::size_t i = 1; i < m; ++i) w = std::min(w, b[i][static_cast<std::size_t>(match[i])]);
    std::vector<int> images(m);
    for (std::size_t i = 0; i < m; ++i) {
      b[i][static_cast<std::size_t>(match[i])] -= w;
      images[i] = match[i] + 1;
    }
    remaining -= w;
    atoms.push_back({MapTable(std::move(images)), w});
  }
  return atoms;
}

inline DenseMatrix birkhoff_reconstruct(const std::vector<BirkhoffAtom>& atoms, std::size_t m) {
  DenseMatrix out(m, std::vector<Rational>(m, Rational(0)));
  for (const BirkhoffAtom& a : atoms) {
    for (int i = 1; i <= a.permutation.m(); ++i) {
      out[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(a.permutation(i) - 1)] += a.weight;
    }
  }
  return out;
}

}  // namespace nflow
