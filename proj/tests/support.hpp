#pragma once

// Random generators and brute-force oracles shared by the test binaries.
// The oracles deliberately avoid the library's own lifting and elimination code.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "nflow/io.hpp"

namespace nflow::fixtures {

using Rng = std::mt19937_64;

inline MapTable random_map(Rng& rng, int m, bool bijective) {
  std::vector<int> images(static_cast<std::size_t>(m));
  if (bijective) {
    std::iota(images.begin(), images.end(), 1);
    std::shuffle(images.begin(), images.end(), rng);
  } else {
    std::uniform_int_distribution<int> pick(1, m);
    for (int& v : images) v = pick(rng);
  }
  return MapTable(std::move(images));
}

/// Up to max_atoms maps with random integer weights 1..9, normalized.
inline MapDistribution random_distribution(Rng& rng, int m, MapMode mode, int max_atoms = 5) {
  std::uniform_int_distribution<int> count(1, max_atoms), w(1, 9);
  const int atoms = count(rng);
  std::vector<std::pair<MapTable, int>> raw;
  int total = 0;
  for (int i = 0; i < atoms; ++i) {
    raw.emplace_back(random_map(rng, m, mode == MapMode::bijections_only), w(rng));
    total += raw.back().second;
  }
  MapDistribution nu{m, mode, {}};
  for (auto& [f, x] : raw) nu.atoms.push_back({f, Rational(x, total)});
  return validate_distribution(nu);
}

inline PointTuple random_tuple(Rng& rng, int m, std::size_t n) {
  std::uniform_int_distribution<int> pick(1, m);
  PointTuple t;
  for (std::size_t i = 0; i < n; ++i) t.values.push_back(pick(rng));
  return t;
}

inline DenseMatrix random_doubly_stochastic(Rng& rng, int m) {
  const MapDistribution nu = random_distribution(rng, m, MapMode::bijections_only, 7);
  DenseMatrix b(static_cast<std::size_t>(m), std::vector<Rational>(static_cast<std::size_t>(m), Rational(0)));
  for (const Atom& a : nu.atoms) {
    for (int i = 1; i <= m; ++i) b[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(a.map(i) - 1)] += a.weight;
  }
  return b;
}

/// All n-tuples over {1..m} in lexicographic order, built by counting.
inline std::vector<std::vector<int>> all_tuples(int m, std::size_t n) {
  std::vector<std::vector<int>> out;
  std::vector<int> t(n, 1);
  for (;;) {
    out.push_back(t);
    std::size_t j = n;
    while (j > 0 && t[j - 1] == m) t[--j] = 1;
    if (j == 0) break;
    ++t[j - 1];
  }
  return out;
}

/// Dense A^(n) by comparing every (x, y) pair against every atom.
inline DenseMatrix brute_force_lift(const MapDistribution& nu, std::size_t n) {
  const auto tuples = all_tuples(nu.m, n);
  DenseMatrix a(tuples.size(), std::vector<Rational>(tuples.size(), Rational(0)));
  for (std::size_t x = 0; x < tuples.size(); ++x) {
    for (std::size_t y = 0; y < tuples.size(); ++y) {
      for (const Atom& at : nu.atoms) {
        bool hit = true;
        for (std::size_t j = 0; j < n && hit; ++j) hit = at.map(tuples[x][j]) == tuples[y][j];
        if (hit) a[x][y] += at.weight;
      }
    }
  }
  return a;
}

/// Rank over GF(p) of a dense integer matrix; never exceeds the rational rank.
inline std::size_t rank_mod_p(std::vector<std::vector<std::int64_t>> rows, std::int64_t p = 2147483647) {
  auto mulmod = [p](std::int64_t a, std::int64_t b) { return static_cast<std::int64_t>((static_cast<__int128>(a) * b) % p); };
  auto powmod = [&](std::int64_t a, std::int64_t e) {
    std::int64_t r = 1;
    for (; e; e >>= 1, a = mulmod(a, a)) {
      if (e & 1) r = mulmod(r, a);
    }
    return r;
  };
  for (auto& r : rows) {
    for (auto& x : r) x = ((x % p) + p) % p;
  }
  std::size_t rank = 0;
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  for (std::size_t c = 0; c < cols && rank < rows.size(); ++c) {
    std::size_t piv = rank;
    while (piv < rows.size() && rows[piv][c] == 0) ++piv;
    if (piv == rows.size()) continue;
    std::swap(rows[piv], rows[rank]);
    const std::int64_t inv = powmod(rows[rank][c], p - 2);
    for (auto& x : rows[rank]) x = mulmod(x, inv);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r == rank || rows[r][c] == 0) continue;
      const std::int64_t f = rows[r][c];
      for (std::size_t k = c; k < cols; ++k) rows[r][k] = ((rows[r][k] - mulmod(f, rows[rank][k])) % p + p) % p;
    }
    ++rank;
  }
  return rank;
}

inline std::vector<std::vector<std::int64_t>> coefficient_matrix(const ConstraintSystem& sys) {
  std::vector<std::vector<std::int64_t>> out;
  for (const ConstraintRow& row : sys.rows) {
    std::vector<std::int64_t> r(sys.unknown_count(), 0);
    for (auto c : row.columns) r[static_cast<std::size_t>(c)] += 1;
    out.push_back(std::move(r));
  }
  return out;
}

/// mu A^(n) computed densely against the brute-force lift.
inline bool stationary_by_brute_force(const InvariantMeasure& mu, const MapDistribution& nu) {
  const DenseMatrix a = brute_force_lift(nu, mu.level);
  std::vector<Rational> out(a.size(), Rational(0));
  for (const auto& [i, p] : mu.masses) {
    for (std::size_t j = 0; j < a.size(); ++j) out[j] += p * a[i][j];
  }
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (out[j] != mu.mass_at(j)) return false;
  }
  return true;
}

inline MapDistribution flip_example(const Rational& eps) { return example_distribution(6, eps); }

}  // namespace nflow::fixtures
