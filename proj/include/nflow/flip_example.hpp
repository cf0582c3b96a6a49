#pragma once

// The flip-group flow: M = {1..m}, m even, split into blocks (1,2),(3,4),...;
// G flips any subset of blocks, H only subsets of even size. nu^eps puts
// (1-eps)/|H| on each element of H and eps/|G\H| on each element of G\H.
// For m = 6 this is the classical eight-map example; other even m are a
// straightforward generalization.

#include <algorithm>
#include <bit>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "nflow/invariant.hpp"

namespace nflow {

struct FlipGroupSpec {
  int m = 4;
  /// 1-based blocks (1,2), (3,4), ...
  std::vector<std::pair<int, int>> blocks;
  /// All 2^(m/2) flip maps, ordered by the bitmask of flipped blocks.
  std::vector<MapTable> group;
  /// Even-size flip subsets, same order.
  std::vector<MapTable> subgroup;
  /// group minus subgroup, same order.
  std::vector<MapTable> coset;
};

/// Bit b of `mask` flips block b (the pair 2b+1, 2b+2).
inline MapTable flip_map(int m, unsigned mask) {
  if (m < 2 || m % 2 != 0) throw DomainError("flip maps need an even m, got m=" + std::to_string(m));
  std::vector<int> images(static_cast<std::size_t>(m));
  for (int b = 0; b < m / 2; ++b) {
    const bool flip = (mask >> b) & 1u;
    images[static_cast<std::size_t>(2 * b)] = flip ? 2 * b + 2 : 2 * b + 1;
    images[static_cast<std::size_t>(2 * b + 1)] = flip ? 2 * b + 1 : 2 * b + 2;
  }
  return MapTable(std::move(images));
}

inline FlipGroupSpec flip_group(int m) {
  if (m < 4 || m % 2 != 0) throw DomainError("flip group needs an even m >= 4, got m=" + std::to_string(m));
  if (m > 40) throw ResourceError("flip group with m=" + std::to_string(m) + " has too many elements");
  FlipGroupSpec spec;
  spec.m = m;
  for (int b = 0; b < m / 2; ++b) spec.blocks.emplace_back(2 * b + 1, 2 * b + 2);
  for (unsigned mask = 0; mask < (1u << (m / 2)); ++mask) {
    MapTable f = flip_map(m, mask);
    (std::popcount(mask) % 2 == 0 ? spec.subgroup : spec.coset).push_back(f);
    spec.group.push_back(std::move(f));
  }
  return spec;
}

inline MapDistribution example_distribution(int m, const Rational& epsilon) {
  if (epsilon < 0 || epsilon > 1) throw DomainError("epsilon=" + to_string(epsilon) + " outside [0, 1]");
  const FlipGroupSpec spec = flip_group(m);
  MapDistribution nu{m, MapMode::bijections_only, {}};
  const Rational on_h = (1 - epsilon) / static_cast<long>(spec.subgroup.size());
  const Rational off_h = epsilon / static_cast<long>(spec.coset.size());
  for (const MapTable& f : spec.subgroup) nu.atoms.push_back({f, on_h});
  for (const MapTable& f : spec.coset) nu.atoms.push_back({f, off_h});
  return validate_distribution(nu);
}

/// The m = 6 perturbation written term by term as a signed sum of Diracs:
/// 1/4 sum_H delta + eps/4 (sum_{G\H} delta - sum_H delta).
inline MapDistribution literal_perturbed_distribution(const Rational& epsilon) {
  const FlipGroupSpec spec = flip_group(6);
  MapDistribution nu{6, MapMode::bijections_only, {}};
  for (const MapTable& f : spec.subgroup) nu.atoms.push_back({f, Rational(1, 4)});
  for (const MapTable& f : spec.coset) nu.atoms.push_back({f, epsilon / 4});
  for (const MapTable& f : spec.subgroup) nu.atoms.push_back({f, -epsilon / 4});
  // Merge the signed terms before validation so only net weights are checked.
  std::sort(nu.atoms.begin(), nu.atoms.end(), [](const Atom& a, const Atom& b) { return a.map < b.map; });
  std::vector<Atom> net;
  for (Atom& a : nu.atoms) {
    if (!net.empty() && net.back().map == a.map) {
      net.back().weight += a.weight;
    } else {
      net.push_back(std::move(a));
    }
  }
  nu.atoms = std::move(net);
  return validate_distribution(nu);
}

/// True iff nu_i = nu_a + (eps_i - eps_a)/(eps_b - eps_a) (nu_b - nu_a) for all
/// samples, with a, b the first two samples of distinct parameter.
inline bool is_affine_family(const std::vector<std::pair<Rational, MapDistribution>>& samples) {
  if (samples.size() < 3) return true;
  auto weight_of = [](const MapDistribution& nu, const MapTable& f) {
    for (const Atom& a : nu.atoms) {
      if (a.map == f) return a.weight;
    }
    return Rational(0);
  };
  const auto& [ea, nua] = samples.front();
  std::optional<std::size_t> second;
  for (std::size_t i = 1; i < samples.size() && !second; ++i) {
    if (samples[i].first != ea) second = i;
  }
  if (!second) return true;
  const auto& [eb, nub] = samples[*second];
  std::vector<MapTable> maps;
  for (const auto& s : samples) {
    for (const Atom& a : s.second.atoms) maps.push_back(a.map);
  }
  for (const auto& [e, nu] : samples) {
    const Rational t = (e - ea) / (eb - ea);
    for (const MapTable& f : maps) {
      if (weight_of(nu, f) != weight_of(nua, f) + t * (weight_of(nub, f) - weight_of(nua, f))) return false;
    }
  }
  return true;
}

/// First cell of lift(nu^1, k) - lift(nu^0, k), i.e. the eps-coefficient of
/// the affine map eps -> lift(nu^eps, k); nullopt when it vanishes.
inline std::optional<CellDifference> epsilon_coefficient_cell(int m, std::size_t k) {
  return first_difference(lift_transition_matrix(example_distribution(m, 1), k),
                          lift_transition_matrix(example_distribution(m, 0), k));
}

struct ExampleGridPoint {
  Rational epsilon;
  /// Levels 1 .. m/2 - 1; for m = 6 these are the one- and two-point chains.
  bool low_levels_match_unperturbed = false;
  /// Level m/2. Unset for eps = 0, where the comparison is vacuous.
  std::optional<bool> divergence_level_differs;
  std::size_t top_support_size = 0;
  bool top_support_size_ok = false;
};

struct ExampleReport {
  int m = 6;
  std::vector<ExampleGridPoint> points;
  std::size_t divergence_level = 3;
  bool low_levels_constant = true;
  bool divergence_level_differs = true;
  bool support_sizes_ok = true;

  bool pass() const noexcept { return low_levels_constant && divergence_level_differs && support_sizes_ok; }
};

/// For each eps: lift(nu^eps, k) == lift(nu^0, k) for k < m/2; lift(nu^eps, m/2)
/// differs for eps > 0; the seeded level-m support from (1..m) has |H| points
/// at eps = 0 and |G| points otherwise. A tuple sees the parity of the flip
/// only once it has a coordinate in every block.
inline ExampleReport verify_example(const std::vector<Rational>& grid, int m = 6) {
  const FlipGroupSpec spec = flip_group(m);
  const MapDistribution base = example_distribution(m, 0);
  const std::size_t top = static_cast<std::size_t>(m / 2);
  std::vector<TransitionMatrix> base_lifts;
  for (std::size_t k = 1; k <= top; ++k) base_lifts.push_back(lift_transition_matrix(base, k));
  PointTuple seed{std::vector<int>(static_cast<std::size_t>(m))};
  std::iota(seed.values.begin(), seed.values.end(), 1);

  ExampleReport report;
  report.m = m;
  report.divergence_level = top;
  for (const Rational& eps : grid) {
    const MapDistribution nu = example_distribution(m, eps);
    ExampleGridPoint point;
    point.epsilon = eps;
    point.low_levels_match_unperturbed = true;
    for (std::size_t k = 1; k < top; ++k) {
      point.low_levels_match_unperturbed = point.low_levels_match_unperturbed && lift_transition_matrix(nu, k) == base_lifts[k - 1];
    }
    if (eps > 0) point.divergence_level_differs = lift_transition_matrix(nu, top) != base_lifts.back();
    point.top_support_size = seeded_invariant_measure(nu, seed).masses.size();
    point.top_support_size_ok = point.top_support_size == (eps == 0 ? spec.subgroup.size() : spec.group.size());
    report.low_levels_constant = report.low_levels_constant && point.low_levels_match_unperturbed;
    report.divergence_level_differs = report.divergence_level_differs && point.divergence_level_differs.value_or(true);
    report.support_sizes_ok = report.support_sizes_ok && point.top_support_size_ok;
    report.points.push_back(std::move(point));
  }
  return report;
}

}  // namespace nflow
