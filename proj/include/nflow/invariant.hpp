#pragma once

// Invariant measures of n-point chains: recurrent classes, exact stationary
// vectors, marginal projections down to level 1, and detection of the level
// at which the invariant supports of two flows stop agreeing.

#include <algorithm>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nflow/npoint_chain.hpp"

namespace nflow {

struct InvariantMeasure {
  int m = 2;
  std::size_t level = 1;
  /// (tuple index, mass) sorted by index; masses strictly positive.
  std::vector<std::pair<StateIndex, Rational>> masses;
  /// Smallest tuple index of the recurrent class carrying the measure.
  StateIndex class_id = 0;

  std::vector<StateIndex> support() const {
    std::vector<StateIndex> s;
    s.reserve(masses.size());
    for (const auto& [i, p] : masses) s.push_back(i);
    return s;
  }

  Rational mass_at(StateIndex i) const {
    auto it = std::lower_bound(masses.begin(), masses.end(), i, [](const auto& c, StateIndex k) { return c.first < k; });
    return (it != masses.end() && it->first == i) ? it->second : Rational(0);
  }

  Rational total() const {
    Rational t = 0;
    for (const auto& [i, p] : masses) t += p;
    return t;
  }

  friend bool operator==(const InvariantMeasure&, const InvariantMeasure&) = default;
};

namespace detail {

/// Strongly connected components with no arc leaving them (iterative Tarjan).
/// Components come back sorted internally and ordered by smallest member.
inline std::vector<std::vector<std::uint32_t>> closed_components(const std::vector<std::vector<std::uint32_t>>& adj) {
  const std::uint32_t n = static_cast<std::uint32_t>(adj.size());
  constexpr std::uint32_t unvisited = UINT32_MAX;
  std::vector<std::uint32_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
  std::vector<bool> on_stack(n, false);
  std::vector<std::uint32_t> stack;
  std::vector<std::vector<std::uint32_t>> comps;
  std::uint32_t counter = 0;
  std::vector<std::pair<std::uint32_t, std::size_t>> frames;

  for (std::uint32_t root = 0; root < n; ++root) {
    if (index[root] != unvisited) continue;
    frames.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& [v, next] = frames.back();
      if (next < adj[v].size()) {
        const std::uint32_t w = adj[v][next++];
        if (index[w] == unvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const std::uint32_t done = v;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().first] = std::min(low[frames.back().first], low[done]);
      if (low[done] == index[done]) {
        std::vector<std::uint32_t> c;
        std::uint32_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = static_cast<std::uint32_t>(comps.size());
          c.push_back(w);
        } while (w != done);
        comps.push_back(std::move(c));
      }
    }
  }

  std::vector<std::vector<std::uint32_t>> closed;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    bool leaves = false;
    for (std::uint32_t v : comps[c]) {
      for (std::uint32_t w : adj[v]) leaves = leaves || comp[w] != c;
    }
    if (!leaves) {
      std::sort(comps[c].begin(), comps[c].end());
      closed.push_back(std::move(comps[c]));
    }
  }
  return closed;
}

/// Solves mu A = mu, sum mu = 1 on a closed class by dense exact elimination.
/// `row_of(s)` returns the sparse row of state s; columns outside the class
/// must carry zero mass.
inline std::vector<Rational> solve_stationary(const std::vector<StateIndex>& states,
                                              const std::function<SparseRow(StateIndex)>& row_of) {
  const std::size_t c = states.size();
  auto local = [&](StateIndex s) -> std::size_t {
    auto it = std::lower_bound(states.begin(), states.end(), s);
    if (it == states.end() || *it != s) throw InternalError("transition leaves the recurrent class");
    return static_cast<std::size_t>(it - states.begin());
  };
  // Unknown mu_s; equation t: sum_s mu_s A[s][t] - mu_t = 0. Equation 0 is
  // replaced by normalization (the balance equations have rank c - 1).
  std::vector<std::vector<Rational>> sys(c, std::vector<Rational>(c + 1, Rational(0)));
  for (std::size_t s = 0; s < c; ++s) {
    for (const auto& [col, p] : row_of(states[s])) sys[local(col)][s] += p;
    sys[s][s] -= 1;
  }
  for (std::size_t s = 0; s <= c; ++s) sys[0][s] = 1;

  for (std::size_t col = 0; col < c; ++col) {
    std::size_t piv = col;
    while (piv < c && sys[piv][col] == 0) ++piv;
    if (piv == c) throw InternalError("stationary system is singular; the state set is not a recurrent class");
    std::swap(sys[piv], sys[col]);
    const Rational inv = 1 / sys[col][col];
    for (std::size_t k = col; k <= c; ++k) sys[col][k] *= inv;
    for (std::size_t r = 0; r < c; ++r) {
      if (r == col || sys[r][col] == 0) continue;
      const Rational factor = sys[r][col];
      for (std::size_t k = col; k <= c; ++k) {
        if (sys[col][k] != 0) sys[r][k] -= factor * sys[col][k];
      }
    }
  }
  std::vector<Rational> mu(c);
  for (std::size_t s = 0; s < c; ++s) mu[s] = sys[s][c];
  return mu;
}

inline InvariantMeasure make_measure(int m, std::size_t level, const std::vector<StateIndex>& states,
                                     const std::function<SparseRow(StateIndex)>& row_of) {
  const std::vector<Rational> mu = solve_stationary(states, row_of);
  InvariantMeasure out{m, level, {}, states.front()};
  for (std::size_t s = 0; s < states.size(); ++s) {
    if (mu[s] <= 0) throw InternalError("stationary vector is not positive on its class");
    out.masses.emplace_back(states[s], mu[s]);
  }
  return out;
}

}  // namespace detail

/// Closed strongly connected components of the transition digraph, each sorted,
/// ordered by smallest member.
inline std::vector<std::vector<StateIndex>> recurrent_classes(const TransitionMatrix& a) {
  if (a.dimension() > UINT32_MAX) throw ResourceError("matrix too large for class discovery");
  std::vector<std::vector<std::uint32_t>> adj(a.dimension());
  for (StateIndex i = 0; i < a.dimension(); ++i) {
    for (const auto& [col, p] : a.row(i)) adj[i].push_back(static_cast<std::uint32_t>(col));
  }
  std::vector<std::vector<StateIndex>> out;
  for (const auto& c : detail::closed_components(adj)) out.emplace_back(c.begin(), c.end());
  return out;
}

inline InvariantMeasure stationary_distribution(const TransitionMatrix& a, std::vector<StateIndex> recurrent_class) {
  if (recurrent_class.empty()) throw DomainError("empty recurrent class");
  std::sort(recurrent_class.begin(), recurrent_class.end());
  return detail::make_measure(a.m(), a.level(), recurrent_class, [&](StateIndex s) { return a.row(s); });
}

struct SeedOptions {
  /// Cap on the number of tuples explored from the seed.
  StateIndex max_states = 10'000'000;
};

/// Stationary measure of the unique recurrent class reachable from `seed`.
inline InvariantMeasure seeded_invariant_measure(const MapDistribution& nu_in, const PointTuple& seed,
                                                 const SeedOptions& options = {}) {
  const MapDistribution nu = validate_distribution(nu_in);
  const FiniteSpace space(nu.m);
  const std::size_t n = seed.level();
  if (n < 1) throw DomainError("seed tuple must be non-empty");
  const StateIndex start = encode_tuple(space, seed);

  std::unordered_map<StateIndex, std::uint32_t> local;
  std::vector<StateIndex> states{start};
  std::vector<std::vector<std::uint32_t>> adj;
  local.emplace(start, 0);
  for (std::size_t head = 0; head < states.size(); ++head) {
    adj.emplace_back();
    for (const auto& [col, p] : lift_row(nu, n, states[head])) {
      auto [it, fresh] = local.emplace(col, static_cast<std::uint32_t>(states.size()));
      if (fresh) {
        if (states.size() >= options.max_states) {
          throw ResourceError("orbit of seed " + to_string(seed) + " exceeds " + std::to_string(options.max_states) + " tuples");
        }
        states.push_back(col);
      }
      adj[head].push_back(it->second);
    }
  }

  std::vector<std::vector<StateIndex>> classes;
  for (const auto& c : detail::closed_components(adj)) {
    std::vector<StateIndex> global;
    for (std::uint32_t v : c) global.push_back(states[v]);
    std::sort(global.begin(), global.end());
    classes.push_back(std::move(global));
  }
  std::sort(classes.begin(), classes.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
  if (classes.size() != 1) {
    std::string what = std::to_string(classes.size()) + " recurrent classes reachable from seed " + to_string(seed) + ":";
    for (const auto& c : classes) what += " {" + std::to_string(c.size()) + " tuples, min index " + std::to_string(c.front()) + "}";
    throw AmbiguityError(what, classes);
  }
  return detail::make_measure(nu.m, n, classes.front(), [&](StateIndex s) { return lift_row(nu, n, s); });
}

/// Push-forward under deletion of coordinate r (1-based).
inline InvariantMeasure project_measure(const InvariantMeasure& v, std::size_t r = 1) {
  if (v.level < 2) throw DomainError("cannot project a level-1 measure");
  if (r < 1 || r > v.level) throw DomainError("deleted coordinate r=" + std::to_string(r) + " outside [1, " + std::to_string(v.level) + "]");
  const ProjectionPair pair = projection_matrices(v.m, v.level, r, 1);
  std::vector<std::pair<StateIndex, Rational>> cells;
  for (const auto& [i, p] : v.masses) cells.emplace_back(pair.q_columns.at(i), p);
  detail::sort_and_merge(cells);
  InvariantMeasure out{v.m, v.level - 1, std::move(cells), 0};
  out.class_id = out.masses.empty() ? 0 : out.masses.front().first;
  return out;
}

/// Levels n, n-1, ..., 1. `deletions[i]` picks the coordinate removed at step
/// i; missing entries default to r = 1.
inline std::vector<InvariantMeasure> projection_cascade(const InvariantMeasure& v,
                                                        const std::vector<std::size_t>& deletions = {}) {
  std::vector<InvariantMeasure> out{v};
  for (std::size_t step = 0; out.back().level > 1; ++step) {
    out.push_back(project_measure(out.back(), step < deletions.size() ? deletions[step] : 1));
  }
  return out;
}

/// First tuple where mu A differs from mu, if any.
inline std::optional<CellDifference> stationarity_defect(const InvariantMeasure& mu, const MapDistribution& nu_in) {
  const MapDistribution nu = validate_distribution(nu_in);
  if (nu.m != mu.m) throw DomainError("measure and flow act on different spaces");
  SparseRow image;
  for (const auto& [i, p] : mu.masses) {
    for (auto& [col, q] : lift_row(nu, mu.level, i)) image.emplace_back(col, p * q);
  }
  detail::sort_and_merge(image);
  SparseRow own(mu.masses.begin(), mu.masses.end());
  if (auto d = detail::first_row_difference(0, image, own)) {
    d->row = d->col;
    return d;
  }
  return std::nullopt;
}

struct ProjectionInvarianceReport {
  bool source_stationary = false;
  bool pass = false;
  InvariantMeasure projected;
  /// Tuple (level n-1 index) where the projected measure fails stationarity.
  std::optional<CellDifference> defect;
};

/// Checks that (p_r)_* mu is stationary for the (n-1)-point chain of nu.
inline ProjectionInvarianceReport check_projection_invariance(const InvariantMeasure& mu, const MapDistribution& nu,
                                                              std::size_t r) {
  ProjectionInvarianceReport report;
  report.source_stationary = !stationarity_defect(mu, nu).has_value();
  report.projected = project_measure(mu, r);
  report.defect = stationarity_defect(report.projected, nu);
  report.pass = !report.defect.has_value();
  return report;
}

struct SupportProfile {
  std::size_t level = 1;
  std::size_t cardinality = 0;
  std::vector<PointTuple> tuples;

  friend bool operator==(const SupportProfile&, const SupportProfile&) = default;
};

inline SupportProfile support_profile(const InvariantMeasure& v) {
  SupportProfile s{v.level, v.masses.size(), {}};
  const FiniteSpace space(v.m);
  for (const auto& [i, p] : v.masses) s.tuples.push_back(decode_tuple(space, v.level, i));
  return s;
}

/// Finite discrete supports are homeomorphic iff they have the same size.
inline bool supports_homeomorphic(const SupportProfile& a, const SupportProfile& b) {
  if (a.level != b.level) {
    throw DomainError("support levels differ (" + std::to_string(a.level) + " vs " + std::to_string(b.level) + ")");
  }
  return a.cardinality == b.cardinality;
}

struct LevelComparison {
  std::size_t level = 1;
  SupportProfile support_a;
  SupportProfile support_b;
  bool equal = false;
  bool homeomorphic = false;
};

struct BifurcationReport {
  PointTuple seed;
  std::vector<InvariantMeasure> cascade_a;
  std::vector<InvariantMeasure> cascade_b;
  /// From the top level down to level 1.
  std::vector<LevelComparison> levels;
  std::optional<std::size_t> detected_level;
  std::optional<std::size_t> characteristic_level;
};

/// Runs both seeded cascades and locates the boundary level: supports differ
/// there and agree at every lower level.
inline BifurcationReport detect_bifurcation_level(const MapDistribution& a, const MapDistribution& b,
                                                  const PointTuple& seed, const SeedOptions& options = {}) {
  if (a.m != b.m) {
    throw DomainError("flows act on different spaces (m=" + std::to_string(a.m) + " vs m=" + std::to_string(b.m) + ")");
  }
  if (seed.level() > static_cast<std::size_t>(a.m)) {
    throw DomainError("seed level " + std::to_string(seed.level()) + " exceeds m=" + std::to_string(a.m));
  }
  BifurcationReport report;
  report.seed = seed;
  report.cascade_a = projection_cascade(seeded_invariant_measure(a, seed, options));
  report.cascade_b = projection_cascade(seeded_invariant_measure(b, seed, options));
  for (std::size_t i = 0; i < report.cascade_a.size(); ++i) {
    LevelComparison cmp;
    cmp.level = report.cascade_a[i].level;
    cmp.support_a = support_profile(report.cascade_a[i]);
    cmp.support_b = support_profile(report.cascade_b[i]);
    cmp.equal = cmp.support_a.tuples == cmp.support_b.tuples;
    cmp.homeomorphic = supports_homeomorphic(cmp.support_a, cmp.support_b);
    report.levels.push_back(std::move(cmp));
  }
  // levels[] runs top-down; walk up from level 1 while supports agree.
  std::size_t agreeing = 0;
  for (auto it = report.levels.rbegin(); it != report.levels.rend() && it->equal; ++it) ++agreeing;
  if (agreeing < report.levels.size()) report.detected_level = agreeing + 1;
  report.characteristic_level = first_characteristic_divergence(a, b, seed.level());
  return report;
}

}  // namespace nflow
