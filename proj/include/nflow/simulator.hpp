#pragma once

// Monte Carlo for random-map flows: the discrete composition walk
// R_n = xi_n o ... o xi_1, its Poisson-clock version Y_t = R_{pi_t}, the 0/1
// linear embedding K(f), and empirical n-point transition estimates.
//
// Randomness comes from CounterRng: output i of stream s under seed S is
// splitmix64(key + (i+1) * 0x9E3779B97F4A7C15) with
// key = splitmix64(S ^ splitmix64(s)). Jump times use stream 0, map draws
// stream 1, and the empirical estimator gives source row x stream 2 + x.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nflow/invariant.hpp"

namespace nflow {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_(splitmix64(seed ^ splitmix64(stream))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    ++counter_;
    return splitmix64(key_ + counter_ * 0x9E3779B97F4A7C15ull);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Inverse-CDF sampler over the canonical (index-sorted) atom order.
class AtomSampler {
 public:
  explicit AtomSampler(const MapDistribution& nu) : nu_(validate_distribution(nu)) {
    Rational partial = 0;
    for (const Atom& a : nu_.atoms) {
      partial += a.weight;
      cumulative_.push_back(partial.convert_to<double>());
    }
    cumulative_.back() = 1.0;
  }

  const MapTable& draw(CounterRng& rng) const {
    const double u = rng.uniform();
    std::size_t i = 0;
    while (u >= cumulative_[i]) ++i;
    return nu_.atoms[i].map;
  }

  const MapDistribution& distribution() const noexcept { return nu_; }

 private:
  MapDistribution nu_;
  std::vector<double> cumulative_;
};

/// R_1, ..., R_steps with R_n = xi_n o R_{n-1}, R_0 = identity.
inline std::vector<MapTable> sample_discrete_walk(const MapDistribution& nu, std::size_t steps, std::uint64_t seed) {
  const AtomSampler sampler(nu);
  CounterRng rng(seed, 1);
  std::vector<MapTable> out;
  out.reserve(steps);
  MapTable current = MapTable::identity(nu.m);
  for (std::size_t i = 0; i < steps; ++i) {
    current = compose(sampler.draw(rng), current);
    out.push_back(current);
  }
  return out;
}

/// Jump times of a rate-`rate` Poisson process on [0, horizon].
inline std::vector<double> poisson_subordinate(double rate, double horizon, std::uint64_t seed) {
  if (!(rate > 0) || !std::isfinite(rate)) throw DomainError("Poisson rate must be positive and finite");
  if (!(horizon >= 0) || !std::isfinite(horizon)) throw DomainError("horizon must be nonnegative and finite");
  CounterRng rng(seed, 0);
  std::vector<double> times;
  double t = 0;
  for (;;) {
    t += -std::log1p(-rng.uniform()) / rate;
    if (t > horizon) break;
    times.push_back(t);
  }
  return times;
}

/// Square 0/1 matrix, row-major.
using IntMatrix = std::vector<std::vector<int>>;

/// K(f): column j is e_{f(j)}.
inline IntMatrix embed_linear(const MapTable& f) {
  IntMatrix k(static_cast<std::size_t>(f.m()), std::vector<int>(static_cast<std::size_t>(f.m()), 0));
  for (int j = 1; j <= f.m(); ++j) k[static_cast<std::size_t>(f(j) - 1)][static_cast<std::size_t>(j - 1)] = 1;
  return k;
}

inline IntMatrix multiply(const IntMatrix& a, const IntMatrix& b) {
  const std::size_t n = a.size();
  IntMatrix c(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (a[i][k] == 0) continue;
      for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
    }
  }
  return c;
}

inline IntMatrix transpose(const IntMatrix& a) {
  IntMatrix t(a.size(), std::vector<int>(a.size(), 0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) t[j][i] = a[i][j];
  }
  return t;
}

/// K^T K == I.
inline bool is_orthogonal(const IntMatrix& k) {
  const IntMatrix g = multiply(transpose(k), k);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (g[i][j] != (i == j ? 1 : 0)) return false;
    }
  }
  return true;
}

struct TrajectorySample {
  std::uint64_t seed = 0;
  double horizon = 0;
  double rate = 1;
  std::vector<double> jump_times;
  /// maps[i] = R_{i+1}, the flow right after jump i.
  std::vector<MapTable> maps;
  /// K(maps[i]) when embedding was requested.
  std::vector<IntMatrix> embedded;

  /// Y_t with the right-continuous convention: identity before the first jump.
  MapTable state_at(double t) const {
    const auto jumps = static_cast<std::size_t>(std::upper_bound(jump_times.begin(), jump_times.end(), t) - jump_times.begin());
    return jumps == 0 ? MapTable::identity(maps.empty() ? 2 : maps.front().m()) : maps[jumps - 1];
  }
};

inline TrajectorySample simulate_flow(const MapDistribution& nu, double rate, double horizon, std::uint64_t seed,
                                      bool embed = false) {
  TrajectorySample s;
  s.seed = seed;
  s.rate = rate;
  s.horizon = horizon;
  s.jump_times = poisson_subordinate(rate, horizon, seed);
  s.maps = sample_discrete_walk(nu, s.jump_times.size(), seed);
  if (embed) {
    for (const MapTable& f : s.maps) s.embedded.push_back(embed_linear(f));
  }
  return s;
}

/// Tuples visited by the n-point path started at `start`, including `start`.
inline std::set<PointTuple> visited_tuples(const TrajectorySample& s, const PointTuple& start) {
  std::set<PointTuple> out{start};
  for (const MapTable& f : s.maps) out.insert(apply_map(f, start));
  return out;
}

struct EmpiricalEstimate {
  int m = 2;
  std::size_t level = 1;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  std::map<std::pair<StateIndex, StateIndex>, std::uint64_t> counts;
  std::map<StateIndex, std::uint64_t> samples;

  double estimate(StateIndex source, StateIndex target) const {
    auto n = samples.find(source);
    auto c = counts.find({source, target});
    if (n == samples.end() || n->second == 0 || c == counts.end()) return 0.0;
    return static_cast<double>(c->second) / static_cast<double>(n->second);
  }

  /// Adds another estimate's counts; order of merging does not matter.
  void merge(const EmpiricalEstimate& other) {
    if (other.m != m || other.level != level) throw DomainError("cannot merge estimates of different chains");
    for (const auto& [key, c] : other.counts) counts[key] += c;
    for (const auto& [key, c] : other.samples) samples[key] += c;
    steps += other.steps;
  }
};

/// `steps` independent one-step transitions from each source tuple index.
inline EmpiricalEstimate empirical_transition_estimate(const MapDistribution& nu, std::size_t n, std::size_t steps,
                                                       std::uint64_t seed, const std::vector<StateIndex>& sources) {
  if (steps < 1) throw DomainError("empirical estimate needs at least one step per row");
  const AtomSampler sampler(nu);
  const FiniteSpace space(nu.m);
  EmpiricalEstimate est{nu.m, n, steps, seed, {}, {}};
  std::vector<int> x(n);
  for (StateIndex source : sources) {
    if (source >= space.tuple_count(n)) throw DomainError("source index " + std::to_string(source) + " out of range");
    detail::decode_digits(nu.m, source, x);
    CounterRng rng(seed, 2 + source);
    for (std::size_t i = 0; i < steps; ++i) {
      const MapTable& f = sampler.draw(rng);
      StateIndex target = 0;
      for (int xi : x) target = target * static_cast<StateIndex>(nu.m) + static_cast<StateIndex>(f(xi) - 1);
      ++est.counts[{source, target}];
    }
    est.samples[source] += steps;
  }
  return est;
}

/// Default source set: the recurrent class reachable from `seed`.
inline EmpiricalEstimate empirical_transition_estimate(const MapDistribution& nu, const PointTuple& seed,
                                                       std::size_t steps, std::uint64_t prng_seed) {
  return empirical_transition_estimate(nu, seed.level(), steps, prng_seed, seeded_invariant_measure(nu, seed).support());
}

/// Largest |estimate - exact| over the sampled rows.
inline double max_cell_error(const EmpiricalEstimate& est, const TransitionMatrix& exact) {
  double worst = 0;
  for (const auto& [source, n] : est.samples) {
    std::set<StateIndex> cols;
    for (const auto& [col, p] : exact.row(source)) cols.insert(col);
    for (auto it = est.counts.lower_bound({source, 0}); it != est.counts.end() && it->first.first == source; ++it) {
      cols.insert(it->first.second);
    }
    for (StateIndex col : cols) {
      worst = std::max(worst, std::abs(est.estimate(source, col) - exact.at(source, col).convert_to<double>()));
    }
  }
  return worst;
}

}  // namespace nflow
