#pragma once

// Finite state space M = {1..m}, n-tuples of states, self-maps of M and
// finitely supported distributions over those maps.
//
// States are 1-based at every public surface. Tuples and maps share one
// codec: the lexicographic index sum_j (x_j - 1) * m^(n-j).

#include <algorithm>
#include <compare>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "nflow/errors.hpp"
#include "nflow/rational.hpp"

namespace nflow {

using StateIndex = std::uint64_t;

class FiniteSpace {
 public:
  explicit FiniteSpace(int m) : m_(m) {
    if (m < 2) throw DomainError("state space needs m >= 2, got m=" + std::to_string(m));
  }

  int size() const noexcept { return m_; }

  /// m^n, or throws ResourceError when it does not fit 64 bits.
  StateIndex tuple_count(std::size_t n) const {
    StateIndex total = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (total > UINT64_MAX / static_cast<StateIndex>(m_)) {
        throw ResourceError("m^n overflows 64-bit indices (m=" + std::to_string(m_) + ", n=" + std::to_string(n) + ")");
      }
      total *= static_cast<StateIndex>(m_);
    }
    return total;
  }

  friend bool operator==(const FiniteSpace&, const FiniteSpace&) = default;

 private:
  int m_;
};

struct PointTuple {
  std::vector<int> values;

  std::size_t level() const noexcept { return values.size(); }
  int operator[](std::size_t i) const { return values[i]; }

  friend auto operator<=>(const PointTuple&, const PointTuple&) = default;
};

inline std::string to_string(const PointTuple& t) {
  std::string out = "(";
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(t.values[i]);
  }
  return out + ")";
}

namespace detail {

inline void check_states(int m, std::span<const int> values, const char* what) {
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (values[j] < 1 || values[j] > m) {
      throw DomainError(std::string(what) + " entry at position " + std::to_string(j + 1) + " is " +
                        std::to_string(values[j]) + ", outside [1, " + std::to_string(m) + "]");
    }
  }
}

inline StateIndex encode_digits(int m, std::span<const int> values) {
  StateIndex idx = 0;
  for (int v : values) idx = idx * static_cast<StateIndex>(m) + static_cast<StateIndex>(v - 1);
  return idx;
}

inline void decode_digits(int m, StateIndex idx, std::span<int> out) {
  for (std::size_t j = out.size(); j-- > 0;) {
    out[j] = static_cast<int>(idx % static_cast<StateIndex>(m)) + 1;
    idx /= static_cast<StateIndex>(m);
  }
}

}  // namespace detail

inline StateIndex encode_tuple(const FiniteSpace& space, const PointTuple& t) {
  detail::check_states(space.size(), t.values, "tuple");
  space.tuple_count(t.level());
  return detail::encode_digits(space.size(), t.values);
}

inline PointTuple decode_tuple(const FiniteSpace& space, std::size_t n, StateIndex idx) {
  if (idx >= space.tuple_count(n)) {
    throw DomainError("tuple index " + std::to_string(idx) + " outside [0, m^n) for m=" +
                      std::to_string(space.size()) + ", n=" + std::to_string(n));
  }
  PointTuple t{std::vector<int>(n)};
  detail::decode_digits(space.size(), idx, t.values);
  return t;
}

/// Self-map j -> images[j-1] of {1..m}.
class MapTable {
 public:
  explicit MapTable(std::vector<int> images) : images_(std::move(images)) {
    if (images_.size() < 2) throw DomainError("a map needs m >= 2 images");
    detail::check_states(static_cast<int>(images_.size()), images_, "map image");
  }

  static MapTable identity(int m) {
    std::vector<int> images(static_cast<std::size_t>(m));
    std::iota(images.begin(), images.end(), 1);
    return MapTable(std::move(images));
  }

  static MapTable constant(int m, int value) {
    return MapTable(std::vector<int>(static_cast<std::size_t>(m), value));
  }

  /// Inverse of index(): the map whose image tuple has lexicographic index idx.
  static MapTable from_index(int m, StateIndex idx) {
    return MapTable(decode_tuple(FiniteSpace(m), static_cast<std::size_t>(m), idx).values);
  }

  int m() const noexcept { return static_cast<int>(images_.size()); }
  int operator()(int j) const { return images_[static_cast<std::size_t>(j - 1)]; }
  std::span<const int> images() const noexcept { return images_; }

  StateIndex index() const { return detail::encode_digits(m(), images_); }

  bool is_bijection() const {
    std::vector<bool> hit(images_.size(), false);
    for (int v : images_) {
      if (hit[static_cast<std::size_t>(v - 1)]) return false;
      hit[static_cast<std::size_t>(v - 1)] = true;
    }
    return true;
  }

  friend auto operator<=>(const MapTable&, const MapTable&) = default;

 private:
  std::vector<int> images_;
};

inline std::string to_string(const MapTable& f) { return "f" + to_string(PointTuple{{f.images().begin(), f.images().end()}}); }

inline PointTuple apply_map(const MapTable& f, const PointTuple& t) {
  detail::check_states(f.m(), t.values, "tuple");
  PointTuple out{std::vector<int>(t.level())};
  for (std::size_t j = 0; j < t.level(); ++j) out.values[j] = f(t.values[j]);
  return out;
}

/// f o g, i.e. j -> f(g(j)).
inline MapTable compose(const MapTable& f, const MapTable& g) {
  if (f.m() != g.m()) {
    throw DomainError("compose: maps act on different spaces (m=" + std::to_string(f.m()) + " vs m=" +
                      std::to_string(g.m()) + ")");
  }
  std::vector<int> images(static_cast<std::size_t>(f.m()));
  for (int j = 1; j <= f.m(); ++j) images[static_cast<std::size_t>(j - 1)] = f(g(j));
  return MapTable(std::move(images));
}

enum class MapMode { all_maps, bijections_only };

inline std::string to_string(MapMode mode) { return mode == MapMode::all_maps ? "all-maps" : "bijections-only"; }

inline MapMode parse_map_mode(std::string_view text) {
  if (text == "all-maps") return MapMode::all_maps;
  if (text == "bijections-only") return MapMode::bijections_only;
  throw InputError("unknown map mode '" + std::string(text) + "' (expected all-maps or bijections-only)");
}

struct Atom {
  MapTable map;
  Rational weight;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Generator nu of an i.i.d. random-map flow. Only validate_distribution()
/// output is guaranteed canonical.
struct MapDistribution {
  int m = 2;
  MapMode mode = MapMode::all_maps;
  std::vector<Atom> atoms;

  friend bool operator==(const MapDistribution&, const MapDistribution&) = default;
};

/// Total mass of nu differs from 1 by defect() = 1 - total.
class NormalizationError : public Error {
 public:
  NormalizationError(const std::string& what, Rational defect) : Error(what), defect_(std::move(defect)) {}
  const Rational& defect() const noexcept { return defect_; }

 private:
  Rational defect_;
};

/// Checks nonnegativity, unit mass and mode; returns the canonical form
/// (duplicate maps merged, zero atoms dropped, sorted by map index).
inline MapDistribution validate_distribution(const MapDistribution& nu) {
  FiniteSpace space(nu.m);
  MapDistribution out{nu.m, nu.mode, {}};
  Rational total = 0;
  for (const Atom& a : nu.atoms) {
    if (a.map.m() != nu.m) {
      throw DomainError("atom " + to_string(a.map) + " acts on m=" + std::to_string(a.map.m()) +
                        " but the distribution has m=" + std::to_string(nu.m));
    }
    if (a.weight < 0) throw DomainError("negative weight " + to_string(a.weight) + " on " + to_string(a.map));
    if (nu.mode == MapMode::bijections_only && !a.map.is_bijection()) {
      throw ModeError("atom " + to_string(a.map) + " is not a bijection in a bijections-only distribution");
    }
    total += a.weight;
    out.atoms.push_back(a);
  }
  if (total != 1) {
    const Rational defect = 1 - total;
    throw NormalizationError("total mass is " + to_string(total) + ", defect " + to_string(defect), defect);
  }
  std::sort(out.atoms.begin(), out.atoms.end(),
            [](const Atom& a, const Atom& b) { return a.map.index() < b.map.index(); });
  std::vector<Atom> merged;
  for (Atom& a : out.atoms) {
    if (!merged.empty() && merged.back().map == a.map) {
      merged.back().weight += a.weight;
    } else {
      merged.push_back(std::move(a));
    }
  }
  std::erase_if(merged, [](const Atom& a) { return a.weight == 0; });
  out.atoms = std::move(merged);
  return out;
}

inline MapDistribution dirac(const MapTable& f, MapMode mode = MapMode::all_maps) {
  return validate_distribution(MapDistribution{f.m(), mode, {Atom{f, Rational(1)}}});
}

}  // namespace nflow
