// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <string>

#include "cli_runner.hpp"
#include "support.hpp"

using namespace nflow;
using nflow::fixtures::Rng;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

// Tolerances and sample sizes.
constexpr int kRandomCases = 20;
constexpr double kJumpMeanTarget = 1000.0;
constexpr double kJumpMeanTolerance = 95.0;
constexpr std::size_t kEstimateSamples = 100000;
constexpr double kEstimateMaxError = 0.01;

using SupportSet = std::set<std::vector<int>>;

SupportSet digits(std::initializer_list<const char*> items) {
  SupportSet out;
  for (const char* d : items) {
    std::vector<int> t;
    for (const char* c = d; *c; ++c) t.push_back(*c - '0');
    out.insert(t);
  }
  return out;
}

SupportSet support_of(const SupportProfile& p) {
  SupportSet out;
  for (const auto& t : p.tuples) out.insert(t.values);
  return out;
}

std::vector<Rational> grid() { return {0, Rational(1, 4), Rational(1, 2), Rational(3, 4), 1}; }

Outcome golden_tables() {
  const std::vector<std::pair<int, std::vector<long>>> golden{
      {3, {1, 7, 19, 27}}, {4, {1, 13, 67, 175, 256}}, {5, {1, 21, 181, 821, 2101, 3125}}};
  for (const auto& [m, row] : golden) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      const Integer got = dof_recursion(m, static_cast<std::size_t>(m), k);
      if (got != row[k]) return {false, "m=" + std::to_string(m) + " k=" + std::to_string(k) + " gave " + got.str()};
    }
  }
  return {true, "m=3,4,5 rows match"};
}

Outcome rank_equals_recursion() {
  Rng rng(2024);
  std::string detail;
  for (const auto& [m, kmax] : std::vector<std::pair<int, std::size_t>>{{3, 3}, {4, 4}, {5, 2}}) {
    const MapDistribution nu = fixtures::random_distribution(rng, m, MapMode::all_maps, 6);
    for (std::size_t k = 0; k <= kmax; ++k) {
      const std::size_t rank = exact_rank(build_constraints(m, k, characteristics_of(nu), UnknownMode::all_maps));
      const Integer expected = dof_recursion(m, static_cast<std::size_t>(m), k);
      if (Integer(rank) != expected) {
        return {false, "m=" + std::to_string(m) + " k=" + std::to_string(k) + " rank " + std::to_string(rank) + " vs " + expected.str()};
      }
    }
    detail += (detail.empty() ? "" : ", ") + std::string("m=") + std::to_string(m) + " k<=" + std::to_string(kmax);
  }
  return {true, detail};
}

Outcome permutation_rank() {
  const std::vector<std::pair<int, std::size_t>> expected{{3, 5}, {4, 10}, {5, 17}};
  Rng rng(7);
  std::string detail;
  for (const auto& [m, value] : expected) {
    const MapDistribution nu = fixtures::random_distribution(rng, m, MapMode::bijections_only, 6);
    const std::size_t rank = exact_rank(build_constraints(m, 1, characteristics_of(nu), UnknownMode::permutations));
    if (rank != value || rank != permutation_dof_k1(m)) return {false, "m=" + std::to_string(m) + " rank " + std::to_string(rank)};
    detail += (detail.empty() ? "" : " ") + std::to_string(rank);
  }
  return {true, "ranks " + detail};
}

Outcome epsilon_invariance() {
  const MapDistribution base = example_distribution(6, 0);
  const TransitionMatrix b1 = lift_transition_matrix(base, 1), b2 = lift_transition_matrix(base, 2), b3 = lift_transition_matrix(base, 3);
  for (const Rational& e : grid()) {
    const MapDistribution nu = example_distribution(6, e);
    if (lift_transition_matrix(nu, 1) != b1 || lift_transition_matrix(nu, 2) != b2) return {false, "low level differs at eps=" + to_string(e)};
    if (e > 0 && lift_transition_matrix(nu, 3) == b3) return {false, "3-point chain unchanged at eps=" + to_string(e)};
  }
  if (!verify_example(grid()).pass()) return {false, "example report failed"};
  return {true, "grid 0,1/4,1/2,3/4,1"};
}

Outcome support_split() {
  const PointTuple seed{{1, 2, 3, 4, 5, 6}};
  const std::size_t s0 = seeded_invariant_measure(example_distribution(6, 0), seed).masses.size();
  const std::size_t s1 = seeded_invariant_measure(example_distribution(6, Rational(1, 2)), seed).masses.size();
  return {s0 == 4 && s1 == 8, "|supp| = " + std::to_string(s0) + " at eps=0, " + std::to_string(s1) + " at eps=1/2"};
}

Outcome detection_levels() {
  const MapDistribution a = example_distribution(6, 0), b = example_distribution(6, Rational(1, 2));
  // Displayed supports, top level first; an empty entry means "same as unperturbed".
  struct Display {
    PointTuple seed;
    std::size_t level;
    std::vector<SupportSet> unperturbed;
    std::vector<SupportSet> perturbed;
  };
  const std::vector<Display> displays{
      {PointTuple{{1, 2, 3, 4, 5, 6}},
       5,
       {digits({"123456", "124365", "213465", "214356"}), digits({"13465", "14356", "23456", "24365"}),
        digits({"3456", "3465", "4356", "4365"}), digits({"356", "365", "456", "465"}), digits({"56", "65"}), digits({"5", "6"})},
       {digits({"123456", "123465", "124356", "124365", "213456", "213465", "214356", "214365"}),
        digits({"13456", "13465", "14356", "14365", "23456", "23465", "24356", "24365"}),
        {}, {}, {}, {}}},
      {PointTuple{{1, 2, 1, 4, 1, 6}},
       3,
       {digits({"121416", "121315", "212425", "212326"}), digits({"21416", "21315", "12425", "12326"}),
        digits({"1416", "1315", "2425", "2326"}), digits({"416", "315", "425", "326"}), digits({"16", "15", "25", "26"}),
        digits({"5", "6"})},
       {digits({"121416", "121415", "121316", "121315", "212426", "212425", "212326", "212325"}),
        digits({"12426", "12425", "12326", "12325", "21416", "21415", "21316", "21315"}),
        digits({"1416", "1415", "1316", "1315", "2426", "2425", "2326", "2325"}),
        digits({"416", "415", "316", "315", "426", "425", "326", "325"}), {}, {}}}};
  std::string detail;
  for (const Display& d : displays) {
    const BifurcationReport r = detect_bifurcation_level(a, b, d.seed);
    const std::string tag = to_string(d.seed);
    if (r.detected_level != d.level) return {false, tag + ": detected " + (r.detected_level ? std::to_string(*r.detected_level) : "none")};
    for (std::size_t i = 0; i < 6; ++i) {
      const SupportSet& want_b = d.perturbed[i].empty() ? d.unperturbed[i] : d.perturbed[i];
      if (support_of(r.levels[i].support_a) != d.unperturbed[i]) return {false, tag + ": unperturbed level " + std::to_string(6 - i)};
      if (support_of(r.levels[i].support_b) != want_b) return {false, tag + ": perturbed level " + std::to_string(6 - i)};
    }
    const InvariantMeasure& v1 = r.cascade_a.back();
    if (v1.masses.size() != 2 || v1.mass_at(4) != Rational(1, 2) || v1.mass_at(5) != Rational(1, 2)) {
      return {false, tag + ": level-1 masses"};
    }
    detail += (detail.empty() ? "" : ", ") + tag + " -> " + std::to_string(d.level);
  }
  return {true, detail};
}

Outcome consistency_identity() {
  Rng rng(7007);
  std::size_t pairs = 0;
  for (int c = 0; c < kRandomCases; ++c) {
    const int m = 2 + c % 3;
    const MapDistribution nu = fixtures::random_distribution(rng, m, MapMode::all_maps, 6);
    for (std::size_t n = 2; n <= 3; ++n) {
      const TransitionMatrix upper = lift_transition_matrix(nu, n), lower = lift_transition_matrix(nu, n - 1);
      // The lifted matrices themselves are checked against the dense oracle.
      const DenseMatrix oracle = fixtures::brute_force_lift(nu, n);
      for (StateIndex i = 0; i < upper.dimension(); ++i) {
        for (StateIndex j = 0; j < upper.dimension(); ++j) {
          if (upper.at(i, j) != oracle[i][j]) return {false, "lift disagrees with brute force"};
        }
      }
      const ConsistencyReport r = check_consistency(upper, lower);
      if (!r.pass) return {false, "case " + std::to_string(c) + " n=" + std::to_string(n) + " r=" + std::to_string(*r.r)};
      pairs += r.pairs_checked;
    }
  }
  return {true, std::to_string(kRandomCases) + " flows, " + std::to_string(pairs) + " (r, i_r) pairs"};
}

Outcome projection_invariance() {
  Rng rng(8008);
  int done = 0, tries = 0;
  while (done < kRandomCases && tries < 1000) {
    ++tries;
    const int m = 2 + tries % 3;
    const std::size_t n = 2 + static_cast<std::size_t>(tries % 2);
    const MapDistribution nu = fixtures::random_distribution(rng, m, MapMode::all_maps, 6);
    InvariantMeasure mu;
    try {
      mu = seeded_invariant_measure(nu, fixtures::random_tuple(rng, m, n));
    } catch (const AmbiguityError&) {
      continue;
    }
    if (!fixtures::stationary_by_brute_force(mu, nu)) return {false, "seeded measure not stationary"};
    for (std::size_t r = 1; r <= n; ++r) {
      const ProjectionInvarianceReport rep = check_projection_invariance(mu, nu, r);
      if (!rep.pass || !fixtures::stationary_by_brute_force(rep.projected, nu)) return {false, "projection r=" + std::to_string(r)};
    }
    ++done;
  }
  return {done == kRandomCases, std::to_string(done) + " flow/seed pairs, all r"};
}

Outcome paper_basis() {
  const PaperBasisReport r = verify_paper_basis_m3();
  int first_ok = 0, second_ok = 0;
  for (const auto& c : r.first_type) first_ok += c.in_nullspace;
  for (const auto& c : r.second_type) second_ok += c.in_nullspace;
  const bool verdicts = (first_ok == 6 || r.first_type_sign_variant) && second_ok == 6;
  const bool pass = r.nullspace_dimension == 8 && r.first_type_sum_zero && r.any_five_first_type_independent && verdicts;
  return {pass, "dim " + std::to_string(r.nullspace_dimension) + ", first-type members " + std::to_string(first_ok) +
                    "/6, second-type members " + std::to_string(second_ok) + "/6, combined span " +
                    std::to_string(r.combined_rank)};
}

Outcome birkhoff() {
  Rng rng(9009);
  std::size_t worst = 0;
  for (int c = 0; c < kRandomCases; ++c) {
    const int m = 2 + c % 5;
    const DenseMatrix b = fixtures::random_doubly_stochastic(rng, m);
    const auto atoms = birkhoff_decompose(b);
    if (birkhoff_reconstruct(atoms, static_cast<std::size_t>(m)) != b) return {false, "reconstruction differs, case " + std::to_string(c)};
    if (atoms.size() > static_cast<std::size_t>((m - 1) * (m - 1) + 1)) return {false, "too many atoms, case " + std::to_string(c)};
    worst = std::max(worst, atoms.size());
  }
  return {true, std::to_string(kRandomCases) + " matrices, max atoms " + std::to_string(worst)};
}

Outcome reconstruction() {
  Rng rng(10010);
  for (int c = 0; c < kRandomCases; ++c) {
    const int m = 2 + c % 3;
    const MapDistribution nu = fixtures::random_distribution(rng, m, MapMode::all_maps, 8);
    PointTuple source;
    for (int i = m; i >= 1; --i) source.values.push_back(i);
    const SparseRow row = lift_row(nu, static_cast<std::size_t>(m), encode_tuple(FiniteSpace(m), source));
    if (reconstruct_from_mpoint_row(m, source, row) != nu) return {false, "round trip failed, case " + std::to_string(c)};
  }
  return {true, std::to_string(kRandomCases) + " flows"};
}

Outcome simulator() {
  double total = 0;
  const MapDistribution half = example_distribution(6, Rational(1, 2));
  for (std::uint64_t s = 1; s <= 100; ++s) total += static_cast<double>(simulate_flow(half, 1.0, 1000.0, s).jump_times.size());
  const double mean = total / 100;
  const MapDistribution nu0 = example_distribution(6, 0);
  const EmpiricalEstimate est = empirical_transition_estimate(nu0, 1, kEstimateSamples, 12345, {0, 1, 2, 3, 4, 5});
  const double err = max_cell_error(est, lift_transition_matrix(nu0, 1));
  bool functorial = true;
  const FlipGroupSpec g = flip_group(6);
  for (const MapTable& f : g.group) {
    for (const MapTable& h : g.group) functorial = functorial && embed_linear(compose(f, h)) == multiply(embed_linear(f), embed_linear(h));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "mean jumps %.2f, max cell error %.5f, functoriality %s", mean, err, functorial ? "ok" : "broken");
  return {std::abs(mean - kJumpMeanTarget) <= kJumpMeanTolerance && err < kEstimateMaxError && functorial, buf};
}

Outcome determinism() {
  const fixtures::ScratchDir dir("acceptance");
  const std::string e0 = dir.file("e0.json"), e12 = dir.file("e12.json");
  fixtures::run_cli("example --epsilon 0 -o " + e0);
  fixtures::run_cli("example --epsilon 1/2 -o " + e12);
  Rng rng(3);
  const std::string d3 = dir.write("d3.json", format_distribution(fixtures::random_distribution(rng, 3, MapMode::all_maps)));
  const std::string mfile = dir.write("b.json", R"({"matrix": [["1/2","1/3","1/6"],["1/6","1/2","1/3"],["1/3","1/6","1/2"]]})");
  const std::vector<std::string> commands{
      "lift " + e12 + " -n 3",
      "detect " + e0 + " " + e12 + " --seed 1,2,3,4,5,6",
      "detect " + e0 + " " + e12 + " --seed 1,2,1,4,1,6",
      "dof --m 5",
      "dof --m 3 --k 2 --dist " + d3 + " --basis --system",
      "example --m 6 --epsilon 1/3",
      "simulate " + e12 + " --horizon 50 --rate 2 --prng-seed 11 --embed",
      "simulate " + e12 + " --horizon 1000 --prng-seed 11 --orbit 1,2,3,4,5,6",
      "estimate " + e0 + " --seed 1,3 --samples 2000 --prng-seed 5",
      "invariant " + e12 + " --seed 1,2,1,4,1,6 --cascade",
      "verify consistency --dist " + e12 + " -n 3",
      "verify invariance --dist " + e12 + " --seed 1,2,3",
      "verify example",
      "verify paper-basis",
      "verify complementarity --dist " + e12 + " --u 1,3 --v 2,4",
      "verify bistochastic --dist " + e12,
      "birkhoff --matrix " + mfile,
      "birkhoff --dist " + e12,
  };
  std::set<std::string> subcommands;
  for (const std::string& cmd : commands) {
    const fixtures::CliResult first = fixtures::run_cli(cmd), second = fixtures::run_cli(cmd);
    if (first.out.empty() || first.out != second.out || first.exit_code != second.exit_code) return {false, "differs: " + cmd.substr(0, 40)};
    // Writing through -o must give the same bytes as stdout.
    const std::string path = dir.file("out.txt");
    fixtures::run_cli(cmd + " -o " + path);
    if (fixtures::slurp(path) != first.out) return {false, "-o output differs: " + cmd.substr(0, 40)};
    subcommands.insert(cmd.substr(0, cmd.find(' ')));
  }
  return {subcommands.size() == 9, std::to_string(commands.size()) + " invocations over " + std::to_string(subcommands.size()) + " subcommands"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "recursion golden tables", 1, golden_tables},
      {2, "exact rank equals recursion", 300, rank_equals_recursion},
      {3, "permutation one-point rank", 60, permutation_rank},
      {4, "flip example epsilon invariance", 60, epsilon_invariance},
      {5, "support split 4 -> 8", 60, support_split},
      {6, "bifurcation detection levels and cascades", 60, detection_levels},
      {7, "projection consistency identity", 120, consistency_identity},
      {8, "projection invariance of stationary measures", 120, projection_invariance},
      {9, "m=3 null-space basis", 10, paper_basis},
      {10, "Birkhoff decomposition", 60, birkhoff},
      {11, "reconstruction from an m-point row", 60, reconstruction},
      {12, "simulator statistics", 300, simulator},
      {13, "CLI determinism", 60, determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_seconds) {
      o.pass = false;
      o.detail += " (over time budget)";
    }
    failures += !o.pass;
    char timing[64];
    std::snprintf(timing, sizeof timing, "%.2fs/%.0fs", secs, c.budget_seconds);
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail << " [" << timing << "]\n";
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  return failures;
}
