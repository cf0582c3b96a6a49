#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "nflow/io.hpp"

namespace {

using namespace nflow;

enum Exit : int { kOk = 0, kNoFinding = 1, kInput = 2, kResource = 3, kInternal = 4 };

struct Output {
  std::string path;

  void write(const std::string& text) const {
    if (path.empty() || path == "-") {
      std::cout << text;
      std::cout.flush();
      return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << text;
  }
};

unsigned default_threads() {
  if (const char* env = std::getenv("NFLOW_THREADS")) {
    const std::string s(env);
    if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos) {
      const unsigned long v = std::stoul(s);
      if (v >= 1 && v <= 1024) return static_cast<unsigned>(v);
    }
    throw InputError("NFLOW_THREADS must be an integer in 1..1024, got '" + s + "'");
  }
  return 1;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json rational_array(const std::vector<Rational>& xs) {
  Json a = Json::array();
  for (const Rational& x : xs) a.push_back(to_string(x));
  return a;
}

Json cell_json(const std::optional<CellDifference>& d) {
  if (!d) return nullptr;
  return Json{{"row", d->row}, {"col", d->col}, {"left", to_string(d->left)}, {"right", to_string(d->right)}};
}

// ---------------------------------------------------------------------------

struct LiftArgs {
  std::string dist;
  std::size_t level = 1;
  bool allow_large = false;
  Output out;
};

int run_lift(const LiftArgs& a) {
  LiftOptions opts;
  opts.threads = default_threads();
  if (a.allow_large) opts.max_states = ~StateIndex{0};
  a.out.write(format_sparse_matrix(lift_transition_matrix(read_distribution_file(a.dist), a.level, opts)));
  return kOk;
}

struct DetectArgs {
  std::string dist_a, dist_b, seed;
  Output out;
};

int run_detect(const DetectArgs& a) {
  const BifurcationReport r =
      detect_bifurcation_level(read_distribution_file(a.dist_a), read_distribution_file(a.dist_b), parse_tuple(a.seed));
  a.out.write(dump(to_json(r)));
  return r.detected_level ? kOk : kNoFinding;
}

struct DofArgs {
  int m = 3;
  std::optional<std::size_t> k;
  std::string mode = "all-maps";
  std::string dist;
  bool basis = false;
  bool system = false;
  bool allow_large = false;
  std::string format = "text";
  Output out;
};

int run_dof(const DofArgs& a) {
  const DofTable table = dof_table(a.m);
  Json j{{"m", a.m}};
  Json rows = Json::array();
  std::string text = "# dof m=" + std::to_string(a.m) + "\n";
  for (std::size_t n = 1; n <= static_cast<std::size_t>(a.m); ++n) {
    Json row = Json::array();
    text += "n=" + std::to_string(n) + ":";
    for (std::size_t k = 1; k <= n; ++k) {
      row.push_back(table.at(n, k).str());
      text += " " + table.at(n, k).str();
    }
    rows.push_back(Json{{"n", n}, {"values", std::move(row)}});
    text += "\n";
  }
  j["table"] = std::move(rows);

  if (!a.dist.empty()) {
    if (!a.k) throw InputError("--k is required together with a distribution file");
    const MapDistribution nu = read_distribution_file(a.dist);
    if (nu.m != a.m) throw DomainError("distribution has m=" + std::to_string(nu.m) + " but --m is " + std::to_string(a.m));
    const UnknownMode mode = parse_unknown_mode(a.mode);
    const ConstraintSystem sys = build_constraints(a.m, *a.k, characteristics_of(nu), mode, BuildOptions{a.allow_large});
    const std::size_t rank = exact_rank(sys);
    const bool feasible = is_feasible(sys);
    j["mode"] = to_string(mode);
    j["k"] = *a.k;
    j["unknowns"] = sys.unknown_count();
    j["rows"] = sys.rows.size();
    j["rank"] = rank;
    j["nullspace_dimension"] = sys.unknown_count() - rank;
    j["feasible"] = feasible;
    text += "mode=" + to_string(mode) + " k=" + std::to_string(*a.k) + " unknowns=" + std::to_string(sys.unknown_count()) +
            " rank=" + std::to_string(rank) + " nullspace=" + std::to_string(sys.unknown_count() - rank) +
            " feasible=" + (feasible ? "true" : "false") + "\n";
    if (a.system) text += format_constraint_system(sys);
    if (a.basis) {
      const auto basis = nullspace_basis(sys);
      text += "# nullspace basis\n" + format_nullspace(basis);
      Json vs = Json::array();
      for (const SparseVector& v : basis) {
        Json entries = Json::array();
        for (const auto& [idx, c] : v) entries.push_back(Json{{"index", idx}, {"coeff", to_string(c)}});
        vs.push_back(std::move(entries));
      }
      j["basis"] = std::move(vs);
    }
  }
  a.out.write(a.format == "json" ? dump(j) : text);
  return kOk;
}

struct ExampleArgs {
  int m = 6;
  std::string epsilon = "0";
  Output out;
};

int run_example(const ExampleArgs& a) {
  Json j = to_json(example_distribution(a.m, parse_rational(a.epsilon)));
  if (a.m != 6) j["generalized"] = true;
  a.out.write(dump(j));
  return kOk;
}

struct SimulateArgs {
  std::string dist;
  double rate = 1;
  double horizon = 1;
  std::uint64_t prng_seed = 0;
  bool embed = false;
  std::string orbit_of;
  Output out;
};

int run_simulate(const SimulateArgs& a) {
  const TrajectorySample s = simulate_flow(read_distribution_file(a.dist), a.rate, a.horizon, a.prng_seed, a.embed);
  if (!a.orbit_of.empty()) {
    const PointTuple start = parse_tuple(a.orbit_of);
    detail::check_states(s.maps.empty() ? 2 : s.maps.front().m(), start.values, "start tuple");
    Json visited = Json::array();
    for (const PointTuple& t : visited_tuples(s, start)) visited.push_back(tuple_json(t));
    a.out.write(dump(Json{{"jumps", s.jump_times.size()}, {"visited_count", visited.size()}, {"visited", visited}}));
    return kOk;
  }
  a.out.write(format_trajectory(s));
  return kOk;
}

struct EstimateArgs {
  std::string dist, seed;
  std::size_t samples = 100000;
  std::uint64_t prng_seed = 0;
  Output out;
};

int run_estimate(const EstimateArgs& a) {
  a.out.write(format_estimate(empirical_transition_estimate(read_distribution_file(a.dist), parse_tuple(a.seed), a.samples,
                                                            a.prng_seed)));
  return kOk;
}

struct InvariantArgs {
  std::string dist, seed;
  bool cascade = false;
  Output out;
};

int run_invariant(const InvariantArgs& a) {
  const InvariantMeasure v = seeded_invariant_measure(read_distribution_file(a.dist), parse_tuple(a.seed));
  Json j{{"seed", tuple_json(parse_tuple(a.seed))}, {"measure", to_json(v)}};
  if (a.cascade) {
    Json c = Json::array();
    for (const InvariantMeasure& level : projection_cascade(v)) c.push_back(to_json(level));
    j["cascade"] = std::move(c);
  }
  a.out.write(dump(j));
  return kOk;
}

struct VerifyArgs {
  std::string check;
  std::string dist;
  std::string matrix;
  std::size_t level = 2;
  std::string seed;
  std::string grid = "0,1/4,1/2,3/4,1";
  int m = 6;
  std::string u, v;
  Output out;
};

int run_verify(const VerifyArgs& a) {
  auto need_dist = [&] {
    if (a.dist.empty()) throw InputError("verify " + a.check + " needs --dist");
    return read_distribution_file(a.dist);
  };
  Json j{{"check", a.check}};
  bool pass = false;
  if (a.check == "consistency") {
    ConsistencyReport r;
    if (!a.matrix.empty()) {
      r = check_consistency(parse_sparse_matrix(read_text_file(a.matrix)));
    } else {
      LiftOptions opts;
      opts.threads = default_threads();
      r = check_consistency(need_dist(), a.level, opts);
    }
    pass = r.pass;
    j["pairs_checked"] = r.pairs_checked;
    j["r"] = r.r ? Json(*r.r) : Json(nullptr);
    j["fixed_value"] = r.fixed_value ? Json(*r.fixed_value) : Json(nullptr);
    j["cell"] = cell_json(r.cell);
  } else if (a.check == "invariance") {
    if (a.seed.empty()) throw InputError("verify invariance needs --seed");
    const MapDistribution nu = need_dist();
    const InvariantMeasure mu = seeded_invariant_measure(nu, parse_tuple(a.seed));
    if (mu.level < 2) throw DomainError("projection invariance needs a seed of length >= 2");
    Json per_r = Json::array();
    pass = true;
    for (std::size_t r = 1; r <= mu.level; ++r) {
      const ProjectionInvarianceReport rep = check_projection_invariance(mu, nu, r);
      pass = pass && rep.pass && rep.source_stationary;
      per_r.push_back(Json{{"r", r}, {"source_stationary", rep.source_stationary}, {"pass", rep.pass}, {"defect", cell_json(rep.defect)}});
    }
    j["projections"] = std::move(per_r);
  } else if (a.check == "example") {
    const ExampleReport r = verify_example(parse_rational_list(a.grid), a.m);
    pass = r.pass();
    Json points = Json::array();
    for (const ExampleGridPoint& p : r.points) {
      points.push_back(Json{{"epsilon", to_string(p.epsilon)},
                            {"low_levels_match_unperturbed", p.low_levels_match_unperturbed},
                            {"divergence_level_differs", p.divergence_level_differs ? Json(*p.divergence_level_differs) : Json(nullptr)},
                            {"top_support_size", p.top_support_size},
                            {"top_support_size_ok", p.top_support_size_ok}});
    }
    j["m"] = r.m;
    j["generalized"] = r.m != 6;
    j["divergence_level"] = r.divergence_level;
    j["low_levels_constant"] = r.low_levels_constant;
    j["divergence_level_differs"] = r.divergence_level_differs;
    j["support_sizes_ok"] = r.support_sizes_ok;
    j["points"] = std::move(points);
  } else if (a.check == "paper-basis") {
    const PaperBasisReport r = verify_paper_basis_m3();
    auto family = [](const std::vector<PaperVectorCheck>& checks) {
      Json out = Json::array();
      for (const PaperVectorCheck& c : checks) out.push_back(Json{{"label", c.label}, {"in_nullspace", c.in_nullspace}});
      return out;
    };
    bool members = true;
    for (const auto& c : r.first_type) members = members && c.in_nullspace;
    for (const auto& c : r.second_type) members = members && c.in_nullspace;
    pass = r.nullspace_dimension == 8 && r.first_type_sum_zero && r.any_five_first_type_independent &&
           (members || r.first_type_sign_variant.has_value());
    j["nullspace_dimension"] = r.nullspace_dimension;
    j["first_type"] = family(r.first_type);
    j["second_type"] = family(r.second_type);
    j["first_type_sum_zero"] = r.first_type_sum_zero;
    j["any_five_first_type_independent"] = r.any_five_first_type_independent;
    j["first_type_rank"] = r.first_type_rank;
    j["second_type_rank"] = r.second_type_rank;
    j["combined_rank"] = r.combined_rank;
    j["first_type_sign_variant"] =
        r.first_type_sign_variant ? Json::array({r.first_type_sign_variant->first, r.first_type_sign_variant->second})
                                  : Json(nullptr);
  } else if (a.check == "complementarity") {
    const PointTuple u = parse_tuple(a.u), v = parse_tuple(a.v);
    const ComplementarityReport r = verify_complementarity(need_dist(), u.values, v.values);
    pass = r.pass;
    j["u"] = tuple_json(u);
    j["v"] = tuple_json(v);
    j["lhs"] = to_string(r.lhs);
    j["rhs"] = to_string(r.rhs);
  } else if (a.check == "bistochastic") {
    const BistochasticReport r = onepoint_bistochastic_check(need_dist());
    pass = r.pass;
    j["column_sums"] = rational_array(r.column_sums);
    j["offending_column"] = r.offending_column ? Json(*r.offending_column) : Json(nullptr);
  } else {
    throw InputError("unknown check '" + a.check + "'");
  }
  j["pass"] = pass;
  a.out.write(dump(j));
  return pass ? kOk : kNoFinding;
}

struct BirkhoffArgs {
  std::string matrix;
  std::string dist;
  Output out;
};

int run_birkhoff(const BirkhoffArgs& a) {
  DenseMatrix b;
  if (!a.matrix.empty()) {
    try {
      b = dense_matrix_from_json(Json::parse(read_text_file(a.matrix)));
    } catch (const Json::parse_error& e) {
      throw InputError(std::string("matrix file is not valid JSON: ") + e.what());
    }
  } else if (!a.dist.empty()) {
    b = to_dense(lift_transition_matrix(read_distribution_file(a.dist), 1));
  } else {
    throw InputError("birkhoff needs --matrix or --dist");
  }
  const std::size_t m = b.size();
  const auto atoms = birkhoff_decompose(std::move(b));
  Json list = Json::array();
  for (const BirkhoffAtom& atom : atoms) {
    list.push_back(Json{{"permutation", std::vector<int>(atom.permutation.images().begin(), atom.permutation.images().end())},
                        {"weight", to_string(atom.weight)}});
  }
  a.out.write(dump(Json{{"m", m}, {"atom_count", atoms.size()}, {"atoms", std::move(list)}}));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nflow: n-point motions, bifurcation levels and degrees of freedom of random-map flows"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "nflow 1.0.0");

  LiftArgs lift;
  auto* c_lift = app.add_subcommand("lift", "Write the n-point transition matrix A^(n) as sparse text");
  c_lift->add_option("dist", lift.dist, "Distribution JSON file")->required();
  c_lift->add_option("-n,--level", lift.level, "Level n >= 1")->required();
  c_lift->add_flag("--allow-large", lift.allow_large, "Disable the m^n size guard");
  c_lift->add_option("-o,--out", lift.out.path, "Output file (default stdout)");

  DetectArgs detect;
  auto* c_detect = app.add_subcommand("detect", "Locate the bifurcation level between two flows");
  c_detect->add_option("dist_a", detect.dist_a)->required();
  c_detect->add_option("dist_b", detect.dist_b)->required();
  c_detect->add_option("--seed", detect.seed, "Seed tuple, e.g. 1,2,3,4,5,6")->required();
  c_detect->add_option("-o,--out", detect.out.path);

  DofArgs dof;
  auto* c_dof = app.add_subcommand("dof", "Degrees-of-freedom table and exact constraint ranks");
  c_dof->add_option("--m", dof.m)->required();
  c_dof->add_option("--k", dof.k);
  c_dof->add_option("--mode", dof.mode, "all-maps | permutations");
  c_dof->add_option("--dist", dof.dist, "Distribution whose k-point characteristics are prescribed");
  c_dof->add_flag("--basis", dof.basis, "Print a null-space basis");
  c_dof->add_flag("--system", dof.system, "Print the constraint system");
  c_dof->add_flag("--allow-large", dof.allow_large);
  c_dof->add_option("--format", dof.format)->check(CLI::IsMember({"text", "json"}));
  c_dof->add_option("-o,--out", dof.out.path);

  ExampleArgs example;
  auto* c_example = app.add_subcommand("example", "Emit the flip-group distribution nu^eps");
  c_example->add_option("--m", example.m, "Even m >= 4");
  c_example->add_option("--epsilon", example.epsilon, "Rational in [0, 1]")->required();
  c_example->add_option("-o,--out", example.out.path);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Simulate the Poisson-subordinated flow");
  c_sim->add_option("dist", sim.dist)->required();
  c_sim->add_option("--rate", sim.rate);
  c_sim->add_option("--horizon", sim.horizon)->required();
  c_sim->add_option("--prng-seed", sim.prng_seed);
  c_sim->add_flag("--embed", sim.embed, "Include the matrices K(Y_t)");
  c_sim->add_option("--orbit", sim.orbit_of, "Report the tuples visited from this start instead of the trajectory");
  c_sim->add_option("-o,--out", sim.out.path);

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate", "Empirical n-point transition estimate on the seeded class");
  c_est->add_option("dist", est.dist)->required();
  c_est->add_option("--seed", est.seed)->required();
  c_est->add_option("--samples", est.samples);
  c_est->add_option("--prng-seed", est.prng_seed);
  c_est->add_option("-o,--out", est.out.path);

  InvariantArgs inv;
  auto* c_inv = app.add_subcommand("invariant", "Seeded invariant measure and its projection cascade");
  c_inv->add_option("dist", inv.dist)->required();
  c_inv->add_option("--seed", inv.seed)->required();
  c_inv->add_flag("--cascade", inv.cascade);
  c_inv->add_option("-o,--out", inv.out.path);

  VerifyArgs ver;
  auto* c_ver = app.add_subcommand("verify", "Run a structural check; exit 1 when it fails");
  c_ver->add_option("check", ver.check, "consistency | invariance | example | paper-basis | complementarity | bistochastic")
      ->required()
      ->check(CLI::IsMember({"consistency", "invariance", "example", "paper-basis", "complementarity", "bistochastic"}));
  c_ver->add_option("--dist", ver.dist);
  c_ver->add_option("--matrix", ver.matrix, "Sparse matrix file (consistency)");
  c_ver->add_option("-n,--level", ver.level);
  c_ver->add_option("--seed", ver.seed);
  c_ver->add_option("--grid", ver.grid);
  c_ver->add_option("--m", ver.m);
  c_ver->add_option("--u", ver.u);
  c_ver->add_option("--v", ver.v);
  c_ver->add_option("-o,--out", ver.out.path);

  BirkhoffArgs bk;
  auto* c_bk = app.add_subcommand("birkhoff", "Birkhoff-von Neumann decomposition");
  c_bk->add_option("--matrix", bk.matrix, "JSON {\"matrix\": [[\"p/q\", ...], ...]}");
  c_bk->add_option("--dist", bk.dist, "Use the 1-point matrix of a distribution");
  c_bk->add_option("-o,--out", bk.out.path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (*c_lift) return run_lift(lift);
    if (*c_detect) return run_detect(detect);
    if (*c_dof) return run_dof(dof);
    if (*c_example) return run_example(example);
    if (*c_sim) return run_simulate(sim);
    if (*c_est) return run_estimate(est);
    if (*c_inv) return run_invariant(inv);
    if (*c_ver) return run_verify(ver);
    if (*c_bk) return run_birkhoff(bk);
  } catch (const ResourceError& e) {
    std::cerr << "nflow: resource guard: " << e.what() << "\n";
    return kResource;
  } catch (const InternalError& e) {
    std::cerr << "nflow: internal error: " << e.what() << "\n";
    return kInternal;
  } catch (const AmbiguityError& e) {
    std::cerr << "nflow: " << e.what() << " (" << e.classes().size() << " classes)\n";
    return kInput;
  } catch (const Error& e) {
    std::cerr << "nflow: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "nflow: " << e.what() << "\n";
    return kInput;
  }
  return kInput;
}
