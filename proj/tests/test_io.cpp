#include <gtest/gtest.h>

#include "support.hpp"

using namespace nflow;
using nflow::fixtures::Rng;

TEST(DistributionFile, RoundTripIsCanonical) {
  Rng rng(141);
  for (int trial = 0; trial < 20; ++trial) {
    const MapDistribution nu = fixtures::random_distribution(rng, 4, MapMode::all_maps);
    const std::string text = format_distribution(nu);
    EXPECT_EQ(parse_distribution(text), nu);
    EXPECT_EQ(format_distribution(parse_distribution(text)), text);
  }
}

TEST(DistributionFile, UnsortedInputIsCanonicalized) {
  const std::string text = R"({"atoms":[{"weight":"1/2","map":[2,1]},{"map":[1,2],"weight":"1/2"}],"mode":"all-maps","m":2})";
  const std::string out = format_distribution(parse_distribution(text));
  EXPECT_EQ(out.find("\"m\""), out.find('{') + 4);
  EXPECT_LT(out.find("\"weight\": \"1/2\""), out.rfind("\"weight\""));
  EXPECT_EQ(parse_distribution(out).atoms.front().map, MapTable::identity(2));
}

TEST(DistributionFile, Errors) {
  EXPECT_THROW(parse_distribution("{"), InputError);
  EXPECT_THROW(parse_distribution(R"({"m":2,"mode":"all-maps"})"), InputError);
  EXPECT_THROW(parse_distribution(R"({"m":2,"mode":"all-maps","atoms":[{"map":[1,2],"weight":0.5}]})"), InputError);
  EXPECT_THROW(parse_distribution(R"({"m":2,"mode":"all-maps","atoms":[{"map":[1,2,1],"weight":"1"}]})"), InputError);
  EXPECT_THROW(parse_distribution(R"({"m":2,"mode":"all-maps","atoms":[{"map":[1,2],"weight":"1/3"}]})"), NormalizationError);
  EXPECT_THROW(parse_distribution(R"({"m":2,"mode":"bijections-only","atoms":[{"map":[1,1],"weight":"1"}]})"), ModeError);
  EXPECT_THROW(parse_distribution(R"({"m":2,"mode":"sometimes","atoms":[]})"), InputError);
  EXPECT_THROW(read_distribution_file("/nonexistent/path.json"), InputError);
}

TEST(SparseMatrixFile, RoundTrip) {
  Rng rng(142);
  const TransitionMatrix a = lift_transition_matrix(fixtures::random_distribution(rng, 3, MapMode::all_maps), 2);
  const std::string text = format_sparse_matrix(a);
  EXPECT_EQ(text.substr(0, text.find('\n')), "# m=3 n=2 format=npoint-sparse-v1");
  EXPECT_EQ(parse_sparse_matrix(text), a);
}

TEST(SparseMatrixFile, Errors) {
  EXPECT_THROW(parse_sparse_matrix("0\t0\t1/1\n"), InputError);
  EXPECT_THROW(parse_sparse_matrix("# m=2 n=1 format=other\n"), InputError);
  EXPECT_THROW(parse_sparse_matrix("# m=2 n=1 format=npoint-sparse-v1\n0\t0\n"), InputError);
  EXPECT_THROW(parse_sparse_matrix("# m=2 n=1 format=npoint-sparse-v1\n0\t0\t1/1\n"), InputError);
  EXPECT_THROW(parse_sparse_matrix("# m=2 n=1 format=npoint-sparse-v1\n0\t0\t1/1\n1\t1\t1/1\n2\t0\t1/1\n"), InputError);
  EXPECT_THROW(parse_sparse_matrix("# m=6 n=9 format=npoint-sparse-v1\n"), ResourceError);
}

TEST(BifurcationJson, KeysAndNull) {
  const auto r = detect_bifurcation_level(fixtures::flip_example(0), fixtures::flip_example(0), PointTuple{{1, 2}});
  const Json j = to_json(r);
  EXPECT_TRUE(j["detected_level"].is_null());
  EXPECT_TRUE(j["characteristic_level"].is_null());
  ASSERT_EQ(j["levels"].size(), 2u);
  std::vector<std::string> keys;
  for (auto it = j["levels"][0].begin(); it != j["levels"][0].end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"level", "support_a", "support_b", "equal", "homeomorphic"}));
}

TEST(ConstraintExport, HeaderAndRows) {
  const ConstraintSystem sys = build_constraints(2, 1, characteristics_of(dirac(MapTable::identity(2))), UnknownMode::all_maps);
  const std::string text = format_constraint_system(sys);
  EXPECT_EQ(text.substr(0, text.find('\n')), "# m=2 mode=all-maps k=1 unknowns=4 format=dof-system-v1");
  EXPECT_NE(text.find("u= v= rhs=1/1 cols=0,1,2,3\n"), std::string::npos);
  EXPECT_NE(text.find("u=1 v=1 rhs=1/1 cols=0,1\n"), std::string::npos);
  EXPECT_EQ(format_nullspace({{{0, Rational(1)}, {3, Rational(-1, 2)}}}), "0:1/1 3:-1/2\n");
}

TEST(EstimateExport, Header) {
  const auto est = empirical_transition_estimate(fixtures::flip_example(0), 1, 10, 9, {0});
  const std::string text = format_estimate(est);
  EXPECT_NE(text.find("# empirical steps=10 seed=9\n"), std::string::npos);
}

TEST(Lists, TuplesAndRationals) {
  EXPECT_EQ(parse_tuple("1,2,1,4,1,6"), (PointTuple{{1, 2, 1, 4, 1, 6}}));
  EXPECT_THROW(parse_tuple("1,,2"), InputError);
  EXPECT_THROW(parse_tuple("1,2,"), InputError);
  EXPECT_THROW(parse_tuple("1,x"), InputError);
  EXPECT_THROW(parse_tuple(""), InputError);
  EXPECT_EQ(parse_rational_list("0,1/4,1"), (std::vector<Rational>{0, Rational(1, 4), 1}));
}

TEST(TrajectoryExport, JsonLines) {
  const TrajectorySample s = simulate_flow(fixtures::flip_example(Rational(1, 2)), 1.0, 5.0, 2, true);
  const std::string text = format_trajectory(s);
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), s.jump_times.size());
  if (!s.jump_times.empty()) {
    const Json first = Json::parse(text.substr(0, text.find('\n')));
    EXPECT_TRUE(first.contains("K"));
    EXPECT_EQ(first["t"].get<double>(), s.jump_times[0]);
  }
}
