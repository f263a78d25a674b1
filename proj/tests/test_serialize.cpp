#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "kktcert/catalog.hpp"
#include "kktcert/serialize.hpp"

using namespace kktcert;
using Catch::Approx;

TEST_CASE("parse_point_csv") {
  Eigen::VectorXd v = parse_point_csv("-1,-1");
  REQUIRE(v.size() == 2);
  REQUIRE(v[0] == -1.0);
  REQUIRE(v[1] == -1.0);

  v = parse_point_csv(" 1.5e-3 , -2E2 , 0.25 ");
  REQUIRE(v.size() == 3);
  REQUIRE(v[0] == Approx(1.5e-3));
  REQUIRE(v[1] == Approx(-200.0));

  REQUIRE_THROWS_AS(parse_point_csv("1,,2"), PreconditionError);
  REQUIRE_THROWS_AS(parse_point_csv("1,abc"), PreconditionError);
  REQUIRE_THROWS_AS(parse_point_csv(""), PreconditionError);
}

TEST_CASE("problem files reject duplicate ids across lists") {
  nlohmann::json j = {
      {"name", "bad"},
      {"n", 2},
      {"objective", "x1"},
      {"eq", {{{"id", 1}, {"expr", "x1 - 1"}}}},
      {"ineq", {{{"id", 1}, {"expr", "x2"}}}},
  };
  REQUIRE_THROWS_AS(problem_from_json(j), PreconditionError);
}

TEST_CASE("problem files survive a save/load cycle") {
  const Problem& p = find_catalog_entry("quadratic-affine-eq").problem;
  const std::string path = "kktcert_test_problem.json";
  save_problem(p, path);
  Problem loaded = load_problem(path);
  std::remove(path.c_str());
  REQUIRE(loaded.name == p.name);
  REQUIRE(structurally_equal(loaded.objective, p.objective));
  REQUIRE(loaded.eq_constraints.size() == 1);
}

TEST_CASE("report JSON round-trips exactly") {
  auto require_roundtrip = [](const KKTReport& r) {
    nlohmann::json j = report_to_json(r);
    KKTReport back = report_from_json(j);
    REQUIRE(back.verdict == r.verdict);
    REQUIRE(back.feasible == r.feasible);
    REQUIRE(back.primal_eq_violation == r.primal_eq_violation);
    REQUIRE(back.primal_ineq_violation == r.primal_ineq_violation);
    REQUIRE(back.stationarity_residual == r.stationarity_residual);
    REQUIRE(back.dual_min == r.dual_min);
    REQUIRE(back.complementarity_residual == r.complementarity_residual);
    REQUIRE(back.multipliers.has_value() == r.multipliers.has_value());
    if (r.multipliers) {
      REQUIRE(back.multipliers->lambda == r.multipliers->lambda);
      REQUIRE(back.multipliers->mu == r.multipliers->mu);
    }
    REQUIRE(back.cq.licq == r.cq.licq);
    REQUIRE(back.cq.licq_smallest_singular_value ==
            r.cq.licq_smallest_singular_value);
    REQUIRE(back.cq.linear_cq == r.cq.linear_cq);
    REQUIRE(back.cq.active_count == r.cq.active_count);
    REQUIRE(back.cq.note == r.cq.note);
    REQUIRE(back.descent.has_value() == r.descent.has_value());
    if (r.descent) {
      REQUIRE(back.descent->d == r.descent->d);
      REQUIRE(back.descent->g_dot_d == r.descent->g_dot_d);
      REQUIRE(back.descent->marginal == r.descent->marginal);
    }
    REQUIRE(back.descent_is_candidate == r.descent_is_candidate);
    REQUIRE(back.note == r.note);
    // and the serialization itself is stable
    REQUIRE(report_to_json(back).dump() == j.dump());
  };

  const auto& disk = find_catalog_entry("linear-over-disk");
  require_roundtrip(certify_first_order(disk.problem, disk.known_point));

  const auto& bad = find_catalog_entry("non-kkt-point");
  require_roundtrip(certify_first_order(bad.problem, bad.known_point));

  Eigen::VectorXd infeasible(2);
  infeasible << 5, 5;
  require_roundtrip(certify_first_order(disk.problem, infeasible));

  // a report with an infinite singular value (no active constraints)
  Eigen::VectorXd interior(2);
  interior << 0, 0;
  KKTReport r = certify_first_order(disk.problem, interior);
  REQUIRE(std::isinf(r.cq.licq_smallest_singular_value));
  require_roundtrip(r);
}

TEST_CASE("generator files parse free and nonneg lines") {
  std::istringstream in(
      "# a cone in the plane\n"
      "nonneg: 1,0\n"
      "nonneg: 2,2\n"
      "free: 0,1\n"
      "\n");
  ConeSpec k = parse_generator_file(in);
  REQUIRE(k.ambient_dim == 2);
  REQUIRE(k.nonneg_generators.size() == 2);
  REQUIRE(k.free_generators.size() == 1);
  REQUIRE(k.nonneg_generators[1][0] == 2.0);

  std::istringstream bad("nonneg: 1,0\nnonneg: 1,2,3\n");
  REQUIRE_THROWS_AS(parse_generator_file(bad), PreconditionError);
  std::istringstream unknown("positive: 1,0\n");
  REQUIRE_THROWS_AS(parse_generator_file(unknown), PreconditionError);
  std::istringstream empty("# nothing\n");
  REQUIRE_THROWS_AS(parse_generator_file(empty), PreconditionError);
}
