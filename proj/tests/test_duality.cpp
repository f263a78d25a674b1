#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "kktcert/duality.hpp"
#include "kktcert/catalog.hpp"
#include "oracles.hpp"

using namespace kktcert;
using Catch::Approx;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<int>(vals.size()));
  int i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

Multipliers single_mu(const Problem& p, double value) {
  Multipliers m = zero_multipliers(p);
  m.mu.begin()->second = value;
  return m;
}

}  // namespace

TEST_CASE("ExtendedReal total order") {
  ExtendedReal ni = ExtendedReal::neg_inf();
  ExtendedReal pi = ExtendedReal::pos_inf();
  ExtendedReal a = ExtendedReal::finite(-3.0);
  ExtendedReal b = ExtendedReal::finite(4.0);
  REQUIRE(ni < a);
  REQUIRE(a < b);
  REQUIRE(b < pi);
  REQUIRE(ni < pi);
  REQUIRE(ni <= ni);
  REQUIRE(a <= a);
  REQUIRE(ni.to_string() == "-inf");
  REQUIRE_FALSE(pi < b);
  REQUIRE_THROWS_AS(ni.value(), PreconditionError);
  REQUIRE_THROWS_AS(
      ExtendedReal::finite(std::numeric_limits<double>::infinity()),
      PreconditionError);
}

TEST_CASE("dual_objective hand cases") {
  SECTION("unconstrained quadratic converges to zero") {
    Problem p("quad", 1, parse("x1^2", 1), {}, {});
    DualEval q = dual_objective(p, zero_multipliers(p));
    REQUIRE(q.status == DualStatus::Converged);
    REQUIRE(q.value.value() == Approx(0.0).margin(1e-10));
    REQUIRE(q.argmin.has_value());
  }
  SECTION("lp-ray at mu = 1 is constant zero") {
    Problem p("ray", 1, parse("x1", 1), {}, {{1, parse("x1", 1)}});
    DualEval q = dual_objective(p, single_mu(p, 1.0));
    REQUIRE(q.status == DualStatus::Converged);
    REQUIRE(q.value.value() == Approx(0.0).margin(1e-12));
  }
  SECTION("lp-ray at mu = 0.5 diverges to -inf") {
    Problem p("ray", 1, parse("x1", 1), {}, {{1, parse("x1", 1)}});
    DualEval q = dual_objective(p, single_mu(p, 0.5));
    REQUIRE(q.status == DualStatus::UnboundedBelowDetected);
    REQUIRE(q.value.is_neg_inf());
    REQUIRE_FALSE(q.argmin.has_value());
  }
}

TEST_CASE("dual_objective matches the scalar-bound closed form") {
  // L = x^2 - mu (x - 1) has minimizer mu/2, so q(mu) = mu - mu^2/4.
  Problem p("bound", 1, parse("x1^2", 1), {}, {{1, parse("x1 - 1", 1)}});
  for (double mu : {0.0, 0.5, 1.0, 2.0, 3.0}) {
    DualEval q = dual_objective(p, single_mu(p, mu));
    REQUIRE(q.status == DualStatus::Converged);
    REQUIRE(q.value.value() == Approx(mu - mu * mu / 4.0).margin(1e-8));
    REQUIRE(q.argmin->coeff(0) == Approx(mu / 2.0).margin(1e-6));
  }
}

TEST_CASE("dual_objective converged values satisfy their own invariants") {
  Problem p("disk", 2, parse("x1 + x2", 2), {},
            {{1, parse("2 - x1^2 - x2^2", 2)}});
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> mu_dist(0.05, 3.0);
  for (int trial = 0; trial < 25; ++trial) {
    Multipliers m = single_mu(p, mu_dist(rng));
    DualEval q = dual_objective(p, m);
    REQUIRE(q.status == DualStatus::Converged);
    // value = L(argmin) and the gradient is numerically stationary
    const double L = lagrangian(p, *q.argmin, m);
    REQUIRE(std::abs(L - q.value.value()) <= 1e-10);
    REQUIRE(lagrangian_grad(p, *q.argmin, m).lpNorm<Eigen::Infinity>() <=
            1e-8 * (1.0 + std::abs(L)));
    REQUIRE(q.value.value() <= lagrangian(p, Eigen::VectorXd::Zero(2), m));
  }
}

TEST_CASE("dual_value_never_posinf") {
  Problem p("mixed", 2, parse("x1^2 + x2^2", 2),
            {{0, parse("x1 + x2 - 1", 2)}},
            {{1, parse("2 - x1^2 - x2^2", 2)}});
  REQUIRE(dual_value_never_posinf(p, 25, 9001));
  Problem free_p("free", 1, parse("x1^2", 1), {}, {});
  REQUIRE(dual_value_never_posinf(free_p, 10, 1));
}

TEST_CASE("weak_duality_check hand cases") {
  Problem p("bound", 1, parse("x1^2", 1), {}, {{1, parse("x1 - 1", 1)}});
  std::vector<Eigen::VectorXd> feas = {vec({1.0}), vec({1.5}), vec({3.0})};

  SECTION("gap closes exactly at the optimal multiplier") {
    WeakDualityResult r = weak_duality_check(p, {single_mu(p, 2.0)}, feas);
    REQUIRE(r.ok);
    REQUIRE(r.worst_gap == Approx(0.0).margin(1e-8));  // f(1) = 1 = q(2)
  }
  SECTION("interior multiplier keeps a positive gap") {
    WeakDualityResult r = weak_duality_check(p, {single_mu(p, 1.0)}, feas);
    REQUIRE(r.ok);
    REQUIRE(r.worst_gap == Approx(0.25).margin(1e-8));  // f(1) - q(1)
  }
  SECTION("zero multiplier gives q = 0") {
    WeakDualityResult r = weak_duality_check(p, {single_mu(p, 0.0)}, feas);
    REQUIRE(r.ok);
    REQUIRE(r.worst_gap == Approx(1.0).margin(1e-8));  // f(1) - 0
  }
  SECTION("negative mu sample is a precondition error") {
    REQUIRE_THROWS_AS(weak_duality_check(p, {single_mu(p, -0.5)}, feas),
                      PreconditionError);
  }
  SECTION("infeasible sample is a precondition error") {
    REQUIRE_THROWS_AS(
        weak_duality_check(p, {single_mu(p, 1.0)}, {vec({0.0})}),
        PreconditionError);
  }
}

TEST_CASE("kkt_dual_optimality_check hand cases") {
  SECTION("scalar bound: q(2) = f(1) and the sweep stays below") {
    Problem p("bound", 1, parse("x1^2", 1), {}, {{1, parse("x1 - 1", 1)}});
    std::vector<Multipliers> sweep;
    for (double mu : {0.0, 1.0, 3.0}) sweep.push_back(single_mu(p, mu));
    REQUIRE(kkt_dual_optimality_check(p, vec({1.0}), single_mu(p, 2.0),
                                      sweep));
  }
  SECTION("disk: q(1/2) = f(-1,-1) = -2") {
    Problem p("disk", 2, parse("x1 + x2", 2), {},
              {{1, parse("2 - x1^2 - x2^2", 2)}});
    std::vector<Multipliers> sweep;
    for (double mu : {0.1, 0.25, 0.5, 1.0, 2.0}) {
      sweep.push_back(single_mu(p, mu));
    }
    REQUIRE(kkt_dual_optimality_check(p, vec({-1.0, -1.0}),
                                      single_mu(p, 0.5), sweep));
  }
  SECTION("non-KKT multipliers are a precondition error") {
    Problem p("bound", 1, parse("x1^2", 1), {}, {{1, parse("x1 - 1", 1)}});
    REQUIRE_THROWS_AS(
        kkt_dual_optimality_check(p, vec({1.0}), single_mu(p, 0.5), {}),
        PreconditionError);
  }
  SECTION("equality constraints are rejected") {
    Problem p("line", 2, parse("x1^2 + x2^2", 2),
              {{0, parse("x1 + x2 - 1", 2)}}, {});
    Multipliers m = zero_multipliers(p);
    m.lambda[0] = 1.0;
    REQUIRE_THROWS_AS(
        kkt_dual_optimality_check(p, vec({0.5, 0.5}), m, {}),
        PreconditionError);
  }
}
