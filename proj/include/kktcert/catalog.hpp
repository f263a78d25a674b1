#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kktcert/errors.hpp"
#include "kktcert/expr.hpp"
#include "kktcert/kkt.hpp"
#include "kktcert/problem.hpp"

namespace kktcert {

/// An analytic test problem with hand-derived ground truth: the minimizer
/// (or a deliberately non-optimal point), its multipliers when they exist,
/// the expected constraint-qualification flags, and the dual value at the
/// known multipliers. Each `note` records the hand derivation.
struct CatalogEntry {
  std::string name;
  Problem problem;
  Eigen::VectorXd known_point;
  std::optional<Multipliers> known_multipliers;
  bool expected_licq = false;
  bool expected_linear_cq = false;
  Verdict expected_verdict = Verdict::Inconclusive;
  bool convexity_declared = false;
  std::optional<double> known_dual_value;          // q at known_multipliers
  std::optional<Eigen::VectorXd> expected_descent;  // for refuted entries
  std::string note;
};

namespace detail {

inline Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

inline Eigen::VectorXd vec1(double a) {
  Eigen::VectorXd v(1);
  v << a;
  return v;
}

inline std::vector<CatalogEntry> build_catalog() {
  std::vector<CatalogEntry> entries;

  {
    CatalogEntry e;
    e.name = "linear-over-disk";
    e.problem = Problem("linear-over-disk", 2, parse("x1 + x2", 2), {},
                        {{1, parse("2 - x1^2 - x2^2", 2)}});
    e.known_point = vec2(-1.0, -1.0);
    Multipliers m;
    m.mu[1] = 0.5;
    e.known_multipliers = m;
    e.expected_licq = true;
    e.expected_linear_cq = false;
    e.expected_verdict = Verdict::Certified;
    e.convexity_declared = true;
    e.known_dual_value = -2.0;
    e.note = "grad f = (1,1) = mu * (2,2) at (-1,-1) gives mu = 1/2; "
             "q(mu) = -1/(2 mu) - 2 mu, so q(1/2) = -2 = f(-1,-1)";
    entries.push_back(std::move(e));
  }

  {
    CatalogEntry e;
    e.name = "quadratic-affine-eq";
    e.problem = Problem("quadratic-affine-eq", 2, parse("x1^2 + x2^2", 2),
                        {{1, parse("x1 + x2 - 1", 2)}}, {});
    e.known_point = vec2(0.5, 0.5);
    Multipliers m;
    m.lambda[1] = 1.0;
    e.known_multipliers = m;
    e.expected_licq = true;
    e.expected_linear_cq = true;
    e.expected_verdict = Verdict::Certified;
    e.convexity_declared = true;
    e.known_dual_value = 0.5;
    e.note = "grad f = (1,1) = lambda * (1,1) at (1/2,1/2) gives lambda = 1; "
             "q(lambda) = lambda - lambda^2/2, so q(1) = 1/2 = f(1/2,1/2)";
    entries.push_back(std::move(e));
  }

  {
    CatalogEntry e;
    e.name = "scalar-bound";
    e.problem = Problem("scalar-bound", 1, parse("x1^2", 1), {},
                        {{1, parse("x1 - 1", 1)}});
    e.known_point = vec1(1.0);
    Multipliers m;
    m.mu[1] = 2.0;
    e.known_multipliers = m;
    e.expected_licq = true;
    e.expected_linear_cq = true;
    e.expected_verdict = Verdict::Certified;
    e.convexity_declared = true;
    e.known_dual_value = 1.0;
    e.note = "2 x = mu at x = 1 gives mu = 2; L = x^2 - mu (x - 1) has "
             "minimizer x = mu/2, so q(mu) = mu - mu^2/4 and q(2) = 1";
    entries.push_back(std::move(e));
  }

  {
    CatalogEntry e;
    e.name = "lp-ray";
    e.problem =
        Problem("lp-ray", 1, parse("x1", 1), {}, {{1, parse("x1", 1)}});
    e.known_point = vec1(0.0);
    Multipliers m;
    m.mu[1] = 1.0;
    e.known_multipliers = m;
    e.expected_licq = true;
    e.expected_linear_cq = true;
    e.expected_verdict = Verdict::Certified;
    e.convexity_declared = true;
    e.known_dual_value = 0.0;
    e.note = "L = (1 - mu) x is bounded below only at mu = 1 where q = 0; "
             "the dual domain is the single point mu = 1";
    entries.push_back(std::move(e));
  }

  {
    CatalogEntry e;
    e.name = "degenerate-duplicate";
    e.problem = Problem("degenerate-duplicate", 2, parse("x1 + x2", 2), {},
                        {{1, parse("2 - x1^2 - x2^2", 2)},
                         {2, parse("2 - x1^2 - x2^2", 2)}});
    e.known_point = vec2(-1.0, -1.0);
    Multipliers m;
    m.mu[1] = 0.25;
    m.mu[2] = 0.25;
    e.known_multipliers = m;
    e.expected_licq = false;  // duplicated gradients are dependent
    e.expected_linear_cq = false;
    e.expected_verdict = Verdict::Inconclusive;
    e.convexity_declared = true;
    e.known_dual_value = -2.0;
    e.note = "same minimizer as linear-over-disk; any split mu1 + mu2 = 1/2 "
             "satisfies KKT but both CQs fail, so the verdict stays "
             "inconclusive";
    entries.push_back(std::move(e));
  }

  {
    CatalogEntry e;
    e.name = "non-kkt-point";
    e.problem = Problem("non-kkt-point", 2, parse("x1 + x2", 2), {},
                        {{1, parse("2 - x1^2 - x2^2", 2)}});
    e.known_point = vec2(1.0, 1.0);
    e.known_multipliers = std::nullopt;
    e.expected_licq = true;  // gradient (-2,-2) is nonzero at (1,1)
    e.expected_linear_cq = false;
    e.expected_verdict = Verdict::Refuted;
    e.convexity_declared = true;
    const double s = 1.0 / std::sqrt(2.0);
    e.expected_descent = vec2(-s, -s);
    e.note = "projection of grad f = (1,1) onto cone{(-2,-2)} is 0, so the "
             "separating direction is -(1,1)/sqrt(2)";
    entries.push_back(std::move(e));
  }

  return entries;
}

}  // namespace detail

inline const std::vector<CatalogEntry>& catalog_entries() {
  static const std::vector<CatalogEntry> entries = detail::build_catalog();
  return entries;
}

inline const CatalogEntry& find_catalog_entry(const std::string& name) {
  for (const auto& e : catalog_entries()) {
    if (e.name == name) return e;
  }
  throw PreconditionError("no catalog entry named '" + name + "'");
}

}  // namespace kktcert
