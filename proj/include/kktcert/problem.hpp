#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "kktcert/errors.hpp"
#include "kktcert/expr.hpp"

namespace kktcert {

inline constexpr double kDefaultFeasTol = 1e-8;
inline constexpr double kDefaultActiveTol = 1e-6;

/// min f(x)  s.t.  c_i(x) = 0 (i in eq ids),  c_i(x) >= 0 (i in ineq ids),
/// over x in R^n. Equality and inequality constraints live in separate
/// id-keyed maps, so their index sets cannot collide by construction.
struct Problem {
  std::string name;
  int n = 0;
  Expr objective;
  std::map<int, Expr> eq_constraints;
  std::map<int, Expr> ineq_constraints;

  Problem() = default;
  Problem(std::string name_, int n_, Expr objective_,
          std::map<int, Expr> eq, std::map<int, Expr> ineq)
      : name(std::move(name_)),
        n(n_),
        objective(std::move(objective_)),
        eq_constraints(std::move(eq)),
        ineq_constraints(std::move(ineq)) {
    if (n <= 0) throw PreconditionError("problem dimension must be positive");
    check_dim(objective, "objective");
    for (const auto& [id, e] : eq_constraints) {
      check_dim(e, "equality constraint " + std::to_string(id));
    }
    for (const auto& [id, e] : ineq_constraints) {
      check_dim(e, "inequality constraint " + std::to_string(id));
    }
  }

 private:
  void check_dim(const Expr& e, const std::string& what) const {
    if (!e.valid()) throw PreconditionError(what + " is empty");
    if (e.dim() != n) {
      throw PreconditionError(what + " has dimension " +
                              std::to_string(e.dim()) + ", expected " +
                              std::to_string(n));
    }
  }
};

/// Lagrange multipliers: lambda keyed by equality id, mu by inequality id.
struct Multipliers {
  std::map<int, double> lambda;
  std::map<int, double> mu;
};

namespace detail {

inline void check_multiplier_keys(const Problem& p, const Multipliers& m) {
  auto keys_match = [](const auto& mult, const auto& cons) {
    if (mult.size() != cons.size()) return false;
    auto it = cons.begin();
    for (const auto& [id, v] : mult) {
      (void)v;
      if (it == cons.end() || it->first != id) return false;
      ++it;
    }
    return true;
  };
  if (!keys_match(m.lambda, p.eq_constraints)) {
    throw PreconditionError("lambda keys do not match equality constraint ids");
  }
  if (!keys_match(m.mu, p.ineq_constraints)) {
    throw PreconditionError("mu keys do not match inequality constraint ids");
  }
}

inline void check_point_dim(const Problem& p, const Eigen::VectorXd& x) {
  if (static_cast<int>(x.size()) != p.n) {
    throw PreconditionError("point dimension " + std::to_string(x.size()) +
                            " does not match problem dimension " +
                            std::to_string(p.n));
  }
}

}  // namespace detail

/// All multipliers zero, keyed to match p.
inline Multipliers zero_multipliers(const Problem& p) {
  Multipliers m;
  for (const auto& [id, e] : p.eq_constraints) {
    (void)e;
    m.lambda[id] = 0.0;
  }
  for (const auto& [id, e] : p.ineq_constraints) {
    (void)e;
    m.mu[id] = 0.0;
  }
  return m;
}

struct FeasibilityReport {
  bool feasible = false;
  double max_eq_violation = 0.0;
  double max_ineq_violation = 0.0;
  std::map<int, double> eq_values;
  std::map<int, double> ineq_values;
};

inline FeasibilityReport check_feasible(const Problem& p,
                                        const Eigen::VectorXd& x,
                                        double tol_feas = kDefaultFeasTol) {
  detail::check_point_dim(p, x);
  if (!(tol_feas > 0.0)) throw PreconditionError("tol_feas must be positive");
  FeasibilityReport report;
  for (const auto& [id, c] : p.eq_constraints) {
    double v = c.eval(x);
    report.eq_values[id] = v;
    report.max_eq_violation = std::max(report.max_eq_violation, std::abs(v));
  }
  for (const auto& [id, c] : p.ineq_constraints) {
    double v = c.eval(x);
    report.ineq_values[id] = v;
    report.max_ineq_violation = std::max(report.max_ineq_violation,
                                         std::max(0.0, -v));
  }
  report.feasible = report.max_eq_violation <= tol_feas &&
                    report.max_ineq_violation <= tol_feas;
  return report;
}

/// Equality ids plus inequality ids with |c_i(x)| <= tol_act, ascending.
struct ActiveSet {
  std::vector<int> eq_ids;
  std::vector<int> active_ineq_ids;
  Eigen::VectorXd at_point;
  double tol_act = kDefaultActiveTol;
};

inline ActiveSet active_set(const Problem& p, const Eigen::VectorXd& x,
                            double tol_act = kDefaultActiveTol,
                            double tol_feas = kDefaultFeasTol) {
  if (!(tol_feas <= tol_act)) {
    throw PreconditionError("tol_feas must not exceed tol_act");
  }
  FeasibilityReport feas = check_feasible(p, x, tol_feas);
  if (!feas.feasible) {
    throw PreconditionError("point is infeasible (eq violation " +
                            std::to_string(feas.max_eq_violation) +
                            ", ineq violation " +
                            std::to_string(feas.max_ineq_violation) + ")");
  }
  ActiveSet as;
  as.at_point = x;
  as.tol_act = tol_act;
  for (const auto& [id, v] : feas.eq_values) {
    (void)v;
    as.eq_ids.push_back(id);
  }
  for (const auto& [id, v] : feas.ineq_values) {
    if (std::abs(v) <= tol_act) as.active_ineq_ids.push_back(id);
  }
  return as;
}

/// f(x) - sum lambda_i c_i(x) - sum mu_i c_i(x)
inline double lagrangian(const Problem& p, const Eigen::VectorXd& x,
                         const Multipliers& m) {
  detail::check_point_dim(p, x);
  detail::check_multiplier_keys(p, m);
  double value = p.objective.eval(x);
  for (const auto& [id, c] : p.eq_constraints) {
    value -= m.lambda.at(id) * c.eval(x);
  }
  for (const auto& [id, c] : p.ineq_constraints) {
    value -= m.mu.at(id) * c.eval(x);
  }
  return value;
}

/// grad f(x) - sum lambda_i grad c_i(x) - sum mu_i grad c_i(x)
inline Eigen::VectorXd lagrangian_grad(const Problem& p,
                                       const Eigen::VectorXd& x,
                                       const Multipliers& m) {
  detail::check_point_dim(p, x);
  detail::check_multiplier_keys(p, m);
  Eigen::VectorXd g = p.objective.grad(x);
  for (const auto& [id, c] : p.eq_constraints) {
    double lam = m.lambda.at(id);
    if (lam != 0.0) g -= lam * c.grad(x);
  }
  for (const auto& [id, c] : p.ineq_constraints) {
    double mu = m.mu.at(id);
    if (mu != 0.0) g -= mu * c.grad(x);
  }
  return g;
}

/// Heuristic falsifier for local minimality: samples k points uniformly in
/// the ball of the given radius around x and reports false iff a feasible
/// sample strictly improves the objective. Not a proof in either direction.
inline bool sampled_local_min_check(const Problem& p, const Eigen::VectorXd& x,
                                    double radius, int samples,
                                    std::uint64_t seed,
                                    double tol_feas = kDefaultFeasTol) {
  detail::check_point_dim(p, x);
  FeasibilityReport feas = check_feasible(p, x, tol_feas);
  if (!feas.feasible) throw PreconditionError("point is infeasible");
  double fx = p.objective.eval(x);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd dir(p.n);
    for (int i = 0; i < p.n; ++i) dir[i] = gauss(rng);
    double norm = dir.norm();
    if (norm == 0.0) continue;
    double r = radius * std::pow(unif(rng), 1.0 / p.n);
    Eigen::VectorXd y = x + (r / norm) * dir;
    try {
      if (!check_feasible(p, y, tol_feas).feasible) continue;
      if (p.objective.eval(y) < fx - 1e-12) return false;
    } catch (const DomainError&) {
      continue;  // a sample outside the expressions' domain is not evidence
    }
  }
  return true;
}

}  // namespace kktcert
