#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "kktcert/errors.hpp"
#include "kktcert/problem.hpp"
#include "kktcert/qualifications.hpp"

namespace kktcert {

struct TangentStep {
  double t = 0.0;
  Eigen::VectorXd z;
  bool feasible = false;
  double ratio_error = 0.0;  // ||(z - x)/t - d||
};

/// Convergence record of the feasible-sequence construction witnessing that
/// d is a tangent direction. A failed probe is evidence, not proof, that d
/// is not tangent; the type says "not certified", never "refuted".
struct TangentProbeResult {
  bool certified = false;
  std::vector<TangentStep> steps;
  std::optional<std::string> failure_reason;
};

/// The Newton system R(z,t) = [c(z) - t A d; Z^T (z - x* - t d)] together
/// with the frozen Jacobian blocks. Rows of A follow the ascending-eq then
/// ascending-active-ineq convention.
struct ImplicitSystem {
  Eigen::MatrixXd A;  // m x n active gradients at x_star
  Eigen::MatrixXd Z;  // n x (n-m) orthonormal null basis, A Z = 0
  Eigen::VectorXd x_star;
  Eigen::VectorXd d;
  std::vector<int> eq_ids;
  std::vector<int> active_ineq_ids;
};

struct TangentSchedule {
  double t0 = 0.1;
  double rho = 0.5;
  int K = 12;  // probes t0 * rho^k for k = 0..K
};

struct NewtonOptions {
  int max_iters = 50;
  double tol_res = 1e-12;
};

/// Smallest value of an inactive inequality constraint at x; +inf when every
/// inequality is active or there are none. Bounds how far one can move from
/// x before an inactive constraint could bind.
inline double inactive_margin(const Problem& p, const Eigen::VectorXd& x,
                              double tol_act = kDefaultActiveTol) {
  FeasibilityReport feas = check_feasible(p, x);
  if (!feas.feasible) throw PreconditionError("point is infeasible");
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& [id, v] : feas.ineq_values) {
    (void)id;
    if (std::abs(v) > tol_act) margin = std::min(margin, v);
  }
  return margin;
}

namespace detail {

inline double max_constraint_gradient_norm(const Problem& p,
                                           const Eigen::VectorXd& x) {
  double gmax = 0.0;
  for (const auto& [id, c] : p.eq_constraints) {
    (void)id;
    gmax = std::max(gmax, c.grad(x).norm());
  }
  for (const auto& [id, c] : p.ineq_constraints) {
    (void)id;
    gmax = std::max(gmax, c.grad(x).norm());
  }
  return gmax;
}

inline double default_t0(const Problem& p, const Eigen::VectorXd& x,
                         double tol_act) {
  const double margin = inactive_margin(p, x, tol_act);
  const double gmax = max_constraint_gradient_norm(p, x);
  if (!std::isfinite(margin) || gmax <= 1e-12) return 0.1;
  return std::min(0.1, margin / (4.0 * gmax));
}

}  // namespace detail

inline ImplicitSystem build_implicit_system(const Problem& p,
                                            const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& d,
                                            double tol_act,
                                            double tol_rank) {
  LinearizedCone lc = linearized_cone(p, x, tol_act);
  ImplicitSystem sys;
  sys.x_star = x;
  sys.d = d;
  for (const auto& [id, g] : lc.eq_gradients) {
    (void)g;
    sys.eq_ids.push_back(id);
  }
  for (const auto& [id, g] : lc.active_ineq_gradients) {
    (void)g;
    sys.active_ineq_ids.push_back(id);
  }
  sys.A = active_gradient_matrix(lc);
  sys.Z = sys.A.rows() == 0 ? Eigen::MatrixXd::Identity(p.n, p.n)
                            : null_space_basis(sys.A, tol_rank);
  return sys;
}

namespace detail {

inline Eigen::VectorXd implicit_residual(const Problem& p,
                                         const ImplicitSystem& sys,
                                         const Eigen::VectorXd& z, double t) {
  const int m = static_cast<int>(sys.A.rows());
  const int n = static_cast<int>(sys.x_star.size());
  Eigen::VectorXd r(n);
  const Eigen::VectorXd ad = sys.A * sys.d;
  int row = 0;
  for (int id : sys.eq_ids) {
    r[row] = p.eq_constraints.at(id).eval(z) - t * ad[row];
    ++row;
  }
  for (int id : sys.active_ineq_ids) {
    r[row] = p.ineq_constraints.at(id).eval(z) - t * ad[row];
    ++row;
  }
  r.tail(n - m) = sys.Z.transpose() * (z - sys.x_star - t * sys.d);
  return r;
}

// Newton on R(z, t) = 0 from z0 with a fixed solver for the Jacobian. Stops
// when ||R|| <= tol; returns the final iterate and whether it converged.
template <class Solver>
std::pair<Eigen::VectorXd, bool> newton_fixed_jacobian(
    const Problem& p, const ImplicitSystem& sys, const Solver& solver,
    Eigen::VectorXd z, double t, double tol, int max_iters) {
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd r = implicit_residual(p, sys, z, t);
    if (r.norm() <= tol) return {z, true};
    z -= solver.solve(r);
  }
  Eigen::VectorXd r = implicit_residual(p, sys, z, t);
  return {z, r.norm() <= tol};
}

// Fallback for when the frozen Jacobian stalls: full Newton with a central
// finite-difference Jacobian of R in z, refreshed each iteration.
inline std::pair<Eigen::VectorXd, bool> newton_fd_jacobian(
    const Problem& p, const ImplicitSystem& sys, Eigen::VectorXd z, double t,
    double tol, int max_iters) {
  const int n = static_cast<int>(z.size());
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd r = implicit_residual(p, sys, z, t);
    if (r.norm() <= tol) return {z, true};
    Eigen::MatrixXd J(n, n);
    for (int j = 0; j < n; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(z[j]));
      Eigen::VectorXd zp = z, zm = z;
      zp[j] += h;
      zm[j] -= h;
      J.col(j) = (implicit_residual(p, sys, zp, t) -
                  implicit_residual(p, sys, zm, t)) /
                 (2.0 * h);
    }
    z -= J.partialPivLu().solve(r);
  }
  Eigen::VectorXd r = implicit_residual(p, sys, z, t);
  return {z, r.norm() <= tol};
}

}  // namespace detail

/// Certify d in the tangent cone at x under LICQ by running the
/// implicit-function construction: for each t_k in the schedule, solve
/// R(z, t_k) = 0 by Newton from z = x + t_k d with the constant Jacobian
/// M = [A; Z^T], check feasibility of the solution against every constraint
/// (inactive ones included), and require the ratio error ||(z-x)/t - d|| to
/// fall below tol_tan.
///
/// Preconditions (violations throw, they are not probe failures): x
/// feasible, d nonzero, LICQ at x, and d in the linearized feasible cone.
inline TangentProbeResult probe_tangent_licq(
    const Problem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& d,
    std::optional<TangentSchedule> schedule = std::nullopt,
    double tol_tan = 1e-4, NewtonOptions newton = {},
    double tol_act = kDefaultActiveTol, double tol_feas = kDefaultFeasTol,
    double tol_rank = kDefaultRankTol) {
  if (!check_feasible(p, x, tol_feas).feasible) {
    throw PreconditionError("x is infeasible");
  }
  if (d.norm() == 0.0) throw PreconditionError("direction must be nonzero");
  CQStatus cq = check_licq(p, x, tol_act, tol_rank);
  if (!cq.licq) throw PreconditionError("CQ not satisfied: LICQ fails at x");
  LinearizedCone lc = linearized_cone(p, x, tol_act);
  if (!in_linearized_cone(lc, d, 1e-8)) {
    throw PreconditionError("d is not in the linearized feasible cone");
  }

  ImplicitSystem sys = build_implicit_system(p, x, d, tol_act, tol_rank);
  const int n = p.n;
  const int m = static_cast<int>(sys.A.rows());
  Eigen::MatrixXd M(n, n);
  M.topRows(m) = sys.A;
  M.bottomRows(n - m) = sys.Z.transpose();
  Eigen::PartialPivLU<Eigen::MatrixXd> m_lu(M);

  TangentSchedule sched = schedule.value_or(TangentSchedule{
      detail::default_t0(p, x, tol_act), 0.5, 12});
  if (sched.K < 0 || !(sched.t0 > 0.0) || !(sched.rho > 0.0 && sched.rho < 1.0)) {
    throw PreconditionError("invalid tangent schedule");
  }

  TangentProbeResult result;
  bool all_ok = true;
  for (int k = 0; k <= sched.K; ++k) {
    const double t = sched.t0 * std::pow(sched.rho, k);
    const double tol_res = newton.tol_res * (1.0 + d.norm() * t);
    TangentStep step;
    step.t = t;
    bool converged = false;
    try {
      auto [z, ok] = detail::newton_fixed_jacobian(
          p, sys, m_lu, x + t * d, t, tol_res, newton.max_iters);
      if (!ok) {
        std::tie(z, ok) = detail::newton_fd_jacobian(p, sys, x + t * d, t,
                                                     tol_res,
                                                     newton.max_iters);
      }
      step.z = z;
      converged = ok;
    } catch (const DomainError& e) {
      step.z = x + t * d;
      result.failure_reason = "Newton left the expression domain at t = " +
                              std::to_string(t) + " (" + e.what() + ")";
      result.steps.push_back(step);
      all_ok = false;
      break;
    }
    step.ratio_error = ((step.z - x) / t - d).norm();
    if (!converged) {
      result.failure_reason =
          "Newton did not converge at t = " + std::to_string(t);
      result.steps.push_back(step);
      all_ok = false;
      break;
    }
    try {
      step.feasible = check_feasible(p, step.z, tol_feas).feasible;
    } catch (const DomainError&) {
      step.feasible = false;
    }
    result.steps.push_back(step);
    if (!step.feasible) {
      result.failure_reason =
          "solution infeasible at t = " + std::to_string(t);
      all_ok = false;
      break;
    }
  }

  if (all_ok) {
    const double final_err = result.steps.back().ratio_error;
    const double first_err = result.steps.front().ratio_error;
    // Decrease is only meaningful above the rounding floor: (z - x)/t
    // amplifies coordinate rounding by 1/t, so exactly-linear problems sit
    // on noise of order 1e-12 from the first step.
    const bool decreasing = final_err <= first_err + 1e-12 ||
                            final_err <= 1e-8;
    if (final_err <= tol_tan && decreasing) {
      result.certified = true;
    } else {
      result.failure_reason = "ratio error did not fall below tolerance "
                              "(final " + std::to_string(final_err) + ")";
    }
  }

  if (result.certified && !in_linearized_cone(lc, d, 1e-6)) {
    throw InternalError("certified tangent direction escapes the linearized "
                        "cone");
  }
  return result;
}

/// Certify v in the tangent cone at x under LinearCQ with the explicit path
/// z_k = x + (t_bar / (k+1)) v, k = 0..K-1. Every step is feasibility
/// checked; the k+1 denominator avoids the k = 0 division. A t_bar of 0
/// requests the automatic choice from the inactive margin.
inline TangentProbeResult probe_tangent_linear(
    const Problem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
    double t_bar = 0.0, int K = 10, double tol_act = kDefaultActiveTol,
    double tol_feas = kDefaultFeasTol) {
  if (!check_feasible(p, x, tol_feas).feasible) {
    throw PreconditionError("x is infeasible");
  }
  CQStatus cq = check_linear_cq(p, x, tol_act);
  if (!cq.linear_cq) {
    throw PreconditionError("CQ not satisfied: LinearCQ fails at x");
  }
  LinearizedCone lc = linearized_cone(p, x, tol_act);
  if (!in_linearized_cone(lc, v, 1e-8)) {
    throw PreconditionError("v is not in the linearized feasible cone");
  }
  if (K <= 0) throw PreconditionError("K must be positive");

  if (t_bar <= 0.0) {
    const double margin = inactive_margin(p, x, tol_act);
    const double gmax = detail::max_constraint_gradient_norm(p, x);
    const double vn = v.norm();
    t_bar = (!std::isfinite(margin) || gmax * vn <= 1e-12)
                ? 1.0
                : std::min(1.0, margin / (4.0 * gmax * vn));
  }

  TangentProbeResult result;
  result.certified = true;
  for (int k = 0; k < K; ++k) {
    const double t = t_bar / (k + 1);
    TangentStep step;
    step.t = t;
    step.z = x + t * v;
    step.ratio_error = ((step.z - x) / t - v).norm();
    FeasibilityReport feas;
    try {
      feas = check_feasible(p, step.z, tol_feas);
    } catch (const DomainError& e) {
      result.certified = false;
      result.steps.push_back(step);
      result.failure_reason = "path left the expression domain at t = " +
                              std::to_string(t) + " (" + e.what() +
                              "); retry with a smaller t_bar";
      break;
    }
    step.feasible = feas.feasible;
    result.steps.push_back(step);
    if (!feas.feasible) {
      result.certified = false;
      int violating_id = -1;
      for (const auto& [id, val] : feas.ineq_values) {
        if (val < -tol_feas) {
          violating_id = id;
          break;
        }
      }
      for (const auto& [id, val] : feas.eq_values) {
        if (violating_id >= 0) break;
        if (std::abs(val) > tol_feas) violating_id = id;
      }
      result.failure_reason =
          "constraint " + std::to_string(violating_id) + " violated at t = " +
          std::to_string(t) + "; retry with a smaller t_bar";
      break;
    }
  }

  if (result.certified && !in_linearized_cone(lc, v, 1e-6)) {
    throw InternalError("certified tangent direction escapes the linearized "
                        "cone");
  }
  return result;
}

}  // namespace kktcert
