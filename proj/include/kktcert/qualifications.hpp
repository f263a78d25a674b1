#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "kktcert/cone.hpp"
#include "kktcert/errors.hpp"
#include "kktcert/expr.hpp"
#include "kktcert/problem.hpp"

namespace kktcert {

/// Gradients of the active constraints at a point: the data behind the cone
/// of linearized feasible directions
///   F(x) = { d : <grad c_i(x), d> = 0 (i eq), >= 0 (i active ineq) }.
struct LinearizedCone {
  std::map<int, Eigen::VectorXd> eq_gradients;
  std::map<int, Eigen::VectorXd> active_ineq_gradients;
  Eigen::VectorXd at_point;
};

inline LinearizedCone linearized_cone(const Problem& p,
                                      const Eigen::VectorXd& x,
                                      double tol_act = kDefaultActiveTol,
                                      double tol_feas = kDefaultFeasTol) {
  ActiveSet as = active_set(p, x, tol_act, tol_feas);
  LinearizedCone lc;
  lc.at_point = x;
  for (int id : as.eq_ids) {
    lc.eq_gradients[id] = p.eq_constraints.at(id).grad(x);
  }
  for (int id : as.active_ineq_ids) {
    lc.active_ineq_gradients[id] = p.ineq_constraints.at(id).grad(x);
  }
  return lc;
}

inline bool in_linearized_cone(const LinearizedCone& lc,
                               const Eigen::VectorXd& d, double tol) {
  const double dn = d.norm();
  for (const auto& [id, g] : lc.eq_gradients) {
    (void)id;
    if (std::abs(g.dot(d)) > tol * (1.0 + g.norm() * dn)) return false;
  }
  for (const auto& [id, g] : lc.active_ineq_gradients) {
    (void)id;
    if (g.dot(d) < -tol * (1.0 + g.norm() * dn)) return false;
  }
  return true;
}

/// Active gradients stacked as rows: ascending equality ids first, then
/// ascending active inequality ids. This ordering is the row/multiplier
/// correspondence used everywhere downstream.
inline Eigen::MatrixXd active_gradient_matrix(const LinearizedCone& lc) {
  const int m = static_cast<int>(lc.eq_gradients.size() +
                                 lc.active_ineq_gradients.size());
  const int n = static_cast<int>(lc.at_point.size());
  Eigen::MatrixXd A(m, n);
  int row = 0;
  for (const auto& [id, g] : lc.eq_gradients) {
    (void)id;
    A.row(row++) = g.transpose();
  }
  for (const auto& [id, g] : lc.active_ineq_gradients) {
    (void)id;
    A.row(row++) = g.transpose();
  }
  return A;
}

struct CQStatus {
  bool licq = false;
  double licq_smallest_singular_value = 0.0;
  bool linear_cq = false;
  int active_count = 0;
  std::string note;
};

/// LICQ: the active constraint gradients are linearly independent. Decided
/// by the smallest singular value of the stacked gradient rows; an empty
/// active set passes vacuously.
inline CQStatus check_licq(const Problem& p, const Eigen::VectorXd& x,
                           double tol_act = kDefaultActiveTol,
                           double tol_rank = kDefaultRankTol) {
  LinearizedCone lc = linearized_cone(p, x, tol_act);
  CQStatus status;
  status.active_count = static_cast<int>(lc.eq_gradients.size() +
                                         lc.active_ineq_gradients.size());
  const int m = status.active_count;
  if (m == 0) {
    status.licq = true;
    status.licq_smallest_singular_value =
        std::numeric_limits<double>::infinity();
    status.note = "no active constraints";
    return status;
  }
  if (m > p.n) {
    status.licq = false;
    status.licq_smallest_singular_value = 0.0;
    status.note = "more active constraints than variables";
    return status;
  }
  Eigen::MatrixXd A = active_gradient_matrix(lc);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  const double smax = sv[0];
  const double smin = sv[sv.size() - 1];
  status.licq_smallest_singular_value = smin;
  status.licq = smin > tol_rank * std::max(1.0, smax);
  if (!status.licq) status.note = "active gradients numerically dependent";
  return status;
}

/// LinearCQ: every active constraint is structurally affine. Inactive
/// inequality constraints are exempt.
inline CQStatus check_linear_cq(const Problem& p, const Eigen::VectorXd& x,
                                double tol_act = kDefaultActiveTol) {
  ActiveSet as = active_set(p, x, tol_act);
  CQStatus status;
  status.active_count =
      static_cast<int>(as.eq_ids.size() + as.active_ineq_ids.size());
  status.linear_cq = true;
  for (int id : as.eq_ids) {
    if (!as_affine(p.eq_constraints.at(id))) {
      status.linear_cq = false;
      status.note = "equality constraint " + std::to_string(id) +
                    " is not affine";
      return status;
    }
  }
  for (int id : as.active_ineq_ids) {
    if (!as_affine(p.ineq_constraints.at(id))) {
      status.linear_cq = false;
      status.note = "active inequality constraint " + std::to_string(id) +
                    " is not affine";
      return status;
    }
  }
  return status;
}

/// Orthonormal basis of the null space of a full-row-rank A (m x n), taken
/// from the trailing right singular vectors. Returns n x (n-m).
inline Eigen::MatrixXd null_space_basis(const Eigen::MatrixXd& A,
                                        double tol_rank = kDefaultRankTol) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  if (m == 0) return Eigen::MatrixXd::Identity(n, n);
  if (m > n) throw PreconditionError("A has more rows than columns");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv[0];
  const double smin = sv[sv.size() - 1];
  if (!(smin > tol_rank * std::max(1.0, smax))) {
    throw PreconditionError("A is rank deficient at the given tolerance");
  }
  return svd.matrixV().rightCols(n - m);
}

}  // namespace kktcert
