// Test-side oracles, independent of the implementation paths they check:
// finite-difference gradients, subset-enumeration cone membership (via the
// conic Caratheodory property and plain least squares), brute-force minimal
// supports, and seeded instance generators.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kktcert/kktcert.hpp"

namespace oracles {

// Central finite differences with h = 1e-6 * max(1, |x_i|).
inline Eigen::VectorXd fd_gradient(const kktcert::Expr& e,
                                   const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (e.eval(xp) - e.eval(xm)) / (2.0 * h);
  }
  return g;
}

// Finite differences of a scalar callable.
template <class F>
Eigen::VectorXd fd_gradient_fn(const F& f, const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline int column_rank(const Eigen::MatrixXd& V, double tol = 1e-10) {
  if (V.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(V);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv[i] > tol * std::max(1.0, sv[0])) ++rank;
  }
  return rank;
}

// Decide x in cone(columns) by enumerating linearly independent column
// subsets and solving the (unique) least-squares coefficients directly.
// Complete by the conic Caratheodory property. Exponential; test scale only.
inline bool subset_cone_member(const Eigen::MatrixXd& A,
                               const Eigen::VectorXd& x, double tol_res = 1e-8,
                               double tol_coef = 1e-10) {
  const int m = static_cast<int>(A.cols());
  if (x.norm() <= tol_res) return true;
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    const int card = std::popcount(mask);
    Eigen::MatrixXd V(A.rows(), card);
    int c = 0;
    for (int i = 0; i < m; ++i) {
      if (mask & (1u << i)) V.col(c++) = A.col(i);
    }
    if (column_rank(V) != card) continue;
    Eigen::VectorXd coef = V.completeOrthogonalDecomposition().solve(x);
    if ((V * coef - x).norm() <= tol_res && coef.minCoeff() >= -tol_coef) {
      return true;
    }
  }
  return false;
}

inline Eigen::MatrixXd expanded_generator_matrix(const kktcert::ConeSpec& k) {
  const int nb = static_cast<int>(k.nonneg_generators.size());
  const int nc = static_cast<int>(k.free_generators.size());
  Eigen::MatrixXd A(k.ambient_dim, nb + 2 * nc);
  for (int i = 0; i < nb; ++i) A.col(i) = k.nonneg_generators[i];
  for (int j = 0; j < nc; ++j) {
    A.col(nb + j) = k.free_generators[j];
    A.col(nb + nc + j) = -k.free_generators[j];
  }
  return A;
}

inline bool brute_force_membership(const kktcert::ConeSpec& k,
                                   const Eigen::VectorXd& g) {
  return subset_cone_member(expanded_generator_matrix(k), g);
}

// Smallest subset cardinality whose cone contains x. Minimal subsets are
// automatically independent (a dependent support can always be shrunk), so
// the unique-coefficient least-squares test is complete here too.
inline int brute_force_minimal_cardinality(
    const std::vector<Eigen::VectorXd>& generators, const Eigen::VectorXd& x,
    double tol_res = 1e-8) {
  const int m = static_cast<int>(generators.size());
  if (x.norm() <= tol_res) return 0;
  for (int card = 1; card <= m; ++card) {
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
      if (std::popcount(mask) != card) continue;
      Eigen::MatrixXd V(x.size(), card);
      int c = 0;
      for (int i = 0; i < m; ++i) {
        if (mask & (1u << i)) V.col(c++) = generators[i];
      }
      if (column_rank(V) != card) continue;
      Eigen::VectorXd coef = V.completeOrthogonalDecomposition().solve(x);
      if ((V * coef - x).norm() <= tol_res && coef.minCoeff() >= -1e-10) {
        return card;
      }
    }
  }
  return -1;  // not in the cone
}

// ---------------------------------------------------------------------------
// Seeded generators
// ---------------------------------------------------------------------------

inline kktcert::ConeSpec random_cone(std::mt19937_64& rng, int max_dim = 6,
                                     int max_generators = 8,
                                     bool allow_free = true) {
  std::uniform_int_distribution<int> dim_dist(1, max_dim);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  kktcert::ConeSpec k;
  k.ambient_dim = dim_dist(rng);
  std::uniform_int_distribution<int> count_dist(1, max_generators);
  const int total = count_dist(rng);
  std::uniform_int_distribution<int> free_dist(
      0, allow_free ? std::min(2, total - 1) : 0);
  const int nfree = free_dist(rng);
  for (int i = 0; i < total - nfree; ++i) {
    Eigen::VectorXd v(k.ambient_dim);
    for (int j = 0; j < k.ambient_dim; ++j) v[j] = entry(rng);
    k.nonneg_generators.push_back(v);
  }
  for (int i = 0; i < nfree; ++i) {
    Eigen::VectorXd v(k.ambient_dim);
    for (int j = 0; j < k.ambient_dim; ++j) v[j] = entry(rng);
    k.free_generators.push_back(v);
  }
  return k;
}

// A point of the cone, built from random nonnegative / free coefficients.
inline Eigen::VectorXd random_cone_point(const kktcert::ConeSpec& k,
                                         std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.0, 2.0);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(k.ambient_dim);
  for (const auto& v : k.nonneg_generators) g += pos(rng) * v;
  for (const auto& v : k.free_generators) g += box(rng) * v;
  return g;
}

// Sampled directions of the linearized feasible cone: boundary rays (null
// directions of one active inequality inside the rest of the cone) plus
// random interior rays, all unit norm.
inline std::vector<Eigen::VectorXd> sample_cone_directions(
    const kktcert::LinearizedCone& lc, int count, std::uint64_t seed) {
  const int n = static_cast<int>(lc.at_point.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::MatrixXd E(static_cast<int>(lc.eq_gradients.size()), n);
  int row = 0;
  for (const auto& [id, g] : lc.eq_gradients) {
    (void)id;
    E.row(row++) = g.transpose();
  }
  const Eigen::MatrixXd N = E.rows() == 0
                                ? Eigen::MatrixXd::Identity(n, n)
                                : kktcert::null_space_basis(E);

  std::vector<Eigen::VectorXd> dirs;
  auto try_add = [&](Eigen::VectorXd d) {
    if (d.norm() < 1e-12) return;
    d.normalize();
    if (kktcert::in_linearized_cone(lc, d, 1e-10)) dirs.push_back(d);
  };

  // Boundary rays: orthogonal to one active inequality gradient (and to all
  // equalities), kept only if still inside the cone.
  for (const auto& [id, g] : lc.active_ineq_gradients) {
    (void)id;
    Eigen::MatrixXd Eg(E.rows() + 1, n);
    if (E.rows() > 0) Eg.topRows(E.rows()) = E;
    Eg.row(E.rows()) = g.transpose();
    if (oracles::column_rank(Eg.transpose()) <
        static_cast<int>(Eg.rows())) {
      continue;
    }
    Eigen::MatrixXd Nb = kktcert::null_space_basis(Eg);
    for (int c = 0; c < Nb.cols(); ++c) {
      try_add(Nb.col(c));
      try_add(-Nb.col(c));
    }
  }
  // Subspace case: the +- null directions of the equalities.
  if (lc.active_ineq_gradients.empty()) {
    for (int c = 0; c < N.cols(); ++c) {
      try_add(N.col(c));
      try_add(-N.col(c));
    }
  }

  int guard = 0;
  while (static_cast<int>(dirs.size()) < count && guard++ < 100 * count) {
    Eigen::VectorXd w(N.cols());
    for (int i = 0; i < w.size(); ++i) w[i] = gauss(rng);
    Eigen::VectorXd d = N * w;
    if (d.norm() < 1e-12) continue;
    d.normalize();
    if (kktcert::in_linearized_cone(lc, d, 1e-10)) {
      dirs.push_back(d);
    } else if (kktcert::in_linearized_cone(lc, Eigen::VectorXd(-d), 1e-10)) {
      dirs.push_back(-d);
    }
  }
  return dirs;
}

// Random smooth expression text over the grammar, with total-function
// guards around log, sqrt, exp, and division.
inline std::string random_smooth_expr(std::mt19937_64& rng, int n,
                                      int depth = 3) {
  std::uniform_int_distribution<int> var(1, n);
  std::uniform_real_distribution<double> cst(-2.0, 2.0);
  std::uniform_int_distribution<int> pick(0, 9);
  if (depth == 0) {
    if (pick(rng) < 6) return "x" + std::to_string(var(rng));
    return std::to_string(cst(rng));
  }
  const std::string a = random_smooth_expr(rng, n, depth - 1);
  const std::string b = random_smooth_expr(rng, n, depth - 1);
  switch (pick(rng)) {
    case 0:
    case 1:
      return "(" + a + " + " + b + ")";
    case 2:
      return "(" + a + " - " + b + ")";
    case 3:
    case 4:
      return "(" + a + ")*(" + b + ")";
    case 5:
      return "(" + a + ")/(2 + (" + b + ")^2)";
    case 6:
      return "(" + a + ")^2";
    case 7:
      return "sin(" + a + ")";
    case 8:
      return "cos(" + a + ")";
    default:
      switch (pick(rng) % 3) {
        case 0:
          return "exp((" + a + ")/8)";
        case 1:
          return "log(1 + (" + a + ")^2)";
        default:
          return "sqrt(1 + (" + a + ")^2)";
      }
  }
}

}  // namespace oracles
