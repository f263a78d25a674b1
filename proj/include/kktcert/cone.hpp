#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "kktcert/errors.hpp"

namespace kktcert {

inline constexpr double kDefaultRankTol = 1e-10;

/// Finitely generated cone K = { B y + C w : y >= 0, w free }, where the
/// nonneg generators are the columns of B and the free generators the
/// columns of C.
struct ConeSpec {
  std::vector<Eigen::VectorXd> free_generators;
  std::vector<Eigen::VectorXd> nonneg_generators;
  int ambient_dim = 0;

  void validate() const {
    if (ambient_dim <= 0) {
      throw PreconditionError("cone ambient dimension must be positive");
    }
    for (const auto& v : free_generators) {
      if (static_cast<int>(v.size()) != ambient_dim) {
        throw PreconditionError("free generator dimension mismatch");
      }
    }
    for (const auto& v : nonneg_generators) {
      if (static_cast<int>(v.size()) != ambient_dim) {
        throw PreconditionError("nonneg generator dimension mismatch");
      }
    }
  }
};

struct MembershipCertificate {
  Eigen::VectorXd y;  // one coefficient per nonneg generator, all >= 0
  Eigen::VectorXd w;  // one coefficient per free generator
  double reconstruction_residual = 0.0;
};

struct SeparationCertificate {
  Eigen::VectorXd d;  // unit separating direction
  double g_dot_d = 0.0;
  // Set when the projection residual lies within (tol, 10 tol): the
  // dichotomy is exact in exact arithmetic, floating point is not.
  bool marginal = false;
};

/// Exactly one of: g is in the cone (with reconstructing coefficients), or a
/// strictly separating direction exists. Both branches carry checked
/// invariants.
class FarkasCertificate {
 public:
  explicit FarkasCertificate(MembershipCertificate m) : value_(std::move(m)) {}
  explicit FarkasCertificate(SeparationCertificate s) : value_(std::move(s)) {}

  bool is_membership() const {
    return std::holds_alternative<MembershipCertificate>(value_);
  }
  const MembershipCertificate& membership() const {
    if (!is_membership()) throw PreconditionError("certificate is separation");
    return std::get<MembershipCertificate>(value_);
  }
  const SeparationCertificate& separation() const {
    if (is_membership()) throw PreconditionError("certificate is membership");
    return std::get<SeparationCertificate>(value_);
  }

 private:
  std::variant<MembershipCertificate, SeparationCertificate> value_;
};

namespace detail {

struct NnlsResult {
  Eigen::VectorXd coeffs;    // >= 0
  Eigen::VectorXd residual;  // g - A coeffs
  bool optimal = false;
  int iterations = 0;
};

/// Lawson-Hanson active-set nonnegative least squares:
/// minimize ||A c - g|| subject to c >= 0. Columns enter the passive set one
/// at a time by the largest dual value w = A^T (g - A c), so the passive
/// columns stay linearly independent in exact arithmetic; the iteration cap
/// guards floating-point cycling.
inline NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& g,
                       int max_iterations, double dual_tol) {
  const int k = static_cast<int>(A.cols());
  NnlsResult result;
  result.coeffs = Eigen::VectorXd::Zero(k);
  if (k == 0) {
    result.residual = g;
    result.optimal = true;
    return result;
  }

  std::vector<bool> passive(k, false);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd w = A.transpose() * g;

  auto passive_indices = [&] {
    std::vector<int> idx;
    for (int i = 0; i < k; ++i) {
      if (passive[i]) idx.push_back(i);
    }
    return idx;
  };

  auto solve_passive = [&](const std::vector<int>& idx) {
    Eigen::MatrixXd Ap(A.rows(), idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) Ap.col(j) = A.col(idx[j]);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Ap);
    return Eigen::VectorXd(cod.solve(g));
  };

  int iter = 0;
  while (true) {
    // Candidate with the largest dual value among the zeroed columns.
    int best = -1;
    double best_w = dual_tol;
    for (int i = 0; i < k; ++i) {
      if (!passive[i] && w[i] > best_w) {
        best = i;
        best_w = w[i];
      }
    }
    if (best < 0) {
      result.optimal = true;
      break;
    }
    passive[best] = true;

    bool capped = false;
    while (true) {
      if (++iter > max_iterations) {
        capped = true;
        break;
      }
      std::vector<int> idx = passive_indices();
      Eigen::VectorXd z = solve_passive(idx);
      double zmin = z.size() > 0 ? z.minCoeff() : 1.0;
      if (zmin > 0.0) {
        for (std::size_t j = 0; j < idx.size(); ++j) x[idx[j]] = z[j];
        break;
      }
      // Step toward z until the first passive coefficient hits zero.
      double alpha = 1.0;
      for (std::size_t j = 0; j < idx.size(); ++j) {
        if (z[j] <= 0.0) {
          double xi = x[idx[j]];
          double denom = xi - z[j];
          if (denom > 0.0) alpha = std::min(alpha, xi / denom);
        }
      }
      for (std::size_t j = 0; j < idx.size(); ++j) {
        int i = idx[j];
        x[i] += alpha * (z[j] - x[i]);
        if (z[j] <= 0.0 && x[i] <= 1e-14 * (1.0 + std::abs(z[j]))) {
          x[i] = 0.0;
          passive[i] = false;
        }
      }
    }
    if (capped) break;
    w = A.transpose() * (g - A * x);
  }

  result.coeffs = x;
  result.residual = g - A * x;
  result.iterations = iter;
  return result;
}

}  // namespace detail

struct ConeProjection {
  Eigen::VectorXd point;  // nearest point of the cone to g
  Eigen::VectorXd y;      // coefficients on the nonneg generators
  Eigen::VectorXd w;      // coefficients on the free generators
  int iterations = 0;
};

/// Euclidean projection of g onto K. Free coefficients are split into
/// positive and negative parts so the whole problem is one NNLS on the
/// generator matrix [B C -C]; the result is checked against the projection
/// optimality conditions <g-p, p> ~ 0 and <g-p, v> <= tol for every
/// generator v.
inline ConeProjection project_onto_cone(const ConeSpec& k,
                                        const Eigen::VectorXd& g,
                                        double tol) {
  k.validate();
  if (!(tol > 0.0)) throw PreconditionError("tol must be positive");
  if (static_cast<int>(g.size()) != k.ambient_dim) {
    throw PreconditionError("g dimension does not match cone ambient dim");
  }

  const int nb = static_cast<int>(k.nonneg_generators.size());
  const int nc = static_cast<int>(k.free_generators.size());
  Eigen::MatrixXd A(k.ambient_dim, nb + 2 * nc);
  for (int i = 0; i < nb; ++i) A.col(i) = k.nonneg_generators[i];
  for (int j = 0; j < nc; ++j) {
    A.col(nb + j) = k.free_generators[j];
    A.col(nb + nc + j) = -k.free_generators[j];
  }

  const int cols = nb + 2 * nc;
  const double scale = std::max(1.0, g.norm());
  detail::NnlsResult sol =
      detail::nnls(A, g, 50 * std::max(cols, 1), 1e-12 * scale);

  ConeProjection proj;
  proj.point = A * sol.coeffs;
  proj.y = sol.coeffs.head(nb);
  proj.w = sol.coeffs.segment(nb, nc) - sol.coeffs.tail(nc);
  proj.iterations = sol.iterations;

  // Projection optimality: the residual is orthogonal to the projection and
  // makes a nonpositive inner product with every generator of [B C -C].
  const Eigen::VectorXd r = g - proj.point;
  const double ortho = std::abs(r.dot(proj.point));
  double worst_gen = 0.0;
  for (int i = 0; i < cols; ++i) {
    worst_gen = std::max(worst_gen, r.dot(A.col(i)));
  }
  if (ortho > tol * (1.0 + g.squaredNorm()) || worst_gen > tol) {
    throw ProjectionError(
        "optimality conditions not met after " +
        std::to_string(sol.iterations) + " iterations (|<g-p,p>| = " +
        std::to_string(ortho) + ", max <g-p,v> = " + std::to_string(worst_gen) +
        ")");
  }
  return proj;
}

/// Constructive Farkas dichotomy: either g belongs to K (membership
/// coefficients are returned) or the normalized projection residual strictly
/// separates g from K. Both branches verify their invariants before
/// returning; a violation is an internal error, never a silent answer.
inline FarkasCertificate farkas_decide(const ConeSpec& k,
                                       const Eigen::VectorXd& g, double tol) {
  ConeProjection proj = project_onto_cone(k, g, tol);
  const Eigen::VectorXd r = proj.point - g;
  const double rnorm = r.norm();

  if (rnorm <= tol) {
    MembershipCertificate cert;
    cert.y = proj.y;
    cert.w = proj.w;
    cert.reconstruction_residual = rnorm;
    if (cert.y.size() > 0 && cert.y.minCoeff() < 0.0) {
      throw InternalError("membership certificate has negative coefficient");
    }
    Eigen::VectorXd rebuilt = Eigen::VectorXd::Zero(k.ambient_dim);
    for (int i = 0; i < cert.y.size(); ++i) {
      rebuilt += cert.y[i] * k.nonneg_generators[i];
    }
    for (int j = 0; j < cert.w.size(); ++j) {
      rebuilt += cert.w[j] * k.free_generators[j];
    }
    if ((rebuilt - g).norm() > tol * (1.0 + g.norm())) {
      throw InternalError("membership certificate does not reconstruct g");
    }
    return FarkasCertificate(std::move(cert));
  }

  SeparationCertificate cert;
  cert.d = r / rnorm;
  cert.g_dot_d = g.dot(cert.d);
  cert.marginal = rnorm < 10.0 * tol;
  if (!(cert.g_dot_d < 0.0)) {
    throw InternalError("separation certificate has <g,d> >= 0");
  }
  if (std::abs(cert.d.norm() - 1.0) > 1e-12) {
    throw InternalError("separation direction is not unit norm");
  }
  for (const auto& b : k.nonneg_generators) {
    if (b.dot(cert.d) < -tol) {
      throw InternalError("separation certificate violates <b_i,d> >= 0");
    }
  }
  for (const auto& c : k.free_generators) {
    if (std::abs(c.dot(cert.d)) > tol) {
      throw InternalError("separation certificate violates <c_j,d> = 0");
    }
  }
  return FarkasCertificate(std::move(cert));
}

struct CaratheodoryReduction {
  std::vector<int> indices;  // ascending, linearly independent support
  Eigen::VectorXd coeffs;    // aligned with indices, all >= 0
};

/// Reduce a conic combination sum coeff_i gen_i to one supported on linearly
/// independent generators: while the support is dependent, shift the
/// coefficients along a null-space combination until one hits zero and drop
/// it. Greedy; terminates in at most |generators| eliminations; the support
/// size ends <= the ambient dimension.
inline CaratheodoryReduction caratheodory_reduce(
    const std::vector<Eigen::VectorXd>& generators,
    const Eigen::VectorXd& coeffs, double tol_rank = kDefaultRankTol) {
  const int m = static_cast<int>(generators.size());
  if (static_cast<int>(coeffs.size()) != m) {
    throw PreconditionError("coefficient count does not match generators");
  }
  if (m > 0 && coeffs.size() > 0 && coeffs.minCoeff() < 0.0) {
    throw PreconditionError("coefficients must be nonnegative");
  }
  const int n = m > 0 ? static_cast<int>(generators[0].size()) : 0;
  for (const auto& v : generators) {
    if (static_cast<int>(v.size()) != n) {
      throw PreconditionError("generator dimension mismatch");
    }
  }

  std::vector<int> support;
  Eigen::VectorXd a = coeffs;
  for (int i = 0; i < m; ++i) {
    if (a[i] > 0.0) support.push_back(i);
  }

  while (!support.empty()) {
    const int s = static_cast<int>(support.size());
    Eigen::MatrixXd V(n, s);
    for (int j = 0; j < s; ++j) V.col(j) = generators[support[j]];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        V, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv[0] : 0.0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i) {
      if (sv[i] > tol_rank * std::max(1.0, smax)) ++rank;
    }
    if (rank == s) break;  // independent support

    // Null combination of the support columns; step until the first
    // coefficient reaches zero. Of the two orientations, take the one with
    // the smaller step so the sigma_min * t reconstruction drift stays tiny.
    Eigen::VectorXd eta = svd.matrixV().col(s - 1);
    auto min_step = [&](const Eigen::VectorXd& dir) {
      double t_best = std::numeric_limits<double>::infinity();
      int j_best = -1;
      for (int j = 0; j < s; ++j) {
        if (dir[j] > 0.0) {
          double t = a[support[j]] / dir[j];
          if (t < t_best) {
            t_best = t;
            j_best = j;
          }
        }
      }
      return std::pair<double, int>(t_best, j_best);
    };
    auto [t_pos, j_pos] = min_step(eta);
    auto [t_neg, j_neg] = min_step(-eta);
    if (t_neg < t_pos) {
      eta = -eta;
      t_pos = t_neg;
      j_pos = j_neg;
    }
    const double t_star = t_pos;
    const int drop = j_pos;
    if (drop < 0) {
      throw InternalError("null combination has no positive component");
    }
    std::vector<int> next;
    for (int j = 0; j < s; ++j) {
      int i = support[j];
      double updated = (j == drop) ? 0.0 : a[i] - t_star * eta[j];
      a[i] = std::max(0.0, updated);
      if (a[i] > 0.0) next.push_back(i);
    }
    if (static_cast<int>(next.size()) >= s) {
      throw InternalError("caratheodory elimination failed to shrink support");
    }
    support = std::move(next);
  }

  CaratheodoryReduction red;
  red.indices = support;
  red.coeffs.resize(static_cast<int>(support.size()));
  for (std::size_t j = 0; j < support.size(); ++j) {
    red.coeffs[static_cast<int>(j)] = a[support[j]];
  }
  return red;
}

/// Minimum-cardinality independent sub-cone containing x, by exhaustive
/// search over subsets in ascending cardinality. Exponential; capped at
/// `limit` generators.
inline std::vector<int> caratheodory_minimal(
    const std::vector<Eigen::VectorXd>& generators, const Eigen::VectorXd& x,
    double tol, int limit = 15, double tol_rank = kDefaultRankTol) {
  const int m = static_cast<int>(generators.size());
  if (m > limit) {
    throw PreconditionError("generator count " + std::to_string(m) +
                            " exceeds limit " + std::to_string(limit));
  }
  const int n = static_cast<int>(x.size());
  ConeSpec whole;
  whole.ambient_dim = n;
  whole.nonneg_generators = generators;
  FarkasCertificate gate = farkas_decide(whole, x, tol);
  if (!gate.is_membership()) {
    throw PreconditionError("x is not in the cone of the given generators");
  }

  for (int card = 0; card <= m; ++card) {
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
      if (std::popcount(mask) != card) continue;
      std::vector<int> subset;
      for (int i = 0; i < m; ++i) {
        if (mask & (1u << i)) subset.push_back(i);
      }
      if (card > 0) {
        Eigen::MatrixXd V(n, card);
        for (int j = 0; j < card; ++j) V.col(j) = generators[subset[j]];
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(V);
        const auto& sv = svd.singularValues();
        const double smax = sv[0];
        int rank = 0;
        for (int i = 0; i < sv.size(); ++i) {
          if (sv[i] > tol_rank * std::max(1.0, smax)) ++rank;
        }
        if (rank != card) continue;
      }
      ConeSpec sub;
      sub.ambient_dim = n;
      for (int i : subset) sub.nonneg_generators.push_back(generators[i]);
      ConeProjection proj = project_onto_cone(sub, x, tol);
      if ((proj.point - x).norm() <= tol) return subset;
    }
  }
  throw InternalError("no subset reconstructs x despite the membership gate");
}

}  // namespace kktcert
