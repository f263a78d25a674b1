#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kktcert/errors.hpp"
#include "kktcert/kkt.hpp"
#include "kktcert/problem.hpp"

namespace kktcert {

/// Totally ordered extended real: -inf < finite < +inf. Finite payloads are
/// always finite doubles.
class ExtendedReal {
 public:
  enum class Kind { NegInf, Finite, PosInf };

  ExtendedReal() : kind_(Kind::Finite), value_(0.0) {}

  static ExtendedReal neg_inf() { return ExtendedReal(Kind::NegInf, 0.0); }
  static ExtendedReal pos_inf() { return ExtendedReal(Kind::PosInf, 0.0); }
  static ExtendedReal finite(double v) {
    if (!std::isfinite(v)) {
      throw PreconditionError("finite extended real from non-finite double");
    }
    return ExtendedReal(Kind::Finite, v);
  }

  Kind kind() const { return kind_; }
  bool is_neg_inf() const { return kind_ == Kind::NegInf; }
  bool is_finite() const { return kind_ == Kind::Finite; }
  bool is_pos_inf() const { return kind_ == Kind::PosInf; }

  double value() const {
    if (!is_finite()) throw PreconditionError("value() on infinite");
    return value_;
  }

  /// Order rank with finite payload tiebreak.
  friend bool operator<(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.kind_ != b.kind_) {
      return static_cast<int>(a.kind_) < static_cast<int>(b.kind_);
    }
    return a.kind_ == Kind::Finite && a.value_ < b.value_;
  }
  friend bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    return a.kind_ == b.kind_ &&
           (a.kind_ != Kind::Finite || a.value_ == b.value_);
  }
  friend bool operator<=(const ExtendedReal& a, const ExtendedReal& b) {
    return a < b || a == b;
  }

  std::string to_string() const {
    switch (kind_) {
      case Kind::NegInf:
        return "-inf";
      case Kind::PosInf:
        return "inf";
      case Kind::Finite:
        return std::to_string(value_);
    }
    return "";
  }

 private:
  ExtendedReal(Kind k, double v) : kind_(k), value_(v) {}
  Kind kind_;
  double value_;
};

enum class DualStatus { Converged, UnboundedBelowDetected, IterationCap };

inline const char* to_string(DualStatus s) {
  switch (s) {
    case DualStatus::Converged:
      return "converged";
    case DualStatus::UnboundedBelowDetected:
      return "unbounded_below_detected";
    case DualStatus::IterationCap:
      return "iteration_cap";
  }
  return "";
}

/// One evaluation of the dual objective q(lambda, mu) = inf_x L(x, lambda,
/// mu). NegInf iff the divergence detector fired; IterationCap values are
/// best-found and not certified.
struct DualEval {
  ExtendedReal value;
  std::optional<Eigen::VectorXd> argmin;
  DualStatus status = DualStatus::IterationCap;
  int iterations = 0;
};

struct DualOptions {
  std::optional<Eigen::VectorXd> x0;  // default: origin
  double initial_step = 1.0;
  double armijo_c = 1e-4;
  int max_iters = 2000;
  double divergence_radius = 1e6;  // R
  double divergence_drop = 1e8;    // D
  double tol_inner = 1e-8;         // scaled by (1 + |L|)
};

/// Minimize x -> L(x, lambda, mu) by gradient descent with Armijo
/// backtracking (halving) and step doubling after clean accepts. The
/// multiplier signs are unconstrained here: q is defined for every pair.
/// Unboundedness is detected, never proved: the iterate must leave the
/// divergence radius while the Lagrangian has dropped by more than the
/// divergence threshold.
inline DualEval dual_objective(const Problem& p, const Multipliers& m,
                               const DualOptions& opts = {}) {
  Eigen::VectorXd x = opts.x0.value_or(Eigen::VectorXd::Zero(p.n));
  detail::check_point_dim(p, x);
  double L = lagrangian(p, x, m);
  const double L_start = L;
  double best = L;
  Eigen::VectorXd best_x = x;
  double step = opts.initial_step;

  DualEval eval;
  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    eval.iterations = iter;
    Eigen::VectorXd g;
    try {
      g = lagrangian_grad(p, x, m);
    } catch (const DomainError&) {
      break;  // not differentiable here; report best found
    }
    const double gnorm_inf = g.lpNorm<Eigen::Infinity>();
    // Convergence only counts inside the divergence radius: far outside it
    // the (1 + |L|) scaling would wave through a diverging descent.
    if (x.norm() <= opts.divergence_radius &&
        gnorm_inf <= opts.tol_inner * (1.0 + std::abs(L))) {
      eval.value = ExtendedReal::finite(L);
      eval.argmin = x;
      eval.status = DualStatus::Converged;
      return eval;
    }

    const double g2 = g.squaredNorm();
    double alpha = step;
    bool accepted = false;
    bool clean = true;
    Eigen::VectorXd xc;
    double Lc = 0.0;
    while (alpha > 1e-18) {
      xc = x - alpha * g;
      bool ok = true;
      try {
        Lc = lagrangian(p, xc, m);
      } catch (const DomainError&) {
        ok = false;
      }
      if (ok && Lc <= L - opts.armijo_c * alpha * g2) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
      clean = false;
    }
    if (!accepted) break;  // line search stalled

    x = xc;
    L = Lc;
    if (L < best) {
      best = L;
      best_x = x;
    }
    step = clean ? std::min(alpha * 2.0, 1e12) : std::max(alpha, 1e-12);

    if (x.norm() > opts.divergence_radius &&
        L_start - L > opts.divergence_drop) {
      eval.value = ExtendedReal::neg_inf();
      eval.status = DualStatus::UnboundedBelowDetected;
      return eval;
    }
  }

  eval.value = ExtendedReal::finite(best);
  eval.argmin = best_x;
  eval.status = DualStatus::IterationCap;
  return eval;
}

/// q(lambda, mu) < +inf always: the infimum over a nonempty domain is
/// bounded above by L at the start point. Structural, but asserted over
/// seeded random multiplier pairs anyway.
inline bool dual_value_never_posinf(const Problem& p, int trials,
                                    std::uint64_t seed = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int t = 0; t < trials; ++t) {
    Multipliers m = zero_multipliers(p);
    for (auto& [id, v] : m.lambda) {
      (void)id;
      v = unif(rng);
    }
    for (auto& [id, v] : m.mu) {
      (void)id;
      v = unif(rng);
    }
    DualOptions opts;
    opts.max_iters = 200;
    if (dual_objective(p, m, opts).value.is_pos_inf()) return false;
  }
  return true;
}

struct WeakDualityResult {
  bool ok = true;
  // min over checked pairs of f(x) - q(lambda, mu); +inf when every dual
  // value was -inf or every pair was skipped.
  double worst_gap = std::numeric_limits<double>::infinity();
  int skipped = 0;  // IterationCap evaluations excluded from the assertion
};

/// Check q(lambda, mu) <= f(x) + tol over every (multiplier sample, feasible
/// sample) pair. Sampled mu must be nonnegative and sampled x feasible;
/// violations of those are precondition errors, not check failures.
inline WeakDualityResult weak_duality_check(
    const Problem& p, const std::vector<Multipliers>& multiplier_samples,
    const std::vector<Eigen::VectorXd>& feasible_samples, double tol = 1e-6,
    const DualOptions& opts = {}) {
  for (const auto& x : feasible_samples) {
    if (!check_feasible(p, x).feasible) {
      throw PreconditionError("sample point is infeasible");
    }
  }
  for (const auto& m : multiplier_samples) {
    for (const auto& [id, mu] : m.mu) {
      (void)id;
      if (mu < 0.0) throw PreconditionError("sampled mu is negative");
    }
  }

  WeakDualityResult result;
  for (const auto& m : multiplier_samples) {
    DualEval q = dual_objective(p, m, opts);
    if (q.status == DualStatus::IterationCap) {
      ++result.skipped;
      continue;
    }
    if (q.value.is_neg_inf()) continue;  // trivially below every f(x)
    for (const auto& x : feasible_samples) {
      const double gap = p.objective.eval(x) - q.value.value();
      result.worst_gap = std::min(result.worst_gap, gap);
      if (gap < -tol) result.ok = false;
    }
  }
  return result;
}

/// For a convex inequality-only problem with a KKT pair (x_bar, m_bar):
/// the multipliers solve the dual. Checks (a) zero duality gap
/// |q(m_bar) - f(x_bar)| <= tol and (b) dual optimality q(mu) <= q(m_bar) +
/// tol at every sampled mu >= 0. Convexity of f and concavity of the c_i
/// are declared by the caller, not verified here.
inline bool kkt_dual_optimality_check(
    const Problem& p, const Eigen::VectorXd& x_bar, const Multipliers& m_bar,
    const std::vector<Multipliers>& mu_samples, double tol = 1e-6,
    const DualOptions& opts = {}) {
  if (!p.eq_constraints.empty()) {
    throw PreconditionError(
        "dual optimality check requires an inequality-only problem");
  }
  KKTReport kkt = check_kkt(p, x_bar, m_bar);
  if (kkt.verdict != Verdict::Certified) {
    throw PreconditionError("(x_bar, m_bar) is not a KKT pair: " + kkt.note);
  }

  DualEval q_bar = dual_objective(p, m_bar, opts);
  if (q_bar.status != DualStatus::Converged) return false;
  const double f_bar = p.objective.eval(x_bar);
  if (std::abs(q_bar.value.value() - f_bar) > tol) return false;

  for (const auto& m : mu_samples) {
    for (const auto& [id, mu] : m.mu) {
      (void)id;
      if (mu < 0.0) throw PreconditionError("sampled mu is negative");
    }
    DualEval q = dual_objective(p, m, opts);
    if (q.status == DualStatus::IterationCap) continue;
    if (q.value.is_neg_inf()) continue;
    if (q.value.value() > q_bar.value.value() + tol) return false;
  }
  return true;
}

}  // namespace kktcert
