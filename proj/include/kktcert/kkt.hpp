#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "kktcert/cone.hpp"
#include "kktcert/errors.hpp"
#include "kktcert/problem.hpp"
#include "kktcert/qualifications.hpp"
#include "kktcert/tangent.hpp"

namespace kktcert {

struct Tolerances {
  double feas = 1e-8;    // primal feasibility
  double act = 1e-6;     // active-set classification
  double rank = 1e-10;   // numeric rank decisions
  double stat = 1e-6;    // stationarity, scaled by (1 + ||grad f||_inf)
  double dual = 1e-8;    // multiplier sign slack
  double comp = 1e-6;    // complementary slackness
  double farkas = 1e-8;  // membership/separation decision
};

enum class Verdict { Certified, Refuted, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Certified:
      return "certified";
    case Verdict::Refuted:
      return "refuted";
    case Verdict::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

/// A linearized feasible descent direction: the separation half of the
/// Farkas dichotomy applied to g = grad f(x) against the active gradients.
struct DescentDirection {
  Eigen::VectorXd d;
  double g_dot_d = 0.0;
  bool marginal = false;
};

struct KKTReport {
  bool feasible = false;
  double primal_eq_violation = 0.0;
  double primal_ineq_violation = 0.0;
  std::optional<Multipliers> multipliers;
  std::optional<double> stationarity_residual;   // ||grad_x L||_inf
  std::optional<double> dual_min;                // min_i mu_i (0 if no ineq)
  std::optional<double> complementarity_residual;  // max_i |mu_i c_i(x)|
  CQStatus cq;
  Verdict verdict = Verdict::Inconclusive;
  std::optional<DescentDirection> descent;
  // True when the direction was found without a verified CQ: it separates
  // grad f from the linearized cone but the tangent-cone bridge is unproven.
  bool descent_is_candidate = false;
  std::string note;
};

/// Assemble multipliers at a feasible x by deciding whether grad f(x) lies
/// in the cone generated by the active constraint gradients (equality
/// gradients free, active inequality gradients nonnegative). Membership
/// yields the multipliers with inactive entries zero; separation yields a
/// descent direction.
inline std::variant<Multipliers, DescentDirection> solve_multipliers(
    const Problem& p, const Eigen::VectorXd& x, const Tolerances& tols = {}) {
  LinearizedCone lc = linearized_cone(p, x, tols.act, tols.feas);
  ConeSpec cone;
  cone.ambient_dim = p.n;
  std::vector<int> eq_order, ineq_order;
  for (const auto& [id, g] : lc.eq_gradients) {
    cone.free_generators.push_back(g);
    eq_order.push_back(id);
  }
  for (const auto& [id, g] : lc.active_ineq_gradients) {
    cone.nonneg_generators.push_back(g);
    ineq_order.push_back(id);
  }

  const Eigen::VectorXd g = p.objective.grad(x);
  FarkasCertificate cert = farkas_decide(cone, g, tols.farkas);
  if (cert.is_membership()) {
    const MembershipCertificate& mem = cert.membership();
    Multipliers m = zero_multipliers(p);
    for (std::size_t i = 0; i < eq_order.size(); ++i) {
      m.lambda[eq_order[i]] = mem.w[static_cast<int>(i)];
    }
    for (std::size_t i = 0; i < ineq_order.size(); ++i) {
      m.mu[ineq_order[i]] = mem.y[static_cast<int>(i)];
    }
    return m;
  }
  const SeparationCertificate& sep = cert.separation();
  return DescentDirection{sep.d, sep.g_dot_d, sep.marginal};
}

/// Evaluate the five KKT condition groups at (x, m). The verdict is
/// Certified iff every residual is within tolerance; a non-certifying
/// report is Inconclusive (supplied multipliers failing their residuals
/// refute nothing). CQ fields are left unevaluated here; the pipeline
/// fills them.
inline KKTReport check_kkt(const Problem& p, const Eigen::VectorXd& x,
                           const Multipliers& m, const Tolerances& tols = {}) {
  detail::check_multiplier_keys(p, m);
  KKTReport report;
  FeasibilityReport feas = check_feasible(p, x, tols.feas);
  report.feasible = feas.feasible;
  report.primal_eq_violation = feas.max_eq_violation;
  report.primal_ineq_violation = feas.max_ineq_violation;
  report.multipliers = m;

  const Eigen::VectorXd lgrad = lagrangian_grad(p, x, m);
  report.stationarity_residual = lgrad.lpNorm<Eigen::Infinity>();

  double dual_min = 0.0;
  double comp = 0.0;
  bool first = true;
  for (const auto& [id, mu] : m.mu) {
    dual_min = first ? mu : std::min(dual_min, mu);
    first = false;
    comp = std::max(comp, std::abs(mu * feas.ineq_values.at(id)));
  }
  report.dual_min = dual_min;
  report.complementarity_residual = comp;

  const double grad_scale =
      1.0 + p.objective.grad(x).lpNorm<Eigen::Infinity>();
  const bool stationary = *report.stationarity_residual <=
                          tols.stat * grad_scale;
  const bool dual_ok = dual_min >= -tols.dual;
  const bool comp_ok = comp <= tols.comp;
  if (report.feasible && stationary && dual_ok && comp_ok) {
    report.verdict = Verdict::Certified;
  } else {
    report.verdict = Verdict::Inconclusive;
    std::string why;
    if (!report.feasible) why += " primal";
    if (!stationary) why += " stationarity";
    if (!dual_ok) why += " dual-sign";
    if (!comp_ok) why += " complementarity";
    report.note = "conditions failing:" + why;
  }
  report.cq.note = "not evaluated";
  return report;
}

/// Full first-order certification pipeline: feasibility, active set, CQ
/// checks, Farkas-based multiplier solve, KKT residuals. Refuted is issued
/// only under a verified CQ; without one a separating direction is attached
/// as a candidate and the verdict stays Inconclusive.
inline KKTReport certify_first_order(const Problem& p,
                                     const Eigen::VectorXd& x,
                                     const Tolerances& tols = {}) {
  FeasibilityReport feas = check_feasible(p, x, tols.feas);
  if (!feas.feasible) {
    KKTReport report;
    report.feasible = false;
    report.primal_eq_violation = feas.max_eq_violation;
    report.primal_ineq_violation = feas.max_ineq_violation;
    report.verdict = Verdict::Inconclusive;
    report.note = "point is infeasible; no multiplier attempt";
    report.cq.note = "not evaluated";
    return report;
  }

  CQStatus licq = check_licq(p, x, tols.act, tols.rank);
  CQStatus lincq = check_linear_cq(p, x, tols.act);
  CQStatus cq;
  cq.licq = licq.licq;
  cq.licq_smallest_singular_value = licq.licq_smallest_singular_value;
  cq.linear_cq = lincq.linear_cq;
  cq.active_count = licq.active_count;
  cq.note = licq.note.empty() ? lincq.note
            : lincq.note.empty() ? licq.note
                                 : licq.note + "; " + lincq.note;
  const bool cq_holds = cq.licq || cq.linear_cq;

  auto outcome = solve_multipliers(p, x, tols);
  if (std::holds_alternative<Multipliers>(outcome)) {
    KKTReport report = check_kkt(p, x, std::get<Multipliers>(outcome), tols);
    report.cq = cq;
    if (!cq_holds) {
      report.verdict = Verdict::Inconclusive;
      report.note = "no constraint qualification verified; multipliers and "
                    "residuals are informational";
    } else if (report.verdict != Verdict::Certified) {
      report.note += "; multipliers from the Farkas solve did not certify";
    }
    return report;
  }

  KKTReport report;
  report.feasible = true;
  report.primal_eq_violation = feas.max_eq_violation;
  report.primal_ineq_violation = feas.max_ineq_violation;
  report.cq = cq;
  report.descent = std::get<DescentDirection>(outcome);
  if (cq_holds) {
    report.verdict = Verdict::Refuted;
    report.note = "a linearized feasible descent direction exists";
  } else {
    report.verdict = Verdict::Inconclusive;
    report.descent_is_candidate = true;
    report.note = "no constraint qualification verified; separating "
                  "direction attached as a candidate only";
  }
  return report;
}

/// Geometric first-order test: <grad f(x), d> >= 0 for every certified
/// tangent direction. Throws if any supplied direction lacks a certified
/// probe result.
inline bool geometric_check(
    const Problem& p, const Eigen::VectorXd& x,
    const std::vector<std::pair<Eigen::VectorXd, TangentProbeResult>>&
        directions,
    double tol = 1e-8) {
  const Eigen::VectorXd g = p.objective.grad(x);
  for (const auto& [d, probe] : directions) {
    if (!probe.certified) {
      throw PreconditionError("direction without a certified tangent probe");
    }
    if (g.dot(d) < -tol * (1.0 + g.norm() * d.norm())) return false;
  }
  return true;
}

}  // namespace kktcert
