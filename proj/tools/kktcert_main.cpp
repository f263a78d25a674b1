// Command-line front end: load a problem and a point, run the certification
// pipeline (or one of the underlying kernels), and emit a human-readable or
// structured report.
//
// Exit codes
//   certify: 0 certified, 2 refuted, 3 inconclusive, 4 infeasible point
//   farkas:  0 membership, 2 separation
//   tangent: 0 certified, 2 not certified, 3 precondition failure
//   dual:    0 no weak-duality violation, 2 violation
//   any:     1 usage or IO error

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kktcert/kktcert.hpp"

namespace {

using nlohmann::json;

struct CommonOpts {
  std::string problem_path;
  std::string catalog_name;
  std::string format = "text";
  std::string out_path;
  std::uint64_t seed = 0;
  kktcert::Tolerances tols;
};

void add_common_flags(CLI::App* cmd, CommonOpts& opts, bool with_problem) {
  if (with_problem) {
    auto* prob = cmd->add_option("--problem", opts.problem_path,
                                 "Path to a problem file");
    auto* cat = cmd->add_option("--catalog", opts.catalog_name,
                                "Name of a built-in catalog problem");
    prob->excludes(cat);
  }
  cmd->add_option("--format", opts.format, "Output format")
      ->check(CLI::IsMember({"text", "structured"}));
  cmd->add_option("--out", opts.out_path, "Write output to a file");
  cmd->add_option("--seed", opts.seed, "Seed for sampling operations");
  cmd->add_option("--tol-act", opts.tols.act, "Active-set tolerance");
  cmd->add_option("--tol-feas", opts.tols.feas, "Feasibility tolerance");
  cmd->add_option("--tol-rank", opts.tols.rank, "Numeric rank tolerance");
  cmd->add_option("--tol-stat", opts.tols.stat, "Stationarity tolerance");
}

kktcert::Problem resolve_problem(const CommonOpts& opts) {
  if (!opts.problem_path.empty()) {
    return kktcert::load_problem(opts.problem_path);
  }
  if (!opts.catalog_name.empty()) {
    return kktcert::find_catalog_entry(opts.catalog_name).problem;
  }
  throw kktcert::PreconditionError("one of --problem or --catalog is required");
}

void emit(const CommonOpts& opts, const std::string& text) {
  if (!opts.out_path.empty()) {
    std::ofstream out(opts.out_path);
    if (!out) {
      throw kktcert::PreconditionError("cannot write '" + opts.out_path + "'");
    }
    out << text;
  } else {
    std::cout << text;
  }
}

std::string render_report_text(const kktcert::KKTReport& r) {
  std::ostringstream os;
  os << "verdict: " << kktcert::to_string(r.verdict) << "\n";
  os << "feasible: " << (r.feasible ? "yes" : "no")
     << "  (eq violation " << r.primal_eq_violation << ", ineq violation "
     << r.primal_ineq_violation << ")\n";
  os << "licq: " << (r.cq.licq ? "yes" : "no")
     << "  linear_cq: " << (r.cq.linear_cq ? "yes" : "no")
     << "  active constraints: " << r.cq.active_count << "\n";
  if (r.multipliers) {
    for (const auto& [id, v] : r.multipliers->lambda) {
      os << "lambda[" << id << "] = " << v << "\n";
    }
    for (const auto& [id, v] : r.multipliers->mu) {
      os << "mu[" << id << "] = " << v << "\n";
    }
  }
  if (r.stationarity_residual) {
    os << "stationarity residual: " << *r.stationarity_residual << "\n";
  }
  if (r.dual_min) os << "min multiplier: " << *r.dual_min << "\n";
  if (r.complementarity_residual) {
    os << "complementarity residual: " << *r.complementarity_residual << "\n";
  }
  if (r.descent) {
    os << (r.descent_is_candidate ? "candidate descent direction: "
                                  : "descent direction: ")
       << kktcert::to_csv(r.descent->d)
       << "  (<grad f, d> = " << r.descent->g_dot_d << ")\n";
  }
  if (!r.note.empty()) os << "note: " << r.note << "\n";
  return os.str();
}

int run_certify(const CommonOpts& opts, const std::string& point_csv) {
  kktcert::Problem p = resolve_problem(opts);
  Eigen::VectorXd x = kktcert::parse_point_csv(point_csv);
  if (static_cast<int>(x.size()) != p.n) {
    throw kktcert::PreconditionError("point dimension does not match problem");
  }
  kktcert::KKTReport report = kktcert::certify_first_order(p, x, opts.tols);
  if (opts.format == "structured") {
    json j = kktcert::report_to_json(report);
    j["seed"] = opts.seed;
    emit(opts, j.dump(2) + "\n");
  } else {
    emit(opts, render_report_text(report));
  }
  if (!report.feasible) return 4;
  switch (report.verdict) {
    case kktcert::Verdict::Certified:
      return 0;
    case kktcert::Verdict::Refuted:
      return 2;
    case kktcert::Verdict::Inconclusive:
      return 3;
  }
  return 3;
}

int run_farkas(const CommonOpts& opts, const std::string& generators_path,
               const std::string& g_csv, double tol) {
  kktcert::ConeSpec cone = kktcert::load_generator_file(generators_path);
  Eigen::VectorXd g = kktcert::parse_point_csv(g_csv);
  if (static_cast<int>(g.size()) != cone.ambient_dim) {
    throw kktcert::PreconditionError("g dimension does not match generators");
  }
  kktcert::FarkasCertificate cert = kktcert::farkas_decide(cone, g, tol);

  json j;
  j["seed"] = opts.seed;
  std::ostringstream os;
  if (cert.is_membership()) {
    const auto& m = cert.membership();
    j["certificate"] = "membership";
    j["y"] = std::vector<double>(m.y.data(), m.y.data() + m.y.size());
    j["w"] = std::vector<double>(m.w.data(), m.w.data() + m.w.size());
    j["reconstruction_residual"] = m.reconstruction_residual;
    os << "membership: g is in the cone\n";
    if (m.y.size() > 0) os << "y = " << kktcert::to_csv(m.y) << "\n";
    if (m.w.size() > 0) os << "w = " << kktcert::to_csv(m.w) << "\n";
    os << "reconstruction residual = " << m.reconstruction_residual << "\n";
  } else {
    const auto& s = cert.separation();
    j["certificate"] = "separation";
    j["d"] = std::vector<double>(s.d.data(), s.d.data() + s.d.size());
    j["g_dot_d"] = s.g_dot_d;
    j["marginal"] = s.marginal;
    os << "separation: g is not in the cone\n";
    os << "d = " << kktcert::to_csv(s.d) << "\n";
    os << "<g, d> = " << s.g_dot_d << (s.marginal ? "  (marginal)" : "")
       << "\n";
  }
  emit(opts, opts.format == "structured" ? j.dump(2) + "\n" : os.str());
  return cert.is_membership() ? 0 : 2;
}

json probe_to_json(const kktcert::TangentProbeResult& r) {
  json j;
  j["certified"] = r.certified;
  j["steps"] = json::array();
  for (const auto& s : r.steps) {
    j["steps"].push_back({{"t", s.t},
                          {"z", std::vector<double>(s.z.data(),
                                                    s.z.data() + s.z.size())},
                          {"feasible", s.feasible},
                          {"ratio_error", s.ratio_error}});
  }
  j["failure_reason"] = r.failure_reason ? json(*r.failure_reason) : json();
  return j;
}

std::string probe_to_text(const kktcert::TangentProbeResult& r) {
  std::ostringstream os;
  os << "certified: " << (r.certified ? "yes" : "no") << "\n";
  os << "      t_k  feasible  ratio_error\n";
  for (const auto& s : r.steps) {
    char line[96];
    std::snprintf(line, sizeof(line), "%12.6g  %-8s  %12.6g\n", s.t,
                  s.feasible ? "yes" : "no", s.ratio_error);
    os << line;
  }
  if (r.failure_reason) os << "reason: " << *r.failure_reason << "\n";
  return os.str();
}

int run_tangent(const CommonOpts& opts, const std::string& point_csv,
                const std::string& direction_csv, bool linear, double t0,
                double rho, int steps, double t_bar, double tol_tan) {
  kktcert::Problem p = resolve_problem(opts);
  Eigen::VectorXd x = kktcert::parse_point_csv(point_csv);
  Eigen::VectorXd d = kktcert::parse_point_csv(direction_csv);
  if (static_cast<int>(x.size()) != p.n ||
      static_cast<int>(d.size()) != p.n) {
    throw kktcert::PreconditionError("point/direction dimension mismatch");
  }

  kktcert::TangentProbeResult result;
  try {
    if (linear) {
      result = kktcert::probe_tangent_linear(p, x, d, t_bar, steps,
                                             opts.tols.act, opts.tols.feas);
    } else {
      std::optional<kktcert::TangentSchedule> sched;
      if (t0 > 0.0) sched = kktcert::TangentSchedule{t0, rho, steps};
      result = kktcert::probe_tangent_licq(p, x, d, sched, tol_tan, {},
                                           opts.tols.act, opts.tols.feas,
                                           opts.tols.rank);
    }
  } catch (const kktcert::PreconditionError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }

  if (opts.format == "structured") {
    json j = probe_to_json(result);
    j["seed"] = opts.seed;
    emit(opts, j.dump(2) + "\n");
  } else {
    emit(opts, probe_to_text(result));
  }
  return result.certified ? 0 : 2;
}

int run_dual(const CommonOpts& opts, const std::string& lambda_csv,
             const std::string& mu_csv, const std::string& sweep_csv,
             const std::vector<std::string>& feasible_csvs, double tol) {
  kktcert::Problem p = resolve_problem(opts);

  std::vector<kktcert::Multipliers> samples;
  std::vector<double> sweep_values;
  if (!sweep_csv.empty()) {
    if (p.ineq_constraints.size() != 1 || !p.eq_constraints.empty()) {
      throw kktcert::PreconditionError(
          "--sweep requires exactly one inequality constraint and no "
          "equalities");
    }
    Eigen::VectorXd vals = kktcert::parse_point_csv(sweep_csv);
    const int id = p.ineq_constraints.begin()->first;
    for (int i = 0; i < vals.size(); ++i) {
      kktcert::Multipliers m;
      m.mu[id] = vals[i];
      samples.push_back(m);
      sweep_values.push_back(vals[i]);
    }
  } else {
    kktcert::Multipliers m = kktcert::zero_multipliers(p);
    if (!lambda_csv.empty()) {
      Eigen::VectorXd vals = kktcert::parse_point_csv(lambda_csv);
      if (static_cast<std::size_t>(vals.size()) != m.lambda.size()) {
        throw kktcert::PreconditionError("--lambda count mismatch");
      }
      int i = 0;
      for (auto& [id, v] : m.lambda) v = vals[i++];
    }
    if (!mu_csv.empty()) {
      Eigen::VectorXd vals = kktcert::parse_point_csv(mu_csv);
      if (static_cast<std::size_t>(vals.size()) != m.mu.size()) {
        throw kktcert::PreconditionError("--mu count mismatch");
      }
      int i = 0;
      for (auto& [id, v] : m.mu) v = vals[i++];
    }
    samples.push_back(m);
  }

  std::vector<Eigen::VectorXd> feasible_points;
  for (const auto& csv : feasible_csvs) {
    Eigen::VectorXd x = kktcert::parse_point_csv(csv);
    if (static_cast<int>(x.size()) != p.n) {
      throw kktcert::PreconditionError("feasible point dimension mismatch");
    }
    feasible_points.push_back(std::move(x));
  }
  const bool weak_duality_mode = !feasible_points.empty();
  if (weak_duality_mode) {
    for (const auto& m : samples) {
      for (const auto& [id, mu] : m.mu) {
        (void)id;
        if (mu < 0.0) {
          throw kktcert::PreconditionError(
              "weak-duality mode requires mu >= 0");
        }
      }
    }
    for (const auto& x : feasible_points) {
      if (!kktcert::check_feasible(p, x, opts.tols.feas).feasible) {
        throw kktcert::PreconditionError("supplied point is infeasible");
      }
    }
  }

  json j;
  j["seed"] = opts.seed;
  j["values"] = json::array();
  std::ostringstream os;
  std::vector<kktcert::DualEval> evals;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    kktcert::DualEval q = kktcert::dual_objective(p, samples[i]);
    evals.push_back(q);
    json row;
    if (!sweep_values.empty()) row["mu"] = sweep_values[i];
    row["q"] = q.value.is_finite() ? json(q.value.value())
                                   : json(q.value.to_string());
    row["status"] = kktcert::to_string(q.status);
    j["values"].push_back(row);
    os << "q";
    if (!sweep_values.empty()) {
      os << "(mu=" << kktcert::detail::format_double(sweep_values[i]) << ")";
    }
    os << " = "
       << (q.value.is_finite()
               ? kktcert::detail::format_double(q.value.value())
               : q.value.to_string())
       << "  [" << kktcert::to_string(q.status) << "]\n";
  }

  int exit_code = 0;
  if (weak_duality_mode) {
    double worst = std::numeric_limits<double>::infinity();
    bool violated = false;
    int skipped = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& q = evals[i];
      if (q.status == kktcert::DualStatus::IterationCap) {
        ++skipped;
        continue;
      }
      if (q.value.is_neg_inf()) continue;
      for (const auto& x : feasible_points) {
        double gap = p.objective.eval(x) - q.value.value();
        worst = std::min(worst, gap);
        if (gap < -tol) violated = true;
      }
    }
    j["weak_duality"] = {
        {"violated", violated},
        {"worst_gap", kktcert::detail::optional_number(worst)},
        {"skipped", skipped}};
    os << "weak duality " << (violated ? "VIOLATED" : "holds")
       << ", worst gap = " << worst << "\n";
    exit_code = violated ? 2 : 0;
  }

  emit(opts, opts.format == "structured" ? j.dump(2) + "\n" : os.str());
  return exit_code;
}

int run_catalog(const CommonOpts& opts, const std::string& export_name) {
  if (!export_name.empty()) {
    const kktcert::CatalogEntry& e = kktcert::find_catalog_entry(export_name);
    const std::string text =
        kktcert::problem_to_json(e.problem).dump(2) + "\n";
    emit(opts, text);
    return 0;
  }
  json j = json::array();
  std::ostringstream os;
  for (const auto& e : kktcert::catalog_entries()) {
    j.push_back({{"name", e.name},
                 {"n", e.problem.n},
                 {"point", kktcert::to_csv(e.known_point)},
                 {"expected_verdict", kktcert::to_string(e.expected_verdict)},
                 {"licq", e.expected_licq},
                 {"linear_cq", e.expected_linear_cq},
                 {"note", e.note}});
    os << e.name << "  (n=" << e.problem.n << ", point "
       << kktcert::to_csv(e.known_point) << ", expect "
       << kktcert::to_string(e.expected_verdict) << ")\n";
  }
  emit(opts, opts.format == "structured" ? j.dump(2) + "\n" : os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"First-order optimality certificates for smooth constrained "
               "problems"};
  app.require_subcommand(1);

  CommonOpts certify_opts;
  std::string certify_point;
  auto* certify = app.add_subcommand(
      "certify", "Run the full KKT certification pipeline at a point");
  add_common_flags(certify, certify_opts, true);
  certify->add_option("--point", certify_point, "Point as CSV")->required();

  CommonOpts farkas_opts;
  std::string farkas_generators, farkas_g;
  double farkas_tol = 1e-8;
  auto* farkas = app.add_subcommand(
      "farkas", "Decide cone membership of g or produce a separator");
  add_common_flags(farkas, farkas_opts, false);
  farkas->add_option("--generators", farkas_generators, "Generator file")
      ->required();
  farkas->add_option("--g", farkas_g, "Vector g as CSV")->required();
  farkas->add_option("--tol", farkas_tol, "Decision tolerance");

  CommonOpts tangent_opts;
  std::string tangent_point, tangent_direction;
  bool tangent_linear = false;
  double tangent_t0 = 0.0, tangent_rho = 0.5, tangent_tbar = 0.0;
  double tangent_tol = 1e-4;
  int tangent_steps = 12;
  auto* tangent = app.add_subcommand(
      "tangent", "Certify a direction as tangent via a feasible sequence");
  add_common_flags(tangent, tangent_opts, true);
  tangent->add_option("--point", tangent_point, "Point as CSV")->required();
  tangent->add_option("--direction", tangent_direction, "Direction as CSV")
      ->required();
  tangent->add_flag("--linear", tangent_linear,
                    "Use the LinearCQ path probe instead of the LICQ probe");
  tangent->add_option("--t0", tangent_t0, "Initial step (0 = automatic)");
  tangent->add_option("--rho", tangent_rho, "Step shrink factor");
  tangent->add_option("--steps", tangent_steps, "Number of schedule steps");
  tangent->add_option("--t-bar", tangent_tbar,
                      "Path length for --linear (0 = automatic)");
  tangent->add_option("--tol-tan", tangent_tol, "Certification tolerance");

  CommonOpts dual_opts;
  std::string dual_lambda, dual_mu, dual_sweep;
  std::vector<std::string> dual_feasible;
  double dual_tol = 1e-6;
  auto* dual = app.add_subcommand(
      "dual", "Evaluate the dual objective; optionally check weak duality");
  add_common_flags(dual, dual_opts, true);
  dual->add_option("--lambda", dual_lambda,
                   "Equality multipliers, ascending id order");
  dual->add_option("--mu", dual_mu,
                   "Inequality multipliers, ascending id order");
  dual->add_option("--sweep", dual_sweep,
                   "Scalar mu values for single-inequality problems");
  dual->add_option("--feasible-point", dual_feasible,
                   "Feasible point(s) for the weak-duality check");
  dual->add_option("--tol", dual_tol, "Weak-duality tolerance");

  CommonOpts catalog_opts;
  std::string catalog_export;
  auto* catalog =
      app.add_subcommand("catalog", "List the built-in catalog problems");
  add_common_flags(catalog, catalog_opts, false);
  catalog->add_option("--export", catalog_export,
                      "Write one entry as a problem file instead of listing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // every usage error maps to 1
  }

  try {
    if (certify->parsed()) return run_certify(certify_opts, certify_point);
    if (farkas->parsed()) {
      return run_farkas(farkas_opts, farkas_generators, farkas_g, farkas_tol);
    }
    if (tangent->parsed()) {
      return run_tangent(tangent_opts, tangent_point, tangent_direction,
                         tangent_linear, tangent_t0, tangent_rho,
                         tangent_steps, tangent_tbar, tangent_tol);
    }
    if (dual->parsed()) {
      return run_dual(dual_opts, dual_lambda, dual_mu, dual_sweep,
                      dual_feasible, dual_tol);
    }
    if (catalog->parsed()) return run_catalog(catalog_opts, catalog_export);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
