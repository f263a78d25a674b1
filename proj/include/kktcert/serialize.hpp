#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "kktcert/cone.hpp"
#include "kktcert/errors.hpp"
#include "kktcert/expr.hpp"
#include "kktcert/kkt.hpp"
#include "kktcert/problem.hpp"

namespace kktcert {

inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Points: comma-separated decimals, scientific notation accepted.
// ---------------------------------------------------------------------------

inline Eigen::VectorXd parse_point_csv(std::string_view text) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string_view field = text.substr(
        pos, comma == std::string_view::npos ? std::string_view::npos
                                             : comma - pos);
    std::size_t b = field.find_first_not_of(" \t");
    std::size_t e = field.find_last_not_of(" \t");
    if (b == std::string_view::npos) {
      throw PreconditionError("empty field in point list");
    }
    field = field.substr(b, e - b + 1);
    double v = 0.0;
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || p != field.data() + field.size()) {
      throw PreconditionError("malformed number '" + std::string(field) +
                              "' in point list");
    }
    values.push_back(v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  Eigen::VectorXd x(static_cast<int>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    x[static_cast<int>(i)] = values[i];
  }
  return x;
}

inline std::string to_csv(const Eigen::VectorXd& v) {
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    if (i > 0) out += ",";
    out += detail::format_double(v[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Problem files:
// {"name": str, "n": int, "objective": expr,
//  "eq": [{"id": int, "expr": str}...], "ineq": [{"id": int, "expr": str}...]}
// Ids must be unique across both lists.
// ---------------------------------------------------------------------------

inline nlohmann::json problem_to_json(const Problem& p) {
  nlohmann::json j;
  j["name"] = p.name;
  j["n"] = p.n;
  j["objective"] = pretty_print(p.objective);
  j["eq"] = nlohmann::json::array();
  for (const auto& [id, e] : p.eq_constraints) {
    j["eq"].push_back({{"id", id}, {"expr", pretty_print(e)}});
  }
  j["ineq"] = nlohmann::json::array();
  for (const auto& [id, e] : p.ineq_constraints) {
    j["ineq"].push_back({{"id", id}, {"expr", pretty_print(e)}});
  }
  return j;
}

inline Problem problem_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw PreconditionError("problem file must be an object");
  const std::string name = j.at("name").get<std::string>();
  const int n = j.at("n").get<int>();
  if (n <= 0) throw PreconditionError("problem dimension must be positive");
  Expr objective = parse(j.at("objective").get<std::string>(), n);

  std::set<int> seen;
  auto read_list = [&](const char* key) {
    std::map<int, Expr> out;
    if (!j.contains(key)) return out;
    for (const auto& item : j.at(key)) {
      const int id = item.at("id").get<int>();
      if (id < 0) throw PreconditionError("constraint ids must be natural");
      if (!seen.insert(id).second) {
        throw PreconditionError("duplicate constraint id " +
                                std::to_string(id));
      }
      out.emplace(id, parse(item.at("expr").get<std::string>(), n));
    }
    return out;
  };
  std::map<int, Expr> eq = read_list("eq");
  std::map<int, Expr> ineq = read_list("ineq");
  return Problem(name, n, std::move(objective), std::move(eq),
                 std::move(ineq));
}

inline Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open problem file '" + path + "'");
  nlohmann::json j;
  in >> j;
  return problem_from_json(j);
}

inline void save_problem(const Problem& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw PreconditionError("cannot write problem file '" + path + "'");
  out << problem_to_json(p).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// KKT reports: flat object with all residuals, multipliers keyed by
// constraint id, verdict string, CQ booleans, and the tool version.
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json optional_number(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  return *v;
}

inline std::optional<double> number_or_none(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw PreconditionError("unexpected string '" + s + "' for a number");
  }
  return j.get<double>();
}

inline nlohmann::json multiplier_map_to_json(const std::map<int, double>& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, v] : m) j[std::to_string(id)] = v;
  return j;
}

inline std::map<int, double> multiplier_map_from_json(
    const nlohmann::json& j) {
  std::map<int, double> m;
  for (auto it = j.begin(); it != j.end(); ++it) {
    m[std::stoi(it.key())] = it.value().get<double>();
  }
  return m;
}

}  // namespace detail

inline nlohmann::json report_to_json(const KKTReport& r) {
  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["verdict"] = to_string(r.verdict);
  j["feasible"] = r.feasible;
  j["primal_eq_violation"] = r.primal_eq_violation;
  j["primal_ineq_violation"] = r.primal_ineq_violation;
  j["stationarity_residual"] = detail::optional_number(r.stationarity_residual);
  j["dual_min"] = detail::optional_number(r.dual_min);
  j["complementarity_residual"] =
      detail::optional_number(r.complementarity_residual);
  if (r.multipliers) {
    j["lambda"] = detail::multiplier_map_to_json(r.multipliers->lambda);
    j["mu"] = detail::multiplier_map_to_json(r.multipliers->mu);
  } else {
    j["lambda"] = nullptr;
    j["mu"] = nullptr;
  }
  j["licq"] = r.cq.licq;
  j["licq_smallest_singular_value"] =
      detail::optional_number(r.cq.licq_smallest_singular_value);
  j["linear_cq"] = r.cq.linear_cq;
  j["active_count"] = r.cq.active_count;
  j["cq_note"] = r.cq.note;
  if (r.descent) {
    j["descent_direction"] = std::vector<double>(
        r.descent->d.data(), r.descent->d.data() + r.descent->d.size());
    j["descent_g_dot_d"] = r.descent->g_dot_d;
    j["descent_marginal"] = r.descent->marginal;
  } else {
    j["descent_direction"] = nullptr;
    j["descent_g_dot_d"] = nullptr;
    j["descent_marginal"] = nullptr;
  }
  j["descent_is_candidate"] = r.descent_is_candidate;
  j["note"] = r.note;
  return j;
}

inline KKTReport report_from_json(const nlohmann::json& j) {
  KKTReport r;
  r.verdict = j.at("verdict") == "certified"  ? Verdict::Certified
              : j.at("verdict") == "refuted" ? Verdict::Refuted
                                             : Verdict::Inconclusive;
  r.feasible = j.at("feasible").get<bool>();
  r.primal_eq_violation = j.at("primal_eq_violation").get<double>();
  r.primal_ineq_violation = j.at("primal_ineq_violation").get<double>();
  r.stationarity_residual =
      detail::number_or_none(j.at("stationarity_residual"));
  r.dual_min = detail::number_or_none(j.at("dual_min"));
  r.complementarity_residual =
      detail::number_or_none(j.at("complementarity_residual"));
  if (!j.at("lambda").is_null()) {
    Multipliers m;
    m.lambda = detail::multiplier_map_from_json(j.at("lambda"));
    m.mu = detail::multiplier_map_from_json(j.at("mu"));
    r.multipliers = std::move(m);
  }
  r.cq.licq = j.at("licq").get<bool>();
  if (auto s = detail::number_or_none(j.at("licq_smallest_singular_value"))) {
    r.cq.licq_smallest_singular_value = *s;
  }
  r.cq.linear_cq = j.at("linear_cq").get<bool>();
  r.cq.active_count = j.at("active_count").get<int>();
  r.cq.note = j.at("cq_note").get<std::string>();
  if (!j.at("descent_direction").is_null()) {
    DescentDirection d;
    const auto vec = j.at("descent_direction").get<std::vector<double>>();
    d.d = Eigen::Map<const Eigen::VectorXd>(vec.data(),
                                            static_cast<int>(vec.size()));
    d.g_dot_d = j.at("descent_g_dot_d").get<double>();
    d.marginal = j.at("descent_marginal").get<bool>();
    r.descent = std::move(d);
  }
  r.descent_is_candidate = j.at("descent_is_candidate").get<bool>();
  r.note = j.at("note").get<std::string>();
  return r;
}

// ---------------------------------------------------------------------------
// Generator files for the farkas subcommand: one generator per line,
//   free: v1,...,vn
//   nonneg: v1,...,vn
// Blank lines and lines starting with '#' are ignored.
// ---------------------------------------------------------------------------

inline ConeSpec parse_generator_file(std::istream& in) {
  ConeSpec cone;
  cone.ambient_dim = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    std::size_t colon = line.find(':');
    if (colon == std::string::npos) {
      throw PreconditionError("line " + std::to_string(lineno) +
                              ": expected 'free:' or 'nonneg:' prefix");
    }
    std::string kind = line.substr(b, colon - b);
    Eigen::VectorXd v = parse_point_csv(line.substr(colon + 1));
    if (cone.ambient_dim == 0) {
      cone.ambient_dim = static_cast<int>(v.size());
    } else if (static_cast<int>(v.size()) != cone.ambient_dim) {
      throw PreconditionError("line " + std::to_string(lineno) +
                              ": generator dimension mismatch");
    }
    if (kind == "free") {
      cone.free_generators.push_back(std::move(v));
    } else if (kind == "nonneg") {
      cone.nonneg_generators.push_back(std::move(v));
    } else {
      throw PreconditionError("line " + std::to_string(lineno) +
                              ": unknown generator kind '" + kind + "'");
    }
  }
  if (cone.ambient_dim == 0) {
    throw PreconditionError("generator file has no generators");
  }
  return cone;
}

inline ConeSpec load_generator_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw PreconditionError("cannot open generator file '" + path + "'");
  }
  return parse_generator_file(in);
}

}  // namespace kktcert
