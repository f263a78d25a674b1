#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "kktcert/errors.hpp"

namespace kktcert {

enum class UnaryOp { Neg, Sin, Cos, Exp, Log, Sqrt };
enum class BinaryOp { Add, Sub, Mul, Div };

struct ExprNode;
using ExprNodePtr = std::shared_ptr<const ExprNode>;

/// One AST node. Nodes are immutable after construction and shared freely.
/// Pow keeps a numeric exponent (the grammar requires the exponent to fold
/// to a constant); integer exponents are evaluated by repeated
/// multiplication so negative bases stay exact.
struct ExprNode {
  enum class Kind { Constant, Variable, Unary, Binary, Pow };

  Kind kind;
  double value = 0.0;        // Constant
  int index = -1;            // Variable, 0-based
  UnaryOp uop = UnaryOp::Neg;
  BinaryOp bop = BinaryOp::Add;
  ExprNodePtr lhs;           // Unary operand / Binary lhs / Pow base
  ExprNodePtr rhs;           // Binary rhs
  double exponent = 0.0;     // Pow
  bool exponent_is_integer = false;

  static ExprNodePtr constant(double c) {
    auto n = std::make_shared<ExprNode>();
    n->kind = Kind::Constant;
    n->value = c;
    return n;
  }
  static ExprNodePtr variable(int i) {
    auto n = std::make_shared<ExprNode>();
    n->kind = Kind::Variable;
    n->index = i;
    return n;
  }
  static ExprNodePtr unary(UnaryOp op, ExprNodePtr a) {
    auto n = std::make_shared<ExprNode>();
    n->kind = Kind::Unary;
    n->uop = op;
    n->lhs = std::move(a);
    return n;
  }
  static ExprNodePtr binary(BinaryOp op, ExprNodePtr a, ExprNodePtr b) {
    auto n = std::make_shared<ExprNode>();
    n->kind = Kind::Binary;
    n->bop = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
  }
  static ExprNodePtr pow(ExprNodePtr base, double e, bool is_integer) {
    auto n = std::make_shared<ExprNode>();
    n->kind = Kind::Pow;
    n->lhs = std::move(base);
    n->exponent = e;
    n->exponent_is_integer = is_integer;
    return n;
  }
};

/// x |-> <a, x> + b
struct AffineForm {
  Eigen::VectorXd a;
  double b = 0.0;

  double eval(const Eigen::VectorXd& x) const { return a.dot(x) + b; }
};

namespace detail {

// Forward-mode scalar: value plus one directional derivative.
struct Dual {
  double v = 0.0;
  double d = 0.0;
};

inline double finite_or_throw(double v, const char* op) {
  if (!std::isfinite(v)) {
    throw DomainError(std::string("non-finite value in '") + op + "'");
  }
  return v;
}

inline Dual finite_or_throw(Dual x, const char* op) {
  if (!std::isfinite(x.v) || !std::isfinite(x.d)) {
    throw DomainError(std::string("non-finite value or derivative in '") + op +
                      "'");
  }
  return x;
}

inline double val(double x) { return x; }
inline double val(const Dual& x) { return x.v; }

inline double s_neg(double a) { return -a; }
inline Dual s_neg(Dual a) { return {-a.v, -a.d}; }
inline double s_add(double a, double b) { return a + b; }
inline Dual s_add(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline double s_sub(double a, double b) { return a - b; }
inline Dual s_sub(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline double s_mul(double a, double b) { return a * b; }
inline Dual s_mul(Dual a, Dual b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d};
}
inline double s_div(double a, double b) { return a / b; }
inline Dual s_div(Dual a, Dual b) {
  double q = a.v / b.v;
  return {q, (a.d - q * b.d) / b.v};
}
inline double s_sin(double a) { return std::sin(a); }
inline Dual s_sin(Dual a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }
inline double s_cos(double a) { return std::cos(a); }
inline Dual s_cos(Dual a) { return {std::cos(a.v), -std::sin(a.v) * a.d}; }
inline double s_exp(double a) { return std::exp(a); }
inline Dual s_exp(Dual a) {
  double e = std::exp(a.v);
  return {e, e * a.d};
}
inline double s_log(double a) { return std::log(a); }
inline Dual s_log(Dual a) { return {std::log(a.v), a.d / a.v}; }
// sqrt is differentiable only on arg > 0; the value-only path accepts 0.
inline double s_sqrt(double a) { return std::sqrt(a); }
inline Dual s_sqrt(Dual a) {
  double r = std::sqrt(a.v);
  return {r, a.d / (2.0 * r)};
}

template <class Scalar>
Scalar s_powi(Scalar base, std::int64_t e) {
  // Unrolled multiplication (by squaring); negative exponents via reciprocal.
  bool negative = e < 0;
  std::uint64_t k = negative ? static_cast<std::uint64_t>(-e)
                             : static_cast<std::uint64_t>(e);
  Scalar acc = Scalar{};
  if constexpr (std::is_same_v<Scalar, double>) {
    acc = 1.0;
  } else {
    acc = Dual{1.0, 0.0};
  }
  Scalar b = base;
  while (k > 0) {
    if (k & 1) acc = s_mul(acc, b);
    b = s_mul(b, b);
    k >>= 1;
  }
  if (negative) {
    if constexpr (std::is_same_v<Scalar, double>) {
      return 1.0 / acc;
    } else {
      return s_div(Dual{1.0, 0.0}, acc);
    }
  }
  return acc;
}

inline double s_powr(double base, double e) { return std::pow(base, e); }
inline Dual s_powr(Dual base, double e) {
  double p = std::pow(base.v, e);
  return {p, e * std::pow(base.v, e - 1.0) * base.d};
}

template <class Scalar, class VarFn>
Scalar eval_node(const ExprNode& n, const VarFn& var) {
  using Kind = ExprNode::Kind;
  switch (n.kind) {
    case Kind::Constant:
      if constexpr (std::is_same_v<Scalar, double>) {
        return n.value;
      } else {
        return Dual{n.value, 0.0};
      }
    case Kind::Variable:
      return var(n.index);
    case Kind::Unary: {
      Scalar a = eval_node<Scalar>(*n.lhs, var);
      switch (n.uop) {
        case UnaryOp::Neg:
          return s_neg(a);
        case UnaryOp::Sin:
          return finite_or_throw(s_sin(a), "sin");
        case UnaryOp::Cos:
          return finite_or_throw(s_cos(a), "cos");
        case UnaryOp::Exp:
          return finite_or_throw(s_exp(a), "exp");
        case UnaryOp::Log:
          if (val(a) <= 0.0) throw DomainError("log of nonpositive value");
          return finite_or_throw(s_log(a), "log");
        case UnaryOp::Sqrt:
          if constexpr (std::is_same_v<Scalar, double>) {
            if (val(a) < 0.0) throw DomainError("sqrt of negative value");
          } else {
            if (val(a) <= 0.0) {
              throw DomainError("sqrt not differentiable at nonpositive value");
            }
          }
          return finite_or_throw(s_sqrt(a), "sqrt");
      }
      throw InternalError("unreachable unary op");
    }
    case Kind::Binary: {
      Scalar a = eval_node<Scalar>(*n.lhs, var);
      Scalar b = eval_node<Scalar>(*n.rhs, var);
      switch (n.bop) {
        case BinaryOp::Add:
          return finite_or_throw(s_add(a, b), "+");
        case BinaryOp::Sub:
          return finite_or_throw(s_sub(a, b), "-");
        case BinaryOp::Mul:
          return finite_or_throw(s_mul(a, b), "*");
        case BinaryOp::Div:
          if (val(b) == 0.0) throw DomainError("division by zero");
          return finite_or_throw(s_div(a, b), "/");
      }
      throw InternalError("unreachable binary op");
    }
    case Kind::Pow: {
      Scalar base = eval_node<Scalar>(*n.lhs, var);
      if (n.exponent_is_integer) {
        auto e = static_cast<std::int64_t>(n.exponent);
        if (e < 0 && val(base) == 0.0) {
          throw DomainError("zero base with negative exponent");
        }
        return finite_or_throw(s_powi(base, e), "^");
      }
      if (val(base) <= 0.0) {
        throw DomainError("non-integer exponent requires positive base");
      }
      return finite_or_throw(s_powr(base, n.exponent), "^");
    }
  }
  throw InternalError("unreachable node kind");
}

}  // namespace detail

namespace detail {

inline int max_variable_index(const ExprNode& n) {
  using Kind = ExprNode::Kind;
  switch (n.kind) {
    case Kind::Constant:
      return -1;
    case Kind::Variable:
      return n.index;
    case Kind::Unary:
    case Kind::Pow:
      return max_variable_index(*n.lhs);
    case Kind::Binary:
      return std::max(max_variable_index(*n.lhs),
                      max_variable_index(*n.rhs));
  }
  return -1;
}

}  // namespace detail

/// Immutable scalar expression over variables x1..xn (indices 0..n-1).
/// All operations are pure; instances are safe to share across threads.
class Expr {
 public:
  Expr() = default;
  Expr(ExprNodePtr root, int dim) : root_(std::move(root)), dim_(dim) {
    if (!root_) throw PreconditionError("null expression root");
    if (dim_ < 0) throw PreconditionError("negative dimension");
    if (detail::max_variable_index(*root_) >= dim_) {
      throw PreconditionError("variable index exceeds declared dimension");
    }
  }

  const ExprNode& root() const { return *root_; }
  ExprNodePtr root_ptr() const { return root_; }
  int dim() const { return dim_; }
  bool valid() const { return root_ != nullptr; }

  /// Exact recursive evaluation at x.
  double eval(const Eigen::VectorXd& x) const {
    check_point(x);
    return detail::eval_node<double>(
        *root_, [&](int i) { return x[i]; });
  }

  /// Directional derivative d/dt e(x + t*xdot) at t = 0, one forward pass.
  double directional(const Eigen::VectorXd& x,
                     const Eigen::VectorXd& xdot) const {
    check_point(x);
    check_point(xdot);
    detail::Dual r = detail::eval_node<detail::Dual>(
        *root_, [&](int i) { return detail::Dual{x[i], xdot[i]}; });
    return r.d;
  }

  /// Full gradient via n forward passes with unit tangents.
  Eigen::VectorXd grad(const Eigen::VectorXd& x) const {
    check_point(x);
    Eigen::VectorXd g(dim_);
    for (int k = 0; k < dim_; ++k) {
      detail::Dual r = detail::eval_node<detail::Dual>(
          *root_, [&](int i) { return detail::Dual{x[i], i == k ? 1.0 : 0.0}; });
      g[k] = r.d;
    }
    return g;
  }

 private:
  void check_point(const Eigen::VectorXd& x) const {
    if (!root_) throw PreconditionError("empty expression");
    if (static_cast<int>(x.size()) != dim_) {
      throw PreconditionError("point dimension " + std::to_string(x.size()) +
                              " does not match expression dimension " +
                              std::to_string(dim_));
    }
  }

  ExprNodePtr root_;
  int dim_ = 0;
};

inline bool structurally_equal(const ExprNode& a, const ExprNode& b) {
  using Kind = ExprNode::Kind;
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Kind::Constant:
      return a.value == b.value;
    case Kind::Variable:
      return a.index == b.index;
    case Kind::Unary:
      return a.uop == b.uop && structurally_equal(*a.lhs, *b.lhs);
    case Kind::Binary:
      return a.bop == b.bop && structurally_equal(*a.lhs, *b.lhs) &&
             structurally_equal(*a.rhs, *b.rhs);
    case Kind::Pow:
      return a.exponent == b.exponent &&
             a.exponent_is_integer == b.exponent_is_integer &&
             structurally_equal(*a.lhs, *b.lhs);
  }
  return false;
}

inline bool structurally_equal(const Expr& a, const Expr& b) {
  return a.dim() == b.dim() && structurally_equal(a.root(), b.root());
}

// ---------------------------------------------------------------------------
// Parsing
//
// expr   := term (('+'|'-') term)*
// term   := factor (('*'|'/') factor)*
// factor := '-' factor | atom ('^' factor)?        (pow right-associative,
//                                                   pow binds tighter than
//                                                   unary minus)
// atom   := number | ident | func '(' expr ')' | '(' expr ')'
// func   in {sin, cos, exp, log, sqrt}; ident matches x[1-9][0-9]*
//
// The exponent of '^' must fold to a constant.
// ---------------------------------------------------------------------------

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

  ExprNodePtr parse() {
    ExprNodePtr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) {
      throw ParseError(pos_, "unexpected trailing input");
    }
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
            text_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  ExprNodePtr parse_expr() {
    ExprNodePtr e = parse_term();
    while (true) {
      if (eat('+')) {
        e = ExprNode::binary(BinaryOp::Add, e, parse_term());
      } else if (eat('-')) {
        e = ExprNode::binary(BinaryOp::Sub, e, parse_term());
      } else {
        return e;
      }
    }
  }

  ExprNodePtr parse_term() {
    ExprNodePtr e = parse_factor();
    while (true) {
      if (eat('*')) {
        e = ExprNode::binary(BinaryOp::Mul, e, parse_factor());
      } else if (eat('/')) {
        e = ExprNode::binary(BinaryOp::Div, e, parse_factor());
      } else {
        return e;
      }
    }
  }

  ExprNodePtr parse_factor() {
    if (eat('-')) {
      ExprNodePtr inner = parse_factor();
      // Fold an immediate constant so "-2" round-trips as a literal.
      if (inner->kind == ExprNode::Kind::Constant) {
        return ExprNode::constant(-inner->value);
      }
      return ExprNode::unary(UnaryOp::Neg, inner);
    }
    ExprNodePtr base = parse_atom();
    skip_ws();
    std::size_t caret_pos = pos_;
    if (eat('^')) {
      ExprNodePtr e = parse_factor();
      std::optional<double> folded = fold_to_constant(e);
      if (!folded) {
        throw ParseError(caret_pos, "exponent must be a constant");
      }
      double ev = *folded;
      double r = std::round(ev);
      bool is_int = (r == ev) && std::abs(ev) <= 1e9;
      return ExprNode::pow(base, ev, is_int);
    }
    return base;
  }

  ExprNodePtr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) {
      throw ParseError(pos_, "unexpected end of input");
    }
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      ExprNodePtr e = parse_expr();
      if (!eat(')')) {
        throw ParseError(pos_, "expected ')'");
      }
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') {
      return parse_number();
    }
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
      return parse_ident();
    }
    throw ParseError(pos_, std::string("unexpected character '") + c + "'");
  }

  ExprNodePtr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           ((text_[pos_] >= '0' && text_[pos_] <= '9') || text_[pos_] == '.')) {
      ++pos_;
    }
    // Scientific notation tail: e or E, optional sign, digits.
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
        ++pos_;
      }
      if (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
        while (pos_ < text_.size() && text_[pos_] >= '0' &&
               text_[pos_] <= '9') {
          ++pos_;
        }
      } else {
        pos_ = mark;  // not an exponent, leave for the ident parser to reject
      }
    }
    double v = 0.0;
    auto first = text_.data() + start;
    auto last = text_.data() + pos_;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last) {
      throw ParseError(start, "malformed number");
    }
    return ExprNode::constant(v);
  }

  ExprNodePtr parse_ident() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           ((text_[pos_] >= 'a' && text_[pos_] <= 'z') ||
            (text_[pos_] >= 'A' && text_[pos_] <= 'Z') ||
            (text_[pos_] >= '0' && text_[pos_] <= '9'))) {
      ++pos_;
    }
    std::string_view name = text_.substr(start, pos_ - start);
    if (name == "sin" || name == "cos" || name == "exp" || name == "log" ||
        name == "sqrt") {
      UnaryOp op = name == "sin"   ? UnaryOp::Sin
                   : name == "cos" ? UnaryOp::Cos
                   : name == "exp" ? UnaryOp::Exp
                   : name == "log" ? UnaryOp::Log
                                   : UnaryOp::Sqrt;
      if (!eat('(')) {
        throw ParseError(pos_, "expected '(' after function name");
      }
      ExprNodePtr arg = parse_expr();
      if (!eat(')')) {
        throw ParseError(pos_, "expected ')'");
      }
      return ExprNode::unary(op, arg);
    }
    // Variables: x followed by a 1-based index with no leading zero.
    if (name.size() >= 2 && name[0] == 'x' && name[1] >= '1' &&
        name[1] <= '9') {
      int idx = 0;
      auto [p, ec] =
          std::from_chars(name.data() + 1, name.data() + name.size(), idx);
      if (ec == std::errc{} && p == name.data() + name.size()) {
        if (idx > dim_) {
          throw ParseError(start, "variable x" + std::to_string(idx) +
                                      " exceeds dimension " +
                                      std::to_string(dim_));
        }
        return ExprNode::variable(idx - 1);
      }
    }
    throw ParseError(start, "unknown identifier '" + std::string(name) + "'");
  }

 public:
  /// Constant folding used for pow exponents and affinity detection:
  /// returns the value iff the subtree evaluates to a constant with total
  /// (sub)operations, and the result is finite.
  static std::optional<double> fold_to_constant(const ExprNodePtr& n);

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int dim_;
};

inline std::optional<double> Parser::fold_to_constant(const ExprNodePtr& n) {
  using Kind = ExprNode::Kind;
  switch (n->kind) {
    case Kind::Constant:
      return n->value;
    case Kind::Variable:
      return std::nullopt;
    case Kind::Unary: {
      auto a = fold_to_constant(n->lhs);
      if (!a) return std::nullopt;
      double r;
      switch (n->uop) {
        case UnaryOp::Neg:
          r = -*a;
          break;
        case UnaryOp::Sin:
          r = std::sin(*a);
          break;
        case UnaryOp::Cos:
          r = std::cos(*a);
          break;
        case UnaryOp::Exp:
          r = std::exp(*a);
          break;
        case UnaryOp::Log:
          if (*a <= 0.0) return std::nullopt;
          r = std::log(*a);
          break;
        case UnaryOp::Sqrt:
          if (*a < 0.0) return std::nullopt;
          r = std::sqrt(*a);
          break;
      }
      return std::isfinite(r) ? std::optional<double>(r) : std::nullopt;
    }
    case Kind::Binary: {
      auto a = fold_to_constant(n->lhs);
      auto b = fold_to_constant(n->rhs);
      if (!a || !b) return std::nullopt;
      double r;
      switch (n->bop) {
        case BinaryOp::Add:
          r = *a + *b;
          break;
        case BinaryOp::Sub:
          r = *a - *b;
          break;
        case BinaryOp::Mul:
          r = *a * *b;
          break;
        case BinaryOp::Div:
          if (*b == 0.0) return std::nullopt;
          r = *a / *b;
          break;
      }
      return std::isfinite(r) ? std::optional<double>(r) : std::nullopt;
    }
    case Kind::Pow: {
      auto a = fold_to_constant(n->lhs);
      if (!a) return std::nullopt;
      double r;
      if (n->exponent_is_integer) {
        if (*a == 0.0 && n->exponent < 0) return std::nullopt;
        r = s_powi(*a, static_cast<std::int64_t>(n->exponent));
      } else {
        if (*a <= 0.0) return std::nullopt;
        r = std::pow(*a, n->exponent);
      }
      return std::isfinite(r) ? std::optional<double>(r) : std::nullopt;
    }
  }
  return std::nullopt;
}

/// Simplification pass behind affinity detection: folds constant subtrees
/// and the identities 0*e, e*0, 1*e, e*1, e/1, e+0, 0+e, e-0, e^0, e^1.
inline ExprNodePtr fold(const ExprNodePtr& n) {
  using Kind = ExprNode::Kind;
  if (auto c = Parser::fold_to_constant(n)) {
    return ExprNode::constant(*c);
  }
  switch (n->kind) {
    case Kind::Constant:
    case Kind::Variable:
      return n;
    case Kind::Unary: {
      ExprNodePtr a = fold(n->lhs);
      if (n->uop == UnaryOp::Neg && a->kind == Kind::Constant) {
        return ExprNode::constant(-a->value);
      }
      return a == n->lhs ? n : ExprNode::unary(n->uop, a);
    }
    case Kind::Binary: {
      ExprNodePtr a = fold(n->lhs);
      ExprNodePtr b = fold(n->rhs);
      bool a_const = a->kind == Kind::Constant;
      bool b_const = b->kind == Kind::Constant;
      switch (n->bop) {
        case BinaryOp::Add:
          if (a_const && a->value == 0.0) return b;
          if (b_const && b->value == 0.0) return a;
          break;
        case BinaryOp::Sub:
          if (b_const && b->value == 0.0) return a;
          break;
        case BinaryOp::Mul:
          if ((a_const && a->value == 0.0) || (b_const && b->value == 0.0)) {
            return ExprNode::constant(0.0);
          }
          if (a_const && a->value == 1.0) return b;
          if (b_const && b->value == 1.0) return a;
          break;
        case BinaryOp::Div:
          if (b_const && b->value == 1.0) return a;
          break;
      }
      if (a == n->lhs && b == n->rhs) return n;
      return ExprNode::binary(n->bop, a, b);
    }
    case Kind::Pow: {
      ExprNodePtr a = fold(n->lhs);
      if (n->exponent_is_integer && n->exponent == 0.0) {
        return ExprNode::constant(1.0);
      }
      if (n->exponent_is_integer && n->exponent == 1.0) return a;
      if (a == n->lhs) return n;
      return ExprNode::pow(a, n->exponent, n->exponent_is_integer);
    }
  }
  return n;
}

inline std::optional<std::pair<Eigen::VectorXd, double>> affine_of(
    const ExprNode& n, int dim) {
  using Kind = ExprNode::Kind;
  using Result = std::pair<Eigen::VectorXd, double>;
  switch (n.kind) {
    case Kind::Constant:
      return Result{Eigen::VectorXd::Zero(dim), n.value};
    case Kind::Variable: {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(dim);
      a[n.index] = 1.0;
      return Result{std::move(a), 0.0};
    }
    case Kind::Unary: {
      if (n.uop != UnaryOp::Neg) return std::nullopt;
      auto inner = affine_of(*n.lhs, dim);
      if (!inner) return std::nullopt;
      return Result{-inner->first, -inner->second};
    }
    case Kind::Binary: {
      if (n.bop == BinaryOp::Add || n.bop == BinaryOp::Sub) {
        auto a = affine_of(*n.lhs, dim);
        auto b = affine_of(*n.rhs, dim);
        if (!a || !b) return std::nullopt;
        if (n.bop == BinaryOp::Add) {
          return Result{a->first + b->first, a->second + b->second};
        }
        return Result{a->first - b->first, a->second - b->second};
      }
      if (n.bop == BinaryOp::Mul) {
        if (n.lhs->kind == Kind::Constant) {
          auto b = affine_of(*n.rhs, dim);
          if (!b) return std::nullopt;
          return Result{n.lhs->value * b->first, n.lhs->value * b->second};
        }
        if (n.rhs->kind == Kind::Constant) {
          auto a = affine_of(*n.lhs, dim);
          if (!a) return std::nullopt;
          return Result{n.rhs->value * a->first, n.rhs->value * a->second};
        }
        return std::nullopt;
      }
      // Div: only by a nonzero constant.
      if (n.rhs->kind == Kind::Constant && n.rhs->value != 0.0) {
        auto a = affine_of(*n.lhs, dim);
        if (!a) return std::nullopt;
        return Result{a->first / n.rhs->value, a->second / n.rhs->value};
      }
      return std::nullopt;
    }
    case Kind::Pow:
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace detail

/// Parse `text` over variables x1..xn. Throws ParseError with a position on
/// malformed input, unknown identifiers, or out-of-range variable indices.
inline Expr parse(std::string_view text, int n) {
  detail::Parser parser(text, n);
  return Expr(parser.parse(), n);
}

/// Structural affinity after constant folding; no numerical sampling.
inline std::optional<AffineForm> as_affine(const Expr& e) {
  ExprNodePtr folded = detail::fold(e.root_ptr());
  auto r = detail::affine_of(*folded, e.dim());
  if (!r) return std::nullopt;
  return AffineForm{std::move(r->first), r->second};
}

// ---------------------------------------------------------------------------
// Pretty printing. parse(pretty_print(e)) is structurally equal to e.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

// Precedence levels for printing: add/sub = 1, mul/div = 2, unary minus = 3,
// pow = 4, atoms = 5.
inline int print_precedence(const ExprNode& n) {
  using Kind = ExprNode::Kind;
  switch (n.kind) {
    case Kind::Constant:
      return n.value < 0.0 ? 3 : 5;
    case Kind::Variable:
      return 5;
    case Kind::Unary:
      return n.uop == UnaryOp::Neg ? 3 : 5;
    case Kind::Binary:
      return (n.bop == BinaryOp::Add || n.bop == BinaryOp::Sub) ? 1 : 2;
    case Kind::Pow:
      return 4;
  }
  return 5;
}

inline void print_node(const ExprNode& n, std::string& out);

inline void print_child(const ExprNode& child, int min_prec, std::string& out) {
  if (print_precedence(child) < min_prec) {
    out += '(';
    print_node(child, out);
    out += ')';
  } else {
    print_node(child, out);
  }
}

inline void print_node(const ExprNode& n, std::string& out) {
  using Kind = ExprNode::Kind;
  switch (n.kind) {
    case Kind::Constant:
      out += format_double(n.value);
      return;
    case Kind::Variable:
      out += 'x';
      out += std::to_string(n.index + 1);
      return;
    case Kind::Unary:
      switch (n.uop) {
        case UnaryOp::Neg:
          out += '-';
          // The operand of a printed '-' must bind at least as tightly as
          // pow, otherwise "-a*b" would re-parse as (-a)*b.
          print_child(*n.lhs, 4, out);
          return;
        case UnaryOp::Sin:
          out += "sin(";
          break;
        case UnaryOp::Cos:
          out += "cos(";
          break;
        case UnaryOp::Exp:
          out += "exp(";
          break;
        case UnaryOp::Log:
          out += "log(";
          break;
        case UnaryOp::Sqrt:
          out += "sqrt(";
          break;
      }
      print_node(*n.lhs, out);
      out += ')';
      return;
    case Kind::Binary: {
      switch (n.bop) {
        case BinaryOp::Add:
          print_child(*n.lhs, 1, out);
          out += " + ";
          print_child(*n.rhs, 2, out);
          return;
        case BinaryOp::Sub:
          print_child(*n.lhs, 1, out);
          out += " - ";
          print_child(*n.rhs, 2, out);
          return;
        case BinaryOp::Mul:
          print_child(*n.lhs, 2, out);
          out += "*";
          print_child(*n.rhs, 3, out);
          return;
        case BinaryOp::Div:
          print_child(*n.lhs, 2, out);
          out += "/";
          print_child(*n.rhs, 3, out);
          return;
      }
      return;
    }
    case Kind::Pow:
      print_child(*n.lhs, 5, out);
      out += '^';
      out += format_double(n.exponent);
      return;
  }
}

}  // namespace detail

inline std::string pretty_print(const Expr& e) {
  std::string out;
  detail::print_node(e.root(), out);
  return out;
}

}  // namespace kktcert
