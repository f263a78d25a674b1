#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kktcert {

/// Expression text failed to parse. `position` is a 0-based byte offset
/// into the input.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t position, const std::string& message)
      : std::runtime_error("parse error at position " +
                           std::to_string(position) + ": " + message),
        position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Evaluation left the mathematical domain of an operation (log of a
/// nonpositive value, division by zero, ...) or produced a non-finite value.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& message)
      : std::runtime_error("domain error: " + message) {}
};

/// A documented precondition of an operation was violated (infeasible point,
/// direction outside the linearized cone, CQ not satisfied, ...).
class PreconditionError : public std::runtime_error {
 public:
  explicit PreconditionError(const std::string& message)
      : std::runtime_error("precondition violated: " + message) {}
};

/// The cone projection iteration hit its cap without meeting the projection
/// optimality conditions.
class ProjectionError : public std::runtime_error {
 public:
  explicit ProjectionError(const std::string& message)
      : std::runtime_error("cone projection failed: " + message) {}
};

/// A certificate failed its own invariant check before being returned.
/// Indicates a bug, never a property of the input.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& message)
      : std::logic_error("internal error: " + message) {}
};

}  // namespace kktcert
