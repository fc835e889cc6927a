#pragma once

#include <stdexcept>
#include <string>

namespace cqpv {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DuplicateName : Error {
  explicit DuplicateName(const std::string& name)
      : Error("duplicate name: " + name) {}
};

struct UnknownName : Error {
  explicit UnknownName(const std::string& name)
      : Error("unknown name: " + name) {}
};

struct NotAMode : Error {
  explicit NotAMode(const std::string& name)
      : Error("not a mode: " + name) {}
};

struct NotAQubit : Error {
  explicit NotAQubit(const std::string& name)
      : Error("not a qubit: " + name) {}
};

struct NotNormalized : Error {
  explicit NotNormalized(double norm)
      : Error("state not normalized, squared norm = " + std::to_string(norm)) {}
};

struct NotUnitary : Error {
  NotUnitary() : Error("matrix is not unitary") {}
};

struct InvalidPermutation : Error {
  InvalidPermutation() : Error("not a permutation of the subsystem slots") {}
};

struct WeightMismatch : Error {
  explicit WeightMismatch(const std::string& what) : Error(what) {}
};

struct LayoutMismatch : Error {
  LayoutMismatch() : Error("mixture components do not share a layout") {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error(what) {}
};

struct PostSelectionEmpty : Error {
  PostSelectionEmpty() : Error("post-selection retained zero probability mass") {}
};

struct SyntaxError : Error {
  int line, column;
  SyntaxError(int line_, int col_, const std::string& what)
      : Error("syntax error at " + std::to_string(line_) + ":" +
              std::to_string(col_) + ": " + what),
        line(line_), column(col_) {}
};

struct StuckExpression : Error {
  explicit StuckExpression(const std::string& what)
      : Error("stuck expression: " + what) {}
};

struct LimitExceeded : Error {
  explicit LimitExceeded(const std::string& what) : Error(what) {}
};

}  // namespace cqpv
