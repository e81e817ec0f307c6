#pragma once

#include <stdexcept>
#include <string>

namespace bilnet {

enum class ErrorKind {
  InvalidInput,
  InvalidNode,
  InvalidVulnerableEdge,
  NonFiniteWeight,
  BadSign,
  AttackOutsideGroundSet,
  NotHurwitz,
  SingularOperator,
  NotPSD,
  MaxIterations,
  NonConvergent,
  Unsolvable,
  NoSolvableSubset,
  NoSolvableExtension,
  TooManySubsets,
  TooLarge,
  Diverged,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        message_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }

  // True for the failures that mean "no stabilizing Gramian exists".
  bool unsolvable() const noexcept;

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace bilnet
