#include "bilnet/error.hpp"

namespace bilnet {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::InvalidNode: return "InvalidNode";
    case ErrorKind::InvalidVulnerableEdge: return "InvalidVulnerableEdge";
    case ErrorKind::NonFiniteWeight: return "NonFiniteWeight";
    case ErrorKind::BadSign: return "BadSign";
    case ErrorKind::AttackOutsideGroundSet: return "AttackOutsideGroundSet";
    case ErrorKind::NotHurwitz: return "NotHurwitz";
    case ErrorKind::SingularOperator: return "SingularOperator";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::MaxIterations: return "MaxIterations";
    case ErrorKind::NonConvergent: return "NonConvergent";
    case ErrorKind::Unsolvable: return "Unsolvable";
    case ErrorKind::NoSolvableSubset: return "NoSolvableSubset";
    case ErrorKind::NoSolvableExtension: return "NoSolvableExtension";
    case ErrorKind::TooManySubsets: return "TooManySubsets";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::Diverged: return "Diverged";
  }
  return "Unknown";
}

bool Error::unsolvable() const noexcept {
  switch (kind_) {
    case ErrorKind::NotHurwitz:
    case ErrorKind::SingularOperator:
    case ErrorKind::NotPSD:
    case ErrorKind::Unsolvable:
      return true;
    default:
      return false;
  }
}

}  // namespace bilnet
