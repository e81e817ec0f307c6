#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "bilnet/gramian.hpp"
#include "bilnet/graph.hpp"

namespace bilnet {

enum class SolverChoice { Auto, Direct, FixedPoint, Series, Reduced };

SolverChoice parse_solver_choice(const std::string& name);

struct RhoSettings {
  SolverChoice solver = SolverChoice::Auto;
  SolverOptions options;
};

/// Gramian of the system using the configured method. Auto uses the dense
/// Kronecker solve for n <= 12 and the elementary-coupling reduction above.
/// Every "no stabilizing Gramian" failure is rethrown as Error(Unsolvable).
GramianReport compute_gramian(const BilinearSystem& sys, const RhoSettings& settings = {});

/// sqrt(trace P).
double h2_norm(const BilinearSystem& sys, const RhoSettings& settings = {});

struct RhoEntry {
  bool solvable = false;
  double value = 0.0;
  GramianReport report;  // empty P when unsolvable
  std::string failure;
};

/// Thread-safe insert-or-get memo of rho evaluations for one digraph and one
/// set of solver settings.
class RhoCache {
 public:
  explicit RhoCache(RhoSettings settings = {}) : settings_(std::move(settings)) {}

  const RhoSettings& settings() const { return settings_; }

  /// Returns the cached entry, computing it first if needed.
  RhoEntry get(const BilinearDigraph& g, const AttackSet& attack);

  std::size_t size() const;
  std::size_t evaluations() const;  // number of cache misses so far
  void clear();

 private:
  RhoSettings settings_;
  mutable std::mutex mutex_;
  std::unordered_map<AttackSet, RhoEntry, AttackSetHash> entries_;
  std::size_t misses_ = 0;
};

/// Squared H2 norm of the system induced by attack set; throws Error(Unsolvable).
double rho(const BilinearDigraph& g, const AttackSet& attack, RhoCache& cache);

/// nullopt when the attack set admits no stabilizing Gramian.
std::optional<double> try_rho(const BilinearDigraph& g, const AttackSet& attack, RhoCache& cache);

// ---------------------------------------------------------------------------
// Property verification

enum class Property { Monotone, Supermodular };

const char* to_string(Property p);

struct VerifyMode {
  enum class Kind { Exhaustive, Sampled } kind = Kind::Exhaustive;
  std::uint64_t seed = 0;
  std::size_t trials = 1000;

  static VerifyMode exhaustive() { return {}; }
  static VerifyMode sampled(std::uint64_t seed, std::size_t trials) {
    return {Kind::Sampled, seed, trials};
  }
};

/// One failed comparison. Sets are bitmasks over the ground set.
/// Monotone: lhs = f(A), rhs = f(A + e), gap = lhs - rhs.
/// Supermodular: lhs = f(B + e) - f(B), rhs = f(A + e) - f(A), gap = rhs - lhs.
struct Violation {
  std::uint64_t a = 0;
  std::uint64_t b = 0;  // unused for monotonicity
  int element = -1;
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
};

struct PropertyReport {
  Property property = Property::Monotone;
  std::size_t tested = 0;
  std::size_t skipped = 0;  // comparisons involving an unsolvable set
  std::vector<Violation> violations;
  double max_violation = 0.0;  // largest gap seen, clipped at 0

  bool holds() const { return violations.empty(); }
};

/// Set function on subsets of {0..ground_size-1} given as bitmasks;
/// nullopt marks a set outside the function's domain.
using SetOracle = std::function<std::optional<double>(std::uint64_t)>;

/// Checks f(A) <= f(A + e) + tol * max(1, |f|).
PropertyReport verify_monotonicity(int ground_size, const SetOracle& f, const VerifyMode& mode, double tol);

/// Checks f(B + e) - f(B) >= f(A + e) - f(A) - tol * max(1, |f|) for A strictly inside B, e not in B.
PropertyReport verify_supermodularity(int ground_size, const SetOracle& f, const VerifyMode& mode, double tol);

PropertyReport verify_monotonicity(const BilinearDigraph& g, RhoCache& cache, const VerifyMode& mode,
                                   double tol = 1e-9);
PropertyReport verify_supermodularity(const BilinearDigraph& g, RhoCache& cache, const VerifyMode& mode,
                                      double tol = 1e-9);

/// Human-readable report; witness sets rendered against the ground set.
void print_report(std::ostream& os, const PropertyReport& r, const std::vector<Edge>& ground,
                  std::size_t max_witnesses = 10);

// ---------------------------------------------------------------------------
// Subset lattice

struct LatticeRow {
  AttackSet set;
  std::optional<double> rho;
};

/// Every subset of the ground set, ordered by cardinality then lexicographically.
std::vector<LatticeRow> subset_lattice(const BilinearDigraph& g, RhoCache& cache);

/// Columns: cardinality,edges,rho,solvable. Full precision.
void write_lattice_csv(std::ostream& os, const std::vector<LatticeRow>& rows);

/// One line per cardinality with space-separated values ("nan" when unsolvable).
void write_heatmap_data(std::ostream& os, const std::vector<LatticeRow>& rows);

/// Index lists of all k-subsets of {0..n-1} in lexicographic order.
void for_each_combination(int n, int k, const std::function<void(const std::vector<int>&)>& fn);

}  // namespace bilnet
