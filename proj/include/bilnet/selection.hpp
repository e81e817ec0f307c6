#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "bilnet/graph.hpp"
#include "bilnet/robustness.hpp"

namespace bilnet {

enum class SelectionMethod { Brute, Greedy, Randomized };

const char* to_string(SelectionMethod m);
SelectionMethod parse_selection_method(const std::string& name);

struct MarginalStep {
  Edge edge;
  double marginal = 0.0;
  double value = 0.0;  // objective after the step
  bool tied = false;   // another candidate was within 1e-12
};

struct SelectionResult {
  AttackSet attack_set;
  double value = 0.0;
  std::vector<Edge> protected_set;
  SelectionMethod method = SelectionMethod::Greedy;
  std::vector<MarginalStep> marginals;
  std::size_t evaluations = 0;
};

/// Exact minimizer of rho over attack sets of size m, first in lexicographic order on ties.
/// Throws TooManySubsets when C(|E_v|, m) > 1e6, NoSolvableSubset when every candidate is unsolvable.
SelectionResult brute_force_min(const BilinearDigraph& g, int m, RhoCache& cache);

/// Grows an attack set one edge at a time, each time adding the edge with the
/// smallest increase of rho. Unsolvable candidates are skipped.
SelectionResult greedy_min(const BilinearDigraph& g, int m, RhoCache& cache);

/// Set function over element indices of a ground set.
using IndexSetFunction = std::function<double(const std::vector<int>&)>;

struct RandomizedGreedyResult {
  std::vector<int> best_set;  // in insertion order
  std::vector<double> best_gains;
  double best_value = 0.0;
  double mean_value = 0.0;
  std::vector<double> run_values;
};

/// Random greedy for cardinality-constrained maximization of a nonnegative
/// submodular function: at each of k steps draw uniformly from the k elements
/// of largest marginal gain (padded with zero-gain dummies) and add the draw
/// when its gain is positive. Run `repeats` times with seeds derived from
/// (seed, run index).
RandomizedGreedyResult randomized_greedy_max(const IndexSetFunction& f, int ground_size, int k,
                                             std::uint64_t seed, int repeats);

struct ProtectOptions {
  SelectionMethod method = SelectionMethod::Greedy;
  std::uint64_t seed = 0;
  int repeats = 20;
};

/// Protects k edges: the attack set is chosen among subsets of size |E_v| - k.
SelectionResult protect(const BilinearDigraph& g, int k, RhoCache& cache, const ProtectOptions& opt = {});

struct GapRow {
  int m = 0;
  SelectionResult greedy;
  SelectionResult brute;
  double ratio() const { return greedy.value / brute.value; }
};

std::vector<GapRow> gap_table(const BilinearDigraph& g, const std::vector<int>& cardinalities, RhoCache& cache);

/// Columns: m,greedy_value,brute_value,ratio,greedy_set,brute_set.
void write_gap_csv(std::ostream& os, const std::vector<GapRow>& rows);

/// Number of k-subsets of an n-set, saturating at UINT64_MAX.
std::uint64_t binomial(int n, int k);

}  // namespace bilnet
