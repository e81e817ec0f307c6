#include "bilnet/selection.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>

#include "bilnet/error.hpp"
#include "parallel.hpp"

namespace bilnet {

const char* to_string(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::Brute: return "brute";
    case SelectionMethod::Greedy: return "greedy";
    case SelectionMethod::Randomized: return "randomized";
  }
  return "unknown";
}

SelectionMethod parse_selection_method(const std::string& name) {
  if (name == "brute") return SelectionMethod::Brute;
  if (name == "greedy") return SelectionMethod::Greedy;
  if (name == "randomized") return SelectionMethod::Randomized;
  throw Error(ErrorKind::InvalidInput, "unknown selection method '" + name + "'");
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(r);
}

namespace {

constexpr double kTieTolerance = 1e-12;

void fill_protected(const BilinearDigraph& g, SelectionResult& r) {
  r.protected_set.clear();
  for (const auto& e : g.vulnerable_edges())
    if (!r.attack_set.contains(e)) r.protected_set.push_back(e);
}

void check_cardinality(const BilinearDigraph& g, int m) {
  const int n = static_cast<int>(g.vulnerable_edges().size());
  if (m < 0 || m > n)
    throw Error(ErrorKind::InvalidInput, "attack cardinality " + std::to_string(m) + " outside [0, " +
                                             std::to_string(n) + "]");
}

}  // namespace

SelectionResult brute_force_min(const BilinearDigraph& g, int m, RhoCache& cache) {
  check_cardinality(g, m);
  const auto& ground = g.vulnerable_edges();
  const int n = static_cast<int>(ground.size());
  if (binomial(n, m) > 1'000'000)
    throw Error(ErrorKind::TooManySubsets, "C(" + std::to_string(n) + ", " + std::to_string(m) + ") > 1e6");

  std::vector<AttackSet> candidates;
  for_each_combination(n, m, [&](const std::vector<int>& idx) {
    std::vector<Edge> edges;
    for (int i : idx) edges.push_back(ground[i]);
    candidates.emplace_back(std::move(edges));
  });
  std::vector<std::optional<double>> values(candidates.size());
  detail::parallel_for(candidates.size(), [&](std::size_t i) { values[i] = try_rho(g, candidates[i], cache); });

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] && (!best || *values[i] < *values[*best])) best = i;
  if (!best)
    throw Error(ErrorKind::NoSolvableSubset, "no solvable attack set of size " + std::to_string(m));

  SelectionResult r;
  r.method = SelectionMethod::Brute;
  r.attack_set = candidates[*best];
  r.value = *values[*best];
  r.evaluations = candidates.size();
  fill_protected(g, r);
  return r;
}

SelectionResult greedy_min(const BilinearDigraph& g, int m, RhoCache& cache) {
  check_cardinality(g, m);
  const auto& ground = g.vulnerable_edges();

  SelectionResult r;
  r.method = SelectionMethod::Greedy;
  r.value = rho(g, r.attack_set, cache);
  r.evaluations = 1;

  for (int step = 0; step < m; ++step) {
    std::vector<Edge> remaining;
    for (const auto& e : ground)
      if (!r.attack_set.contains(e)) remaining.push_back(e);
    std::vector<std::optional<double>> values(remaining.size());
    detail::parallel_for(remaining.size(), [&](std::size_t i) {
      values[i] = try_rho(g, r.attack_set.with(remaining[i]), cache);
    });
    r.evaluations += remaining.size();

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (values[i] && (!best || *values[i] < *values[*best])) best = i;
    if (!best)
      throw Error(ErrorKind::NoSolvableExtension,
                  "no solvable extension of {" + r.attack_set.str() + "} at step " + std::to_string(step + 1));

    bool tied = false;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (i != *best && values[i] && *values[i] - *values[*best] <= kTieTolerance) tied = true;

    const double next = *values[*best];
    r.marginals.push_back({remaining[*best], next - r.value, next, tied});
    r.attack_set = r.attack_set.with(remaining[*best]);
    r.value = next;
  }
  fill_protected(g, r);
  return r;
}

// ---------------------------------------------------------------------------

RandomizedGreedyResult randomized_greedy_max(const IndexSetFunction& f, int ground_size, int k,
                                             std::uint64_t seed, int repeats) {
  if (k < 0 || k > ground_size) throw Error(ErrorKind::InvalidInput, "cardinality outside [0, ground size]");
  if (repeats < 1) throw Error(ErrorKind::InvalidInput, "repeats must be >= 1");

  RandomizedGreedyResult out;
  out.best_value = -std::numeric_limits<double>::infinity();
  double total = 0.0;

  for (int run = 0; run < repeats; ++run) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(run)};
    std::mt19937_64 rng(seq);

    std::vector<int> chosen;
    std::vector<double> gains;
    std::vector<bool> in_set(ground_size, false);
    double current = f(chosen);

    for (int step = 0; step < k; ++step) {
      std::vector<std::pair<double, int>> positive;  // (gain, element)
      for (int u = 0; u < ground_size; ++u) {
        if (in_set[u]) continue;
        auto trial = chosen;
        trial.push_back(u);
        std::sort(trial.begin(), trial.end());
        const double gain = f(trial) - current;
        if (gain > 0) positive.emplace_back(gain, u);
      }
      std::sort(positive.begin(), positive.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      // Slots past the positive-gain prefix are dummies.
      const auto pick = std::uniform_int_distribution<int>(0, k - 1)(rng);
      if (pick < static_cast<int>(positive.size())) {
        const int u = positive[pick].second;
        chosen.push_back(u);
        in_set[u] = true;
        gains.push_back(positive[pick].first);
        current += positive[pick].first;
      }
    }
    auto sorted = chosen;
    std::sort(sorted.begin(), sorted.end());
    const double value = f(sorted);
    out.run_values.push_back(value);
    total += value;
    if (value > out.best_value) {
      out.best_value = value;
      out.best_set = chosen;
      out.best_gains = gains;
    }
  }
  out.mean_value = total / repeats;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

SelectionResult protect_randomized(const BilinearDigraph& g, int k, RhoCache& cache, const ProtectOptions& opt) {
  const auto& ground = g.vulnerable_edges();
  const int n = static_cast<int>(ground.size());
  const int m = n - k;
  std::size_t calls = 0;

  auto complement = [&](const std::vector<int>& protected_idx) {
    std::vector<bool> keep(n, true);
    for (int i : protected_idx) keep[i] = false;
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
      if (keep[i]) edges.push_back(ground[i]);
    return AttackSet(std::move(edges));
  };

  // Offset U: largest solvable rho over a seeded sweep of size-m attack sets.
  double offset = -std::numeric_limits<double>::infinity();
  try {
    offset = greedy_min(g, m, cache).value;
  } catch (const Error& ex) {
    if (ex.kind() != ErrorKind::NoSolvableExtension && ex.kind() != ErrorKind::Unsolvable) throw;
  }
  std::mt19937_64 sweep_rng(opt.seed ^ 0x5bd1e995u);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int t = 0; t < 4 * n; ++t) {
    std::shuffle(perm.begin(), perm.end(), sweep_rng);
    std::vector<int> prot(perm.begin(), perm.begin() + k);
    ++calls;
    if (auto v = try_rho(g, complement(prot), cache)) offset = std::max(offset, *v);
  }
  if (!std::isfinite(offset))
    throw Error(ErrorKind::NoSolvableSubset, "no solvable attack set of size " + std::to_string(m) + " found");

  const IndexSetFunction benefit = [&](const std::vector<int>& prot) {
    ++calls;
    const auto v = try_rho(g, complement(prot), cache);
    return v ? std::max(0.0, offset - *v) : 0.0;
  };
  auto run = randomized_greedy_max(benefit, n, k, opt.seed, opt.repeats);

  // Complete short runs (dummy draws) with the best remaining element.
  std::vector<int> chosen = run.best_set;
  std::vector<double> gains = run.best_gains;
  while (static_cast<int>(chosen.size()) < k) {
    auto sorted = chosen;
    std::sort(sorted.begin(), sorted.end());
    const double base = benefit(sorted);
    int best = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (int u = 0; u < n; ++u) {
      if (std::find(chosen.begin(), chosen.end(), u) != chosen.end()) continue;
      auto trial = sorted;
      trial.push_back(u);
      std::sort(trial.begin(), trial.end());
      const double gain = benefit(trial) - base;
      if (gain > best_gain) best_gain = gain, best = u;
    }
    chosen.push_back(best);
    gains.push_back(best_gain);
  }

  SelectionResult r;
  r.method = SelectionMethod::Randomized;
  r.attack_set = complement(chosen);
  const auto value = try_rho(g, r.attack_set, cache);
  ++calls;
  if (!value)
    throw Error(ErrorKind::NoSolvableSubset, "randomized selection ended on unsolvable set {" + r.attack_set.str() + "}");
  r.value = *value;
  double running = 0.0;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    running += gains[i];
    r.marginals.push_back({ground[chosen[i]], gains[i], running, false});
  }
  r.evaluations = calls;
  fill_protected(g, r);
  return r;
}

}  // namespace

SelectionResult protect(const BilinearDigraph& g, int k, RhoCache& cache, const ProtectOptions& opt) {
  const int n = static_cast<int>(g.vulnerable_edges().size());
  if (k < 1 || k > n)
    throw Error(ErrorKind::InvalidInput, "budget k must lie in [1, " + std::to_string(n) + "], got " + std::to_string(k));
  switch (opt.method) {
    case SelectionMethod::Brute: return brute_force_min(g, n - k, cache);
    case SelectionMethod::Greedy: return greedy_min(g, n - k, cache);
    case SelectionMethod::Randomized: return protect_randomized(g, k, cache, opt);
  }
  throw Error(ErrorKind::InvalidInput, "unknown method");
}

std::vector<GapRow> gap_table(const BilinearDigraph& g, const std::vector<int>& cardinalities, RhoCache& cache) {
  std::vector<GapRow> rows;
  for (int m : cardinalities) rows.push_back({m, greedy_min(g, m, cache), brute_force_min(g, m, cache)});
  return rows;
}

void write_gap_csv(std::ostream& os, const std::vector<GapRow>& rows) {
  os << "m,greedy_value,brute_value,ratio,greedy_set,brute_set\n" << std::setprecision(17);
  for (const auto& r : rows)
    os << r.m << ',' << r.greedy.value << ',' << r.brute.value << ',' << r.ratio() << ','
       << r.greedy.attack_set.str() << ',' << r.brute.attack_set.str() << '\n';
}

}  // namespace bilnet
