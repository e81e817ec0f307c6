#include "bilnet/robustness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>

#include "bilnet/error.hpp"
#include "parallel.hpp"

namespace bilnet {

SolverChoice parse_solver_choice(const std::string& name) {
  if (name == "auto") return SolverChoice::Auto;
  if (name == "direct") return SolverChoice::Direct;
  if (name == "fixed_point") return SolverChoice::FixedPoint;
  if (name == "series") return SolverChoice::Series;
  if (name == "reduced") return SolverChoice::Reduced;
  throw Error(ErrorKind::InvalidInput, "unknown solver '" + name + "'");
}

GramianReport compute_gramian(const BilinearSystem& sys, const RhoSettings& settings) {
  try {
    switch (settings.solver) {
      case SolverChoice::Direct:
        return solve_generalized_direct(sys, settings.options);
      case SolverChoice::FixedPoint:
        return solve_generalized_fixed_point(sys, settings.options);
      case SolverChoice::Series: {
        auto s = volterra_series_gramian(sys, settings.options);
        if (!s.report.converged) throw Error(ErrorKind::NonConvergent, "series truncated at q_max");
        return s.report;
      }
      case SolverChoice::Reduced:
        return solve_generalized_reduced(sys, settings.options);
      case SolverChoice::Auto:
        break;
    }
    if (sys.couplings.empty()) {
      GramianReport r;
      r.P = solve_linear_lyapunov(sys.N0, sys.B * sys.B.transpose());
      r.method = GramianMethod::Direct;
      r.iterations = 0;
      r.residual = relative_residual(sys, r.P);
      r.converged = r.residual <= settings.options.tol;
      r.min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r.P, Eigen::EigenvaluesOnly).eigenvalues()(0);
      return r;
    }
    if (sys.n() <= 12) return solve_generalized_direct(sys, settings.options);
    return solve_generalized_reduced(sys, settings.options);
  } catch (const Error& ex) {
    if (ex.unsolvable() || ex.kind() == ErrorKind::MaxIterations || ex.kind() == ErrorKind::NonConvergent)
      throw Error(ErrorKind::Unsolvable, ex.what());
    throw;
  }
}

double h2_norm(const BilinearSystem& sys, const RhoSettings& settings) {
  return std::sqrt(compute_gramian(sys, settings).trace());
}

// ---------------------------------------------------------------------------

RhoEntry RhoCache::get(const BilinearDigraph& g, const AttackSet& attack) {
  {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(attack);
    if (it != entries_.end()) return it->second;
  }
  // AttackOutsideGroundSet propagates and is not cached.
  const BilinearSystem sys = assemble_system(g, attack);
  RhoEntry entry;
  try {
    entry.report = compute_gramian(sys, settings_);
    entry.value = entry.report.trace();
    entry.solvable = true;
  } catch (const Error& ex) {
    if (ex.kind() != ErrorKind::Unsolvable) throw;
    entry.failure = ex.what();
  }
  std::lock_guard lock(mutex_);
  auto [it, inserted] = entries_.emplace(attack, std::move(entry));
  if (inserted) ++misses_;
  return it->second;
}

std::size_t RhoCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::size_t RhoCache::evaluations() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

void RhoCache::clear() {
  std::lock_guard lock(mutex_);
  entries_.clear();
  misses_ = 0;
}

double rho(const BilinearDigraph& g, const AttackSet& attack, RhoCache& cache) {
  RhoEntry e = cache.get(g, attack);
  if (!e.solvable) throw Error(ErrorKind::Unsolvable, "attack set {" + attack.str() + "}: " + e.failure);
  return e.value;
}

std::optional<double> try_rho(const BilinearDigraph& g, const AttackSet& attack, RhoCache& cache) {
  RhoEntry e = cache.get(g, attack);
  if (!e.solvable) return std::nullopt;
  return e.value;
}

// ---------------------------------------------------------------------------

const char* to_string(Property p) {
  return p == Property::Monotone ? "monotone" : "supermodular";
}

namespace {

constexpr int kMaxMonotoneExhaustive = 20;
constexpr int kMaxSupermodularExhaustive = 12;

std::uint64_t full_mask(int n) { return n >= 64 ? ~0ull : (1ull << n) - 1; }

std::vector<std::optional<double>> tabulate(int n, const SetOracle& f) {
  std::vector<std::optional<double>> values(std::size_t{1} << n);
  for (std::uint64_t m = 0; m < values.size(); ++m) values[m] = f(m);
  return values;
}

double scale_of(std::initializer_list<double> vals) {
  double s = 1.0;
  for (double v : vals) s = std::max(s, std::abs(v));
  return s;
}

struct Accumulator {
  PropertyReport report;

  void monotone(std::uint64_t a, int e, std::optional<double> fa, std::optional<double> fae, double tol) {
    if (!fa || !fae) {
      ++report.skipped;
      return;
    }
    ++report.tested;
    const double gap = *fa - *fae;
    report.max_violation = std::max(report.max_violation, gap);
    if (gap > tol * scale_of({*fa, *fae})) report.violations.push_back({a, 0, e, *fa, *fae, gap});
  }

  void supermodular(std::uint64_t a, std::uint64_t b, int e, std::optional<double> fa, std::optional<double> fae,
                    std::optional<double> fb, std::optional<double> fbe, double tol) {
    if (!fa || !fae || !fb || !fbe) {
      ++report.skipped;
      return;
    }
    ++report.tested;
    const double lhs = *fbe - *fb;
    const double rhs = *fae - *fa;
    const double gap = rhs - lhs;
    report.max_violation = std::max(report.max_violation, gap);
    if (gap > tol * scale_of({*fa, *fae, *fb, *fbe})) report.violations.push_back({a, b, e, lhs, rhs, gap});
  }
};

void require_ground(int n, int limit, const char* what) {
  if (n > limit)
    throw Error(ErrorKind::TooLarge, std::string("exhaustive ") + what + " check supports at most " +
                                         std::to_string(limit) + " vulnerable edges, got " + std::to_string(n));
}

int random_element_outside(std::uint64_t mask, int n, std::mt19937_64& rng) {
  std::vector<int> free;
  for (int i = 0; i < n; ++i)
    if (!(mask >> i & 1u)) free.push_back(i);
  if (free.empty()) return -1;
  return free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
}

}  // namespace

PropertyReport verify_monotonicity(int n, const SetOracle& f, const VerifyMode& mode, double tol) {
  Accumulator acc;
  acc.report.property = Property::Monotone;
  if (n == 0) return acc.report;

  if (mode.kind == VerifyMode::Kind::Exhaustive) {
    require_ground(n, kMaxMonotoneExhaustive, "monotonicity");
    const auto values = tabulate(n, f);
    for (std::uint64_t a = 0; a < values.size(); ++a)
      for (int e = 0; e < n; ++e)
        if (!(a >> e & 1u)) acc.monotone(a, e, values[a], values[a | 1ull << e], tol);
    return acc.report;
  }

  std::mt19937_64 rng(mode.seed);
  std::uniform_int_distribution<std::uint64_t> subset(0, full_mask(n));
  for (std::size_t t = 0; t < mode.trials; ++t) {
    const std::uint64_t a = subset(rng);
    const int e = random_element_outside(a, n, rng);
    if (e < 0) continue;
    acc.monotone(a, e, f(a), f(a | 1ull << e), tol);
  }
  return acc.report;
}

PropertyReport verify_supermodularity(int n, const SetOracle& f, const VerifyMode& mode, double tol) {
  Accumulator acc;
  acc.report.property = Property::Supermodular;
  if (n < 2) return acc.report;

  if (mode.kind == VerifyMode::Kind::Exhaustive) {
    require_ground(n, kMaxSupermodularExhaustive, "supermodularity");
    const auto values = tabulate(n, f);
    for (std::uint64_t b = 1; b < values.size(); ++b) {
      for (int e = 0; e < n; ++e) {
        if (b >> e & 1u) continue;
        const std::uint64_t be = b | 1ull << e;
        // proper submasks of b, including the empty set
        for (std::uint64_t a = (b - 1) & b;; a = (a - 1) & b) {
          acc.supermodular(a, b, e, values[a], values[a | 1ull << e], values[b], values[be], tol);
          if (a == 0) break;
        }
      }
    }
    return acc.report;
  }

  std::mt19937_64 rng(mode.seed);
  std::uniform_int_distribution<std::uint64_t> subset(0, full_mask(n));
  for (std::size_t t = 0; t < mode.trials; ++t) {
    const std::uint64_t b = subset(rng);
    const int e = random_element_outside(b, n, rng);
    if (b == 0 || e < 0) continue;
    std::uint64_t a = subset(rng) & b;
    if (a == b) {
      // drop one random element so that A is a proper subset
      const int k = std::uniform_int_distribution<int>(0, std::popcount(b) - 1)(rng);
      std::uint64_t m = b;
      for (int i = 0; i < k; ++i) m &= m - 1;
      a = b & ~(m & -m);
    }
    acc.supermodular(a, b, e, f(a), f(a | 1ull << e), f(b), f(b | 1ull << e), tol);
  }
  return acc.report;
}

namespace {

SetOracle digraph_oracle(const BilinearDigraph& g, RhoCache& cache, const VerifyMode& mode, int limit) {
  const auto& ground = g.vulnerable_edges();
  const int n = static_cast<int>(ground.size());
  if (mode.kind == VerifyMode::Kind::Exhaustive && n <= limit) {
    // Fill the whole lattice up front so the evaluation can fan out.
    auto table = std::make_shared<std::vector<std::optional<double>>>(std::size_t{1} << n);
    detail::parallel_for(table->size(), [&](std::size_t m) {
      (*table)[m] = try_rho(g, AttackSet::from_mask(ground, m), cache);
    });
    return [table](std::uint64_t m) { return (*table)[m]; };
  }
  return [&g, &cache, &ground](std::uint64_t m) { return try_rho(g, AttackSet::from_mask(ground, m), cache); };
}

}  // namespace

PropertyReport verify_monotonicity(const BilinearDigraph& g, RhoCache& cache, const VerifyMode& mode, double tol) {
  const int n = static_cast<int>(g.vulnerable_edges().size());
  if (mode.kind == VerifyMode::Kind::Exhaustive) require_ground(n, kMaxMonotoneExhaustive, "monotonicity");
  return verify_monotonicity(n, digraph_oracle(g, cache, mode, kMaxMonotoneExhaustive), mode, tol);
}

PropertyReport verify_supermodularity(const BilinearDigraph& g, RhoCache& cache, const VerifyMode& mode,
                                      double tol) {
  const int n = static_cast<int>(g.vulnerable_edges().size());
  if (mode.kind == VerifyMode::Kind::Exhaustive) require_ground(n, kMaxSupermodularExhaustive, "supermodularity");
  return verify_supermodularity(n, digraph_oracle(g, cache, mode, kMaxSupermodularExhaustive), mode, tol);
}

void print_report(std::ostream& os, const PropertyReport& r, const std::vector<Edge>& ground,
                  std::size_t max_witnesses) {
  auto render = [&](std::uint64_t m) { return "{" + AttackSet::from_mask(ground, m).str() + "}"; };
  os << "property: " << to_string(r.property) << '\n'
     << "tested: " << r.tested << '\n'
     << "skipped: " << r.skipped << '\n'
     << "violations: " << r.violations.size() << '\n'
     << std::setprecision(6) << "max_violation: " << r.max_violation << '\n';
  for (std::size_t i = 0; i < r.violations.size() && i < max_witnesses; ++i) {
    const auto& v = r.violations[i];
    os << "  A=" << render(v.a);
    if (r.property == Property::Supermodular) os << " B=" << render(v.b);
    os << " e=" << (v.element >= 0 ? to_string(ground[v.element]) : "?") << " lhs=" << v.lhs << " rhs=" << v.rhs
       << " gap=" << v.gap << '\n';
  }
}

// ---------------------------------------------------------------------------

void for_each_combination(int n, int k, const std::function<void(const std::vector<int>&)>& fn) {
  if (k < 0 || k > n) return;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

std::vector<LatticeRow> subset_lattice(const BilinearDigraph& g, RhoCache& cache) {
  const auto& ground = g.vulnerable_edges();
  const int n = static_cast<int>(ground.size());
  if (n > kMaxMonotoneExhaustive)
    throw Error(ErrorKind::TooLarge, "lattice enumeration supports at most 20 vulnerable edges");

  std::vector<LatticeRow> rows;
  rows.reserve(std::size_t{1} << n);
  for (int k = 0; k <= n; ++k)
    for_each_combination(n, k, [&](const std::vector<int>& idx) {
      std::vector<Edge> edges;
      for (int i : idx) edges.push_back(ground[i]);
      rows.push_back({AttackSet(std::move(edges)), std::nullopt});
    });
  detail::parallel_for(rows.size(), [&](std::size_t i) { rows[i].rho = try_rho(g, rows[i].set, cache); });
  return rows;
}

void write_lattice_csv(std::ostream& os, const std::vector<LatticeRow>& rows) {
  os << "cardinality,edges,rho,solvable\n";
  os << std::setprecision(17);
  for (const auto& r : rows) {
    os << r.set.size() << ',' << r.set.str() << ',';
    if (r.rho) os << *r.rho;
    os << ',' << (r.rho ? 1 : 0) << '\n';
  }
}

void write_heatmap_data(std::ostream& os, const std::vector<LatticeRow>& rows) {
  os << std::setprecision(17);
  std::size_t i = 0;
  while (i < rows.size()) {
    const std::size_t k = rows[i].set.size();
    bool first = true;
    for (; i < rows.size() && rows[i].set.size() == k; ++i) {
      if (!first) os << ' ';
      first = false;
      if (rows[i].rho)
        os << *rows[i].rho;
      else
        os << "nan";
    }
    os << '\n';
  }
}

}  // namespace bilnet
