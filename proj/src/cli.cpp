#include "bilnet/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bilnet/error.hpp"
#include "bilnet/gramian.hpp"
#include "bilnet/graph.hpp"
#include "bilnet/robustness.hpp"
#include "bilnet/selection.hpp"
#include "bilnet/simulate.hpp"

namespace bilnet {

namespace {

namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput:
    case ErrorKind::InvalidNode:
    case ErrorKind::InvalidVulnerableEdge:
    case ErrorKind::NonFiniteWeight:
    case ErrorKind::BadSign:
    case ErrorKind::AttackOutsideGroundSet:
    case ErrorKind::TooLarge:
    case ErrorKind::TooManySubsets:
      return kExitInvalidInput;
    case ErrorKind::NotHurwitz:
    case ErrorKind::SingularOperator:
    case ErrorKind::NotPSD:
    case ErrorKind::Unsolvable:
    case ErrorKind::NoSolvableSubset:
    case ErrorKind::NoSolvableExtension:
      return kExitUnsolvable;
    case ErrorKind::MaxIterations:
    case ErrorKind::NonConvergent:
    case ErrorKind::Diverged:
      return kExitNumerical;
  }
  return kExitNumerical;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::InvalidInput, "cannot write " + path.string());
  return f;
}

AttackSet parse_attack(const BilinearDigraph& g, const std::string& text) {
  AttackSet attack(parse_edge_list(text));
  for (const auto& e : attack.edges())
    if (!g.is_vulnerable(e)) throw Error(ErrorKind::AttackOutsideGroundSet, to_string(e) + " is not a vulnerable edge");
  return attack;
}

std::string edge_list(const std::vector<Edge>& edges) {
  std::string s;
  for (std::size_t i = 0; i < edges.size(); ++i) s += (i ? "," : "") + to_string(edges[i]);
  return s;
}

struct Common {
  std::string graph;
  double tol = 1e-10;
  std::string solver = "auto";

  RhoSettings settings() const {
    RhoSettings s;
    s.solver = parse_solver_choice(solver);
    s.options.tol = tol;
    return s;
  }
};

void add_common(CLI::App* cmd, Common& c, bool solver_tol = true) {
  cmd->add_option("graph", c.graph, "Graph-spec JSON file")->required();
  if (solver_tol) cmd->add_option("--tol", c.tol, "Solver tolerance")->capture_default_str();
  cmd->add_option("--solver", c.solver, "auto|direct|fixed_point|series|reduced")->capture_default_str();
}

// ---------------------------------------------------------------------------

int cmd_analyze(const Common& c, const std::string& attack_text, std::ostream& out) {
  const auto g = load_digraph(c.graph);
  const AttackSet attack = parse_attack(g, attack_text);
  const BilinearSystem sys = assemble_system(g, attack);
  out << std::setprecision(6);
  out << "attack_set: {" << attack.str() << "}\n";

  int code = kExitOk;
  try {
    const GramianReport r = compute_gramian(sys, c.settings());
    out << "rho: " << r.trace() << '\n'
        << "h2_norm: " << std::sqrt(r.trace()) << '\n'
        << "method: " << to_string(r.method) << '\n'
        << "residual: " << r.residual << '\n'
        << "iterations: " << r.iterations << '\n'
        << "converged: " << (r.converged ? "true" : "false") << '\n'
        << "min_eig: " << r.min_eig << '\n';
  } catch (const Error& ex) {
    if (ex.kind() != ErrorKind::Unsolvable) throw;
    out << "rho: unsolvable\n"
        << "reason: " << ex.message() << '\n';
    code = kExitUnsolvable;
  }

  try {
    const Assumption1Report a = assumption1_check(sys);
    out << "assumption1: " << (a.holds ? "holds" : "fails") << " alpha=" << a.alpha << " beta=" << a.beta
        << " lhs=" << a.lhs << " rhs=" << a.rhs << " operator_abscissa=" << a.spectral_abscissa_L << '\n';
  } catch (const Error& ex) {
    if (ex.kind() != ErrorKind::NotHurwitz) throw;
    out << "assumption1: fails (drift matrix not Hurwitz)\n";
  }
  return code;
}

int cmd_lattice(const Common& c, const std::string& out_csv, std::string heatmap, std::ostream& out) {
  const auto g = load_digraph(c.graph);
  RhoCache cache(c.settings());
  const auto rows = subset_lattice(g, cache);
  if (heatmap.empty()) heatmap = out_csv + ".heatmap.txt";
  {
    auto f = open_output(out_csv);
    write_lattice_csv(f, rows);
  }
  {
    auto f = open_output(heatmap);
    write_heatmap_data(f, rows);
  }
  std::size_t unsolvable = 0;
  for (const auto& r : rows) unsolvable += r.rho ? 0 : 1;
  out << "rows: " << rows.size() << '\n'
      << "unsolvable: " << unsolvable << '\n'
      << "csv: " << out_csv << '\n'
      << "heatmap: " << heatmap << '\n';
  return kExitOk;
}

nlohmann::json to_json(const SelectionResult& r) {
  nlohmann::json j;
  j["method"] = to_string(r.method);
  j["attack_set"] = r.attack_set.str();
  j["protected_set"] = edge_list(r.protected_set);
  j["value"] = r.value;
  j["evaluations"] = r.evaluations;
  j["marginals"] = nlohmann::json::array();
  for (const auto& m : r.marginals)
    j["marginals"].push_back({{"edge", to_string(m.edge)}, {"marginal", m.marginal}, {"value", m.value}, {"tied", m.tied}});
  return j;
}

void print_selection(std::ostream& out, const SelectionResult& r) {
  out << "method: " << to_string(r.method) << '\n'
      << "attack_set: {" << r.attack_set.str() << "}\n"
      << "protected_set: {" << edge_list(r.protected_set) << "}\n"
      << "rho: " << r.value << '\n'
      << "evaluations: " << r.evaluations << '\n';
  for (std::size_t i = 0; i < r.marginals.size(); ++i) {
    const auto& m = r.marginals[i];
    out << "  step " << i + 1 << ": " << to_string(m.edge) << " marginal=" << m.marginal << " value=" << m.value
        << (m.tied ? " (tie)" : "") << '\n';
  }
}

int cmd_protect(const Common& c, int k, const std::string& method, std::uint64_t seed, int repeats,
                const std::string& out_dir, std::ostream& out) {
  const auto g = load_digraph(c.graph);
  const int n = static_cast<int>(g.vulnerable_edges().size());
  if (k < 1 || k > n)
    throw Error(ErrorKind::InvalidInput, "budget k must lie in [1, " + std::to_string(n) + "]");
  RhoCache cache(c.settings());
  out << std::setprecision(6);
  const int m = n - k;
  const bool brute_feasible = binomial(n, m) <= 1'000'000;

  nlohmann::json report;
  report["k"] = k;
  report["attack_cardinality"] = m;
  std::optional<SelectionResult> primary;
  std::optional<SelectionResult> brute;

  if (method == "both") {
    primary = protect(g, k, cache, {SelectionMethod::Greedy, seed, repeats});
    brute = protect(g, k, cache, {SelectionMethod::Brute, seed, repeats});
  } else {
    const auto sm = parse_selection_method(method);
    primary = protect(g, k, cache, {sm, seed, repeats});
    if (sm == SelectionMethod::Brute)
      brute = primary;
    else if (brute_feasible)
      brute = protect(g, k, cache, {SelectionMethod::Brute, seed, repeats});
  }

  print_selection(out, *primary);
  report["selection"] = to_json(*primary);
  if (brute && primary->method != SelectionMethod::Brute) {
    out << "brute_attack_set: {" << brute->attack_set.str() << "}\n"
        << "brute_rho: " << brute->value << '\n'
        << "gap: m=" << m << " " << to_string(primary->method) << "=" << primary->value << " brute=" << brute->value
        << " ratio=" << primary->value / brute->value << '\n';
    report["brute"] = to_json(*brute);
    report["ratio"] = primary->value / brute->value;
  }

  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    auto f = open_output(dir / "selection.json");
    f << std::setprecision(17) << report.dump(2) << '\n';
    if (brute && primary->method == SelectionMethod::Greedy) {
      auto gf = open_output(dir / "gap.csv");
      write_gap_csv(gf, {GapRow{m, *primary, *brute}});
    }
  }
  return kExitOk;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidInput, "bad integer '" + item + "'");
    }
  }
  return out;
}

int cmd_gap(const Common& c, const std::string& cards, const std::string& out_csv, std::ostream& out) {
  const auto g = load_digraph(c.graph);
  RhoCache cache(c.settings());
  const auto rows = gap_table(g, parse_int_list(cards), cache);
  out << std::setprecision(6) << "m greedy brute ratio\n";
  for (const auto& r : rows) out << r.m << ' ' << r.greedy.value << ' ' << r.brute.value << ' ' << r.ratio() << '\n';
  if (!out_csv.empty()) {
    auto f = open_output(out_csv);
    write_gap_csv(f, rows);
  }
  return kExitOk;
}

int cmd_verify(const Common& c, const std::string& property, const std::string& mode, std::size_t trials,
               double tol, std::uint64_t seed, std::ostream& out) {
  const auto g = load_digraph(c.graph);
  RhoCache cache(c.settings());
  VerifyMode vm;
  if (mode == "exhaustive")
    vm = VerifyMode::exhaustive();
  else if (mode == "sampled")
    vm = VerifyMode::sampled(seed, trials);
  else
    throw Error(ErrorKind::InvalidInput, "unknown mode '" + mode + "'");

  PropertyReport r;
  if (property == "monotone")
    r = verify_monotonicity(g, cache, vm, tol);
  else if (property == "supermodular")
    r = verify_supermodularity(g, cache, vm, tol);
  else
    throw Error(ErrorKind::InvalidInput, "unknown property '" + property + "'");
  print_report(out, r, g.vulnerable_edges());
  return r.holds() ? kExitOk : kExitViolation;
}

int cmd_simulate(const Common& c, const std::string& attack_text, double noise, std::size_t samples,
                 std::uint64_t seed, double dt, double horizon, const std::string& trajectory_csv,
                 std::ostream& out) {
  const auto g = load_digraph(c.graph);
  const AttackSet attack = parse_attack(g, attack_text);
  const BilinearSystem sys = assemble_system(g, attack);
  if (horizon <= 0) horizon = default_horizon(sys);
  out << std::setprecision(6);

  const MonteCarloResult mc = monte_carlo_energy(sys, noise, samples, horizon, dt, seed);
  out << "attack_set: {" << attack.str() << "}\n"
      << "energy: " << mc.mean_energy << " stderr: " << mc.stderr_energy << " samples: " << mc.samples_used
      << " diverged: " << mc.diverged << '\n';

  if (!trajectory_csv.empty()) {
    Eigen::VectorXd x0 = sys.B.rowwise().sum();
    const auto traj = integrate(sys, DisturbanceSpec::white(noise, dt, seed), DisturbanceSpec::zero(), x0, horizon, dt);
    auto f = open_output(trajectory_csv);
    write_trajectory_csv(f, traj);
  }

  try {
    const double value = compute_gramian(sys, c.settings()).trace();
    out << "rho: " << value << '\n';
    if (mc.stderr_energy > 0)
      out << "z_score: " << (mc.mean_energy - value) / mc.stderr_energy << '\n';
    return kExitOk;
  } catch (const Error& ex) {
    if (ex.kind() != ErrorKind::Unsolvable) throw;
    out << "rho: unsolvable\n";
    return kExitUnsolvable;
  }
}

int cmd_ring(int n, double self_loop, double forward, double closing, double scale, const std::string& out_path,
             std::ostream& out) {
  const auto g = ring_digraph(n, self_loop, forward, closing, scale);
  if (out_path.empty() || out_path == "-") {
    out << digraph_to_json(g);
  } else {
    auto f = open_output(out_path);
    f << digraph_to_json(g);
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vulnerability of bilinear networks to multiplicative link attacks"};
  app.require_subcommand(1);

  Common common;

  std::string attack;
  auto* analyze = app.add_subcommand("analyze", "Gramian, rho, H2 norm and Assumption-1 report for one attack set");
  add_common(analyze, common);
  analyze->add_option("--attack", attack, "Attacked edges, e.g. \"1->2,2->3\"");

  std::string lattice_out, heatmap_out;
  auto* lattice = app.add_subcommand("lattice", "rho for every subset of the vulnerable edges");
  add_common(lattice, common);
  lattice->add_option("--out", lattice_out, "CSV output path")->required();
  lattice->add_option("--heatmap", heatmap_out, "Heatmap data path (default <out>.heatmap.txt)");

  int budget = 0;
  std::string method = "greedy";
  std::uint64_t seed = 0;
  int repeats = 20;
  std::string out_dir;
  auto* protect_cmd = app.add_subcommand("protect", "Choose k edges to protect");
  add_common(protect_cmd, common);
  protect_cmd->add_option("--k", budget, "Number of protected edges")->required();
  protect_cmd->add_option("--method", method, "greedy|brute|randomized|both")->capture_default_str();
  protect_cmd->add_option("--seed", seed, "Seed for the randomized method")->capture_default_str();
  protect_cmd->add_option("--repeats", repeats, "Randomized greedy repetitions")->capture_default_str();
  protect_cmd->add_option("--out", out_dir, "Directory for selection.json / gap.csv");

  std::string cards = "1";
  std::string gap_out;
  auto* gap = app.add_subcommand("gap", "Greedy versus brute-force minima per attack cardinality");
  add_common(gap, common);
  gap->add_option("--m", cards, "Comma-separated attack cardinalities")->capture_default_str();
  gap->add_option("--out", gap_out, "CSV output path");

  std::string property = "supermodular", mode = "exhaustive";
  std::size_t trials = 1000;
  double verify_tol = 1e-9;
  auto* verify = app.add_subcommand("verify", "Check monotonicity or supermodularity of rho");
  add_common(verify, common, false);
  verify->add_option("--property", property, "monotone|supermodular")->capture_default_str();
  verify->add_option("--mode", mode, "exhaustive|sampled")->capture_default_str();
  verify->add_option("--trials", trials, "Comparisons in sampled mode")->capture_default_str();
  verify->add_option("--tol", verify_tol, "Relative violation tolerance")->capture_default_str();
  verify->add_option("--seed", seed, "Seed for sampled mode")->capture_default_str();

  double noise = 1.0, dt = 1e-2, horizon = 0.0;
  std::size_t samples = 500;
  std::string trajectory_csv;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo output energy versus rho");
  add_common(simulate, common);
  simulate->add_option("--attack", attack, "Attacked edges, e.g. \"1->2,2->3\"");
  simulate->add_option("--noise", noise, "Noise level")->capture_default_str();
  simulate->add_option("--samples", samples, "Monte-Carlo samples")->capture_default_str();
  simulate->add_option("--seed", seed, "Seed")->capture_default_str();
  simulate->add_option("--dt", dt, "Integration step and noise hold")->capture_default_str();
  simulate->add_option("--horizon", horizon, "Horizon (default 20/alpha)");
  simulate->add_option("--trajectory", trajectory_csv, "Write one sample trajectory as CSV");

  int ring_n = 5;
  double self_loop = -0.99, forward = 1.0, closing = -1.0, scale = 1.0;
  std::string ring_out;
  auto* ring = app.add_subcommand("ring", "Write the graph spec of a ring digraph");
  ring->add_option("--n", ring_n, "Number of nodes")->capture_default_str();
  ring->add_option("--self-loop", self_loop, "Self-loop weight")->capture_default_str();
  ring->add_option("--forward", forward, "Weight of edges i->i+1")->capture_default_str();
  ring->add_option("--closing", closing, "Weight of edge n->1")->capture_default_str();
  ring->add_option("--scale", scale, "Drift scale c")->capture_default_str();
  ring->add_option("--out", ring_out, "Output path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalidInput;
  }

  try {
    if (*analyze) return cmd_analyze(common, attack, out);
    if (*lattice) return cmd_lattice(common, lattice_out, heatmap_out, out);
    if (*protect_cmd) return cmd_protect(common, budget, method, seed, repeats, out_dir, out);
    if (*gap) return cmd_gap(common, cards, gap_out, out);
    if (*verify) return cmd_verify(common, property, mode, trials, verify_tol, seed, out);
    if (*simulate) return cmd_simulate(common, attack, noise, samples, seed, dt, horizon, trajectory_csv, out);
    if (*ring) return cmd_ring(ring_n, self_loop, forward, closing, scale, ring_out, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return exit_code_for(ex.kind());
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << '\n';
    return kExitNumerical;
  }
  return kExitInvalidInput;
}

}  // namespace bilnet
