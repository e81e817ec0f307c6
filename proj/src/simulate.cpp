#include "bilnet/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

#include <boost/math/quadrature/gauss.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "bilnet/error.hpp"
#include "bilnet/gramian.hpp"

namespace bilnet {

DisturbanceSpec DisturbanceSpec::white(double level, double dt_hold, std::uint64_t seed) {
  if (!(level >= 0) || !(dt_hold > 0)) throw Error(ErrorKind::InvalidInput, "white noise needs level >= 0, dt_hold > 0");
  DisturbanceSpec s;
  s.kind = Kind::White;
  s.level = level;
  s.dt_hold = dt_hold;
  s.seed = seed;
  return s;
}

DisturbanceSpec DisturbanceSpec::deterministic(std::vector<std::vector<double>> table, double dt_hold) {
  if (!(dt_hold > 0)) throw Error(ErrorKind::InvalidInput, "dt_hold must be positive");
  DisturbanceSpec s;
  s.kind = Kind::Deterministic;
  s.dt_hold = dt_hold;
  s.table = std::move(table);
  return s;
}

namespace {

constexpr double kDivergence = 1e12;

// Realizes a DisturbanceSpec on `channels` channels, generating white draws lazily.
class Signal {
 public:
  Signal(const DisturbanceSpec& spec, Eigen::Index channels) : spec_(spec), values_(channels) {
    for (Eigen::Index c = 0; c < channels; ++c) {
      std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                        static_cast<std::uint32_t>(c)};
      rngs_.emplace_back(seq);
    }
  }

  Eigen::VectorXd at(double t) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(values_.size()));
    if (spec_.kind == DisturbanceSpec::Kind::Zero || out.size() == 0) return out;
    const auto interval = static_cast<std::size_t>(std::floor(t / spec_.dt_hold + 1e-9));
    if (spec_.kind == DisturbanceSpec::Kind::Deterministic) {
      if (interval < spec_.table.size()) {
        const auto& row = spec_.table[interval];
        for (Eigen::Index c = 0; c < out.size() && c < static_cast<Eigen::Index>(row.size()); ++c) out(c) = row[c];
      }
      return out;
    }
    const double sd = spec_.level / std::sqrt(spec_.dt_hold);
    for (Eigen::Index c = 0; c < out.size(); ++c) {
      auto& v = values_[c];
      while (v.size() <= interval) v.push_back(sd * normal_(rngs_[c]));
      out(c) = v[interval];
    }
    return out;
  }

 private:
  const DisturbanceSpec& spec_;
  std::vector<std::vector<double>> values_;
  std::vector<std::mt19937_64> rngs_;
  std::normal_distribution<double> normal_;
};

Eigen::MatrixXd drift_at(const BilinearSystem& sys, const Eigen::VectorXd& eta) {
  Eigen::MatrixXd A = sys.N0;
  for (std::size_t k = 0; k < sys.couplings.size(); ++k) A += eta(static_cast<Eigen::Index>(k)) * sys.couplings[k].N;
  return A;
}

}  // namespace

double Trajectory::output_energy() const {
  double e = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i)
    e += 0.5 * (times[i] - times[i - 1]) * (outputs[i].squaredNorm() + outputs[i - 1].squaredNorm());
  return e;
}

double default_horizon(const BilinearSystem& sys) {
  const double a = spectral_abscissa(sys.N0);
  if (!(a < 0)) throw Error(ErrorKind::NotHurwitz, "drift matrix is not Hurwitz");
  return 20.0 / -a;
}

Trajectory integrate(const BilinearSystem& sys, const DisturbanceSpec& eta_spec, const DisturbanceSpec& v_spec,
                     const Eigen::VectorXd& x0, double horizon, double dt) {
  if (!(dt > 0) || !(horizon >= dt)) throw Error(ErrorKind::InvalidInput, "need dt > 0 and horizon >= dt");
  if (x0.size() != sys.n()) throw Error(ErrorKind::InvalidInput, "initial state has wrong dimension");

  Signal eta(eta_spec, static_cast<Eigen::Index>(sys.couplings.size()));
  Signal v(v_spec, sys.B.cols());
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  Eigen::VectorXd x = x0;
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * dt;
    const Eigen::MatrixXd A = drift_at(sys, eta.at(t));
    const Eigen::VectorXd u = sys.B * v.at(t);
    const Eigen::VectorXd k1 = A * x + u;
    const Eigen::VectorXd k2 = A * (x + 0.5 * dt * k1) + u;
    const Eigen::VectorXd k3 = A * (x + 0.5 * dt * k2) + u;
    const Eigen::VectorXd k4 = A * (x + dt * k3) + u;
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite() || x.norm() > kDivergence)
      throw Error(ErrorKind::Diverged, "state norm exceeded 1e12 at t=" + std::to_string(t + dt));
    traj.times.push_back(static_cast<double>(s + 1) * dt);
    traj.states.push_back(x);
  }
  traj.outputs.reserve(traj.states.size());
  for (const auto& s : traj.states) traj.outputs.push_back(sys.C * s);
  return traj;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << 't';
  const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();
  for (Eigen::Index i = 1; i <= n; ++i) os << ",x_" << i;
  os << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    os << traj.times[k];
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << traj.states[k](i);
    os << '\n';
  }
}

// ---------------------------------------------------------------------------

MonteCarloResult monte_carlo_energy(const BilinearSystem& sys, double noise_level, std::size_t samples,
                                    double horizon, double dt, std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorKind::InvalidInput, "samples must be >= 1");
  if (!(noise_level >= 0)) throw Error(ErrorKind::InvalidInput, "noise level must be >= 0");
  if (!(dt > 0) || !(horizon >= dt)) throw Error(ErrorKind::InvalidInput, "need dt > 0 and horizon >= dt");

  MonteCarloResult out;
  if (noise_level == 0.0) {
    out.samples_used = samples;
    return out;
  }

  const Eigen::Index n = sys.n();
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  const double sd = noise_level / std::sqrt(dt);
  const Eigen::MatrixXd CtC = sys.C.transpose() * sys.C;
  std::vector<double> energies;
  energies.reserve(samples);

  Eigen::MatrixXd A(n, n);
  Eigen::VectorXd x(n), k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (std::size_t i = 0; i < samples; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;

    Eigen::VectorXd xi(sys.B.cols());
    for (Eigen::Index j = 0; j < xi.size(); ++j) xi(j) = normal(rng);
    x = noise_level * (sys.B * xi);

    double energy = 0.0;
    bool diverged = false;
    for (std::size_t s = 0; s < steps; ++s) {
      A = sys.N0;
      for (const auto& c : sys.couplings) A += sd * normal(rng) * c.N;
      k1.noalias() = A * x;
      tmp = x + 0.5 * dt * k1;
      k2.noalias() = A * tmp;
      const double e2 = tmp.dot(CtC * tmp);
      tmp = x + 0.5 * dt * k2;
      k3.noalias() = A * tmp;
      const double e3 = tmp.dot(CtC * tmp);
      tmp = x + dt * k3;
      k4.noalias() = A * tmp;
      const double e4 = tmp.dot(CtC * tmp);
      energy += dt / 6.0 * (x.dot(CtC * x) + 2.0 * e2 + 2.0 * e3 + e4);
      x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!x.allFinite() || x.norm() > kDivergence) {
        diverged = true;
        break;
      }
    }
    if (diverged) {
      ++out.diverged;
      continue;
    }
    energies.push_back(energy / (noise_level * noise_level));
  }

  out.samples_used = energies.size();
  if (energies.empty()) throw Error(ErrorKind::Diverged, "every Monte-Carlo sample diverged");
  const double mean = std::accumulate(energies.begin(), energies.end(), 0.0) / energies.size();
  double var = 0.0;
  for (double e : energies) var += (e - mean) * (e - mean);
  var = energies.size() > 1 ? var / (energies.size() - 1) : 0.0;
  out.mean_energy = mean;
  out.stderr_energy = std::sqrt(var / energies.size());
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Composite 20-point Gauss-Legendre on [0, T].
QuadratureRule composite_gauss(double T, int points) {
  using Gauss = boost::math::quadrature::gauss<double, 20>;
  const int panels = std::max(1, points / 20);
  const double h = T / panels;
  QuadratureRule rule;
  const auto& abscissa = Gauss::abscissa();
  const auto& weights = Gauss::weights();
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      const double offsets[2] = {-abscissa[i], abscissa[i]};
      for (int side = 0; side < (abscissa[i] == 0.0 ? 1 : 2); ++side) {
        rule.nodes.push_back(mid + 0.5 * h * offsets[side]);
        rule.weights.push_back(0.5 * h * weights[i]);
      }
    }
  }
  return rule;
}

}  // namespace

double kernel_energy_truncated(const BilinearSystem& sys, int q_max, int quadrature_points) {
  if (sys.n() > 3 || sys.couplings.size() > 2 || q_max > 3)
    throw Error(ErrorKind::TooLarge, "kernel quadrature limited to n <= 3, two couplings and q_max <= 3");
  if (q_max < 1) throw Error(ErrorKind::InvalidInput, "q_max must be >= 1");

  const double horizon = default_horizon(sys);
  const QuadratureRule rule = composite_gauss(horizon, quadrature_points);
  const std::size_t m = rule.nodes.size();
  std::vector<Eigen::MatrixXd> expm(m);
  for (std::size_t i = 0; i < m; ++i) expm[i] = (sys.N0 * rule.nodes[i]).exp();

  // The outermost factor of every kernel is C e^{N0 s}; its weighted square
  // integrates to W = sum_l w_l e^{N0^T s_l} C^T C e^{N0 s_l}.
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(sys.n(), sys.n());
  for (std::size_t l = 0; l < m; ++l)
    W += rule.weights[l] * expm[l].transpose() * sys.C.transpose() * sys.C * expm[l];
  auto outer = [&](const Eigen::MatrixXd& inner) { return (inner.transpose() * W * inner).trace(); };

  double total = 0.0;
  // q = 1: g = C e^{N0 s1} B
  total += outer(sys.B);
  if (q_max == 1) return total;

  // q = 2: g = C e^{N0 s2} N_k e^{N0 s1} B
  std::vector<std::vector<Eigen::MatrixXd>> first(sys.couplings.size(), std::vector<Eigen::MatrixXd>(m));
  for (std::size_t k = 0; k < sys.couplings.size(); ++k)
    for (std::size_t i = 0; i < m; ++i) {
      first[k][i] = sys.couplings[k].N * expm[i] * sys.B;
      total += rule.weights[i] * outer(first[k][i]);
    }
  if (q_max == 2) return total;

  // q = 3: g = C e^{N0 s3} N_k1 e^{N0 s2} N_k2 e^{N0 s1} B
  for (std::size_t k1 = 0; k1 < sys.couplings.size(); ++k1)
    for (std::size_t k2 = 0; k2 < sys.couplings.size(); ++k2)
      for (std::size_t j = 0; j < m; ++j) {
        const Eigen::MatrixXd left = sys.couplings[k1].N * expm[j];
        for (std::size_t i = 0; i < m; ++i)
          total += rule.weights[j] * rule.weights[i] * outer(left * first[k2][i]);
      }
  return total;
}

double spearman_rank_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw Error(ErrorKind::InvalidInput, "need two equal-length samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / ra.size();
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / rb.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace bilnet
