#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "bilnet/graph.hpp"

namespace bilnet {

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> outputs;  // y = C x

  /// Trapezoidal integral of ||y||^2 over the stored grid.
  double output_energy() const;
};

/// Input signal for a bank of channels, constant over hold intervals of
/// length dt_hold.
struct DisturbanceSpec {
  enum class Kind { Zero, White, Deterministic };

  Kind kind = Kind::Zero;
  double level = 0.0;    // White: draws have variance level^2 / dt_hold
  double dt_hold = 1e-3;
  std::vector<std::vector<double>> table;  // Deterministic: table[interval][channel], zero past the end
  std::uint64_t seed = 0;

  static DisturbanceSpec zero() { return {}; }
  static DisturbanceSpec white(double level, double dt_hold, std::uint64_t seed);
  static DisturbanceSpec deterministic(std::vector<std::vector<double>> table, double dt_hold);
};

/// -1 / spectral abscissa(N0) scaled by 20; the default simulation horizon.
double default_horizon(const BilinearSystem& sys);

/// Fixed-step RK4 integration of dx/dt = (N0 + sum eta_k N_k) x + B v.
/// Disturbances are sampled at the start of each step and held across it.
/// Throws Diverged when ||x|| exceeds 1e12.
Trajectory integrate(const BilinearSystem& sys, const DisturbanceSpec& eta, const DisturbanceSpec& v,
                     const Eigen::VectorXd& x0, double horizon, double dt);

/// CSV with header t,x_1..x_n and full precision.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

struct MonteCarloResult {
  double mean_energy = 0.0;
  double stderr_energy = 0.0;
  std::size_t samples_used = 0;
  std::size_t diverged = 0;
};

/// Empirical output energy under random excitation. Each sample starts from
/// x0 = level * B * xi (xi standard normal, an impulse of random weight on
/// every attacked node) and drives every coupling with piecewise-constant
/// white noise of intensity level^2 held over dt. The energy integral of
/// ||y||^2 over [0, horizon] is divided by level^2. Sample i draws from a
/// stream seeded by (seed, i), so equal seeds give common random numbers
/// across systems.
MonteCarloResult monte_carlo_energy(const BilinearSystem& sys, double noise_level, std::size_t samples,
                                    double horizon, double dt, std::uint64_t seed);

/// Sum over q <= q_max of the Volterra kernel energies, each evaluated by
/// tensor-product Gauss-Legendre quadrature over [0, 20 / alpha]^q.
/// Requires n <= 3, at most two couplings and q_max <= 3 (TooLarge otherwise).
double kernel_energy_truncated(const BilinearSystem& sys, int q_max, int quadrature_points = 120);

/// Spearman rank correlation with average ranks for ties.
double spearman_rank_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace bilnet
