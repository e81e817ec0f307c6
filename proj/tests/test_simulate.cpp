#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bilnet/error.hpp"
#include "bilnet/gramian.hpp"
#include "bilnet/simulate.hpp"

using namespace bilnet;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected bilnet::Error");
  return ErrorKind::InvalidInput;
}

BilinearSystem scalar_system(double n0, std::vector<double> couplings) {
  std::vector<Eigen::MatrixXd> Ns;
  for (double c : couplings) Ns.push_back(Eigen::MatrixXd::Constant(1, 1, c));
  return BilinearSystem::from_matrices(Eigen::MatrixXd::Constant(1, 1, n0), Ns, Eigen::MatrixXd::Ones(1, 1));
}

BilinearSystem two_node_system() {
  Eigen::MatrixXd N1 = Eigen::MatrixXd::Zero(2, 2);
  N1(1, 0) = 1.0;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2, 1);
  B(0, 0) = 1.0;
  return BilinearSystem::from_matrices(-Eigen::MatrixXd::Identity(2, 2), {N1}, B);
}

}  // namespace

TEST_CASE("free response of a scalar system") {
  const auto sys = scalar_system(-1.0, {});
  const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(1);
  const auto traj = integrate(sys, DisturbanceSpec::zero(), DisturbanceSpec::zero(), x0, 10.0, 0.01);
  REQUIRE(traj.times.size() == 1001);
  CHECK(traj.times.back() == doctest::Approx(10.0));
  CHECK(traj.states.back()(0) == doctest::Approx(std::exp(-10.0)).epsilon(1e-8));
  CHECK(traj.states[100](0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
  // Integral of e^{-2t} over [0, 10].
  CHECK(traj.output_energy() == doctest::Approx(0.5 * (1 - std::exp(-20.0))).epsilon(1e-4));
}

TEST_CASE("deterministic disturbances enter the drift and the input") {
  const auto sys = scalar_system(-1.0, {1.0});
  const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(1);
  // eta = 0.5 throughout gives x' = -0.5 x.
  const auto eta = DisturbanceSpec::deterministic({{0.5}}, 100.0);
  const auto traj = integrate(sys, eta, DisturbanceSpec::zero(), x0, 2.0, 0.001);
  CHECK(traj.states.back()(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));

  // Constant input v = 1 from rest: x(t) = 1 - e^{-t}.
  const auto v = DisturbanceSpec::deterministic({{1.0}}, 100.0);
  const auto forced = integrate(sys, DisturbanceSpec::zero(), v, Eigen::VectorXd::Zero(1), 3.0, 0.001);
  CHECK(forced.states.back()(0) == doctest::Approx(1 - std::exp(-3.0)).epsilon(1e-10));

  // Table shorter than the horizon is zero afterwards.
  const auto pulse = DisturbanceSpec::deterministic({{1.0}}, 1.0);
  const auto p = integrate(sys, DisturbanceSpec::zero(), pulse, Eigen::VectorXd::Zero(1), 2.0, 0.001);
  CHECK(p.states.back()(0) == doctest::Approx((1 - std::exp(-1.0)) * std::exp(-1.0)).epsilon(1e-8));
}

TEST_CASE("integration guards") {
  const auto unstable = scalar_system(3.0, {});
  CHECK(kind_of([&] {
          integrate(unstable, DisturbanceSpec::zero(), DisturbanceSpec::zero(), Eigen::VectorXd::Ones(1), 20.0, 0.01);
        }) == ErrorKind::Diverged);
  const auto sys = scalar_system(-1.0, {});
  CHECK(kind_of([&] {
          integrate(sys, DisturbanceSpec::zero(), DisturbanceSpec::zero(), Eigen::VectorXd::Ones(2), 1.0, 0.1);
        }) == ErrorKind::InvalidInput);
  CHECK(kind_of([&] {
          integrate(sys, DisturbanceSpec::zero(), DisturbanceSpec::zero(), Eigen::VectorXd::Ones(1), 1.0, 0.0);
        }) == ErrorKind::InvalidInput);
  CHECK(kind_of([] { DisturbanceSpec::white(-1.0, 0.1, 0); }) == ErrorKind::InvalidInput);
}

TEST_CASE("white disturbances are reproducible by seed") {
  const auto sys = scalar_system(-1.0, {0.5});
  const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(1);
  const auto a = integrate(sys, DisturbanceSpec::white(1.0, 0.01, 4), DisturbanceSpec::zero(), x0, 2.0, 0.01);
  const auto b = integrate(sys, DisturbanceSpec::white(1.0, 0.01, 4), DisturbanceSpec::zero(), x0, 2.0, 0.01);
  const auto c = integrate(sys, DisturbanceSpec::white(1.0, 0.01, 5), DisturbanceSpec::zero(), x0, 2.0, 0.01);
  CHECK(a.states.back()(0) == b.states.back()(0));
  CHECK(a.states.back()(0) != c.states.back()(0));
}

TEST_CASE("trajectory CSV") {
  const auto sys = two_node_system();
  const auto traj = integrate(sys, DisturbanceSpec::zero(), DisturbanceSpec::zero(), Eigen::Vector2d(1, 0), 0.2, 0.1);
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  const std::string text = os.str();
  CHECK(text.rfind("t,x_1,x_2\n0,1,0\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("Monte-Carlo energy of a linear system matches its Gramian trace") {
  const auto sys = scalar_system(-1.0, {});
  const auto r = monte_carlo_energy(sys, 1.0, 400, 12.0, 0.01, 1);
  CHECK(r.samples_used == 400);
  CHECK(std::abs(r.mean_energy - 0.5) <= 3 * r.stderr_energy + 1e-3);
  CHECK(r.stderr_energy > 0.0);
  CHECK(monte_carlo_energy(sys, 0.0, 10, 1.0, 0.01, 1).mean_energy == 0.0);
  const auto again = monte_carlo_energy(sys, 1.0, 400, 12.0, 0.01, 1);
  CHECK(again.mean_energy == r.mean_energy);
}

TEST_CASE("Monte-Carlo energy of a bilinear system tracks its Gramian trace") {
  const auto sys = two_node_system();
  const double trace = solve_generalized_direct(sys).trace();
  const auto r = monte_carlo_energy(sys, 1.0, 800, 15.0, 0.005, 3);
  CHECK(std::abs(r.mean_energy - trace) <= 4 * r.stderr_energy + 0.02 * trace);
}

TEST_CASE("kernel energies reproduce the series partial sums") {
  SUBCASE("scalar") {
    const auto sys = scalar_system(-1.0, {1.0});
    CHECK(kernel_energy_truncated(sys, 1) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(kernel_energy_truncated(sys, 2) == doctest::Approx(0.75).epsilon(1e-10));
    CHECK(kernel_energy_truncated(sys, 3) == doctest::Approx(0.875).epsilon(1e-10));
  }
  SUBCASE("two-node") {
    const auto sys = two_node_system();
    const auto series = volterra_series_gramian(sys);
    REQUIRE(series.term_traces.size() >= 3);
    double partial = 0.0;
    for (int q = 1; q <= 3; ++q) {
      partial += series.term_traces[q - 1];
      CHECK(kernel_energy_truncated(sys, q) == doctest::Approx(partial).epsilon(1e-8));
    }
  }
  SUBCASE("two couplings on a non-normal drift") {
    Eigen::Matrix2d N0;
    N0 << -1.0, 0.4, -0.3, -1.5;
    Eigen::Matrix2d N1, N2;
    N1 << 0.0, 0.0, 0.6, 0.0;
    N2 << 0.2, 0.0, 0.0, 0.3;
    const auto sys = BilinearSystem::from_matrices(N0, {N1, N2}, Eigen::MatrixXd::Identity(2, 1));
    const auto series = volterra_series_gramian(sys);
    const double partial = series.term_traces[0] + series.term_traces[1] + series.term_traces[2];
    CHECK(kernel_energy_truncated(sys, 3) == doctest::Approx(partial).epsilon(1e-6));
  }
  SUBCASE("limits") {
    const auto big = BilinearSystem::from_matrices(-Eigen::MatrixXd::Identity(4, 4), {},
                                                   Eigen::MatrixXd::Identity(4, 1));
    CHECK(kind_of([&] { kernel_energy_truncated(big, 2); }) == ErrorKind::TooLarge);
    CHECK(kind_of([] { kernel_energy_truncated(scalar_system(-1, {1}), 4); }) == ErrorKind::TooLarge);
    CHECK(kind_of([] { kernel_energy_truncated(scalar_system(-1, {1, 1, 1}), 2); }) == ErrorKind::TooLarge);
  }
}

TEST_CASE("Spearman rank correlation") {
  CHECK(spearman_rank_correlation({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman_rank_correlation({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  // Ties take average ranks: ranks (1.5, 1.5, 3) against (1, 2, 3).
  CHECK(spearman_rank_correlation({1, 1, 2}, {1, 2, 3}) == doctest::Approx(std::sqrt(3.0) / 2));
  CHECK_THROWS_AS(spearman_rank_correlation({1}, {1}), Error);
}

TEST_CASE("default horizon") {
  CHECK(default_horizon(scalar_system(-2.0, {})) == doctest::Approx(10.0));
}
