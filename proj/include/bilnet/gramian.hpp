#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bilnet/graph.hpp"

namespace bilnet {

enum class GramianMethod { Direct, FixedPoint, Series, Reduced };

const char* to_string(GramianMethod m);

/// Reachability Gramian of a bilinear system together with solver diagnostics.
struct GramianReport {
  Eigen::MatrixXd P;
  double residual = 0.0;  // relative Frobenius residual of the generalized Lyapunov equation
  GramianMethod method = GramianMethod::Direct;
  int iterations = 0;
  bool converged = false;
  double min_eig = 0.0;

  double trace() const { return P.trace(); }
};

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 10'000;
  int q_max = 200;
};

/// Result of testing the sufficient Volterra-convergence condition
/// sqrt(sum ||N_k N_k^T||) < sqrt(2 alpha) / beta with ||e^{N0 t}|| <= beta e^{-alpha t}.
struct Assumption1Report {
  double alpha = 0.0;
  double beta = 1.0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  double spectral_abscissa_L = 0.0;
};

struct SpectralCheck {
  bool solvable = false;
  double abscissa = 0.0;
};

/// Largest real part of the eigenvalues of a square matrix.
double spectral_abscissa(const Eigen::MatrixXd& A);

/// Solves A X + X A^T + Q = 0 by complex Schur decomposition (Bartels-Stewart).
/// The factorization is computed once and reused across right-hand sides.
class LyapunovSolver {
 public:
  /// Throws Error(NotHurwitz) unless every eigenvalue of A has negative real part.
  explicit LyapunovSolver(const Eigen::MatrixXd& A);

  Eigen::MatrixXd solve(const Eigen::MatrixXd& Q) const;
  double abscissa() const { return abscissa_; }

 private:
  Eigen::MatrixXcd U_;
  Eigen::MatrixXcd T_;
  double abscissa_ = 0.0;
};

Eigen::MatrixXd solve_linear_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

/// Generalized Lyapunov residual N0 P + P N0^T + sum N_k P N_k^T + B B^T.
Eigen::MatrixXd generalized_lyapunov_residual(const BilinearSystem& sys, const Eigen::MatrixXd& P);

/// ||residual||_F / (||B B^T||_F + 2 ||N0||_F ||P||_F + sum ||N_k||_F^2 ||P||_F).
double relative_residual(const BilinearSystem& sys, const Eigen::MatrixXd& P);

/// L = I (x) N0 + N0 (x) I + sum_k N_k (x) N_k acting on column-major vec(P).
Eigen::MatrixXd vectorized_operator(const BilinearSystem& sys);

/// Dense Kronecker solve. Throws SingularOperator when L is numerically
/// singular and NotPSD when L is not Hurwitz or P is indefinite.
GramianReport solve_generalized_direct(const BilinearSystem& sys, const SolverOptions& opt = {});

/// P_{j+1} = lyap(N0, sum_k N_k P_j N_k^T + B B^T) from P_0 = 0.
/// Throws NotHurwitz, or MaxIterations when the iteration does not settle.
GramianReport solve_generalized_fixed_point(const BilinearSystem& sys, const SolverOptions& opt = {});

struct SeriesResult {
  GramianReport report;
  std::vector<double> term_traces;
};

/// Truncated Volterra series P = sum_q X_q with X_1 = lyap(N0, B B^T),
/// X_q = lyap(N0, sum_k N_k X_{q-1} N_k^T).
SeriesResult volterra_series_gramian(const BilinearSystem& sys, const SolverOptions& opt = {});

/// Exact solver for systems whose couplings are scaled elementary matrices.
/// Since g E_vu P E_vu^T g = g^2 p_uu E_vv, the generalized equation reduces to
/// an n x n linear system for diag(P). Throws NotPSD when the reduced gain
/// matrix has spectral radius >= 1, InvalidInput for non-elementary couplings.
GramianReport solve_generalized_reduced(const BilinearSystem& sys, const SolverOptions& opt = {});

/// Stability of the vectorized operator; negative abscissa <=> unique PSD Gramian.
SpectralCheck spectral_solvability_check(const BilinearSystem& sys);

struct Assumption1Options {
  double margin = 1e-6;
  int t_samples = 512;
  double t_horizon = 0.0;  // 0 selects 20 / alpha
};

Assumption1Report assumption1_check(const BilinearSystem& sys, const Assumption1Options& opt = {});

}  // namespace bilnet
