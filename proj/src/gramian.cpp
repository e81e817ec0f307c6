#include "bilnet/gramian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

#include "bilnet/error.hpp"

namespace bilnet {

const char* to_string(GramianMethod m) {
  switch (m) {
    case GramianMethod::Direct: return "direct";
    case GramianMethod::FixedPoint: return "fixed_point";
    case GramianMethod::Series: return "series";
    case GramianMethod::Reduced: return "reduced";
  }
  return "unknown";
}

namespace {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& P) { return 0.5 * (P + P.transpose()); }

double min_eigenvalue(const Eigen::MatrixXd& P) {
  if (P.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(P), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double spectral_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

Eigen::MatrixXd coupling_sum(const BilinearSystem& sys, const Eigen::MatrixXd& P) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(sys.n(), sys.n());
  for (const auto& c : sys.couplings) S.noalias() += c.N * P * c.N.transpose();
  return S;
}

GramianReport finish(const BilinearSystem& sys, Eigen::MatrixXd P, GramianMethod method,
                     int iterations, double tol) {
  GramianReport r;
  r.P = symmetrize(P);
  r.method = method;
  r.iterations = iterations;
  r.residual = relative_residual(sys, r.P);
  r.min_eig = min_eigenvalue(r.P);
  r.converged = r.residual <= tol;
  return r;
}

void check_finite(const Eigen::MatrixXd& P, const char* where) {
  if (!P.allFinite()) throw Error(ErrorKind::SingularOperator, std::string(where) + " produced non-finite values");
}

}  // namespace

double spectral_abscissa(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

// ---------------------------------------------------------------------------

LyapunovSolver::LyapunovSolver(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) throw Error(ErrorKind::InvalidInput, "Lyapunov matrix must be square");
  Eigen::ComplexSchur<Eigen::MatrixXd> schur(A);
  if (schur.info() != Eigen::Success) throw Error(ErrorKind::NotHurwitz, "Schur decomposition failed");
  U_ = schur.matrixU();
  T_ = schur.matrixT();
  abscissa_ = A.size() ? T_.diagonal().real().maxCoeff() : -std::numeric_limits<double>::infinity();
  if (!(abscissa_ < 0))
    throw Error(ErrorKind::NotHurwitz, "spectral abscissa " + std::to_string(abscissa_) + " >= 0");
}

Eigen::MatrixXd LyapunovSolver::solve(const Eigen::MatrixXd& Q) const {
  const Eigen::Index n = T_.rows();
  // T Y + Y T^* = -U^* Q U, solved column by column from the right since T^* is lower triangular.
  const Eigen::MatrixXcd rhs = -(U_.adjoint() * Q.cast<std::complex<double>>() * U_);
  Eigen::MatrixXcd Y(n, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd b = rhs.col(j);
    for (Eigen::Index k = j + 1; k < n; ++k) b -= std::conj(T_(j, k)) * Y.col(k);
    Eigen::MatrixXcd M = T_;
    M.diagonal().array() += std::conj(T_(j, j));
    Y.col(j) = M.triangularView<Eigen::Upper>().solve(b);
  }
  const Eigen::MatrixXd X = (U_ * Y * U_.adjoint()).real();
  return symmetrize(X);
}

Eigen::MatrixXd solve_linear_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  return LyapunovSolver(A).solve(Q);
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd generalized_lyapunov_residual(const BilinearSystem& sys, const Eigen::MatrixXd& P) {
  return sys.N0 * P + P * sys.N0.transpose() + coupling_sum(sys, P) + sys.B * sys.B.transpose();
}

double relative_residual(const BilinearSystem& sys, const Eigen::MatrixXd& P) {
  const double pn = P.norm();
  double scale = (sys.B * sys.B.transpose()).norm() + 2.0 * sys.N0.norm() * pn;
  for (const auto& c : sys.couplings) scale += c.N.squaredNorm() * pn;
  if (scale == 0.0) return 0.0;
  return generalized_lyapunov_residual(sys, P).norm() / scale;
}

Eigen::MatrixXd vectorized_operator(const BilinearSystem& sys) {
  const Eigen::Index n = sys.n();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n * n, n * n);
  auto add_kron = [&](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (A(i, j) != 0.0) L.block(i * n, j * n, n, n) += A(i, j) * B;
  };
  add_kron(I, sys.N0);
  add_kron(sys.N0, I);
  for (const auto& c : sys.couplings) add_kron(c.N, c.N);
  return L;
}

GramianReport solve_generalized_direct(const BilinearSystem& sys, const SolverOptions& opt) {
  const Eigen::Index n = sys.n();
  const Eigen::MatrixXd L = vectorized_operator(sys);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(L);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14))
    throw Error(ErrorKind::SingularOperator, "generalized Lyapunov operator is singular (rcond " +
                                                 std::to_string(rcond) + ")");

  Eigen::MatrixXd rhs(n * n, 2);
  const Eigen::MatrixXd BBt = sys.B * sys.B.transpose();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  rhs.col(0) = -Eigen::Map<const Eigen::VectorXd>(BBt.data(), n * n);
  rhs.col(1) = -Eigen::Map<const Eigen::VectorXd>(I.data(), n * n);
  const Eigen::MatrixXd sol = lu.solve(rhs);
  check_finite(sol, "direct solve");

  // L(X) = -I has a positive definite solution iff the operator is Hurwitz.
  const Eigen::MatrixXd certificate = Eigen::Map<const Eigen::MatrixXd>(sol.col(1).data(), n, n);
  if (!(min_eigenvalue(certificate) > 0.0))
    throw Error(ErrorKind::NotPSD, "generalized Lyapunov operator is not Hurwitz; no stabilizing Gramian");

  Eigen::MatrixXd P = Eigen::Map<const Eigen::MatrixXd>(sol.col(0).data(), n, n);
  GramianReport r = finish(sys, P, GramianMethod::Direct, 1, opt.tol);
  if (r.min_eig < -1e-8 * std::max(1.0, r.P.norm()))
    throw Error(ErrorKind::NotPSD, "Gramian has eigenvalue " + std::to_string(r.min_eig));
  return r;
}

GramianReport solve_generalized_fixed_point(const BilinearSystem& sys, const SolverOptions& opt) {
  const LyapunovSolver lyap(sys.N0);
  const Eigen::MatrixXd BBt = sys.B * sys.B.transpose();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(sys.n(), sys.n());
  for (int it = 1; it <= opt.max_iter; ++it) {
    Eigen::MatrixXd next = lyap.solve(coupling_sum(sys, P) + BBt);
    if (!next.allFinite() || next.norm() > 1e200)
      throw Error(ErrorKind::MaxIterations, "fixed-point iteration diverged after " + std::to_string(it) + " steps");
    const double step = (next - P).norm();
    const double bound = opt.tol * (1.0 + P.norm());
    P = std::move(next);
    if (step <= bound) return finish(sys, P, GramianMethod::FixedPoint, it, std::max(opt.tol, 1e-10));
  }
  throw Error(ErrorKind::MaxIterations,
              "fixed-point iteration did not settle in " + std::to_string(opt.max_iter) + " steps");
}

SeriesResult volterra_series_gramian(const BilinearSystem& sys, const SolverOptions& opt) {
  const LyapunovSolver lyap(sys.N0);
  SeriesResult out;
  Eigen::MatrixXd X = lyap.solve(sys.B * sys.B.transpose());
  Eigen::MatrixXd P = X;
  out.term_traces.push_back(X.trace());

  bool converged = sys.couplings.empty();
  int nondecreasing = 0;
  int q = 1;
  while (!converged && q < opt.q_max) {
    ++q;
    X = lyap.solve(coupling_sum(sys, X));
    P += X;
    const double t = X.trace();
    out.term_traces.push_back(t);
    if (!std::isfinite(t)) throw Error(ErrorKind::NonConvergent, "series term is not finite");
    nondecreasing = t >= out.term_traces[out.term_traces.size() - 2] ? nondecreasing + 1 : 0;
    if (nondecreasing >= 5)
      throw Error(ErrorKind::NonConvergent, "series term traces nondecreasing over 5 consecutive terms");
    converged = t <= opt.tol * std::max(1.0, P.trace());
  }
  out.report = finish(sys, P, GramianMethod::Series, q, std::max(opt.tol, 1e-10));
  out.report.converged = converged && out.report.residual <= std::max(opt.tol, 1e-10);
  return out;
}

namespace {

// Per-thread memo of the drift factorization, reused while consecutive
// reduced solves share N0 and B (the usual case when sweeping attack sets).
struct DriftMemo {
  Eigen::MatrixXd N0;
  Eigen::MatrixXd B;
  std::optional<LyapunovSolver> lyap;
  Eigen::MatrixXd P_lin;
  std::vector<std::optional<Eigen::MatrixXd>> unit;  // lyap(N0, E_vv)

  const Eigen::MatrixXd& unit_response(Eigen::Index v) {
    if (!unit[v]) {
      Eigen::MatrixXd E = Eigen::MatrixXd::Zero(N0.rows(), N0.rows());
      E(v, v) = 1.0;
      unit[v] = lyap->solve(E);
    }
    return *unit[v];
  }
};

DriftMemo& drift_memo(const BilinearSystem& sys) {
  thread_local DriftMemo memo;
  const bool same = memo.lyap && memo.N0.rows() == sys.N0.rows() && memo.B.cols() == sys.B.cols() &&
                    memo.N0 == sys.N0 && memo.B == sys.B;
  if (!same) {
    memo.lyap.reset();
    memo.lyap.emplace(sys.N0);  // throws NotHurwitz and leaves the memo empty
    memo.N0 = sys.N0;
    memo.B = sys.B;
    memo.P_lin = memo.lyap->solve(sys.B * sys.B.transpose());
    memo.unit.assign(sys.N0.rows(), std::nullopt);
  }
  return memo;
}

}  // namespace

GramianReport solve_generalized_reduced(const BilinearSystem& sys, const SolverOptions& opt) {
  const Eigen::Index n = sys.n();
  // gains(v, u) = sum of g^2 over couplings g * E_{v,u}.
  Eigen::MatrixXd gains = Eigen::MatrixXd::Zero(n, n);
  for (const auto& c : sys.couplings) {
    Eigen::Index row = -1, col = -1;
    int nonzeros = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (c.N(i, j) != 0.0) {
          ++nonzeros;
          row = i;
          col = j;
        }
    if (nonzeros > 1) throw Error(ErrorKind::InvalidInput, "reduced solver needs elementary couplings");
    if (nonzeros == 1) gains(row, col) += c.N(row, col) * c.N(row, col);
  }

  DriftMemo& memo = drift_memo(sys);
  const Eigen::MatrixXd& P_lin = memo.P_lin;

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index v = 0; v < n; ++v)
    if (!gains.row(v).isZero(0.0)) D.col(v) = memo.unit_response(v).diagonal();

  // Columns of the loop matrix vanish outside the coupling tails, so its
  // nonzero spectrum is that of the tail-indexed block.
  const Eigen::MatrixXd loop = D * gains;
  std::vector<Eigen::Index> tails;
  for (Eigen::Index u = 0; u < n; ++u)
    if (!gains.col(u).isZero(0.0)) tails.push_back(u);
  double radius = 0.0;
  if (!tails.empty()) {
    const Eigen::MatrixXd block = loop(tails, tails);
    radius = Eigen::EigenSolver<Eigen::MatrixXd>(block, false).eigenvalues().cwiseAbs().maxCoeff();
  }
  if (!(radius < 1.0 - 1e-12))
    throw Error(ErrorKind::NotPSD, "coupling loop gain " + std::to_string(radius) + " >= 1; no stabilizing Gramian");

  const Eigen::VectorXd p = (Eigen::MatrixXd::Identity(n, n) - loop).partialPivLu().solve(P_lin.diagonal());
  const Eigen::VectorXd fed = gains * p;
  Eigen::MatrixXd P = P_lin;
  for (Eigen::Index v = 0; v < n; ++v)
    if (fed(v) != 0.0) P += fed(v) * memo.unit_response(v);
  GramianReport r = finish(sys, P, GramianMethod::Reduced, 1, opt.tol);
  if (r.min_eig < -1e-8 * std::max(1.0, r.P.norm()))
    throw Error(ErrorKind::NotPSD, "Gramian has eigenvalue " + std::to_string(r.min_eig));
  return r;
}

SpectralCheck spectral_solvability_check(const BilinearSystem& sys) {
  const double a = spectral_abscissa(vectorized_operator(sys));
  return {a < 0.0, a};
}

// ---------------------------------------------------------------------------

Assumption1Report assumption1_check(const BilinearSystem& sys, const Assumption1Options& opt) {
  const double drift_abscissa = spectral_abscissa(sys.N0);
  if (!(drift_abscissa < 0))
    throw Error(ErrorKind::NotHurwitz, "drift spectral abscissa " + std::to_string(drift_abscissa) + " >= 0");

  Assumption1Report r;
  r.alpha = -drift_abscissa * (1.0 - opt.margin);
  const double horizon = opt.t_horizon > 0 ? opt.t_horizon : 20.0 / r.alpha;
  auto envelope = [&](double t) { return spectral_norm((sys.N0 * t).exp()) * std::exp(r.alpha * t); };

  const int samples = std::max(opt.t_samples, 2);
  const double lo = std::log(1e-4), hi = std::log(std::max(horizon, 2e-4));
  std::vector<double> ts(samples), fs(samples);
  int best = 0;
  for (int i = 0; i < samples; ++i) {
    ts[i] = std::exp(lo + (hi - lo) * i / (samples - 1));
    fs[i] = envelope(ts[i]);
    if (fs[i] > fs[best]) best = i;
  }
  double beta = std::max(1.0, fs[best]);

  // Golden-section refinement on the bracket around the grid maximum.
  double a = ts[std::max(best - 1, 0)], b = ts[std::min(best + 1, samples - 1)];
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = envelope(c), fd = envelope(d);
  for (int it = 0; it < 60 && b - a > 1e-12 * (1.0 + b); ++it) {
    if (fc > fd) {
      b = d, d = c, fd = fc;
      c = b - g * (b - a), fc = envelope(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + g * (b - a), fd = envelope(d);
    }
  }
  r.beta = std::max({beta, fc, fd});

  double sum = 0.0;
  for (const auto& cpl : sys.couplings) sum += spectral_norm(cpl.N * cpl.N.transpose());
  r.lhs = std::sqrt(sum);
  r.rhs = std::sqrt(2.0 * r.alpha) / r.beta;
  r.holds = r.lhs < r.rhs;
  r.spectral_abscissa_L = spectral_solvability_check(sys).abscissa;
  return r;
}

}  // namespace bilnet
