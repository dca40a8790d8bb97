#pragma once

/// Deterministic solvers for the generalized symmetric eigenproblem
/// K u = lambda M u: a blocked LOBPCG iteration for the lowest pairs on
/// large sparse operators, and a dense oracle for small systems.  Both
/// return M-orthonormal vectors with a pinned sign convention, so repeated
/// runs (and runs across machines) produce identical reports.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nodalforge/core.hpp"
#include "nodalforge/fem.hpp"

namespace nodalforge {

struct EigenResult {
  std::vector<double> values;            ///< ascending
  std::vector<Eigen::VectorXd> vectors;  ///< M-normalized, dof space
  std::vector<double> residuals;         ///< |K u - lambda M u| / |u|
  int iterations = 0;
  std::uint64_t seed = 0;
  double gap_report = 0.0;  ///< min relative gap (l_{k+1}-l_k)/l_{k+1}
  bool converged = true;
};

namespace detail {

/// Fix the sign so the entry of largest magnitude is positive, making
/// eigenvectors reproducible.  Entries within a 1e-6 relative band of the
/// maximum count as tied and the first one wins: symmetric modes carry
/// equal-magnitude extremes that different solvers separate only at the
/// solver-noise level, and a hard argmax would flip signs between them.
inline void fix_sign(Eigen::VectorXd& v) {
  if (v.size() == 0) return;
  const double mag = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) >= (1.0 - 1e-6) * mag) {
      if (v[i] < 0.0) v = -v;
      return;
    }
}

/// M-orthonormalize the columns of S in place (SVQB: symmetric eigendecomp
/// of the Gram matrix), dropping numerically dependent columns.  Returns the
/// new column count.
inline Eigen::Index svqb(const Eigen::SparseMatrix<double>& M,
                         Eigen::MatrixXd& S) {
  Eigen::MatrixXd G = S.transpose() * (M * S);
  G = 0.5 * (G + G.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  double gmax = es.eigenvalues().cwiseAbs().maxCoeff();
  if (gmax <= 0.0) return 0;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] > 1e-12 * gmax) keep.push_back(i);
  Eigen::MatrixXd T(S.cols(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    T.col(static_cast<Eigen::Index>(j)) =
        es.eigenvectors().col(keep[j]) / std::sqrt(es.eigenvalues()[keep[j]]);
  S = S * T;
  return S.cols();
}

inline void finalize_result(const OperatorPair& ops, EigenResult& res) {
  const auto& K = ops.stiffness;
  const auto& M = ops.mass;
  res.residuals.clear();
  for (std::size_t k = 0; k < res.vectors.size(); ++k) {
    Eigen::VectorXd& u = res.vectors[k];
    double nm = std::sqrt(u.dot(M * u));
    if (nm > 0) u /= nm;
    fix_sign(u);
    double lambda = res.values[k];
    if (lambda < 0.0 && lambda > -1e-9) {
      lambda = 0.0;
      res.values[k] = 0.0;
    }
    res.residuals.push_back((K * u - lambda * (M * u)).norm() / u.norm());
  }
  res.gap_report = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < res.values.size(); ++k) {
    double hi = res.values[k + 1];
    double gap = (hi > 0.0) ? (hi - res.values[k]) / hi : 0.0;
    res.gap_report = std::min(res.gap_report, gap);
  }
  if (res.values.size() < 2) res.gap_report = 0.0;
}

}  // namespace detail

/// Dense generalized symmetric solve; the authoritative oracle for systems
/// of at most 4000 unknowns.
inline EigenResult dense_solve(const OperatorPair& ops, int count) {
  const Eigen::Index n = ops.dof_count();
  require(n <= 4000, "dense_solve: system too large (" + std::to_string(n) +
                         " > 4000 unknowns)");
  require(count >= 1 && count <= n, "dense_solve: bad count");
  Eigen::MatrixXd K = Eigen::MatrixXd(ops.stiffness);
  Eigen::MatrixXd M = Eigen::MatrixXd(ops.mass);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
  require(es.info() == Eigen::Success, "dense_solve: factorization failed");

  EigenResult res;
  res.iterations = 1;
  for (int k = 0; k < count; ++k) {
    res.values.push_back(es.eigenvalues()[k]);
    res.vectors.push_back(es.eigenvectors().col(k));
  }
  detail::finalize_result(ops, res);
  return res;
}

/// Blocked, preconditioned iteration for the lowest `count` eigenpairs
/// (LOBPCG).  Deterministic for a fixed seed: the starting block is the
/// constant vector (exact kernel direction in the unconstrained case) plus
/// pinned pseudo-random columns, the preconditioner is lumped-mass-shifted
/// Jacobi, and every reduction runs in a fixed order.
inline EigenResult solve_lowest(const OperatorPair& ops, int count,
                                double tol = 1e-9,
                                std::uint64_t seed = 0x6e6f64616cULL) {
  const Eigen::Index n = ops.dof_count();
  require(count >= 1, "solve_lowest: count must be positive");
  require(4 * static_cast<Eigen::Index>(count) <= n,
          "solve_lowest: count too large for this mesh");
  require(tol > 0, "solve_lowest: tolerance must be positive");

  const auto& K = ops.stiffness;
  const auto& M = ops.mass;
  const int guard = 2;
  const Eigen::Index m =
      std::min<Eigen::Index>(count + guard, std::max<Eigen::Index>(1, n / 4));

  // Jacobi preconditioner with a lumped-mass shift absorbing the metric
  // scale of squashed regions
  Eigen::VectorXd diagK = K.diagonal();
  double sigma = 1e-3 * diagK.sum() / std::max(1e-300, ops.lumped.sum());
  Eigen::VectorXd pre = (diagK + sigma * ops.lumped).cwiseMax(1e-300);

  SplitMix64 rng(seed);
  Eigen::MatrixXd X(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = rng.next_normal();
  if (ops.bc != BoundaryCondition::dirichlet) X.col(0).setOnes();
  require(detail::svqb(M, X) == m, "solve_lowest: starting block degenerate");

  const int cap = static_cast<int>(
      50.0 * count * std::sqrt(static_cast<double>(n))) + 100;
  Eigen::MatrixXd P(n, 0);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
  int it = 0;
  bool done = false;

  for (it = 0; it < cap && !done; ++it) {
    // Rayleigh-Ritz on the current block (refresh orthonormality, then
    // rotate so the columns are Ritz vectors with ascending values)
    require(detail::svqb(M, X) == m, "solve_lowest: iterate block collapsed");
    Eigen::MatrixXd A = X.transpose() * (K * X);
    A = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rr(A);
    X = X * rr.eigenvectors();
    if (P.cols() > 0) P = P * rr.eigenvectors();  // keep pairing consistent
    theta = rr.eigenvalues();

    Eigen::MatrixXd MX = M * X;
    Eigen::MatrixXd R = (K * X) - MX * theta.asDiagonal();

    done = true;
    for (int k = 0; k < count; ++k)
      if (R.col(k).norm() > tol * (1.0 + std::abs(theta[k])) * X.col(k).norm())
        done = false;
    if (done) break;

    // Preconditioned residuals, M-orthogonal to X; then the previous search
    // directions, M-orthogonal to both.  After this the stacked Gram matrix
    // is the identity, so a plain symmetric solve is the Rayleigh-Ritz step
    // and the block rows of its eigenvectors stay aligned with [X | W | P].
    Eigen::MatrixXd W = pre.cwiseInverse().asDiagonal() * R;
    W -= X * (MX.transpose() * W);
    if (detail::svqb(M, W) == 0) break;  // stagnated at roundoff level
    if (P.cols() > 0) {
      P -= X * (MX.transpose() * P);
      P -= W * (W.transpose() * (M * P));
      detail::svqb(M, P);
    }
    Eigen::MatrixXd S(n, X.cols() + W.cols() + P.cols());
    S << X, W, P;

    Eigen::MatrixXd As = S.transpose() * (K * S);
    As = 0.5 * (As + As.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(As);
    Eigen::MatrixXd Y = es.eigenvectors().leftCols(m);
    Eigen::MatrixXd Yp = Y;
    Yp.topRows(m).setZero();  // drop the X-block: what remains seeds P
    P = S * Yp;
    X = S * Y;
    theta = es.eigenvalues().head(m);
  }

  EigenResult res;
  res.seed = seed;
  res.iterations = it;
  res.converged = done;
  for (int k = 0; k < count; ++k) {
    res.values.push_back(theta[k]);
    res.vectors.push_back(X.col(k));
  }
  detail::finalize_result(ops, res);
  return res;
}

/// Check that the first l+1 eigenvalues are numerically simple: relative
/// gaps (l_{k+1}-l_k)/l_{k+1} at least min_gap for every k < l.  A failure
/// signals the scenario runner to adjust eps or the cross-section scale.
inline bool simplicity_guard(const EigenResult& result, int l,
                             double min_gap) {
  require(static_cast<int>(result.values.size()) >= l + 1,
          "simplicity_guard: not enough eigenpairs");
  for (int k = 0; k < l; ++k) {
    double hi = result.values[static_cast<std::size_t>(k + 1)];
    double gap =
        (hi > 0.0) ? (hi - result.values[static_cast<std::size_t>(k)]) / hi
                   : 0.0;
    if (gap < min_gap) return false;
  }
  return true;
}

}  // namespace nodalforge
