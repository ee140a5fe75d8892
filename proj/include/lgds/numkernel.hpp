#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

#include "lgds/errors.hpp"
#include "lgds/rng.hpp"

namespace lgds {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Lower-triangular Cholesky factor L with L*L^T = m. Input must be symmetric
// (within 1e-10 relative); throws NotPositiveDefinite when a pivot falls at or
// below 1e-12 * trace(m) / rows.
Matrix cholesky(const Eigen::Ref<const Matrix>& m);

// Solves m * x = b for symmetric positive definite m via cholesky().
Vector spd_solve(const Eigen::Ref<const Matrix>& m, const Eigen::Ref<const Vector>& b);

// One step of the covariance (filter Riccati) map
//   g(P, c) = G P G^T + Q - G P c (c^T P c + v)^{-1} c^T P G^T,
// re-symmetrized on return.
Matrix riccati_step(const Eigen::Ref<const Matrix>& p, const Eigen::Ref<const Vector>& c,
                    const Eigen::Ref<const Matrix>& gamma, const Eigen::Ref<const Matrix>& q,
                    double noise_var);

// Fixed point of riccati_step, iterated from P0 = Q until successive iterates
// agree within tol (max-abs). Throws NoConvergence when the budget runs out.
Matrix steady_state_riccati(const Eigen::Ref<const Matrix>& gamma,
                            const Eigen::Ref<const Matrix>& q,
                            const Eigen::Ref<const Vector>& c, double noise_var,
                            double tol = 1e-10, std::int64_t max_iter = 1000000);

// Solves X = gamma^T X gamma + w by the doubling iteration
//   X <- X + A^T X A,  A <- A^2   (X0 = w, A0 = gamma),
// which sums the series sum_j (gamma^j)^T w gamma^j in log steps. Convergence
// is declared when the fixed-point residual max-abs drops to tol; max_iter
// counts doublings. Divergence (spectral radius >= 1) surfaces as
// NoConvergence.
Matrix solve_discrete_lyapunov(const Eigen::Ref<const Matrix>& gamma,
                               const Eigen::Ref<const Matrix>& w, double tol = 1e-10,
                               int max_iter = 100);

// True iff the Lyapunov series for (m, I) converges, i.e. spectral radius < 1.
// Deliberately reuses solve_discrete_lyapunov instead of an eigensolver so the
// stability test and the Gramian computations cannot disagree.
bool is_schur_stable(const Eigen::Ref<const Matrix>& m, double tol = 1e-10, int max_iter = 100);

// Smallest eigenvalue of a symmetric matrix (symmetry checked, 1e-10 relative).
double min_eig_sym(const Eigen::Ref<const Matrix>& m);

// a >= b in the positive semidefinite order, up to -tol on the smallest
// eigenvalue of a - b.
bool psd_geq(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b, double tol);

// Rank-one update of an inverse: given v_inv = V^{-1}, returns
//   ( (V + x x^T)^{-1}, ln det(V + x x^T) - ln det(V) ).
// The log-det increment is ln(1 + x^T V^{-1} x), accumulated by callers that
// track determinants without ever forming V.
std::pair<Matrix, double> sherman_morrison_update(const Eigen::Ref<const Matrix>& v_inv,
                                                  const Eigen::Ref<const Vector>& x);

// Lower-triangular factor L with L L^T ~= cov for positive SEMIdefinite cov:
// non-positive pivots are clamped to zero instead of throwing, so rank
// deficient covariances (after the sampling ridge) are handled exactly.
Matrix psd_factor(const Eigen::Ref<const Matrix>& cov);

// Draw from N(mean, cov). A ridge of 1e-12 * I is added before factorization;
// an exactly zero cov returns mean without consuming draws.
Vector sample_gaussian(const Eigen::Ref<const Vector>& mean, const Eigen::Ref<const Matrix>& cov,
                       GaussianRng& rng);

}  // namespace lgds
