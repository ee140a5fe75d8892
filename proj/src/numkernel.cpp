#include "lgds/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lgds {

namespace {

void require_square(const Eigen::Ref<const Matrix>& m, const char* who) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch(std::string(who) + ": matrix is " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + ", expected square");
  }
}

void require_symmetric(const Eigen::Ref<const Matrix>& m, const char* who) {
  require_square(m, who);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw NotSymmetric(std::string(who) + ": matrix is not symmetric within 1e-10");
  }
}

Matrix symmetrized(Matrix m) { return 0.5 * (m + m.transpose()); }

}  // namespace

Matrix cholesky(const Eigen::Ref<const Matrix>& m) {
  require_symmetric(m, "cholesky");
  const Eigen::Index n = m.rows();
  // Pivot floor relative to the matrix scale; trace(m) <= 0 forces a throw on
  // the first column, which is the right answer for non-PD input.
  const double floor = 1e-12 * m.trace() / static_cast<double>(n);
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = m(j, j) - l.row(j).head(j).squaredNorm();
    if (pivot <= floor) {
      throw NotPositiveDefinite("cholesky: pivot " + std::to_string(pivot) + " at column " +
                                std::to_string(j) + " is not positive");
    }
    l(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return l;
}

Vector spd_solve(const Eigen::Ref<const Matrix>& m, const Eigen::Ref<const Vector>& b) {
  if (m.rows() != b.size()) {
    throw DimensionMismatch("spd_solve: matrix rows " + std::to_string(m.rows()) +
                            " vs rhs size " + std::to_string(b.size()));
  }
  const Matrix l = cholesky(m);
  Vector y = l.triangularView<Eigen::Lower>().solve(b);
  return l.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix riccati_step(const Eigen::Ref<const Matrix>& p, const Eigen::Ref<const Vector>& c,
                    const Eigen::Ref<const Matrix>& gamma, const Eigen::Ref<const Matrix>& q,
                    double noise_var) {
  require_square(gamma, "riccati_step");
  const Eigen::Index d = gamma.rows();
  if (p.rows() != d || p.cols() != d || q.rows() != d || q.cols() != d || c.size() != d) {
    throw DimensionMismatch("riccati_step: inconsistent dimensions");
  }
  const Vector pc = p * c;
  const double denom = c.dot(pc) + noise_var;
  const Vector gpc = gamma * pc;
  Matrix out = gamma * p * gamma.transpose() + q - gpc * gpc.transpose() / denom;
  return symmetrized(std::move(out));
}

Matrix steady_state_riccati(const Eigen::Ref<const Matrix>& gamma,
                            const Eigen::Ref<const Matrix>& q,
                            const Eigen::Ref<const Vector>& c, double noise_var, double tol,
                            std::int64_t max_iter) {
  Matrix p = q;
  for (std::int64_t i = 0; i < max_iter; ++i) {
    Matrix next = riccati_step(p, c, gamma, q, noise_var);
    if (!next.allFinite()) {
      throw NoConvergence("steady_state_riccati: iteration diverged");
    }
    if ((next - p).cwiseAbs().maxCoeff() <= tol) {
      return next;
    }
    p = std::move(next);
  }
  throw NoConvergence("steady_state_riccati: no fixed point within " + std::to_string(max_iter) +
                      " iterations");
}

Matrix solve_discrete_lyapunov(const Eigen::Ref<const Matrix>& gamma,
                               const Eigen::Ref<const Matrix>& w, double tol, int max_iter) {
  require_square(gamma, "solve_discrete_lyapunov");
  if (w.rows() != gamma.rows() || w.cols() != gamma.cols()) {
    throw DimensionMismatch("solve_discrete_lyapunov: gamma and w dimensions differ");
  }
  Matrix x = w;
  Matrix a = gamma;
  for (int i = 0; i < max_iter; ++i) {
    x += a.transpose() * x * a;
    a = (a * a).eval();
    if (!x.allFinite() || !a.allFinite()) {
      throw NoConvergence("solve_discrete_lyapunov: series diverged (spectral radius >= 1?)");
    }
    const double residual = (x - gamma.transpose() * x * gamma - w).cwiseAbs().maxCoeff();
    if (residual <= tol) {
      return symmetrized(std::move(x));
    }
  }
  throw NoConvergence("solve_discrete_lyapunov: residual above tol after " +
                      std::to_string(max_iter) + " doublings");
}

bool is_schur_stable(const Eigen::Ref<const Matrix>& m, double tol, int max_iter) {
  try {
    solve_discrete_lyapunov(m, Matrix::Identity(m.rows(), m.cols()), tol, max_iter);
    return true;
  } catch (const NoConvergence&) {
    return false;
  }
}

double min_eig_sym(const Eigen::Ref<const Matrix>& m) {
  require_symmetric(m, "min_eig_sym");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NoConvergence("min_eig_sym: eigensolver failed");
  }
  return solver.eigenvalues().minCoeff();
}

bool psd_geq(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("psd_geq: shapes differ");
  }
  return min_eig_sym(a - b) >= -tol;
}

std::pair<Matrix, double> sherman_morrison_update(const Eigen::Ref<const Matrix>& v_inv,
                                                  const Eigen::Ref<const Vector>& x) {
  require_square(v_inv, "sherman_morrison_update");
  if (x.size() != v_inv.rows()) {
    throw DimensionMismatch("sherman_morrison_update: vector size " + std::to_string(x.size()) +
                            " vs matrix " + std::to_string(v_inv.rows()));
  }
  const Vector vx = v_inv * x;
  const double s = x.dot(vx);
  Matrix out = v_inv - vx * vx.transpose() / (1.0 + s);
  return {symmetrized(std::move(out)), std::log1p(s)};
}

Matrix psd_factor(const Eigen::Ref<const Matrix>& cov) {
  require_symmetric(cov, "psd_factor");
  const Eigen::Index n = cov.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = cov(j, j) - l.row(j).head(j).squaredNorm();
    if (pivot <= 0.0) {
      continue;  // semidefinite direction: leave the column zero
    }
    l(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (cov(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return l;
}

Vector sample_gaussian(const Eigen::Ref<const Vector>& mean, const Eigen::Ref<const Matrix>& cov,
                       GaussianRng& rng) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw DimensionMismatch("sample_gaussian: mean size " + std::to_string(mean.size()) +
                            " vs cov " + std::to_string(cov.rows()) + "x" +
                            std::to_string(cov.cols()));
  }
  if (cov.size() == 0 || cov.cwiseAbs().maxCoeff() == 0.0) {
    return mean;
  }
  const Matrix l =
      psd_factor(cov + 1e-12 * Matrix::Identity(cov.rows(), cov.cols()));
  Vector u(mean.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    u(i) = rng.normal();
  }
  return mean + l * u;
}

}  // namespace lgds
