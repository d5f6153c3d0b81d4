#pragma once

// Test-only slow-but-sure reference solver for the kernel subproblems:
// projected gradient ascent on the dual of
//   min <l, z> + 1/2 <B z, z>  s.t.  affine rows <= 0,  z in K,
// where K = PSD cone (x orthant) and B is the diagonal strong-convexity
// metric. Every dual evaluation is an exact cone projection, the step size
// is 1/L with L = lambda_max(G B^{-1} G^T), and the iteration count is
// deliberately enormous. Independent of the ADMM implementation path.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "airfed/sdp_kernel.hpp"

namespace airfed_test {

struct OracleResult {
  Eigen::VectorXd x;
  Eigen::MatrixXcd M;
  double objective = 0.0;
  double dual_residual = 0.0;  // projected-gradient residual at exit
  long iterations = 0;
};

namespace detail {

inline Eigen::MatrixXcd psd_clip(const Eigen::MatrixXcd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (h + h.adjoint()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

inline double rinner(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return a.cwiseProduct(b.conjugate()).sum().real();
}

struct GenericProblem {
  int n = 0;
  int n_dev = 0;
  bool has_x = false;
  double trace_floor = 1.0;
  Eigen::VectorXd c;
  Eigen::MatrixXcd C;
  Eigen::VectorXd bx;  // diagonal metric on x (alpha + d_i)
  double bm = 0.0;     // metric on M (alpha)
  std::vector<airfed::DeviceConstraint> rows;
};

inline OracleResult solve(const GenericProblem& p, long max_iter, double tol) {
  const int m_rows = p.n_dev + 1;
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(p.n, p.n);

  std::vector<Eigen::MatrixXcd> gm(static_cast<std::size_t>(m_rows));
  for (int j = 0; j < p.n_dev; ++j) {
    gm[static_cast<std::size_t>(j)] =
        id - p.rows[static_cast<std::size_t>(j)].gamma *
                 (p.rows[static_cast<std::size_t>(j)].h *
                  p.rows[static_cast<std::size_t>(j)].h.adjoint());
  }
  gm[static_cast<std::size_t>(p.n_dev)] = -id;

  // Lipschitz constant of the dual gradient from the B^{-1}-metric Gram.
  Eigen::MatrixXd gram(m_rows, m_rows);
  for (int i = 0; i < m_rows; ++i) {
    for (int j = i; j < m_rows; ++j) {
      double v = rinner(gm[static_cast<std::size_t>(i)], gm[static_cast<std::size_t>(j)]) / p.bm;
      if (p.has_x && i < p.n_dev && i == j) v += 1.0 / p.bx[i];
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ges(gram);
  const double lip = std::max(ges.eigenvalues().maxCoeff(), 1e-12);
  const double step = 1.0 / lip;

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m_rows);
  Eigen::VectorXd grad(m_rows);
  Eigen::VectorXd x;
  Eigen::MatrixXcd M;
  double residual = 0.0;
  long it = 0;
  for (it = 0; it < max_iter; ++it) {
    // Primal minimizer at lambda.
    Eigen::MatrixXcd lin = p.C;
    for (int j = 0; j < p.n_dev; ++j) lin += lambda[j] * gm[static_cast<std::size_t>(j)];
    lin -= lambda[p.n_dev] * id;
    M = psd_clip(-lin / p.bm);
    if (p.has_x) {
      x.resize(p.n_dev);
      for (int j = 0; j < p.n_dev; ++j) {
        x[j] = std::max(0.0, -(p.c[j] - lambda[j]) / p.bx[j]);
      }
    }
    // Dual gradient = constraint values.
    for (int j = 0; j < p.n_dev; ++j) {
      const auto& row = p.rows[static_cast<std::size_t>(j)];
      grad[j] = M.trace().real() - row.gamma * std::real(row.h.dot(M * row.h));
      if (p.has_x) grad[j] -= x[j];
    }
    grad[p.n_dev] = p.trace_floor - M.trace().real();

    Eigen::VectorXd next = (lambda + step * grad).cwiseMax(0.0);
    residual = (next - lambda).norm() / step;
    lambda = next;
    if (residual <= tol) break;
  }

  OracleResult out;
  out.x = x;
  out.M = M;
  out.dual_residual = residual;
  out.iterations = it;
  double obj = rinner(p.C, M) + 0.5 * p.bm * M.squaredNorm();
  if (p.has_x) {
    obj += p.c.dot(x);
    for (int j = 0; j < p.n_dev; ++j) obj += 0.5 * p.bx[j] * x[j] * x[j];
  }
  out.objective = obj;
  return out;
}

}  // namespace detail

inline OracleResult reference_solve(const airfed::SubproblemS1& p, long max_iter = 1000000,
                                    double tol = 1e-10) {
  detail::GenericProblem g;
  g.n = static_cast<int>(p.linear_matrix_term.rows());
  g.n_dev = static_cast<int>(p.constraints.size());
  g.has_x = true;
  g.trace_floor = p.trace_floor;
  g.c = p.linear_vector_term;
  g.C = 0.5 * (p.linear_matrix_term + p.linear_matrix_term.adjoint());
  g.bm = p.alpha;
  g.bx.resize(g.n_dev);
  for (int j = 0; j < g.n_dev; ++j) {
    g.bx[j] = p.alpha + (p.x_quadratic_weights.size() > 0 ? p.x_quadratic_weights[j] : 0.0);
  }
  g.rows = p.constraints;
  return detail::solve(g, max_iter, tol);
}

inline OracleResult reference_solve(const airfed::SubproblemS2& p, long max_iter = 1000000,
                                    double tol = 1e-10) {
  detail::GenericProblem g;
  g.n = static_cast<int>(p.linear_matrix_term.rows());
  g.n_dev = static_cast<int>(p.constraints.size());
  g.has_x = false;
  g.trace_floor = p.trace_floor;
  g.C = 0.5 * (p.linear_matrix_term + p.linear_matrix_term.adjoint());
  g.bm = p.alpha;
  g.bx.resize(0);
  g.rows = p.constraints;
  return detail::solve(g, max_iter, tol);
}

}  // namespace airfed_test
