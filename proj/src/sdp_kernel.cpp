#include "airfed/sdp_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <utility>

namespace airfed {

namespace {

double real_inner(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return a.cwiseProduct(b.conjugate()).sum().real();
}

Eigen::MatrixXcd hermitize(const Eigen::MatrixXcd& h) {
  return 0.5 * (h + h.adjoint());
}

// Reusable eigen-projection onto the PSD cone.
class PsdProjector {
 public:
  explicit PsdProjector(int n) : es_(n) {}

  void project(const Eigen::MatrixXcd& in, Eigen::MatrixXcd& out) {
    es_.compute(hermitize(in));
    if (es_.info() != Eigen::Success) {
      throw std::invalid_argument("psd projection: eigendecomposition failed");
    }
    Eigen::VectorXd ev = es_.eigenvalues().cwiseMax(0.0);
    out = es_.eigenvectors() * ev.asDiagonal() * es_.eigenvectors().adjoint();
    out = hermitize(out);
  }

 private:
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es_;
};

// Shared ADMM core for both subproblem shapes. The splitting alternates an
// exact projection onto the affine inequality rows (small dual QP solved by
// projected coordinate descent) with the PSD/orthant projection; rho is
// rebalanced from the primal/dual residual ratio.
struct SplittingSolver {
  // Problem data.
  int n = 0;
  int n_dev = 0;
  bool has_x = false;
  bool detect_infeasible = false;
  double alpha = 0.0;
  double trace_floor = 1.0;
  Eigen::VectorXd c;        // size n_dev (zero for S2)
  Eigen::MatrixXcd C;
  Eigen::VectorXd dweights; // extra diagonal x curvature, size n_dev
  std::vector<DeviceConstraint> rows;

  // Derived constants.
  std::vector<Eigen::MatrixXcd> P;   // I - gamma_j h_j h_j^H (unnormalized)
  Eigen::VectorXd row_scale;         // 1 / ||row||
  Eigen::MatrixXd gram_m;            // <P_i_scaled, P_j_scaled> for M parts (+ trace row)
  int m_rows = 0;                    // n_dev + 1 (trace row last)

  // Iterates.
  Eigen::VectorXd z_x, w_x, u_x;
  Eigen::MatrixXcd z_M, w_M, u_M;
  Eigen::VectorXd mu;
  double rho = 1.0;

  // Workspaces.
  Eigen::MatrixXcd zhat_M, tmp_M, grad_M, proj_M;
  Eigen::VectorXd zhat_x, r, q;
  Eigen::MatrixXd Q;
  PsdProjector projector;

  static constexpr int kCheckEvery = 25;
  static constexpr int kRhoEvery = 100;
  static constexpr int kInfeasWindow = 5000;

  SplittingSolver(int n_, int n_dev_, bool has_x_)
      : n(n_), n_dev(n_dev_), has_x(has_x_), projector(n_) {
    m_rows = n_dev + 1;
  }

  void build_rows() {
    P.resize(static_cast<std::size_t>(n_dev));
    row_scale.resize(m_rows);
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    for (int j = 0; j < n_dev; ++j) {
      const auto& row = rows[static_cast<std::size_t>(j)];
      if (!(row.gamma > 0.0)) throw std::invalid_argument("sdp kernel: gamma_i must be > 0");
      if (row.h.size() != n) throw std::invalid_argument("sdp kernel: channel length mismatch");
      P[static_cast<std::size_t>(j)] = id - row.gamma * (row.h * row.h.adjoint());
      double norm2 = P[static_cast<std::size_t>(j)].squaredNorm();
      if (has_x) norm2 += 1.0;  // the -e_j slack column
      row_scale[j] = 1.0 / std::sqrt(std::max(norm2, 1e-30));
    }
    row_scale[n_dev] = 1.0 / std::sqrt(static_cast<double>(n));  // trace row, g_M = -I

    gram_m.resize(m_rows, m_rows);
    for (int i = 0; i < m_rows; ++i) {
      for (int j = i; j < m_rows; ++j) {
        double v;
        if (i < n_dev && j < n_dev) {
          v = real_inner(P[static_cast<std::size_t>(i)], P[static_cast<std::size_t>(j)]);
        } else if (i < n_dev) {
          v = -P[static_cast<std::size_t>(i)].trace().real();  // <P_i, -I>
        } else {
          v = static_cast<double>(n);  // <-I, -I>
        }
        v *= row_scale[i] * row_scale[j];
        gram_m(i, j) = v;
        gram_m(j, i) = v;
      }
    }
  }

  void rebuild_dual_gram() {
    const double dm = alpha + rho;
    Q = gram_m / dm;
    if (has_x) {
      for (int j = 0; j < n_dev; ++j) {
        const double dx = alpha + dweights[j] + rho;
        Q(j, j) += row_scale[j] * row_scale[j] / dx;
      }
    }
  }

  void cold_start() {
    w_M = (trace_floor / n) * Eigen::MatrixXcd::Identity(n, n);
    z_M = w_M;
    u_M = Eigen::MatrixXcd::Zero(n, n);
    mu = Eigen::VectorXd::Zero(m_rows);
    if (has_x) {
      w_x = Eigen::VectorXd::Zero(n_dev);
      z_x = w_x;
      u_x = w_x;
    }
    rho = 1.0;
  }

  bool adopt(const KernelState& s) {
    if (!s.valid || s.n != n || s.n_dev != n_dev || s.has_x != has_x) return false;
    z_x = s.z_x; w_x = s.w_x; u_x = s.u_x;
    z_M = s.z_M; w_M = s.w_M; u_M = s.u_M;
    mu = s.mu;
    rho = s.rho;
    return true;
  }

  void save(KernelState& s) const {
    s.valid = true;
    s.n = n; s.n_dev = n_dev; s.has_x = has_x;
    s.z_x = z_x; s.w_x = w_x; s.u_x = u_x;
    s.z_M = z_M; s.w_M = w_M; s.u_M = u_M;
    s.mu = mu;
    s.rho = rho;
  }

  double row_value_m(int j, const Eigen::MatrixXcd& M) const {
    if (j < n_dev) {
      const auto& row = rows[static_cast<std::size_t>(j)];
      const double quad = std::real(row.h.dot(M * row.h)) * row.gamma;
      return M.trace().real() - quad;
    }
    return trace_floor - M.trace().real();
  }

  // Original-scale constraint value a_j(x, M); feasible means <= 0.
  double row_value(int j, const Eigen::VectorXd& x, const Eigen::MatrixXcd& M) const {
    double v = row_value_m(j, M);
    if (has_x && j < n_dev) v -= x[j];
    return v;
  }

  // Exact minimization of the rho-augmented objective over the affine rows,
  // via projected coordinate descent on the dual QP (warm-started in mu).
  void z_update() {
    const double dm = alpha + rho;
    zhat_M = (rho * (w_M - u_M) - C) / dm;
    if (has_x) {
      for (int j = 0; j < n_dev; ++j) {
        zhat_x[j] = (rho * (w_x[j] - u_x[j]) - c[j]) / (alpha + dweights[j] + rho);
      }
    }
    for (int j = 0; j < m_rows; ++j) {
      double v = row_value_m(j, zhat_M);
      if (has_x && j < n_dev) v -= zhat_x[j];
      r[j] = row_scale[j] * v;
    }
    q = Q * mu;
    const double cd_tol = 1e-13 * std::max(1.0, r.cwiseAbs().maxCoeff());
    for (int sweep = 0; sweep < 500; ++sweep) {
      double max_delta = 0.0;
      for (int j = 0; j < m_rows; ++j) {
        const double qjj = Q(j, j);
        if (qjj < 1e-300) continue;
        const double mu_new = std::max(0.0, mu[j] + (r[j] - q[j]) / qjj);
        const double delta = mu_new - mu[j];
        if (delta != 0.0) {
          q += delta * Q.col(j);
          mu[j] = mu_new;
          max_delta = std::max(max_delta, std::abs(delta));
        }
      }
      if (max_delta <= cd_tol) break;
    }
    // z = zhat - D^{-1} G^T mu.
    z_M = zhat_M;
    for (int j = 0; j < n_dev; ++j) {
      if (mu[j] != 0.0) z_M -= (mu[j] * row_scale[j] / dm) * P[static_cast<std::size_t>(j)];
    }
    if (mu[n_dev] != 0.0) {
      z_M += (mu[n_dev] * row_scale[n_dev] / dm) * Eigen::MatrixXcd::Identity(n, n);
    }
    if (has_x) {
      for (int j = 0; j < n_dev; ++j) {
        z_x[j] = zhat_x[j] + mu[j] * row_scale[j] / (alpha + dweights[j] + rho);
      }
    }
  }

  double kkt_residual() {
    // Multipliers in original row scaling.
    Eigen::VectorXd mu_o = mu.cwiseProduct(row_scale);
    double p_res = 0.0, comp = 0.0;
    for (int j = 0; j < m_rows; ++j) {
      const double a = row_value(j, w_x, w_M);
      p_res = std::max(p_res, a);
      comp = std::max(comp, std::abs(mu_o[j] * a));
    }
    grad_M = C + alpha * w_M;
    for (int j = 0; j < n_dev; ++j) grad_M += mu_o[j] * P[static_cast<std::size_t>(j)];
    grad_M -= mu_o[n_dev] * Eigen::MatrixXcd::Identity(n, n);
    projector.project(w_M - grad_M, proj_M);
    double nat2 = (w_M - proj_M).squaredNorm();
    if (has_x) {
      for (int j = 0; j < n_dev; ++j) {
        const double g = c[j] + (alpha + dweights[j]) * w_x[j] - mu_o[j];
        const double step = std::max(0.0, w_x[j] - g);
        nat2 += (w_x[j] - step) * (w_x[j] - step);
      }
    }
    return std::max({p_res, comp, std::sqrt(nat2)});
  }

  KernelSolution run(const KernelOptions& opts, KernelState* state) {
    if (!(alpha > 0.0)) throw std::invalid_argument("sdp kernel: alpha must be > 0");
    if (!(trace_floor > 0.0)) throw std::invalid_argument("sdp kernel: trace_floor must be > 0");
    build_rows();

    if (detect_infeasible) {
      // Rayleigh bound: h^H M h <= ||h||^2 Tr(M) on the PSD cone, so any row
      // with gamma ||h||^2 < 1 is unsatisfiable once Tr(M) >= trace_floor > 0.
      for (int j = 0; j < n_dev; ++j) {
        const auto& row = rows[static_cast<std::size_t>(j)];
        if (row.gamma * row.h.squaredNorm() < 1.0) {
          KernelSolution sol;
          sol.status = KernelStatus::kInfeasible;
          sol.M_opt = Eigen::MatrixXcd::Zero(n, n);
          sol.kkt_residual = std::numeric_limits<double>::infinity();
          return sol;
        }
      }
    }

    zhat_x.resize(has_x ? n_dev : 0);
    r.resize(m_rows);
    q.resize(m_rows);
    if (state == nullptr || !adopt(*state)) cold_start();
    rebuild_dual_gram();

    Eigen::MatrixXcd w_M_prev = w_M;
    Eigen::VectorXd w_x_prev = w_x;

    double best_viol = std::numeric_limits<double>::infinity();
    std::deque<std::pair<int, double>> viol_history;

    KernelSolution sol;
    sol.status = KernelStatus::kMaxIterations;
    int iter = 0;
    for (iter = 1; iter <= opts.max_iter; ++iter) {
      z_update();
      w_M_prev.swap(w_M);
      if (has_x) w_x_prev.swap(w_x);
      projector.project(z_M + u_M, w_M);
      if (has_x) w_x = (z_x + u_x).cwiseMax(0.0);
      u_M += z_M - w_M;
      if (has_x) u_x += z_x - w_x;

      if (iter % kCheckEvery != 0) continue;

      double prim2 = (z_M - w_M).squaredNorm();
      double dual2 = (w_M - w_M_prev).squaredNorm();
      if (has_x) {
        prim2 += (z_x - w_x).squaredNorm();
        dual2 += (w_x - w_x_prev).squaredNorm();
      }
      const double r_prim = std::sqrt(prim2);
      const double r_dual = rho * std::sqrt(dual2);

      if (detect_infeasible && n_dev > 0) {
        const double tau = w_M.trace().real();
        double viol = 1.0;
        if (tau > 1e-12) {
          viol = -std::numeric_limits<double>::infinity();
          for (int j = 0; j < n_dev; ++j) {
            const auto& row = rows[static_cast<std::size_t>(j)];
            const double quad = std::real(row.h.dot(w_M * row.h));
            viol = std::max(viol, 1.0 - row.gamma * quad / tau);
          }
        }
        best_viol = std::min(best_viol, viol);
        viol_history.emplace_back(iter, best_viol);
        while (viol_history.size() > 1 &&
               viol_history.front().first <= iter - kInfeasWindow - kCheckEvery) {
          viol_history.pop_front();
        }
        if (iter >= kInfeasWindow && best_viol > 1e-3 &&
            viol_history.front().first <= iter - kInfeasWindow &&
            viol_history.front().second - best_viol < 1e-9) {
          sol.status = KernelStatus::kInfeasible;
          sol.M_opt = w_M;
          sol.kkt_residual = std::numeric_limits<double>::infinity();
          sol.iterations = iter;
          if (state != nullptr) state->valid = false;
          return sol;
        }
      }

      if (r_prim <= 10.0 * opts.tol && r_dual <= 10.0 * opts.tol) {
        const double kkt = kkt_residual();
        if (kkt <= opts.tol && r_prim <= opts.tol) {
          sol.status = KernelStatus::kConverged;
          sol.kkt_residual = kkt;
          break;
        }
      }

      if (iter % kRhoEvery == 0) {
        if (r_prim > 10.0 * r_dual && rho < 1e8) {
          rho *= 2.0;
          u_M *= 0.5;
          if (has_x) u_x *= 0.5;
          rebuild_dual_gram();
        } else if (r_dual > 10.0 * r_prim && rho > 1e-6) {
          rho *= 0.5;
          u_M *= 2.0;
          if (has_x) u_x *= 2.0;
          rebuild_dual_gram();
        }
      }
    }

    if (sol.status == KernelStatus::kMaxIterations) {
      sol.kkt_residual = kkt_residual();
      iter = opts.max_iter;
    }
    sol.M_opt = hermitize(w_M);
    if (has_x) sol.x_opt = w_x;
    sol.iterations = iter;
    if (state != nullptr) save(*state);
    return sol;
  }
};

}  // namespace

KernelSolution solve_s1(const SubproblemS1& p, const KernelOptions& opts, KernelState* state) {
  const int n_dev = static_cast<int>(p.constraints.size());
  if (p.linear_vector_term.size() != n_dev) {
    throw std::invalid_argument("solve_s1: linear_vector_term size must match constraint count");
  }
  const int n = static_cast<int>(p.linear_matrix_term.rows());
  if (p.linear_matrix_term.cols() != n || n < 1) {
    throw std::invalid_argument("solve_s1: linear_matrix_term must be square");
  }
  SplittingSolver s(n, n_dev, /*has_x=*/true);
  s.alpha = p.alpha;
  s.trace_floor = p.trace_floor;
  s.C = hermitize(p.linear_matrix_term);
  s.c = p.linear_vector_term;
  s.rows = p.constraints;
  if (p.x_quadratic_weights.size() == 0) {
    s.dweights = Eigen::VectorXd::Zero(n_dev);
  } else if (p.x_quadratic_weights.size() == n_dev) {
    if ((p.x_quadratic_weights.array() < 0.0).any()) {
      throw std::invalid_argument("solve_s1: x_quadratic_weights must be >= 0");
    }
    s.dweights = p.x_quadratic_weights;
  } else {
    throw std::invalid_argument("solve_s1: x_quadratic_weights size mismatch");
  }
  return s.run(opts, state);
}

KernelSolution solve_s2(const SubproblemS2& p, const KernelOptions& opts, KernelState* state) {
  const int n = static_cast<int>(p.linear_matrix_term.rows());
  if (p.linear_matrix_term.cols() != n || n < 1) {
    throw std::invalid_argument("solve_s2: linear_matrix_term must be square");
  }
  SplittingSolver s(n, static_cast<int>(p.constraints.size()), /*has_x=*/false);
  s.detect_infeasible = true;
  s.alpha = p.alpha;
  s.trace_floor = p.trace_floor;
  s.C = hermitize(p.linear_matrix_term);
  s.c = Eigen::VectorXd();
  s.dweights = Eigen::VectorXd::Zero(static_cast<int>(p.constraints.size()));
  s.rows = p.constraints;
  return s.run(opts, state);
}

Eigen::MatrixXcd psd_project(const Eigen::MatrixXcd& H) {
  if (H.rows() != H.cols() || H.rows() < 1) {
    throw std::invalid_argument("psd_project: matrix must be square");
  }
  if (!H.allFinite()) throw std::invalid_argument("psd_project: non-finite input");
  PsdProjector proj(static_cast<int>(H.rows()));
  Eigen::MatrixXcd out;
  proj.project(H, out);
  return out;
}

double kernel_objective(const SubproblemS1& p, const Eigen::VectorXd& x,
                        const Eigen::MatrixXcd& M) {
  double v = p.linear_vector_term.dot(x);
  v += real_inner(p.linear_matrix_term, M);
  for (int j = 0; j < x.size(); ++j) {
    const double d = p.x_quadratic_weights.size() > 0 ? p.x_quadratic_weights[j] : 0.0;
    v += 0.5 * (p.alpha + d) * x[j] * x[j];
  }
  v += 0.5 * p.alpha * M.squaredNorm();
  return v;
}

double kernel_objective(const SubproblemS2& p, const Eigen::MatrixXcd& M) {
  return real_inner(p.linear_matrix_term, M) + 0.5 * p.alpha * M.squaredNorm();
}

}  // namespace airfed
