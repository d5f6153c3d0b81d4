#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace airfed {

// One affine row of the lifted MSE constraint family:
//   Tr(M) - gamma * h^H M h <= rhs   (rhs is x_i for S1 and 0 for S2).
struct DeviceConstraint {
  double gamma = 0.0;
  Eigen::VectorXcd h;
};

// minimize  <c, x> + <C, M> + 1/2 sum_i (alpha + d_i) x_i^2 + alpha/2 ||M||_F^2
// subject to  Tr(M) - gamma_i h_i^H M h_i <= x_i  for every device i,
//             Tr(M) >= trace_floor,  M PSD,  x >= 0.
//
// x_quadratic_weights d (optional, default zero) carries the diagonal
// curvature used by the reweighted-l2 baseline; alpha remains the uniform
// strong-convexity floor.
struct SubproblemS1 {
  Eigen::MatrixXcd linear_matrix_term;  // C, Hermitian
  Eigen::VectorXd linear_vector_term;   // c
  double alpha = 0.0;
  std::vector<DeviceConstraint> constraints;
  double trace_floor = 1.0;
  Eigen::VectorXd x_quadratic_weights;  // empty = all zero
};

// minimize  <C, M> + alpha/2 ||M||_F^2
// subject to  Tr(M) - gamma_i h_i^H M h_i <= 0  for i in the subset,
//             Tr(M) >= trace_floor,  M PSD.
struct SubproblemS2 {
  Eigen::MatrixXcd linear_matrix_term;
  double alpha = 0.0;
  std::vector<DeviceConstraint> constraints;
  double trace_floor = 1.0;
};

enum class KernelStatus {
  kConverged,
  kMaxIterations,   // tol not reached; result still usable, caller decides
  kInfeasible,      // S2 only: convex constraint set certified/deemed empty
};

struct KernelSolution {
  Eigen::MatrixXcd M_opt;
  Eigen::VectorXd x_opt;       // empty for S2
  double kkt_residual = 0.0;   // max of primal, dual (stationarity), complementarity
  int iterations = 0;
  KernelStatus status = KernelStatus::kConverged;
};

struct KernelOptions {
  double tol = 1e-7;
  int max_iter = 50000;
};

// Opaque warm-start state. Reusing it across the successive DCA subproblems
// (which differ only in linear terms) cuts the iteration count sharply.
struct KernelState {
  bool valid = false;
  int n = 0;
  int n_dev = 0;
  bool has_x = false;
  Eigen::VectorXd z_x, w_x, u_x;
  Eigen::MatrixXcd z_M, w_M, u_M;
  Eigen::VectorXd mu;
  double rho = 1.0;
};

KernelSolution solve_s1(const SubproblemS1& p, const KernelOptions& opts = {},
                        KernelState* state = nullptr);

KernelSolution solve_s2(const SubproblemS2& p, const KernelOptions& opts = {},
                        KernelState* state = nullptr);

// Frobenius-nearest PSD matrix: symmetrize, eigendecompose, clip negative
// eigenvalues, reassemble.
Eigen::MatrixXcd psd_project(const Eigen::MatrixXcd& H);

// Objective values of the subproblems at a given point (used by tests and
// reference solvers).
double kernel_objective(const SubproblemS1& p, const Eigen::VectorXd& x,
                        const Eigen::MatrixXcd& M);
double kernel_objective(const SubproblemS2& p, const Eigen::MatrixXcd& M);

}  // namespace airfed
