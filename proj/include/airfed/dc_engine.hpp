#pragma once

#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "airfed/channel.hpp"
#include "airfed/sdp_kernel.hpp"

namespace airfed {

// Per-iteration record of a DCA run. objective_values[t] is the DC objective
// at the t-th subproblem solution; iterate_gaps[t] is the squared
// Frobenius/Euclidean distance between consecutive solutions (M plus, for
// S1, the slack vector x).
struct DCATrace {
  std::vector<double> objective_values;
  std::vector<double> iterate_gaps;
  double alpha = 0.0;
};

struct DCAResult {
  Eigen::MatrixXcd M_final;
  Eigen::VectorXd x_final;       // S1 only
  double final_objective = 0.0;
  DCATrace trace;
  bool converged = false;        // objective change reached obj_tol
  bool convex_infeasible = false;  // S2 only: constraint set empty
  bool kernel_clean = true;      // no subproblem hit its iteration cap
};

struct DCAOptions {
  double alpha = 1e-3;
  double obj_tol = 1e-6;   // absolute change in the DC objective
  int max_outer = 100;
  KernelOptions kernel;    // tol 1e-7 / 50000 iterations by default
};

// Ky Fan k-norm of a vector: sum of the k largest absolute values.
double ky_fan_norm(const Eigen::VectorXd& x, int k);

// Entry i is sign(x_i) when |x_i| >= |x_(k)| (k-th largest absolute value),
// otherwise 0; sign(0) = 0. k = 0 gives the zero vector.
Eigen::VectorXd ky_fan_subgradient(const Eigen::VectorXd& x, int k);

// v1 v1^H for a unit eigenvector v1 of the largest eigenvalue; the phase is
// fixed so the first significant component of v1 is real positive.
Eigen::MatrixXcd spectral_subgradient(const Eigen::MatrixXcd& M);

// DCA for the sparsity-inducing program: minimize
//   ||x||_1 - kyfan_k(x) + Tr(M) - ||M||_2
// over the lifted constraint set, by successive linearization of the concave
// part and strongly convex subproblem solves.
DCAResult dca_solve_s1(const ChannelSet& channels, const Eigen::VectorXd& gamma_vec,
                       int k, const DCAOptions& opts = {});

// DCA for the feasibility-detection program on a subset: minimize
//   Tr(M) - ||M||_2
// subject to the subset's MSE rows; a zero objective certifies a rank-one
// feasible point.
DCAResult dca_solve_s2(const ChannelSet& channels, const std::vector<int>& subset,
                       const Eigen::VectorXd& gamma_vec, const DCAOptions& opts = {});

// Checks the strongly-convex DCA rate: for every t, the running average of
// squared iterate gaps is at most (f[0] - f_star_lower) / (alpha (t+1)).
// f_star_lower = 0 is always valid here since both DC objectives are
// nonnegative.
bool check_convergence_bound(const DCATrace& trace, double f_star_lower);

// CSV dump: iteration, objective, gap.
void write_trace_csv(const DCATrace& trace, std::ostream& out);

}  // namespace airfed
