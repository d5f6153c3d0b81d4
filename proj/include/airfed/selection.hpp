#pragma once

#include <vector>

#include <Eigen/Dense>

#include "airfed/channel.hpp"
#include "airfed/dc_engine.hpp"

namespace airfed {

struct SelectionOptions {
  DCAOptions dca;
  double eps_zero = 1e-5;        // "objective value is not zero" threshold
  double rank_ratio_tol = 1e-3;  // sigma2/sigma1 certificate for rank one
};

// Output of the two-step device-selection pipeline. `priority` lists device
// indices by descending slack x (ties by ascending index); the selected set
// is the priority suffix starting at position step2_k - 1 (1-based k as in
// the ordering rule), empty when no suffix is feasible.
struct SelectionResult {
  std::vector<int> priority;
  std::vector<int> selected;
  Eigen::VectorXcd beamformer;   // empty when selected is empty
  double achieved_mse = 0.0;     // defined only when selected is nonempty
  int step1_k = 0;
  int step2_k = 0;               // M + 1 when selected is empty
  bool step1_certified = false;  // step-1 objective reached eps_zero
  DCATrace step1_trace;          // trace of the terminating step-1 run
  DCATrace step2_trace;          // trace of the certifying step-2 run
};

// gamma_i = gamma / phi_i^2.
Eigen::VectorXd gamma_per_device(double gamma, const AggregationSpec& spec);

struct SparsityStepResult {
  Eigen::VectorXd x;
  int k_used = 0;
  bool certified = false;
  DCATrace trace;
};

// Step 1: run the sparsity-inducing DC program for k = 0, 1, ... until the
// terminal objective reaches eps_zero (or k = M, returned uncertified).
SparsityStepResult sparsity_inducing_step(const ChannelSet& channels,
                                          const Eigen::VectorXd& gamma_vec,
                                          const SelectionOptions& opts = {});

// Descending stable sort of x; ties broken by ascending device index.
std::vector<int> order_devices(const Eigen::VectorXd& x);

struct FeasibilityStepResult {
  std::vector<int> selected;
  Eigen::MatrixXcd M_final;
  int k_used = 0;  // M + 1 when nothing is feasible
  DCATrace trace;
};

// Step 2: for k = 1..M test the priority suffix {pi(k), ..., pi(M)} with the
// feasibility DC program; accept the first k whose terminal objective is at
// most eps_zero and whose solution passes the spectral rank-one certificate.
FeasibilityStepResult feasibility_detection_step(const ChannelSet& channels,
                                                 const std::vector<int>& priority,
                                                 const Eigen::VectorXd& gamma_vec,
                                                 const SelectionOptions& opts = {});

// m = sqrt(sigma1) v1 from a certified near-rank-one PSD matrix. Throws when
// sigma2/sigma1 exceeds rank_ratio_tol.
Eigen::VectorXcd extract_beamformer(const Eigen::MatrixXcd& M, double rank_ratio_tol = 1e-3);

// DC feasibility verdict for one subset: the feasibility DC program reaches a
// (near-)zero objective and its solution passes the rank-one certificate.
bool dc_subset_feasible(const ChannelSet& channels, const std::vector<int>& subset,
                        const Eigen::VectorXd& gamma_vec, const SelectionOptions& opts = {});

// Full Algorithm-2 pipeline with MSE certification.
SelectionResult select_devices(const ChannelSet& channels, const AggregationSpec& spec,
                               const SystemConfig& cfg, const SelectionOptions& opts = {});

// Closed-form singleton feasibility: gamma_i ||h_i||^2 >= 1 (matched filter).
bool single_device_oracle(const Eigen::VectorXcd& h, double gamma_i);

}  // namespace airfed
