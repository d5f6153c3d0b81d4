#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "airfed/channel.hpp"
#include "airfed/sdp_kernel.hpp"
#include "airfed/selection.hpp"

namespace airfed {

enum class BaselineMethod { kSdr, kL1Sdr, kReweightedL2Sdr };

struct BaselineOptions {
  BaselineMethod method = BaselineMethod::kL1Sdr;
  int randomization_count = 100;
  double lp_p = 0.5;
  std::vector<double> smoothing_schedule = {1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  int reweight_iters = 20;
  std::uint64_t seed = 0;
  KernelOptions kernel;
  // Vanishing proximal term used for the step-1 convex programs, so solver
  // quality does not contaminate the method comparison.
  double step1_alpha = 1e-8;

  void validate() const;
};

struct SdrOutcome {
  bool feasible = false;
  bool relaxation_feasible = false;
  Eigen::VectorXcd m;       // set when feasible
  bool solver_clean = true;
};

// Feasibility detection by semidefinite relaxation: solve the rank-free
// convex set; if the minimizer is spectrally rank one take its leading
// eigenvector, otherwise try `randomization_count` Gaussian samples
// m ~ CN(0, M_sol) rescaled to the unit sphere.
SdrOutcome sdr_feasibility(const ChannelSet& channels, const std::vector<int>& subset,
                           const Eigen::VectorXd& gamma_vec, const BaselineOptions& opts,
                           std::uint64_t seed);

// Step-1 surrogate: minimize ||x||_1 over the SDR-relaxed constraint set.
Eigen::VectorXd l1_sparsity_step(const ChannelSet& channels,
                                 const Eigen::VectorXd& gamma_vec,
                                 const BaselineOptions& opts = {});

// Smoothed-lp weights w_i = p/2 (x_i^2 + eps)^{p/2 - 1}.
Eigen::VectorXd reweighted_l2_weights(const Eigen::VectorXd& x, double eps, double p);

// Step-1 surrogate: iteratively reweighted l2 minimization with a decreasing
// smoothing schedule.
Eigen::VectorXd reweighted_l2_step(const ChannelSet& channels,
                                   const Eigen::VectorXd& gamma_vec,
                                   const BaselineOptions& opts = {});

// Two-step selection with the baseline step-1 surrogate and SDR feasibility
// detection in step 2; same ordering rule and result shape as the DC path.
SelectionResult select_devices_baseline(const ChannelSet& channels,
                                        const AggregationSpec& spec,
                                        const SystemConfig& cfg,
                                        const BaselineOptions& opts);

}  // namespace airfed
