#include "airfed/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "airfed/transceiver.hpp"

namespace airfed {

Eigen::VectorXd gamma_per_device(double gamma, const AggregationSpec& spec) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma_per_device: gamma must be > 0");
  return gamma * spec.phi.array().square().inverse();
}

SparsityStepResult sparsity_inducing_step(const ChannelSet& channels,
                                          const Eigen::VectorXd& gamma_vec,
                                          const SelectionOptions& opts) {
  const int m = channels.devices();
  SparsityStepResult result;
  for (int k = 0; k <= m; ++k) {
    DCAResult run = dca_solve_s1(channels, gamma_vec, k, opts.dca);
    result.x = run.x_final;
    result.k_used = k;
    result.trace = std::move(run.trace);
    if (run.final_objective <= opts.eps_zero) {
      result.certified = true;
      break;
    }
  }
  return result;
}

std::vector<int> order_devices(const Eigen::VectorXd& x) {
  std::vector<int> order(static_cast<std::size_t>(x.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&x](int a, int b) { return x[a] > x[b]; });
  return order;
}

namespace {

// Accept a step-2 solution only when it is spectrally rank one AND the
// beamformer it induces actually meets every MSE row (small relative slack
// for the sigma2-level perturbation). The second check hardens the
// certificate against borderline extractions; a failure just moves the loop
// to the next k.
bool certify_subset(const Eigen::MatrixXcd& M, const ChannelSet& channels,
                    const std::vector<int>& subset, const Eigen::VectorXd& gamma_vec,
                    double ratio_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M);
  const auto& ev = es.eigenvalues();
  const Eigen::Index n = ev.size();
  const double sigma1 = ev[n - 1];
  const double sigma2 = n > 1 ? std::abs(ev[n - 2]) : 0.0;
  if (!(sigma1 > 0.0) || sigma2 > ratio_tol * sigma1) return false;
  const Eigen::VectorXcd m = es.eigenvectors().col(n - 1);  // unit norm
  for (int i : subset) {
    const double gain = std::norm(m.dot(channels.h.col(i)));
    if (1.0 - gamma_vec[i] * gain > 1e-3) return false;
  }
  return true;
}

}  // namespace

FeasibilityStepResult feasibility_detection_step(const ChannelSet& channels,
                                                 const std::vector<int>& priority,
                                                 const Eigen::VectorXd& gamma_vec,
                                                 const SelectionOptions& opts) {
  const int m = channels.devices();
  if (static_cast<int>(priority.size()) != m) {
    throw std::invalid_argument("feasibility_detection_step: priority must be a permutation");
  }
  FeasibilityStepResult result;
  for (int k = 1; k <= m; ++k) {
    std::vector<int> subset(priority.begin() + (k - 1), priority.end());
    DCAResult run = dca_solve_s2(channels, subset, gamma_vec, opts.dca);
    if (run.convex_infeasible) continue;
    if (run.final_objective <= opts.eps_zero &&
        certify_subset(run.M_final, channels, subset, gamma_vec, opts.rank_ratio_tol)) {
      result.selected = std::move(subset);
      result.M_final = run.M_final;
      result.k_used = k;
      result.trace = std::move(run.trace);
      return result;
    }
  }
  result.k_used = m + 1;
  return result;
}

Eigen::VectorXcd extract_beamformer(const Eigen::MatrixXcd& M, double rank_ratio_tol) {
  if (M.rows() != M.cols() || M.rows() < 1) {
    throw std::invalid_argument("extract_beamformer: matrix must be square");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (M + M.adjoint()));
  if (es.info() != Eigen::Success) {
    throw std::invalid_argument("extract_beamformer: eigendecomposition failed");
  }
  const auto& ev = es.eigenvalues();
  const Eigen::Index n = ev.size();
  const double sigma1 = ev[n - 1];
  const double sigma2 = n > 1 ? std::abs(ev[n - 2]) : 0.0;
  if (!(sigma1 > 0.0) || sigma2 > rank_ratio_tol * sigma1) {
    throw std::runtime_error("extract_beamformer: rank-one certificate violated");
  }
  Eigen::VectorXcd v = es.eigenvectors().col(n - 1);
  const double vmax = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12 * vmax) {
      v *= std::conj(v[i]) / std::abs(v[i]);
      break;
    }
  }
  return std::sqrt(sigma1) * v;
}

SelectionResult select_devices(const ChannelSet& channels, const AggregationSpec& spec,
                               const SystemConfig& cfg, const SelectionOptions& opts) {
  cfg.validate();
  if (channels.devices() != cfg.num_devices || channels.antennas() != cfg.num_antennas) {
    throw std::invalid_argument("select_devices: channel shape does not match config");
  }
  const Eigen::VectorXd gamma_vec = gamma_per_device(cfg.mse_target, spec);

  SelectionResult result;
  SparsityStepResult step1 = sparsity_inducing_step(channels, gamma_vec, opts);
  result.step1_k = step1.k_used;
  result.step1_certified = step1.certified;
  result.step1_trace = std::move(step1.trace);
  result.priority = order_devices(step1.x);

  FeasibilityStepResult step2 =
      feasibility_detection_step(channels, result.priority, gamma_vec, opts);
  result.step2_k = step2.k_used;
  result.step2_trace = std::move(step2.trace);
  if (step2.selected.empty()) return result;

  Eigen::VectorXcd m = extract_beamformer(step2.M_final, opts.rank_ratio_tol);
  // The MSE constraints are homogeneous in m, so rescaling onto the norm
  // floor changes nothing downstream.
  if (m.squaredNorm() < 1.0) m /= m.norm();

  result.achieved_mse = aggregation_mse(m, channels, spec, step2.selected,
                                        cfg.noise_power, cfg.transmit_power);
  result.selected = std::move(step2.selected);
  result.beamformer = std::move(m);
  return result;
}

bool dc_subset_feasible(const ChannelSet& channels, const std::vector<int>& subset,
                        const Eigen::VectorXd& gamma_vec, const SelectionOptions& opts) {
  const DCAResult run = dca_solve_s2(channels, subset, gamma_vec, opts.dca);
  if (run.convex_infeasible) return false;
  return run.final_objective <= opts.eps_zero &&
         certify_subset(run.M_final, channels, subset, gamma_vec, opts.rank_ratio_tol);
}

bool single_device_oracle(const Eigen::VectorXcd& h, double gamma_i) {
  return gamma_i * h.squaredNorm() >= 1.0;
}

}  // namespace airfed
