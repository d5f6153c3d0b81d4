#include "airfed/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "airfed/transceiver.hpp"

namespace airfed {

void BaselineOptions::validate() const {
  if (randomization_count < 1) {
    throw std::invalid_argument("BaselineOptions: randomization_count must be >= 1");
  }
  if (!(lp_p > 0.0 && lp_p <= 1.0)) {
    throw std::invalid_argument("BaselineOptions: lp_p must lie in (0, 1]");
  }
  if (smoothing_schedule.empty()) {
    throw std::invalid_argument("BaselineOptions: smoothing_schedule must be nonempty");
  }
  for (std::size_t i = 0; i < smoothing_schedule.size(); ++i) {
    if (!(smoothing_schedule[i] >= 1e-8)) {
      throw std::invalid_argument("BaselineOptions: smoothing values must be >= 1e-8");
    }
    if (i > 0 && !(smoothing_schedule[i] < smoothing_schedule[i - 1])) {
      throw std::invalid_argument("BaselineOptions: smoothing_schedule must be strictly decreasing");
    }
  }
  if (reweight_iters < 1) {
    throw std::invalid_argument("BaselineOptions: reweight_iters must be >= 1");
  }
}

namespace {

std::vector<DeviceConstraint> subset_constraints(const ChannelSet& channels,
                                                 const std::vector<int>& subset,
                                                 const Eigen::VectorXd& gamma_vec) {
  std::vector<DeviceConstraint> rows;
  rows.reserve(subset.size());
  for (int i : subset) {
    if (i < 0 || i >= channels.devices()) {
      throw std::out_of_range("baseline: device index out of range");
    }
    rows.push_back(DeviceConstraint{gamma_vec[i], channels.h.col(i)});
  }
  return rows;
}

bool beamformer_feasible(const Eigen::VectorXcd& m, const ChannelSet& channels,
                         const std::vector<int>& subset, const Eigen::VectorXd& gamma_vec,
                         double slack) {
  const double norm2 = m.squaredNorm();
  for (int i : subset) {
    if (norm2 - gamma_vec[i] * std::norm(m.dot(channels.h.col(i))) > slack * norm2) {
      return false;
    }
  }
  return true;
}

}  // namespace

SdrOutcome sdr_feasibility(const ChannelSet& channels, const std::vector<int>& subset,
                           const Eigen::VectorXd& gamma_vec, const BaselineOptions& opts,
                           std::uint64_t seed) {
  opts.validate();
  if (subset.empty()) throw std::invalid_argument("sdr_feasibility: subset must be nonempty");
  const int n = channels.antennas();

  SubproblemS2 relax;
  relax.linear_matrix_term = Eigen::MatrixXcd::Zero(n, n);
  relax.alpha = 1.0;  // pure feasibility: pick the minimum-norm feasible point
  relax.constraints = subset_constraints(channels, subset, gamma_vec);

  SdrOutcome out;
  const KernelSolution sol = solve_s2(relax, opts.kernel);
  if (sol.status == KernelStatus::kInfeasible) return out;
  out.relaxation_feasible = true;
  out.solver_clean = sol.status != KernelStatus::kMaxIterations;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sol.M_opt);
  const auto& ev = es.eigenvalues();
  const double sigma1 = ev[n - 1];
  const double sigma2 = n > 1 ? std::abs(ev[n - 2]) : 0.0;
  if (sigma1 > 0.0 && sigma2 <= 1e-3 * sigma1) {
    Eigen::VectorXcd m = std::sqrt(sigma1) * es.eigenvectors().col(n - 1);
    if (beamformer_feasible(m, channels, subset, gamma_vec, 1e-3)) {
      out.feasible = true;
      out.m = std::move(m);
      return out;
    }
  }

  // Gaussian randomization around the relaxed solution.
  Eigen::VectorXd clipped = ev.cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXcd half = es.eigenvectors() * clipped.asDiagonal();
  Rng rng(seed);
  for (int trial = 0; trial < opts.randomization_count; ++trial) {
    Eigen::VectorXcd g(n);
    for (int i = 0; i < n; ++i) g[i] = rng.cgaussian();
    Eigen::VectorXcd m = half * g;
    const double norm = m.norm();
    if (!(norm > 0.0)) continue;
    m /= norm;
    if (beamformer_feasible(m, channels, subset, gamma_vec, 1e-9)) {
      out.feasible = true;
      out.m = std::move(m);
      return out;
    }
  }
  return out;
}

Eigen::VectorXd l1_sparsity_step(const ChannelSet& channels,
                                 const Eigen::VectorXd& gamma_vec,
                                 const BaselineOptions& opts) {
  opts.validate();
  const int n = channels.antennas();
  const int m = channels.devices();
  SubproblemS1 sub;
  sub.linear_matrix_term = Eigen::MatrixXcd::Zero(n, n);
  sub.linear_vector_term = Eigen::VectorXd::Ones(m);
  sub.alpha = opts.step1_alpha;
  std::vector<int> all(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) all[static_cast<std::size_t>(i)] = i;
  sub.constraints = subset_constraints(channels, all, gamma_vec);
  return solve_s1(sub, opts.kernel).x_opt;
}

Eigen::VectorXd reweighted_l2_weights(const Eigen::VectorXd& x, double eps, double p) {
  return (p / 2.0) * (x.array().square() + eps).pow(p / 2.0 - 1.0);
}

Eigen::VectorXd reweighted_l2_step(const ChannelSet& channels,
                                   const Eigen::VectorXd& gamma_vec,
                                   const BaselineOptions& opts) {
  opts.validate();
  const int n = channels.antennas();
  const int m = channels.devices();
  SubproblemS1 sub;
  sub.linear_matrix_term = Eigen::MatrixXcd::Zero(n, n);
  sub.linear_vector_term = Eigen::VectorXd::Zero(m);
  sub.alpha = opts.step1_alpha;
  std::vector<int> all(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) all[static_cast<std::size_t>(i)] = i;
  sub.constraints = subset_constraints(channels, all, gamma_vec);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
  KernelState state;
  for (int round = 0; round < opts.reweight_iters; ++round) {
    const std::size_t si = std::min(static_cast<std::size_t>(round),
                                    opts.smoothing_schedule.size() - 1);
    const Eigen::VectorXd w = reweighted_l2_weights(x, opts.smoothing_schedule[si], opts.lp_p);
    sub.x_quadratic_weights = 2.0 * w;  // objective carries 1/2 sum d_i x_i^2
    x = solve_s1(sub, opts.kernel, &state).x_opt;
  }
  return x;
}

SelectionResult select_devices_baseline(const ChannelSet& channels,
                                        const AggregationSpec& spec,
                                        const SystemConfig& cfg,
                                        const BaselineOptions& opts) {
  opts.validate();
  cfg.validate();
  if (channels.devices() != cfg.num_devices || channels.antennas() != cfg.num_antennas) {
    throw std::invalid_argument("select_devices_baseline: channel shape does not match config");
  }
  const Eigen::VectorXd gamma_vec = gamma_per_device(cfg.mse_target, spec);

  SelectionResult result;
  Eigen::VectorXd x;
  switch (opts.method) {
    case BaselineMethod::kL1Sdr:
      x = l1_sparsity_step(channels, gamma_vec, opts);
      break;
    case BaselineMethod::kReweightedL2Sdr:
      x = reweighted_l2_step(channels, gamma_vec, opts);
      break;
    case BaselineMethod::kSdr:
      throw std::invalid_argument(
          "select_devices_baseline: method sdr has no sparsity step; use l1_sdr or "
          "reweighted_l2_sdr");
  }
  result.step1_k = 0;
  result.step1_certified = true;
  result.priority = order_devices(x);

  const int m_dev = channels.devices();
  for (int k = 1; k <= m_dev; ++k) {
    std::vector<int> subset(result.priority.begin() + (k - 1), result.priority.end());
    const SdrOutcome outcome =
        sdr_feasibility(channels, subset, gamma_vec, opts, derive_seed(opts.seed, k));
    if (!outcome.feasible) continue;
    result.step2_k = k;
    Eigen::VectorXcd m = outcome.m;
    if (m.squaredNorm() < 1.0) m /= m.norm();
    result.achieved_mse =
        aggregation_mse(m, channels, spec, subset, cfg.noise_power, cfg.transmit_power);
    result.beamformer = std::move(m);
    result.selected = std::move(subset);
    return result;
  }
  result.step2_k = m_dev + 1;
  return result;
}

}  // namespace airfed
