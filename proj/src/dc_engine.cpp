#include "airfed/dc_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace airfed {

namespace {

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_k(const Eigen::VectorXd& x, int k) {
  if (k < 0 || k > x.size()) {
    throw std::invalid_argument("ky fan: k must lie in [0, length(x)]");
  }
}

// Largest and second-largest eigenvalue plus the top eigenvector.
struct Spectrum {
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  Eigen::VectorXcd v1;
};

Spectrum top_spectrum(const Eigen::MatrixXcd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (M + M.adjoint()));
  if (es.info() != Eigen::Success) {
    throw std::invalid_argument("spectral subgradient: eigendecomposition failed");
  }
  const auto& ev = es.eigenvalues();
  const Eigen::Index n = ev.size();
  Spectrum s;
  s.sigma1 = ev[n - 1];
  s.sigma2 = n > 1 ? ev[n - 2] : 0.0;
  Eigen::VectorXcd v = es.eigenvectors().col(n - 1);
  // Deterministic phase: rotate the first significant component to be real
  // positive.
  const double vmax = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12 * vmax) {
      v *= std::conj(v[i]) / std::abs(v[i]);
      break;
    }
  }
  s.v1 = v;
  return s;
}

struct DcObjective {
  double value = 0.0;
  Spectrum spectrum;
};

DcObjective s1_objective(const Eigen::VectorXd& x, const Eigen::MatrixXcd& M, int k) {
  DcObjective o;
  o.spectrum = top_spectrum(M);
  o.value = x.cwiseAbs().sum() - ky_fan_norm(x, k) + M.trace().real() - o.spectrum.sigma1;
  return o;
}

DcObjective s2_objective(const Eigen::MatrixXcd& M) {
  DcObjective o;
  o.spectrum = top_spectrum(M);
  o.value = M.trace().real() - o.spectrum.sigma1;
  return o;
}

void validate_gamma(const ChannelSet& channels, const Eigen::VectorXd& gamma_vec) {
  if (gamma_vec.size() != channels.devices()) {
    throw std::invalid_argument("dca: gamma_vec length must equal device count");
  }
  if ((gamma_vec.array() <= 0.0).any()) {
    throw std::invalid_argument("dca: gamma_i must be > 0");
  }
}

}  // namespace

double ky_fan_norm(const Eigen::VectorXd& x, int k) {
  check_k(x, k);
  if (k == 0) return 0.0;
  std::vector<double> mags(x.data(), x.data() + x.size());
  for (double& v : mags) v = std::abs(v);
  std::nth_element(mags.begin(), mags.begin() + (k - 1), mags.end(), std::greater<double>());
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += mags[static_cast<std::size_t>(i)];
  return sum;
}

Eigen::VectorXd ky_fan_subgradient(const Eigen::VectorXd& x, int k) {
  check_k(x, k);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  if (k == 0) return g;
  std::vector<double> mags(x.data(), x.data() + x.size());
  for (double& v : mags) v = std::abs(v);
  std::nth_element(mags.begin(), mags.begin() + (k - 1), mags.end(), std::greater<double>());
  const double threshold = mags[static_cast<std::size_t>(k - 1)];
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) >= threshold) g[i] = sign0(x[i]);
  }
  return g;
}

Eigen::MatrixXcd spectral_subgradient(const Eigen::MatrixXcd& M) {
  if (M.rows() != M.cols() || M.rows() < 1) {
    throw std::invalid_argument("spectral_subgradient: matrix must be square");
  }
  if (!M.allFinite()) throw std::invalid_argument("spectral_subgradient: non-finite input");
  const Spectrum s = top_spectrum(M);
  return s.v1 * s.v1.adjoint();
}

DCAResult dca_solve_s1(const ChannelSet& channels, const Eigen::VectorXd& gamma_vec,
                       int k, const DCAOptions& opts) {
  validate_gamma(channels, gamma_vec);
  const int n = channels.antennas();
  const int m = channels.devices();
  if (k < 0 || k > m) throw std::invalid_argument("dca_solve_s1: k must lie in [0, M]");

  SubproblemS1 sub;
  sub.alpha = opts.alpha;
  sub.constraints.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    sub.constraints.push_back(DeviceConstraint{gamma_vec[i], channels.h.col(i)});
  }

  // Linearization seed: M = I/N, x = clipped constraint violations at M.
  Eigen::MatrixXcd M_prev = Eigen::MatrixXcd::Identity(n, n) / n;
  Eigen::VectorXd x_prev(m);
  for (int i = 0; i < m; ++i) {
    x_prev[i] = std::max(0.0, 1.0 - gamma_vec[i] * channels.h.col(i).squaredNorm() / n);
  }

  DCAResult result;
  result.trace.alpha = opts.alpha;
  KernelState state;
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  double f_prev = 0.0;
  for (int t = 0; t < opts.max_outer; ++t) {
    const Spectrum sp = top_spectrum(M_prev);
    sub.linear_vector_term =
        Eigen::VectorXd::Ones(m) - ky_fan_subgradient(x_prev, k) - opts.alpha * x_prev;
    sub.linear_matrix_term = id - sp.v1 * sp.v1.adjoint() - opts.alpha * M_prev;

    const KernelSolution sol = solve_s1(sub, opts.kernel, &state);
    if (sol.status == KernelStatus::kMaxIterations) result.kernel_clean = false;

    const DcObjective obj = s1_objective(sol.x_opt, sol.M_opt, k);
    if (t > 0) {
      result.trace.iterate_gaps.push_back((sol.M_opt - M_prev).squaredNorm() +
                                          (sol.x_opt - x_prev).squaredNorm());
    }
    result.trace.objective_values.push_back(obj.value);
    M_prev = sol.M_opt;
    x_prev = sol.x_opt;
    if (t > 0 && std::abs(f_prev - obj.value) <= opts.obj_tol) {
      result.converged = true;
    }
    f_prev = obj.value;
    if (result.converged || obj.value <= 1e-8) {
      result.converged = true;
      break;
    }
  }
  result.M_final = M_prev;
  result.x_final = x_prev;
  result.final_objective = f_prev;
  return result;
}

DCAResult dca_solve_s2(const ChannelSet& channels, const std::vector<int>& subset,
                       const Eigen::VectorXd& gamma_vec, const DCAOptions& opts) {
  validate_gamma(channels, gamma_vec);
  if (subset.empty()) throw std::invalid_argument("dca_solve_s2: subset must be nonempty");
  const int n = channels.antennas();

  SubproblemS2 sub;
  sub.alpha = opts.alpha;
  sub.constraints.reserve(subset.size());
  for (int i : subset) {
    if (i < 0 || i >= channels.devices()) {
      throw std::out_of_range("dca_solve_s2: device index out of range");
    }
    sub.constraints.push_back(DeviceConstraint{gamma_vec[i], channels.h.col(i)});
  }

  Eigen::MatrixXcd M_prev = Eigen::MatrixXcd::Identity(n, n) / n;

  DCAResult result;
  result.trace.alpha = opts.alpha;
  KernelState state;
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  double f_prev = 0.0;
  for (int t = 0; t < opts.max_outer; ++t) {
    const Spectrum sp = top_spectrum(M_prev);
    sub.linear_matrix_term = id - sp.v1 * sp.v1.adjoint() - opts.alpha * M_prev;

    const KernelSolution sol = solve_s2(sub, opts.kernel, &state);
    if (sol.status == KernelStatus::kInfeasible) {
      result.convex_infeasible = true;
      result.converged = true;
      result.M_final = Eigen::MatrixXcd::Zero(n, n);
      result.final_objective = std::numeric_limits<double>::infinity();
      return result;
    }
    if (sol.status == KernelStatus::kMaxIterations) result.kernel_clean = false;

    const DcObjective obj = s2_objective(sol.M_opt);
    if (t > 0) {
      result.trace.iterate_gaps.push_back((sol.M_opt - M_prev).squaredNorm());
    }
    result.trace.objective_values.push_back(obj.value);
    M_prev = sol.M_opt;
    if (t > 0 && std::abs(f_prev - obj.value) <= opts.obj_tol) {
      result.converged = true;
    }
    f_prev = obj.value;
    if (result.converged || obj.value <= 1e-8) {
      result.converged = true;
      break;
    }
  }
  result.M_final = M_prev;
  result.final_objective = f_prev;
  return result;
}

bool check_convergence_bound(const DCATrace& trace, double f_star_lower) {
  if (trace.objective_values.empty()) {
    throw std::invalid_argument("check_convergence_bound: empty trace");
  }
  if (!(trace.alpha > 0.0)) {
    throw std::invalid_argument("check_convergence_bound: trace has no alpha");
  }
  const double f0 = trace.objective_values.front();
  double running = 0.0;
  for (std::size_t t = 0; t < trace.iterate_gaps.size(); ++t) {
    running += trace.iterate_gaps[t];
    const double avg = running / static_cast<double>(t + 1);
    const double bound =
        (f0 - f_star_lower) / (trace.alpha * static_cast<double>(t + 1)) + 1e-8;
    if (avg > bound) return false;
  }
  return true;
}

void write_trace_csv(const DCATrace& trace, std::ostream& out) {
  out << "iteration,objective,gap\n";
  for (std::size_t t = 0; t < trace.objective_values.size(); ++t) {
    out << t << ',' << trace.objective_values[t] << ',';
    if (t < trace.iterate_gaps.size()) out << trace.iterate_gaps[t];
    out << '\n';
  }
}

}  // namespace airfed
