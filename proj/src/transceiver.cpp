#include "airfed/transceiver.hpp"

#include <cmath>
#include <limits>

namespace airfed {

namespace {

constexpr double kDegeneracyThreshold = 1e-12;

void check_selection(const ChannelSet& channels, const AggregationSpec& spec,
                     const std::vector<int>& selected) {
  if (selected.empty()) throw std::invalid_argument("selected set must be nonempty");
  if (spec.devices() != channels.devices()) {
    throw std::invalid_argument("aggregation spec and channel set disagree on device count");
  }
  for (int i : selected) {
    if (i < 0 || i >= channels.devices()) {
      throw std::out_of_range("selected device index out of range");
    }
  }
}

// |m^H h_i|^2 with the degeneracy guard.
double effective_gain(const Eigen::VectorXcd& m, const Eigen::VectorXcd& h, int device) {
  const Complex c = m.dot(h);  // Eigen's dot conjugates the first argument
  const double gain = std::norm(c);
  if (!(gain > kDegeneracyThreshold * m.squaredNorm() * h.squaredNorm())) {
    throw DegenerateChannelError(
        device, "near-orthogonal channel for device " + std::to_string(device) +
                    ": |m^H h|^2 below degeneracy threshold");
  }
  return gain;
}

}  // namespace

double compute_eta(const Eigen::VectorXcd& m, const ChannelSet& channels,
                   const AggregationSpec& spec, const std::vector<int>& selected,
                   double p0) {
  check_selection(channels, spec, selected);
  if (!(p0 > 0.0)) throw std::invalid_argument("compute_eta: p0 must be > 0");
  double eta = std::numeric_limits<double>::infinity();
  for (int i : selected) {
    const double gain = effective_gain(m, channels.h.col(i), i);
    const double phi = spec.phi[i];
    eta = std::min(eta, p0 * gain / (phi * phi));
  }
  return eta;
}

TransceiverDesign zero_forcing_transmitters(const Eigen::VectorXcd& m,
                                            const ChannelSet& channels,
                                            const AggregationSpec& spec,
                                            const std::vector<int>& selected,
                                            double eta) {
  check_selection(channels, spec, selected);
  if (!(eta > 0.0)) throw std::invalid_argument("zero_forcing_transmitters: eta must be > 0");
  TransceiverDesign design;
  design.selected = selected;
  design.eta = eta;
  design.m = m;
  design.b.reserve(selected.size());
  const double root_eta = std::sqrt(eta);
  for (int i : selected) {
    const Complex c = m.dot(channels.h.col(i));
    const double gain = effective_gain(m, channels.h.col(i), i);
    design.b.push_back(root_eta * spec.phi[i] * std::conj(c) / gain);
  }
  return design;
}

double aggregation_mse(const Eigen::VectorXcd& m, const ChannelSet& channels,
                       const AggregationSpec& spec, const std::vector<int>& selected,
                       double sigma2, double p0) {
  check_selection(channels, spec, selected);
  if (!(p0 > 0.0)) throw std::invalid_argument("aggregation_mse: p0 must be > 0");
  if (sigma2 < 0.0) throw std::invalid_argument("aggregation_mse: sigma2 must be >= 0");
  const double m_norm2 = m.squaredNorm();
  double worst = 0.0;
  for (int i : selected) {
    const double gain = effective_gain(m, channels.h.col(i), i);
    const double phi = spec.phi[i];
    worst = std::max(worst, phi * phi * m_norm2 / gain);
  }
  return sigma2 / p0 * worst;
}

Eigen::VectorXd simulate_aggregation(const std::vector<Eigen::VectorXd>& local_updates,
                                     const Eigen::VectorXcd& m, const ChannelSet& channels,
                                     const AggregationSpec& spec,
                                     const std::vector<int>& selected, double sigma2,
                                     double p0, std::uint64_t seed) {
  check_selection(channels, spec, selected);
  if (local_updates.size() != static_cast<std::size_t>(channels.devices())) {
    throw std::invalid_argument("simulate_aggregation: one update vector per device required");
  }
  const Eigen::Index d = local_updates[static_cast<std::size_t>(selected.front())].size();
  if (d < 1) throw std::invalid_argument("simulate_aggregation: updates must have length >= 1");
  for (int i : selected) {
    if (local_updates[static_cast<std::size_t>(i)].size() != d) {
      throw std::invalid_argument("simulate_aggregation: update length mismatch at device " +
                                  std::to_string(i));
    }
  }

  // Per-device standardization statistics (population moments).
  const int n_sel = static_cast<int>(selected.size());
  Eigen::VectorXd mean(n_sel), sd(n_sel);
  for (int s = 0; s < n_sel; ++s) {
    const Eigen::VectorXd& z = local_updates[static_cast<std::size_t>(selected[s])];
    mean[s] = z.mean();
    sd[s] = std::sqrt((z.array() - mean[s]).square().mean());
  }

  // Effective pre-scalars phi~_i = phi_i * sd_i; devices with sd = 0 stay
  // silent and do not constrain eta.
  std::vector<int> active;
  for (int s = 0; s < n_sel; ++s) {
    const double scale = std::abs(mean[s]) + 1.0;
    if (sd[s] > 1e-12 * scale) active.push_back(s);
  }

  double offset = 0.0;
  for (int s = 0; s < n_sel; ++s) offset += spec.phi[selected[s]] * mean[s];
  const double psi = spec.psi(selected);

  Eigen::VectorXd out(d);
  if (active.empty()) {
    out.setConstant(psi * offset);
    return out;
  }

  double eta = std::numeric_limits<double>::infinity();
  std::vector<Complex> gains(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    const int s = active[a];
    const int dev = selected[s];
    const Complex c = m.dot(channels.h.col(dev));
    const double gain = effective_gain(m, channels.h.col(dev), dev);
    gains[a] = c;
    const double phi_eff = spec.phi[dev] * sd[s];
    eta = std::min(eta, p0 * gain / (phi_eff * phi_eff));
  }
  const double root_eta = std::sqrt(eta);
  std::vector<Complex> b(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    const int s = active[a];
    const double phi_eff = spec.phi[selected[s]] * sd[s];
    b[a] = root_eta * phi_eff * std::conj(gains[a]) / std::norm(gains[a]);
  }

  Rng rng(seed);
  const double noise_sd = std::sqrt(sigma2 * 0.5);
  Eigen::VectorXcd y(m.size());
  for (Eigen::Index j = 0; j < d; ++j) {
    y.setZero();
    for (std::size_t a = 0; a < active.size(); ++a) {
      const int s = active[a];
      const Eigen::VectorXd& z = local_updates[static_cast<std::size_t>(selected[s])];
      const double symbol = (z[j] - mean[s]) / sd[s];
      y += channels.h.col(selected[s]) * (b[a] * symbol);
    }
    if (sigma2 > 0.0) {
      for (Eigen::Index a = 0; a < y.size(); ++a) {
        y[a] += Complex(noise_sd * rng.gaussian(), noise_sd * rng.gaussian());
      }
    }
    const double g_hat = std::real(m.dot(y)) / root_eta;
    out[j] = psi * (g_hat + offset);
  }
  return out;
}

}  // namespace airfed
