#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace airfed {

using Complex = std::complex<double>;

// System-level parameters. All powers and targets are linear scale; dB
// conversion happens only at the CLI boundary.
struct SystemConfig {
  int num_devices = 0;      // M
  int num_antennas = 0;     // N
  double transmit_power = 0.0;  // P0
  double noise_power = 0.0;     // sigma^2
  double mse_target = 0.0;      // gamma
  std::uint64_t seed = 0;

  void validate() const {
    if (num_devices < 1) throw std::invalid_argument("SystemConfig: num_devices must be >= 1");
    if (num_antennas < 1) throw std::invalid_argument("SystemConfig: num_antennas must be >= 1");
    if (!(transmit_power > 0.0)) throw std::invalid_argument("SystemConfig: transmit_power must be > 0");
    if (!(noise_power > 0.0)) throw std::invalid_argument("SystemConfig: noise_power must be > 0");
    if (!(mse_target > 0.0)) throw std::invalid_argument("SystemConfig: mse_target must be > 0");
  }
};

// N x M complex channel matrix; column i is the channel h_i of device i.
struct ChannelSet {
  Eigen::MatrixXcd h;

  int antennas() const { return static_cast<int>(h.rows()); }
  int devices() const { return static_cast<int>(h.cols()); }
  Eigen::VectorXcd device(int i) const { return h.col(i); }
};

// Pre/post-processing weights of the weighted-average aggregate.
// phi_i is the per-device pre-scalar; the post scalar for a selected set S
// is psi(S) = 1 / sum_{i in S} phi_i, which reproduces
// sum_{i in S} |D_i| z_i / sum_{i in S} |D_i| for both the raw and the
// equal-size-normalized weightings.
struct AggregationSpec {
  std::vector<std::int64_t> dataset_sizes;
  Eigen::VectorXd phi;

  int devices() const { return static_cast<int>(phi.size()); }

  double psi(const std::vector<int>& selected) const {
    if (selected.empty()) throw std::invalid_argument("AggregationSpec::psi: empty selection");
    double total = 0.0;
    for (int i : selected) {
      if (i < 0 || i >= devices()) throw std::out_of_range("AggregationSpec::psi: device index out of range");
      total += phi[i];
    }
    return 1.0 / total;
  }
};

// Counter-based seed split (splitmix64 finalizer). Trials derive their seeds
// as derive_seed(master, trial), so parallel execution order does not matter.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  return splitmix64(master ^ splitmix64(counter + 1));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(master, a), b);
}

// Deterministic RNG. Gaussian variates are produced by an explicit
// Box-Muller transform on top of mt19937_64 so the stream does not depend
// on the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {  // [0, 1)
    return (engine_() >> 11) * 0x1.0p-53;
  }

  int uniform_int(int n) {  // {0, ..., n-1}
    if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
    return static_cast<int>(engine_() % static_cast<std::uint64_t>(n));
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Circularly-symmetric complex normal CN(0, 1): real and imaginary parts
  // are each N(0, 1/2).
  Complex cgaussian() {
    const double s = std::sqrt(0.5);
    const double re = gaussian();
    const double im = gaussian();
    return Complex(s * re, s * im);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// i.i.d. Rayleigh fading: every entry CN(0, 1), reproducible from cfg.seed.
inline ChannelSet sample_channels(const SystemConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Eigen::MatrixXcd h(cfg.num_antennas, cfg.num_devices);
  for (int i = 0; i < cfg.num_devices; ++i) {
    for (int a = 0; a < cfg.num_antennas; ++a) {
      h(a, i) = rng.cgaussian();
    }
  }
  return ChannelSet{std::move(h)};
}

// phi_i = |D_i|; when all sizes are equal the spec is rescaled to the
// equivalent phi_i = 1, psi = 1/|S| form. The aggregate value is identical
// either way.
inline AggregationSpec make_aggregation_spec(const std::vector<std::int64_t>& dataset_sizes) {
  if (dataset_sizes.empty()) {
    throw std::invalid_argument("make_aggregation_spec: dataset_sizes must be nonempty");
  }
  bool all_equal = true;
  for (std::int64_t s : dataset_sizes) {
    if (s < 1) throw std::invalid_argument("make_aggregation_spec: dataset sizes must be >= 1");
    if (s != dataset_sizes.front()) all_equal = false;
  }
  AggregationSpec spec;
  spec.dataset_sizes = dataset_sizes;
  spec.phi.resize(static_cast<Eigen::Index>(dataset_sizes.size()));
  for (std::size_t i = 0; i < dataset_sizes.size(); ++i) {
    spec.phi[static_cast<Eigen::Index>(i)] = all_equal ? 1.0 : static_cast<double>(dataset_sizes[i]);
  }
  return spec;
}

}  // namespace airfed
