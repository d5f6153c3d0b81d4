#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "airfed/channel.hpp"

namespace airfed {

// Raised when |m^H h_i|^2 <= 1e-12 * ||m||^2 ||h_i||^2 for a selected device:
// the zero-forcing inversion in Eq. (8)-style transmitters would blow up.
class DegenerateChannelError : public std::runtime_error {
 public:
  DegenerateChannelError(int device, const std::string& what)
      : std::runtime_error(what), device_(device) {}
  int device() const { return device_; }

 private:
  int device_;
};

// Zero-forcing transceiver design for a fixed receive beamformer m:
//   b_i = sqrt(eta) * phi_i * (m^H h_i)^* / |m^H h_i|^2,
//   eta = min_{i in S} P0 |m^H h_i|^2 / phi_i^2.
struct TransceiverDesign {
  std::vector<Complex> b;   // transmit scalars, aligned with `selected`
  std::vector<int> selected;
  double eta = 0.0;
  Eigen::VectorXcd m;
};

double compute_eta(const Eigen::VectorXcd& m, const ChannelSet& channels,
                   const AggregationSpec& spec, const std::vector<int>& selected,
                   double p0);

TransceiverDesign zero_forcing_transmitters(const Eigen::VectorXcd& m,
                                            const ChannelSet& channels,
                                            const AggregationSpec& spec,
                                            const std::vector<int>& selected,
                                            double eta);

// MSE of the aggregation estimate for the zero-forcing design:
//   (sigma^2 / P0) * max_{i in S} phi_i^2 ||m||^2 / |m^H h_i|^2
// which equals sigma^2 ||m||^2 / eta.
double aggregation_mse(const Eigen::VectorXcd& m, const ChannelSet& channels,
                       const AggregationSpec& spec, const std::vector<int>& selected,
                       double sigma2, double p0);

// Time-domain simulation of the noisy over-the-air aggregate.
//
// Each selected device standardizes its update vector to zero mean and unit
// (population) variance using its own statistics and transmits the
// standardized symbols; mean and standard deviation travel error-free as
// side information. The per-device standard deviation folds into an
// effective pre-scalar phi_i * sd_i for the transceiver design, and the
// receiver adds back sum_i phi_i * mean_i before applying psi(S). With
// sigma2 = 0 the output equals psi(S) * sum_i phi_i z_i exactly.
//
// Devices with a constant update vector (sd = 0) transmit nothing; their
// contribution is carried entirely by the side information.
Eigen::VectorXd simulate_aggregation(const std::vector<Eigen::VectorXd>& local_updates,
                                     const Eigen::VectorXcd& m, const ChannelSet& channels,
                                     const AggregationSpec& spec,
                                     const std::vector<int>& selected, double sigma2,
                                     double p0, std::uint64_t seed);

}  // namespace airfed
