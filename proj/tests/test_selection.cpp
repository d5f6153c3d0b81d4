#include <doctest.h>

#include <cmath>

#include "airfed/selection.hpp"
#include "airfed/transceiver.hpp"

using namespace airfed;

namespace {

ChannelSet random_channels(int n, int m, std::uint64_t seed) {
  SystemConfig cfg;
  cfg.num_devices = m;
  cfg.num_antennas = n;
  cfg.transmit_power = 1.0;
  cfg.noise_power = 1.0;
  cfg.mse_target = 1.0;
  cfg.seed = seed;
  return sample_channels(cfg);
}

SystemConfig default_system(int m, int n, double gamma) {
  SystemConfig cfg;
  cfg.num_devices = m;
  cfg.num_antennas = n;
  cfg.transmit_power = 100.0;  // 20 dB SNR with sigma^2 = 1
  cfg.noise_power = 1.0;
  cfg.mse_target = gamma;
  cfg.seed = 0;
  return cfg;
}

}  // namespace

TEST_CASE("gamma_per_device") {
  AggregationSpec spec;
  spec.phi.resize(2);
  spec.phi << 1.0, 1.0;
  Eigen::VectorXd g = gamma_per_device(2.0, spec);
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(2.0));

  spec.phi.resize(1);
  spec.phi << 2.0;
  g = gamma_per_device(8.0, spec);
  CHECK(g[0] == doctest::Approx(2.0));

  spec.phi.resize(3);
  spec.phi << 1.0, 2.0, 4.0;
  g = gamma_per_device(1.0, spec);
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(0.25));
  CHECK(g[2] == doctest::Approx(0.0625));
}

TEST_CASE("order_devices sorts descending with index tie-break") {
  Eigen::VectorXd x(3);
  x << 0.1, 0.5, 0.0;
  CHECK(order_devices(x) == std::vector<int>{1, 0, 2});

  Eigen::VectorXd ties(2);
  ties << 0.2, 0.2;
  CHECK(order_devices(ties) == std::vector<int>{0, 1});

  Eigen::VectorXd zeros = Eigen::VectorXd::Zero(4);
  CHECK(order_devices(zeros) == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("sparsity step: duplicate devices get equal slacks") {
  ChannelSet ch = random_channels(2, 3, 139);
  ch.h.col(1) = ch.h.col(0);  // exact duplicate
  const Eigen::VectorXd gamma = Eigen::VectorXd::Constant(3, 0.8);
  const SparsityStepResult res = sparsity_inducing_step(ch, gamma);
  CHECK(std::abs(res.x[0] - res.x[1]) <= 1e-5);
}

TEST_CASE("sparsity step: all-infeasible instance keeps every slack positive") {
  // gamma_i ||h_i||^2 < 1 for every device.
  ChannelSet ch;
  ch.h.resize(2, 3);
  ch.h.setZero();
  ch.h(0, 0) = 0.6;
  ch.h(1, 1) = 0.7;
  ch.h(0, 2) = 0.5;
  const Eigen::VectorXd gamma = Eigen::VectorXd::Constant(3, 1.0);
  const SparsityStepResult step1 = sparsity_inducing_step(ch, gamma);
  for (int i = 0; i < 3; ++i) CHECK(step1.x[i] > 0.0);

  const FeasibilityStepResult step2 =
      feasibility_detection_step(ch, order_devices(step1.x), gamma);
  CHECK(step2.selected.empty());
  CHECK(step2.k_used == 4);
}

TEST_CASE("feasibility step selects everything on orthogonal strong channels") {
  const int n = 4, m = 4;
  ChannelSet ch;
  ch.h = Eigen::MatrixXcd::Zero(n, m);
  const double gamma_val = 1.0;
  const double c = std::sqrt(2.0 * m / gamma_val);
  for (int i = 0; i < m; ++i) ch.h(i, i) = c;
  const Eigen::VectorXd gamma = Eigen::VectorXd::Constant(m, gamma_val);
  std::vector<int> priority = {0, 1, 2, 3};
  const FeasibilityStepResult res = feasibility_detection_step(ch, priority, gamma);
  CHECK(res.k_used == 1);
  CHECK(res.selected.size() == 4);
}

TEST_CASE("extract_beamformer on exact and near rank-one inputs") {
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2, 2);
  d(0, 0) = 4.0;
  const Eigen::VectorXcd m = extract_beamformer(d);
  CHECK(std::abs(std::abs(m[0]) - 2.0) <= 1e-12);
  CHECK(std::abs(m[1]) <= 1e-12);

  Rng rng(149);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXcd m0(3);
    for (int i = 0; i < 3; ++i) m0[i] = rng.cgaussian();
    const Eigen::MatrixXcd M = m0 * m0.adjoint();
    const Eigen::VectorXcd rec = extract_beamformer(M);
    CHECK(std::abs(std::abs(rec.dot(m0)) - rec.norm() * m0.norm()) <= 1e-9);
    CHECK((rec * rec.adjoint() - M).norm() <= 1e-9 * M.norm());
  }

  // Near-rank-one: rank error stays within the 2 sigma2/sigma1 bound.
  Eigen::VectorXcd v(3);
  v << 1.0, Complex(0.0, 1.0), 0.5;
  Eigen::MatrixXcd near = v * v.adjoint();
  Eigen::MatrixXcd bump = Eigen::MatrixXcd::Zero(3, 3);
  bump(2, 2) = 1e-4 * near.trace().real();
  near += bump;
  const Eigen::VectorXcd nm = extract_beamformer(near);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(near);
  const double ratio = es.eigenvalues()[1] / es.eigenvalues()[2];
  CHECK((nm * nm.adjoint() - near).norm() <= 2.0 * ratio * near.norm());

  // Rank certificate violation.
  Eigen::MatrixXcd fat = Eigen::MatrixXcd::Identity(2, 2);
  CHECK_THROWS_AS(extract_beamformer(fat), std::runtime_error);
}

TEST_CASE("select_devices scalar closed forms") {
  AggregationSpec spec = make_aggregation_spec({1});

  ChannelSet strong;
  strong.h = Eigen::MatrixXcd::Constant(1, 1, std::sqrt(2.0));
  const SelectionResult yes = select_devices(strong, spec, default_system(1, 1, 1.0));
  CHECK(yes.selected == std::vector<int>{0});
  CHECK(yes.achieved_mse <= 1.0 * (1.0 + 1e-6));
  CHECK(yes.achieved_mse == doctest::Approx(0.01 / 2.0).epsilon(1e-3));
  CHECK(yes.beamformer.squaredNorm() >= 1.0 - 1e-7);

  ChannelSet weak;
  weak.h = Eigen::MatrixXcd::Constant(1, 1, 0.5);
  const SelectionResult no = select_devices(weak, spec, default_system(1, 1, 1.0));
  CHECK(no.selected.empty());
  CHECK(no.step2_k == 2);
}

TEST_CASE("select_devices certificate, singleton consistency, anti-chain") {
  Rng rng(151);
  for (int rep = 0; rep < 8; ++rep) {
    const int m = 4, n = 2;
    const ChannelSet ch = random_channels(n, m, derive_seed(151, rep));
    const AggregationSpec spec = make_aggregation_spec({1, 1, 1, 1});
    const SystemConfig cfg = default_system(m, n, 3.0);
    const SelectionResult res = select_devices(ch, spec, cfg);
    if (res.selected.empty()) continue;

    // MSE certificate.
    const double mse = aggregation_mse(res.beamformer, ch, spec, res.selected,
                                       cfg.noise_power, cfg.transmit_power);
    CHECK(mse <= cfg.mse_target * (1.0 + 1e-6));
    CHECK(res.achieved_mse == doctest::Approx(mse));
    CHECK(res.beamformer.squaredNorm() >= 1.0 - 1e-7);

    // Selected set is the priority suffix.
    const std::vector<int> expect(res.priority.begin() + (res.step2_k - 1),
                                  res.priority.end());
    CHECK(res.selected == expect);

    // Every selected device passes the singleton oracle.
    const Eigen::VectorXd gamma_vec = gamma_per_device(cfg.mse_target, spec);
    for (int i : res.selected) {
      CHECK(single_device_oracle(ch.h.col(i), gamma_vec[i]));
    }

    // One-step maximality along the priority order.
    if (res.step2_k >= 2) {
      std::vector<int> bigger(res.priority.begin() + (res.step2_k - 2), res.priority.end());
      CHECK(!dc_subset_feasible(ch, bigger, gamma_vec));
    }
  }
}

TEST_CASE("select_devices is invariant to joint channel/gamma rescaling") {
  Rng rng(157);
  int nonempty = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const int m = 4, n = 2;
    const ChannelSet ch = random_channels(n, m, derive_seed(157, rep));
    const AggregationSpec spec = make_aggregation_spec({1, 1, 1, 1});
    const SystemConfig cfg = default_system(m, n, 2.0);

    const double c = 0.25 + 4.0 * rng.uniform();
    ChannelSet scaled;
    scaled.h = c * ch.h;
    SystemConfig scaled_cfg = cfg;
    scaled_cfg.mse_target = cfg.mse_target / (c * c);

    const SelectionResult a = select_devices(ch, spec, cfg);
    const SelectionResult b = select_devices(scaled, spec, scaled_cfg);
    CHECK(a.selected == b.selected);
    if (!a.selected.empty()) ++nonempty;
  }
  CHECK(nonempty > 5);  // the probe actually exercised nontrivial selections
}

TEST_CASE("feasibility monotone on subsets of a certified set") {
  Rng rng(163);
  for (int rep = 0; rep < 5; ++rep) {
    const int m = 4, n = 2;
    const ChannelSet ch = random_channels(n, m, derive_seed(163, rep));
    const Eigen::VectorXd gamma = Eigen::VectorXd::Constant(m, 3.0);
    std::vector<int> all = {0, 1, 2, 3};
    if (!dc_subset_feasible(ch, all, gamma)) continue;
    for (int drop = 0; drop < m; ++drop) {
      std::vector<int> sub;
      for (int i = 0; i < m; ++i) {
        if (i != drop) sub.push_back(i);
      }
      CHECK(dc_subset_feasible(ch, sub, gamma));
    }
  }
}

TEST_CASE("single_device_oracle basics") {
  Eigen::VectorXcd h(2);
  h << 1.0, 0.0;
  CHECK(single_device_oracle(h, 1.0));
  Eigen::VectorXcd weak(1);
  weak << 0.5;
  CHECK(!single_device_oracle(weak, 1.0));
}
