#include "airfed/fedavg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "airfed/transceiver.hpp"

namespace airfed {

void Dataset::validate() const {
  if (examples() < 1) throw std::invalid_argument("Dataset: needs at least one example");
  if (static_cast<int>(labels.size()) != examples()) {
    throw std::invalid_argument("Dataset: label count does not match feature rows");
  }
  if (num_classes < 2) throw std::invalid_argument("Dataset: num_classes must be >= 2");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw std::invalid_argument("Dataset: label out of range");
  }
  if (!partition.empty()) {
    std::vector<char> seen(static_cast<std::size_t>(examples()), 0);
    for (const auto& shard : partition) {
      if (shard.empty()) throw std::invalid_argument("Dataset: every device needs >= 1 example");
      for (int idx : shard) {
        if (idx < 0 || idx >= examples() || seen[static_cast<std::size_t>(idx)]) {
          throw std::invalid_argument("Dataset: partition must cover examples disjointly");
        }
        seen[static_cast<std::size_t>(idx)] = 1;
      }
    }
  }
}

Dataset make_blobs_dataset(int examples, int features, int num_classes,
                           std::uint64_t seed, double spread) {
  if (examples < num_classes) throw std::invalid_argument("make_blobs_dataset: too few examples");
  Dataset data;
  data.num_classes = num_classes;
  data.features.resize(examples, features);
  data.labels.resize(static_cast<std::size_t>(examples));
  Rng rng(seed);
  // Class centers on a scaled random frame, separation ~4 sigma.
  Eigen::MatrixXd centers(num_classes, features);
  for (int c = 0; c < num_classes; ++c) {
    for (int j = 0; j < features; ++j) centers(c, j) = 4.0 * spread * rng.gaussian();
  }
  centers /= std::sqrt(static_cast<double>(features));
  for (int i = 0; i < examples; ++i) {
    const int c = i % num_classes;  // balanced classes
    data.labels[static_cast<std::size_t>(i)] = c;
    for (int j = 0; j < features; ++j) {
      data.features(i, j) = centers(c, j) + spread * rng.gaussian() / std::sqrt(4.0);
    }
  }
  return data;
}

void partition_iid(Dataset& data, int num_devices, std::uint64_t seed) {
  if (num_devices < 1 || num_devices > data.examples()) {
    throw std::invalid_argument("partition_iid: bad device count");
  }
  std::vector<int> order(static_cast<std::size_t>(data.examples()));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)))]);
  }
  data.partition.assign(static_cast<std::size_t>(num_devices), {});
  for (std::size_t i = 0; i < order.size(); ++i) {
    data.partition[i % static_cast<std::size_t>(num_devices)].push_back(order[i]);
  }
}

void partition_label_skew(Dataset& data, int num_devices, int classes_per_device,
                          std::uint64_t seed) {
  if (num_devices < 1 || num_devices > data.examples()) {
    throw std::invalid_argument("partition_label_skew: bad device count");
  }
  if (classes_per_device < 1) {
    throw std::invalid_argument("partition_label_skew: classes_per_device must be >= 1");
  }
  // Sort example indices by label, shuffle within a label, then deal
  // contiguous label blocks to devices so each touches few classes.
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(data.num_classes));
  for (int i = 0; i < data.examples(); ++i) {
    by_class[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])].push_back(i);
  }
  Rng rng(seed);
  std::vector<int> stream;
  for (auto& bucket : by_class) {
    for (std::size_t i = bucket.size(); i > 1; --i) {
      std::swap(bucket[i - 1], bucket[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)))]);
    }
    stream.insert(stream.end(), bucket.begin(), bucket.end());
  }
  const int shards = num_devices * classes_per_device;
  const int shard_size = std::max(1, data.examples() / shards);
  std::vector<std::vector<int>> shard_list;
  for (int s = 0; s < shards; ++s) {
    const int lo = s * shard_size;
    const int hi = (s + 1 == shards) ? data.examples() : std::min((s + 1) * shard_size, data.examples());
    if (lo >= hi) break;
    shard_list.emplace_back(stream.begin() + lo, stream.begin() + hi);
  }
  // Random shard-to-device deal.
  std::vector<int> shard_order(shard_list.size());
  std::iota(shard_order.begin(), shard_order.end(), 0);
  for (std::size_t i = shard_order.size(); i > 1; --i) {
    std::swap(shard_order[i - 1],
              shard_order[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)))]);
  }
  data.partition.assign(static_cast<std::size_t>(num_devices), {});
  for (std::size_t s = 0; s < shard_order.size(); ++s) {
    auto& shard = shard_list[static_cast<std::size_t>(shard_order[s])];
    auto& dst = data.partition[s % static_cast<std::size_t>(num_devices)];
    dst.insert(dst.end(), shard.begin(), shard.end());
  }
  for (auto& shard : data.partition) {
    if (shard.empty()) throw std::runtime_error("partition_label_skew: empty device shard");
  }
}

int model_dim(const Dataset& data) { return data.num_classes * (data.feature_dim() + 1); }

double class_score(const Eigen::VectorXd& model, const Dataset& data, int example, int c) {
  const int stride = data.feature_dim() + 1;
  double s = model[c * stride + data.feature_dim()];  // bias
  s += model.segment(c * stride, data.feature_dim()).dot(data.features.row(example));
  return s;
}

double training_loss(const Eigen::VectorXd& model, const Dataset& data, double lambda) {
  double loss = 0.0;
  for (int i = 0; i < data.examples(); ++i) {
    for (int c = 0; c < data.num_classes; ++c) {
      const double y = data.labels[static_cast<std::size_t>(i)] == c ? 1.0 : -1.0;
      loss += std::max(0.0, 1.0 - y * class_score(model, data, i, c));
    }
  }
  loss /= static_cast<double>(data.examples());
  return loss + 0.5 * lambda * model.squaredNorm();
}

Eigen::VectorXd local_update(const Eigen::VectorXd& model, const Dataset& data,
                             int device, const TrainConfig& cfg, Rng& rng) {
  if (device < 0 || device >= static_cast<int>(data.partition.size())) {
    throw std::out_of_range("local_update: device index out of range");
  }
  const std::vector<int>& shard = data.partition[static_cast<std::size_t>(device)];
  if (shard.empty()) throw std::invalid_argument("local_update: empty local dataset");
  if (cfg.batch_size < 1) throw std::invalid_argument("local_update: batch_size must be >= 1");
  const int stride = data.feature_dim() + 1;

  Eigen::VectorXd z = model;
  std::vector<int> order = shard;
  Eigen::VectorXd grad(model.size());
  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)))]);
    }
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      grad.setZero();
      for (std::size_t b = start; b < stop; ++b) {
        const int ex = order[b];
        for (int c = 0; c < data.num_classes; ++c) {
          const double y = data.labels[static_cast<std::size_t>(ex)] == c ? 1.0 : -1.0;
          if (y * class_score(z, data, ex, c) < 1.0) {
            grad.segment(c * stride, data.feature_dim()) -= y * data.features.row(ex).transpose();
            grad[c * stride + data.feature_dim()] -= y;
          }
        }
      }
      grad /= static_cast<double>(stop - start);
      grad += cfg.lambda * z;
      z -= cfg.learning_rate * grad;
    }
  }
  return z;
}

EvalResult evaluate(const Eigen::VectorXd& model, const Dataset& test) {
  if (test.examples() < 1) throw std::invalid_argument("evaluate: empty test set");
  int correct = 0;
  for (int i = 0; i < test.examples(); ++i) {
    int best = 0;
    double best_score = class_score(model, test, i, 0);
    for (int c = 1; c < test.num_classes; ++c) {
      const double s = class_score(model, test, i, c);
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    if (best == test.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  EvalResult r;
  r.accuracy = static_cast<double>(correct) / test.examples();
  r.relative_accuracy = r.accuracy * test.num_classes;
  return r;
}

void fedavg_round(TrainState& state, const std::vector<int>& selected,
                  const Eigen::VectorXcd& beamformer, const ChannelSet& channels,
                  const AggregationSpec& spec, const SystemConfig& sys,
                  const TrainConfig& cfg, const Dataset& train, const Dataset& test) {
  const int round = state.round + 1;
  if (!selected.empty()) {
    std::vector<Eigen::VectorXd> updates(static_cast<std::size_t>(spec.devices()));
    for (int dev : selected) {
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(round),
                          0x10000ULL + static_cast<std::uint64_t>(dev)));
      updates[static_cast<std::size_t>(dev)] = local_update(state.model, train, dev, cfg, rng);
    }
    if (cfg.noiseless) {
      Eigen::VectorXd agg = Eigen::VectorXd::Zero(state.model.size());
      for (int dev : selected) agg += spec.phi[dev] * updates[static_cast<std::size_t>(dev)];
      state.model = spec.psi(selected) * agg;
    } else {
      state.model = simulate_aggregation(
          updates, beamformer, channels, spec, selected, sys.noise_power, sys.transmit_power,
          derive_seed(cfg.seed, static_cast<std::uint64_t>(round), 0x20000ULL));
    }
  }
  state.round = round;
  RoundRecord rec;
  rec.round = round;
  rec.loss = training_loss(state.model, train, cfg.lambda);
  const EvalResult ev = evaluate(state.model, test);
  rec.accuracy = ev.accuracy;
  rec.relative_accuracy = ev.relative_accuracy;
  rec.num_selected = static_cast<int>(selected.size());
  state.history.push_back(rec);
  if (!std::isfinite(rec.loss)) state.diverged = true;
}

namespace {

// Fallback receive beamformer for selection modes that do not produce one:
// principal eigenvector of the selected sum channel covariance.
Eigen::VectorXcd matched_sum_beamformer(const ChannelSet& channels,
                                        const std::vector<int>& selected) {
  Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(channels.antennas(), channels.antennas());
  for (int i : selected) cov += channels.h.col(i) * channels.h.col(i).adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(cov);
  return es.eigenvectors().col(channels.antennas() - 1);
}

}  // namespace

TrainState run_training(const Dataset& train, const Dataset& test,
                        const SystemConfig& sys, const TrainConfig& cfg) {
  train.validate();
  test.validate();
  if (cfg.rounds < 1) throw std::invalid_argument("run_training: rounds must be >= 1");
  if (!(cfg.learning_rate >= 0.0)) throw std::invalid_argument("run_training: bad learning rate");
  if (static_cast<int>(train.partition.size()) != sys.num_devices) {
    throw std::invalid_argument("run_training: partition does not match device count");
  }

  AggregationSpec spec;
  {
    std::vector<std::int64_t> sizes;
    sizes.reserve(train.partition.size());
    for (const auto& shard : train.partition) {
      sizes.push_back(static_cast<std::int64_t>(shard.size()));
    }
    spec = make_aggregation_spec(sizes);
  }

  TrainState state;
  state.model = Eigen::VectorXd::Zero(model_dim(train));

  const bool needs_channels = !cfg.noiseless || cfg.mode == SelectionMode::kDc ||
                              cfg.mode == SelectionMode::kBaseline;
  ChannelSet channels;
  std::vector<int> selected;
  Eigen::VectorXcd beamformer;

  auto refresh = [&](int round) {
    if (needs_channels) {
      SystemConfig round_cfg = sys;
      round_cfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(round), 0x30000ULL);
      channels = sample_channels(round_cfg);
    }
    selected.clear();
    beamformer.resize(0);
    switch (cfg.mode) {
      case SelectionMode::kDc: {
        SelectionResult sel = select_devices(channels, spec, sys, cfg.selection);
        selected = std::move(sel.selected);
        beamformer = std::move(sel.beamformer);
        break;
      }
      case SelectionMode::kBaseline: {
        BaselineOptions opts = cfg.baseline;
        opts.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(round), 0x40000ULL);
        SelectionResult sel = select_devices_baseline(channels, spec, sys, opts);
        selected = std::move(sel.selected);
        beamformer = std::move(sel.beamformer);
        break;
      }
      case SelectionMode::kRandom: {
        if (cfg.random_n < 1) throw std::invalid_argument("run_training: random_n must be >= 1");
        const int n_pick = std::min(cfg.random_n, sys.num_devices);
        std::vector<int> pool(static_cast<std::size_t>(sys.num_devices));
        std::iota(pool.begin(), pool.end(), 0);
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(round), 0x50000ULL));
        for (int i = 0; i < n_pick; ++i) {
          std::swap(pool[static_cast<std::size_t>(i)],
                    pool[static_cast<std::size_t>(i + rng.uniform_int(sys.num_devices - i))]);
        }
        selected.assign(pool.begin(), pool.begin() + n_pick);
        std::sort(selected.begin(), selected.end());
        if (!cfg.noiseless) beamformer = matched_sum_beamformer(channels, selected);
        break;
      }
      case SelectionMode::kAll: {
        selected.resize(static_cast<std::size_t>(sys.num_devices));
        std::iota(selected.begin(), selected.end(), 0);
        if (!cfg.noiseless) beamformer = matched_sum_beamformer(channels, selected);
        break;
      }
    }
  };

  refresh(1);
  for (int round = 1; round <= cfg.rounds; ++round) {
    if (round > 1 && cfg.per_round_channels) refresh(round);
    fedavg_round(state, selected, beamformer, channels, spec, sys, cfg, train, test);
    if (state.diverged) break;
  }
  return state;
}

}  // namespace airfed
