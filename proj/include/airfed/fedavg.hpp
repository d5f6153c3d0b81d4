#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "airfed/baselines.hpp"
#include "airfed/channel.hpp"
#include "airfed/selection.hpp"

namespace airfed {

// Labeled examples plus their assignment to devices. Labels are class
// indices 0..num_classes-1; binary tasks use num_classes = 2 with the usual
// {-1, +1} margin encoding inside the hinge loss.
struct Dataset {
  Eigen::MatrixXd features;  // examples x features
  std::vector<int> labels;
  int num_classes = 2;
  std::vector<std::vector<int>> partition;  // device -> example indices

  int examples() const { return static_cast<int>(features.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
  void validate() const;
};

// Synthetic Gaussian-blob classification task (desk-scale stand-in for a
// full image dataset).
Dataset make_blobs_dataset(int examples, int features, int num_classes,
                           std::uint64_t seed, double spread = 1.0);

void partition_iid(Dataset& data, int num_devices, std::uint64_t seed);

// Label-skewed partition: each device draws from at most `classes_per_device`
// classes.
void partition_label_skew(Dataset& data, int num_devices, int classes_per_device,
                          std::uint64_t seed);

enum class SelectionMode { kDc, kBaseline, kRandom, kAll };

struct TrainConfig {
  int rounds = 100;
  int local_epochs = 1;
  int batch_size = 32;
  double learning_rate = 0.05;
  double lambda = 1e-3;  // hinge regularization
  SelectionMode mode = SelectionMode::kAll;
  BaselineMethod baseline_method = BaselineMethod::kL1Sdr;
  int random_n = 1;      // devices per round in kRandom mode
  bool per_round_channels = true;
  bool noiseless = false;
  std::uint64_t seed = 0;
  SelectionOptions selection;
  BaselineOptions baseline;
};

struct RoundRecord {
  int round = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double relative_accuracy = 0.0;
  int num_selected = 0;
};

struct TrainState {
  Eigen::VectorXd model;  // one-vs-rest heads, flattened [class][feature..., bias]
  int round = 0;
  std::vector<RoundRecord> history;
  bool diverged = false;
};

// Flattened model dimension for a dataset: num_classes * (features + 1).
int model_dim(const Dataset& data);

// One-vs-rest hinge score of class c.
double class_score(const Eigen::VectorXd& model, const Dataset& data, int example, int c);

// Regularized multiclass hinge objective over the whole dataset:
//   (1/T) sum_i sum_c max(0, 1 - y_ic <z_c, x_i>) + (lambda/2) ||z||^2.
double training_loss(const Eigen::VectorXd& model, const Dataset& data, double lambda);

// Mini-batch SGD on the regularized hinge loss over one device's shard;
// deterministic given the rng state.
Eigen::VectorXd local_update(const Eigen::VectorXd& model, const Dataset& data,
                             int device, const TrainConfig& cfg, Rng& rng);

struct EvalResult {
  double accuracy = 0.0;
  double relative_accuracy = 0.0;  // accuracy * num_classes
};

EvalResult evaluate(const Eigen::VectorXd& model, const Dataset& test);

// One FedAvg round: broadcast, local updates on the selected devices, global
// aggregation (exact weighted average in noiseless mode, simulated AirComp
// otherwise), metric bookkeeping. An empty selection skips the round.
void fedavg_round(TrainState& state, const std::vector<int>& selected,
                  const Eigen::VectorXcd& beamformer, const ChannelSet& channels,
                  const AggregationSpec& spec, const SystemConfig& sys,
                  const TrainConfig& cfg, const Dataset& train, const Dataset& test);

// Full training loop; channels (and hence the selected set) are refreshed
// per round when cfg.per_round_channels is set.
TrainState run_training(const Dataset& train, const Dataset& test,
                        const SystemConfig& sys, const TrainConfig& cfg);

}  // namespace airfed
