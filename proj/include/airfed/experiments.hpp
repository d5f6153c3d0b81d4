#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "airfed/fedavg.hpp"

namespace airfed {

enum class ExperimentKind { kFeasibility, kAntennas, kSelect, kTrain, kCompare };

// Training knobs exposed at the experiment boundary.
struct TrainSettings {
  int rounds = 100;
  int local_epochs = 1;
  int batch_size = 32;
  double learning_rate = 0.05;
  double lambda = 1e-3;
  // One channel realization per trial (the paper-style recipe); set false to
  // resample channels and reselect devices every round.
  bool fixed_channels = true;
  int random_n = 10;
  int train_examples = 2000;
  int test_examples = 500;
  int features = 32;
  int classes = 10;
  bool label_skew = false;
};

// SNR and gamma are in dB here and nowhere else; sigma^2 = 1 internally and
// P0 = 10^(snr_db/10).
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kFeasibility;
  int num_devices = 20;
  int num_antennas = 6;
  double snr_db = 20.0;
  std::vector<double> gamma_db;       // default set per experiment
  std::vector<int> antenna_list = {2, 4, 6, 8, 10};
  std::vector<std::string> methods;   // default set per experiment
  int trials = 100;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int threads = 0;                    // 0 = hardware concurrency
  TrainSettings train;

  void apply_defaults();
  void validate() const;
};

double db_to_linear(double db);

std::string experiment_name(ExperimentKind kind);
ExperimentKind experiment_from_name(const std::string& name);

// Loads a JSON config file. Unknown keys, type mismatches and a missing
// experiment name raise std::runtime_error with the offending key in the
// message. Values present in the file override those already in `base`.
ExperimentConfig parse_config(const std::string& path, ExperimentConfig base = {});

// Serializes the full effective config (JSON); written into the output
// directory by every runner so any result can be reproduced bit-exactly.
std::string config_to_json(const ExperimentConfig& cfg);

// Shortest round-trip decimal representation.
std::string format_double(double v);

struct FeasibilityRow {
  double gamma_db = 0.0;
  std::string method;
  double probability = 0.0;
  int trials = 0;
};

struct AntennaRow {
  int antennas = 0;
  double gamma_db = 0.0;
  double probability = 0.0;
  int trials = 0;
};

struct SelectRow {
  double gamma_db = 0.0;
  std::string method;
  double mean_selected = 0.0;
  double stddev = 0.0;
  int trials = 0;
};

struct TrainCurve {
  std::string method;
  std::vector<RoundRecord> rounds;  // trial-averaged
};

// Full-set feasibility probability, DC vs SDR, across the gamma grid.
std::vector<FeasibilityRow> run_feasibility_experiment(const ExperimentConfig& cfg);

// DC feasibility probability across antennas x gamma.
std::vector<AntennaRow> run_antennas_experiment(const ExperimentConfig& cfg);

// Mean number of selected devices per method across the gamma grid.
std::vector<SelectRow> run_select_experiment(const ExperimentConfig& cfg);

// FedAvg training curves per selection method, averaged over channel
// realizations; `benchmark` is all devices aggregated without error.
std::vector<TrainCurve> run_train_experiment(const ExperimentConfig& cfg);

}  // namespace airfed
