#include "airfed/experiments.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace airfed {

namespace {

using nlohmann::json;

std::vector<double> default_gamma_grid() {
  std::vector<double> g;
  for (double v = -10.0; v <= 15.0 + 1e-9; v += 2.5) g.push_back(v);
  return g;
}

void parallel_for(int tasks, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, tasks));
  if (threads == 1) {
    for (int t = 0; t < tasks; ++t) fn(t);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int t = next.fetch_add(1);
        if (t >= tasks) return;
        try {
          fn(t);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

void ensure_out_dir(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
}

std::ofstream open_output(const ExperimentConfig& cfg, const std::string& name) {
  ensure_out_dir(cfg);
  const auto path = std::filesystem::path(cfg.out_dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path.string());
  return out;
}

void write_seed_header(std::ostream& out, const ExperimentConfig& cfg) {
  out << "# master_seed=" << cfg.seed << "\n";
  out << "# trial_seed_rule=splitmix64(master_seed XOR splitmix64(trial+1))\n";
}

void write_effective_config(const ExperimentConfig& cfg) {
  auto out = open_output(cfg, "effective_config.json");
  out << config_to_json(cfg) << "\n";
}

void write_metadata(const ExperimentConfig& cfg, const std::string& name, json extra) {
  extra["experiment"] = experiment_name(cfg.experiment);
  extra["master_seed"] = cfg.seed;
  extra["trial_seed_rule"] = "splitmix64(master_seed XOR splitmix64(trial+1))";
  auto out = open_output(cfg, name);
  out << extra.dump(2) << "\n";
}

SystemConfig make_system(const ExperimentConfig& cfg, double gamma_db, std::uint64_t seed) {
  SystemConfig sys;
  sys.num_devices = cfg.num_devices;
  sys.num_antennas = cfg.num_antennas;
  sys.noise_power = 1.0;
  sys.transmit_power = db_to_linear(cfg.snr_db);
  sys.mse_target = db_to_linear(gamma_db);
  sys.seed = seed;
  return sys;
}

std::vector<int> all_devices(int m) {
  std::vector<int> s(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) s[static_cast<std::size_t>(i)] = i;
  return s;
}

}  // namespace

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

std::string experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kFeasibility: return "feasibility";
    case ExperimentKind::kAntennas: return "antennas";
    case ExperimentKind::kSelect: return "select";
    case ExperimentKind::kTrain: return "train";
    case ExperimentKind::kCompare: return "compare";
  }
  throw std::logic_error("unknown experiment kind");
}

ExperimentKind experiment_from_name(const std::string& name) {
  if (name == "feasibility") return ExperimentKind::kFeasibility;
  if (name == "antennas") return ExperimentKind::kAntennas;
  if (name == "select") return ExperimentKind::kSelect;
  if (name == "train") return ExperimentKind::kTrain;
  if (name == "compare") return ExperimentKind::kCompare;
  throw std::runtime_error("unknown experiment name: '" + name + "'");
}

void ExperimentConfig::apply_defaults() {
  if (gamma_db.empty()) {
    gamma_db = (experiment == ExperimentKind::kTrain || experiment == ExperimentKind::kCompare)
                   ? std::vector<double>{5.0}
                   : default_gamma_grid();
  }
  if (methods.empty()) {
    switch (experiment) {
      case ExperimentKind::kFeasibility:
        methods = {"dc", "sdr"};
        break;
      case ExperimentKind::kAntennas:
        methods = {"dc"};
        break;
      case ExperimentKind::kSelect:
        methods = {"dc", "l1_sdr", "reweighted_l2_sdr"};
        break;
      case ExperimentKind::kTrain:
        methods = {"dc"};
        break;
      case ExperimentKind::kCompare:
        methods = {"dc", "l1_sdr", "reweighted_l2_sdr", "benchmark"};
        break;
    }
  }
}

void ExperimentConfig::validate() const {
  if (num_devices < 1) throw std::runtime_error("config: m must be >= 1");
  if (num_antennas < 1) throw std::runtime_error("config: n must be >= 1");
  if (trials < 1) throw std::runtime_error("config: trials must be >= 1");
  if (gamma_db.empty()) throw std::runtime_error("config: gamma grid must be nonempty");
  if (methods.empty()) throw std::runtime_error("config: method list must be nonempty");
  if (antenna_list.empty()) throw std::runtime_error("config: antenna list must be nonempty");
  if (out_dir.empty()) throw std::runtime_error("config: output directory must be set");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

json train_to_json(const TrainSettings& t) {
  return json{{"rounds", t.rounds},
              {"local_epochs", t.local_epochs},
              {"batch_size", t.batch_size},
              {"learning_rate", t.learning_rate},
              {"lambda", t.lambda},
              {"fixed_channels", t.fixed_channels},
              {"random_n", t.random_n},
              {"examples", t.train_examples},
              {"test_examples", t.test_examples},
              {"features", t.features},
              {"classes", t.classes},
              {"label_skew", t.label_skew}};
}

template <typename T>
T get_typed(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::runtime_error("config: key '" + key + "' has the wrong type");
  }
}

void parse_train(const json& j, TrainSettings& t) {
  static const std::set<std::string> known = {
      "rounds", "local_epochs", "batch_size", "learning_rate", "lambda",
      "fixed_channels", "random_n", "examples", "test_examples", "features",
      "classes", "label_skew"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw std::runtime_error("config: unknown key 'train." + it.key() + "'");
    }
  }
  if (j.contains("rounds")) t.rounds = get_typed<int>(j, "rounds");
  if (j.contains("local_epochs")) t.local_epochs = get_typed<int>(j, "local_epochs");
  if (j.contains("batch_size")) t.batch_size = get_typed<int>(j, "batch_size");
  if (j.contains("learning_rate")) t.learning_rate = get_typed<double>(j, "learning_rate");
  if (j.contains("lambda")) t.lambda = get_typed<double>(j, "lambda");
  if (j.contains("fixed_channels")) t.fixed_channels = get_typed<bool>(j, "fixed_channels");
  if (j.contains("random_n")) t.random_n = get_typed<int>(j, "random_n");
  if (j.contains("examples")) t.train_examples = get_typed<int>(j, "examples");
  if (j.contains("test_examples")) t.test_examples = get_typed<int>(j, "test_examples");
  if (j.contains("features")) t.features = get_typed<int>(j, "features");
  if (j.contains("classes")) t.classes = get_typed<int>(j, "classes");
  if (j.contains("label_skew")) t.label_skew = get_typed<bool>(j, "label_skew");
}

}  // namespace

ExperimentConfig parse_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("config: parse failure in '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("config: top level must be an object");

  static const std::set<std::string> known = {"experiment", "m",       "n",     "snr_db",
                                              "gamma_db",   "antennas", "methods", "trials",
                                              "seed",       "out",     "threads", "train"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw std::runtime_error("config: unknown key '" + it.key() + "'");
    }
  }
  if (!j.contains("experiment")) {
    throw std::runtime_error("config: missing experiment name ('experiment')");
  }
  base.experiment = experiment_from_name(get_typed<std::string>(j, "experiment"));
  if (j.contains("m")) base.num_devices = get_typed<int>(j, "m");
  if (j.contains("n")) base.num_antennas = get_typed<int>(j, "n");
  if (j.contains("snr_db")) base.snr_db = get_typed<double>(j, "snr_db");
  if (j.contains("gamma_db")) base.gamma_db = get_typed<std::vector<double>>(j, "gamma_db");
  if (j.contains("antennas")) base.antenna_list = get_typed<std::vector<int>>(j, "antennas");
  if (j.contains("methods")) base.methods = get_typed<std::vector<std::string>>(j, "methods");
  if (j.contains("trials")) base.trials = get_typed<int>(j, "trials");
  if (j.contains("seed")) base.seed = get_typed<std::uint64_t>(j, "seed");
  if (j.contains("out")) base.out_dir = get_typed<std::string>(j, "out");
  if (j.contains("threads")) base.threads = get_typed<int>(j, "threads");
  if (j.contains("train")) {
    if (!j["train"].is_object()) throw std::runtime_error("config: 'train' must be an object");
    parse_train(j["train"], base.train);
  }
  base.apply_defaults();
  return base;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j{{"experiment", experiment_name(cfg.experiment)},
         {"m", cfg.num_devices},
         {"n", cfg.num_antennas},
         {"snr_db", cfg.snr_db},
         {"gamma_db", cfg.gamma_db},
         {"antennas", cfg.antenna_list},
         {"methods", cfg.methods},
         {"trials", cfg.trials},
         {"seed", cfg.seed},
         {"out", cfg.out_dir},
         {"threads", cfg.threads},
         {"train", train_to_json(cfg.train)}};
  return j.dump(2);
}

std::vector<FeasibilityRow> run_feasibility_experiment(const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  cfg.apply_defaults();
  cfg.validate();
  for (const auto& m : cfg.methods) {
    if (m != "dc" && m != "sdr") {
      throw std::runtime_error("feasibility experiment: unsupported method '" + m + "'");
    }
  }

  const int n_gamma = static_cast<int>(cfg.gamma_db.size());
  const int n_methods = static_cast<int>(cfg.methods.size());
  // successes[gamma][method]
  std::vector<std::vector<std::atomic<int>>> successes(static_cast<std::size_t>(n_gamma));
  for (auto& row : successes) {
    row = std::vector<std::atomic<int>>(static_cast<std::size_t>(n_methods));
  }

  parallel_for(cfg.trials, cfg.threads, [&](int trial) {
    const std::uint64_t trial_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));
    for (int g = 0; g < n_gamma; ++g) {
      const SystemConfig sys = make_system(cfg, cfg.gamma_db[static_cast<std::size_t>(g)], trial_seed);
      const ChannelSet channels = sample_channels(sys);
      const AggregationSpec spec = make_aggregation_spec(
          std::vector<std::int64_t>(static_cast<std::size_t>(cfg.num_devices), 1));
      const Eigen::VectorXd gamma_vec = gamma_per_device(sys.mse_target, spec);
      const std::vector<int> full = all_devices(cfg.num_devices);
      for (int mi = 0; mi < n_methods; ++mi) {
        const std::string& method = cfg.methods[static_cast<std::size_t>(mi)];
        bool ok = false;
        if (method == "dc") {
          ok = dc_subset_feasible(channels, full, gamma_vec);
        } else {
          BaselineOptions opts;
          opts.method = BaselineMethod::kSdr;
          ok = sdr_feasibility(channels, full, gamma_vec, opts,
                               derive_seed(trial_seed, 0xF00DULL + static_cast<std::uint64_t>(g)))
                   .feasible;
        }
        if (ok) successes[static_cast<std::size_t>(g)][static_cast<std::size_t>(mi)]++;
      }
    }
  });

  std::vector<FeasibilityRow> rows;
  for (int g = 0; g < n_gamma; ++g) {
    for (int mi = 0; mi < n_methods; ++mi) {
      FeasibilityRow row;
      row.gamma_db = cfg.gamma_db[static_cast<std::size_t>(g)];
      row.method = cfg.methods[static_cast<std::size_t>(mi)];
      row.probability =
          successes[static_cast<std::size_t>(g)][static_cast<std::size_t>(mi)].load() /
          static_cast<double>(cfg.trials);
      row.trials = cfg.trials;
      rows.push_back(row);
    }
  }

  auto out = open_output(cfg, "feasibility.csv");
  write_seed_header(out, cfg);
  out << "gamma_db,method,prob_feasible,trials\n";
  for (const auto& r : rows) {
    out << format_double(r.gamma_db) << ',' << r.method << ',' << format_double(r.probability)
        << ',' << r.trials << '\n';
  }
  write_metadata(cfg, "feasibility_meta.json",
                 json{{"columns", {"gamma_db", "method", "prob_feasible", "trials"}}});
  write_effective_config(cfg);
  return rows;
}

std::vector<AntennaRow> run_antennas_experiment(const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  cfg.apply_defaults();
  cfg.validate();

  const int n_ant = static_cast<int>(cfg.antenna_list.size());
  const int n_gamma = static_cast<int>(cfg.gamma_db.size());
  std::vector<std::vector<std::atomic<int>>> successes(static_cast<std::size_t>(n_ant));
  for (auto& row : successes) {
    row = std::vector<std::atomic<int>>(static_cast<std::size_t>(n_gamma));
  }

  parallel_for(cfg.trials, cfg.threads, [&](int trial) {
    const std::uint64_t trial_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));
    for (int a = 0; a < n_ant; ++a) {
      for (int g = 0; g < n_gamma; ++g) {
        ExperimentConfig local = cfg;
        local.num_antennas = cfg.antenna_list[static_cast<std::size_t>(a)];
        const SystemConfig sys =
            make_system(local, cfg.gamma_db[static_cast<std::size_t>(g)], trial_seed);
        const ChannelSet channels = sample_channels(sys);
        const AggregationSpec spec = make_aggregation_spec(
            std::vector<std::int64_t>(static_cast<std::size_t>(cfg.num_devices), 1));
        const Eigen::VectorXd gamma_vec = gamma_per_device(sys.mse_target, spec);
        if (dc_subset_feasible(channels, all_devices(cfg.num_devices), gamma_vec)) {
          successes[static_cast<std::size_t>(a)][static_cast<std::size_t>(g)]++;
        }
      }
    }
  });

  std::vector<AntennaRow> rows;
  for (int a = 0; a < n_ant; ++a) {
    for (int g = 0; g < n_gamma; ++g) {
      AntennaRow row;
      row.antennas = cfg.antenna_list[static_cast<std::size_t>(a)];
      row.gamma_db = cfg.gamma_db[static_cast<std::size_t>(g)];
      row.probability = successes[static_cast<std::size_t>(a)][static_cast<std::size_t>(g)].load() /
                        static_cast<double>(cfg.trials);
      row.trials = cfg.trials;
      rows.push_back(row);
    }
  }

  // Monotone-in-N annotation (within one Monte-Carlo standard error of the
  // difference) per gamma point.
  json monotone = json::object();
  for (int g = 0; g < n_gamma; ++g) {
    bool ok = true;
    for (int a = 0; a + 1 < n_ant; ++a) {
      const double p1 = rows[static_cast<std::size_t>(a * n_gamma + g)].probability;
      const double p2 = rows[static_cast<std::size_t>((a + 1) * n_gamma + g)].probability;
      const double se =
          std::sqrt((p1 * (1 - p1) + p2 * (1 - p2)) / static_cast<double>(cfg.trials));
      if (p2 < p1 - se) ok = false;
    }
    monotone[format_double(cfg.gamma_db[static_cast<std::size_t>(g)])] = ok;
  }

  auto out = open_output(cfg, "antennas.csv");
  write_seed_header(out, cfg);
  out << "antennas,gamma_db,prob_feasible,trials\n";
  for (const auto& r : rows) {
    out << r.antennas << ',' << format_double(r.gamma_db) << ',' << format_double(r.probability)
        << ',' << r.trials << '\n';
  }
  write_metadata(cfg, "antennas_meta.json",
                 json{{"columns", {"antennas", "gamma_db", "prob_feasible", "trials"}},
                      {"monotone_nondecreasing_in_antennas", monotone}});
  write_effective_config(cfg);
  return rows;
}

std::vector<SelectRow> run_select_experiment(const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  cfg.apply_defaults();
  cfg.validate();
  for (const auto& m : cfg.methods) {
    if (m != "dc" && m != "l1_sdr" && m != "reweighted_l2_sdr") {
      throw std::runtime_error("select experiment: unsupported method '" + m + "'");
    }
  }

  const int n_gamma = static_cast<int>(cfg.gamma_db.size());
  const int n_methods = static_cast<int>(cfg.methods.size());
  std::vector<int> counts(
      static_cast<std::size_t>(n_gamma * n_methods * cfg.trials), 0);

  parallel_for(cfg.trials, cfg.threads, [&](int trial) {
    const std::uint64_t trial_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));
    for (int g = 0; g < n_gamma; ++g) {
      const SystemConfig sys = make_system(cfg, cfg.gamma_db[static_cast<std::size_t>(g)], trial_seed);
      const ChannelSet channels = sample_channels(sys);
      const AggregationSpec spec = make_aggregation_spec(
          std::vector<std::int64_t>(static_cast<std::size_t>(cfg.num_devices), 1));
      for (int mi = 0; mi < n_methods; ++mi) {
        const std::string& method = cfg.methods[static_cast<std::size_t>(mi)];
        int selected = 0;
        if (method == "dc") {
          selected = static_cast<int>(select_devices(channels, spec, sys).selected.size());
        } else {
          BaselineOptions opts;
          opts.method = method == "l1_sdr" ? BaselineMethod::kL1Sdr
                                           : BaselineMethod::kReweightedL2Sdr;
          opts.seed = derive_seed(trial_seed, 0xBA5EULL + static_cast<std::uint64_t>(g));
          selected =
              static_cast<int>(select_devices_baseline(channels, spec, sys, opts).selected.size());
        }
        counts[static_cast<std::size_t>((g * n_methods + mi) * cfg.trials + trial)] = selected;
      }
    }
  });

  std::vector<SelectRow> rows;
  for (int g = 0; g < n_gamma; ++g) {
    for (int mi = 0; mi < n_methods; ++mi) {
      double mean = 0.0;
      for (int t = 0; t < cfg.trials; ++t) {
        mean += counts[static_cast<std::size_t>((g * n_methods + mi) * cfg.trials + t)];
      }
      mean /= cfg.trials;
      double var = 0.0;
      for (int t = 0; t < cfg.trials; ++t) {
        const double d =
            counts[static_cast<std::size_t>((g * n_methods + mi) * cfg.trials + t)] - mean;
        var += d * d;
      }
      var /= cfg.trials;
      SelectRow row;
      row.gamma_db = cfg.gamma_db[static_cast<std::size_t>(g)];
      row.method = cfg.methods[static_cast<std::size_t>(mi)];
      row.mean_selected = mean;
      row.stddev = std::sqrt(var);
      row.trials = cfg.trials;
      rows.push_back(row);
    }
  }

  auto out = open_output(cfg, "select.csv");
  write_seed_header(out, cfg);
  out << "gamma_db,method,mean_selected,std,trials\n";
  for (const auto& r : rows) {
    out << format_double(r.gamma_db) << ',' << r.method << ',' << format_double(r.mean_selected)
        << ',' << format_double(r.stddev) << ',' << r.trials << '\n';
  }
  write_metadata(cfg, "select_meta.json",
                 json{{"columns", {"gamma_db", "method", "mean_selected", "std", "trials"}}});
  write_effective_config(cfg);
  return rows;
}

namespace {

TrainConfig make_train_config(const ExperimentConfig& cfg, const std::string& method,
                              std::uint64_t seed) {
  TrainConfig tc;
  tc.rounds = cfg.train.rounds;
  tc.local_epochs = cfg.train.local_epochs;
  tc.batch_size = cfg.train.batch_size;
  tc.learning_rate = cfg.train.learning_rate;
  tc.lambda = cfg.train.lambda;
  tc.per_round_channels = !cfg.train.fixed_channels;
  tc.random_n = cfg.train.random_n;
  tc.seed = seed;
  if (method == "dc") {
    tc.mode = SelectionMode::kDc;
  } else if (method == "l1_sdr") {
    tc.mode = SelectionMode::kBaseline;
    tc.baseline.method = BaselineMethod::kL1Sdr;
  } else if (method == "reweighted_l2_sdr") {
    tc.mode = SelectionMode::kBaseline;
    tc.baseline.method = BaselineMethod::kReweightedL2Sdr;
  } else if (method == "random") {
    tc.mode = SelectionMode::kRandom;
  } else if (method == "all") {
    tc.mode = SelectionMode::kAll;
  } else if (method == "benchmark") {
    tc.mode = SelectionMode::kAll;
    tc.noiseless = true;
  } else {
    throw std::runtime_error("train experiment: unsupported method '" + method + "'");
  }
  return tc;
}

}  // namespace

std::vector<TrainCurve> run_train_experiment(const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  cfg.apply_defaults();
  cfg.validate();
  if (cfg.gamma_db.size() != 1) {
    throw std::runtime_error("train experiment: exactly one gamma value expected");
  }

  Dataset train = make_blobs_dataset(cfg.train.train_examples, cfg.train.features,
                                     cfg.train.classes, derive_seed(cfg.seed, 0xDA7AULL));
  Dataset test = make_blobs_dataset(cfg.train.test_examples, cfg.train.features,
                                    cfg.train.classes, derive_seed(cfg.seed, 0xDA7BULL));
  if (cfg.train.label_skew) {
    partition_label_skew(train, cfg.num_devices, 2, derive_seed(cfg.seed, 0xDA7CULL));
  } else {
    partition_iid(train, cfg.num_devices, derive_seed(cfg.seed, 0xDA7CULL));
  }

  const int n_methods = static_cast<int>(cfg.methods.size());
  std::vector<std::vector<TrainState>> states(
      static_cast<std::size_t>(n_methods),
      std::vector<TrainState>(static_cast<std::size_t>(cfg.trials)));

  parallel_for(n_methods * cfg.trials, cfg.threads, [&](int task) {
    const int mi = task / cfg.trials;
    const int trial = task % cfg.trials;
    const std::string& method = cfg.methods[static_cast<std::size_t>(mi)];
    const std::uint64_t trial_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));
    const SystemConfig sys = make_system(cfg, cfg.gamma_db.front(), trial_seed);
    const TrainConfig tc = make_train_config(cfg, method, trial_seed);
    states[static_cast<std::size_t>(mi)][static_cast<std::size_t>(trial)] =
        run_training(train, test, sys, tc);
  });

  std::vector<TrainCurve> curves;
  for (int mi = 0; mi < n_methods; ++mi) {
    TrainCurve curve;
    curve.method = cfg.methods[static_cast<std::size_t>(mi)];
    std::size_t max_rounds = 0;
    for (const auto& st : states[static_cast<std::size_t>(mi)]) {
      max_rounds = std::max(max_rounds, st.history.size());
    }
    curve.rounds.resize(max_rounds);
    for (std::size_t r = 0; r < max_rounds; ++r) {
      RoundRecord avg;
      avg.round = static_cast<int>(r + 1);
      int count = 0;
      double num_selected = 0.0;
      for (const auto& st : states[static_cast<std::size_t>(mi)]) {
        if (r < st.history.size()) {
          avg.loss += st.history[r].loss;
          avg.accuracy += st.history[r].accuracy;
          avg.relative_accuracy += st.history[r].relative_accuracy;
          num_selected += st.history[r].num_selected;
          ++count;
        }
      }
      avg.loss /= count;
      avg.accuracy /= count;
      avg.relative_accuracy /= count;
      avg.num_selected = static_cast<int>(std::lround(num_selected / count));
      curve.rounds[r] = avg;
    }
    curves.push_back(std::move(curve));
  }

  ensure_out_dir(cfg);
  for (const auto& curve : curves) {
    auto out = open_output(cfg, "train_" + curve.method + ".csv");
    write_seed_header(out, cfg);
    out << "round,loss,accuracy,relative_accuracy,num_selected\n";
    for (const auto& r : curve.rounds) {
      out << r.round << ',' << format_double(r.loss) << ',' << format_double(r.accuracy) << ','
          << format_double(r.relative_accuracy) << ',' << r.num_selected << '\n';
    }
  }
  write_metadata(cfg, "train_meta.json",
                 json{{"columns", {"round", "loss", "accuracy", "relative_accuracy",
                                   "num_selected"}},
                      {"gamma_db", cfg.gamma_db.front()}});
  write_effective_config(cfg);
  return curves;
}

}  // namespace airfed
