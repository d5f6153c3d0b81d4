#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "airfed/experiments.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<double> gamma_db;
  std::vector<int> antennas;
  std::vector<std::string> methods;
  int m = 0, n = 0, trials = 0, threads = -1;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  bool has(const CLI::App& app, const std::string& name) const {
    return app.count(name) > 0;
  }
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file; explicit flags override it");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--trials", f.trials, "Monte-Carlo trials");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--m", f.m, "number of devices");
  cmd->add_option("--n", f.n, "number of BS antennas");
  cmd->add_option("--snr-db", f.snr_db, "transmit SNR P0/sigma^2 in dB");
  cmd->add_option("--gamma-db", f.gamma_db, "MSE requirement grid in dB")->delimiter(',');
  cmd->add_option("--method", f.methods, "methods to run")->delimiter(',');
  cmd->add_option("--antennas", f.antennas, "antenna sweep list")->delimiter(',');
}

airfed::ExperimentConfig build_config(const CLI::App& cmd, const CommonFlags& f,
                                      airfed::ExperimentKind kind) {
  airfed::ExperimentConfig cfg;
  cfg.experiment = kind;
  if (f.has(cmd, "--config")) {
    cfg = airfed::parse_config(f.config_path, cfg);
    cfg.experiment = kind;  // the subcommand wins over the file
  }
  if (f.has(cmd, "--seed")) cfg.seed = f.seed;
  if (f.has(cmd, "--trials")) cfg.trials = f.trials;
  if (f.has(cmd, "--out")) cfg.out_dir = f.out;
  if (f.has(cmd, "--m")) cfg.num_devices = f.m;
  if (f.has(cmd, "--n")) cfg.num_antennas = f.n;
  if (f.has(cmd, "--snr-db")) cfg.snr_db = f.snr_db;
  if (f.has(cmd, "--gamma-db")) cfg.gamma_db = f.gamma_db;
  if (f.has(cmd, "--method")) cfg.methods = f.methods;
  if (f.has(cmd, "--antennas")) cfg.antenna_list = f.antennas;
  cfg.apply_defaults();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Over-the-air federated aggregation experiments"};
  app.require_subcommand(1);

  CommonFlags feas_f, ant_f, sel_f, train_f, cmp_f;
  auto* feas = app.add_subcommand("feasibility", "full-set feasibility probability, DC vs SDR");
  add_common(feas, feas_f);
  auto* ant = app.add_subcommand("antennas", "DC feasibility probability over antenna counts");
  add_common(ant, ant_f);
  auto* sel = app.add_subcommand("select", "mean selected devices per method over gamma");
  add_common(sel, sel_f);
  auto* train = app.add_subcommand("train", "FedAvg training with one selection method");
  add_common(train, train_f);
  auto* cmp = app.add_subcommand("compare", "FedAvg training comparison across methods");
  add_common(cmp, cmp_f);

  struct TrainFlags {
    int rounds = 0, random_n = 0;
    double lr = 0.0;
    bool label_skew = false, per_round = false;
  } tf, cf;
  train->add_option("--rounds", tf.rounds, "communication rounds");
  train->add_option("--learning-rate", tf.lr, "local SGD learning rate");
  train->add_option("--random-n", tf.random_n, "devices per round for method=random");
  train->add_flag("--label-skew", tf.label_skew, "non-IID label-skew partition");
  train->add_flag("--per-round-channels", tf.per_round, "resample channels every round");
  cmp->add_option("--rounds", cf.rounds, "communication rounds");
  cmp->add_option("--learning-rate", cf.lr, "local SGD learning rate");
  cmp->add_option("--random-n", cf.random_n, "devices per round for method=random");
  cmp->add_flag("--label-skew", cf.label_skew, "non-IID label-skew partition");
  cmp->add_flag("--per-round-channels", cf.per_round, "resample channels every round");

  CLI11_PARSE(app, argc, argv);

  try {
    if (feas->parsed()) {
      const auto cfg = build_config(*feas, feas_f, airfed::ExperimentKind::kFeasibility);
      const auto rows = airfed::run_feasibility_experiment(cfg);
      std::printf("feasibility: %zu rows -> %s/feasibility.csv\n", rows.size(),
                  cfg.out_dir.c_str());
    } else if (ant->parsed()) {
      const auto cfg = build_config(*ant, ant_f, airfed::ExperimentKind::kAntennas);
      const auto rows = airfed::run_antennas_experiment(cfg);
      std::printf("antennas: %zu rows -> %s/antennas.csv\n", rows.size(), cfg.out_dir.c_str());
    } else if (sel->parsed()) {
      const auto cfg = build_config(*sel, sel_f, airfed::ExperimentKind::kSelect);
      const auto rows = airfed::run_select_experiment(cfg);
      std::printf("select: %zu rows -> %s/select.csv\n", rows.size(), cfg.out_dir.c_str());
    } else {
      const bool is_compare = cmp->parsed();
      auto& flags = is_compare ? cmp_f : train_f;
      auto& extra = is_compare ? cf : tf;
      auto& cmd = is_compare ? *cmp : *train;
      auto cfg = build_config(cmd, flags,
                              is_compare ? airfed::ExperimentKind::kCompare
                                         : airfed::ExperimentKind::kTrain);
      if (cmd.count("--rounds")) cfg.train.rounds = extra.rounds;
      if (cmd.count("--learning-rate")) cfg.train.learning_rate = extra.lr;
      if (cmd.count("--random-n")) cfg.train.random_n = extra.random_n;
      if (cmd.count("--label-skew")) cfg.train.label_skew = extra.label_skew;
      if (cmd.count("--per-round-channels")) cfg.train.fixed_channels = !extra.per_round;
      const auto curves = airfed::run_train_experiment(cfg);
      std::printf("%s: %zu curves -> %s/train_<method>.csv\n",
                  is_compare ? "compare" : "train", curves.size(), cfg.out_dir.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
