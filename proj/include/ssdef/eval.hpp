#pragma once

#include <map>
#include <string>
#include <vector>

#include "ssdef/attack.hpp"
#include "ssdef/checkpoint.hpp"
#include "ssdef/config.hpp"
#include "ssdef/data.hpp"
#include "ssdef/reversal.hpp"
#include "ssdef/stats.hpp"
#include "ssdef/training.hpp"

namespace ssdef {

struct AttackSpec {
  std::string kind = "pgd";  // none | fgsm | pgd | defense_aware
  PerturbationBudget budget{8.0 / 255.0, 2.0 / 255.0, 20};
  AdaptiveAttackConfig adaptive;
  // the deployed reversal the adaptive attacker differentiates through; all
  // compared modes still score the same attacked tensor (paired evaluation)
  ReversalMode adaptive_target = ReversalMode::MultiTask;

  void validate() const {
    require(kind == "none" || kind == "fgsm" || kind == "pgd" || kind == "defense_aware",
            "AttackSpec: unknown kind '" + kind + "'");
    if (kind != "none") budget.validate(1);
  }
};

struct EvalCell {
  std::string mode;       // none | ssl | mtl
  std::string condition;  // clean | attacked
  long n = 0;
  long correct = 0;
  double accuracy = 0;
  double se = 0;
};

struct ModeCost {
  std::string mode;
  GradEvalCounts task_grads;
  long classifier_grads = 0;
  double wall_seconds = 0;
};

struct EvalReport {
  std::vector<EvalCell> cells;
  std::vector<ModeCost> costs;  // per mode, plus one "attack" row
  std::vector<std::pair<std::string, std::uint64_t>> attacked_hashes;  // per mode
  std::string attack_kind = "none";
  double attack_epsilon = 0;
  long eval_n = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> traces;  // file name -> csv payload
  std::string config_echo;

  std::string csv() const;    // deterministic machine-readable report
  std::string table() const;  // human-readable summary (includes timing)
  const EvalCell* find(const std::string& mode, const std::string& condition) const;
};

struct SignificanceRow {
  std::string condition, mode_a, mode_b;
  TwoProportionTest test;
};

std::vector<SignificanceRow> compare_modes(const EvalReport& report);
std::string significance_table(const std::vector<SignificanceRow>& rows);

EvalReport evaluate(const Classifier<double>& model, const SslHeads<double>& heads,
                    const SslConfigs& cfgs, const Dataset& eval_data,
                    const AttackSpec& attack, const std::vector<ReversalMode>& modes,
                    const ReversalConfig& rev_template, std::uint64_t seed, long n,
                    int eval_batch, bool want_traces);

// ---------------------------------------------------------------------------
// Config-driven experiments

struct ExperimentConfig {
  IniFile ini;
  std::uint64_t seed = 7;
  std::string out_dir = "runs/out";
  long eval_n = 200;
  int eval_batch = 50;

  // [data]
  std::string data_source = "synthetic";  // synthetic | cifar10
  std::string data_dir;
  int synth_train_images = 2000, synth_test_images = 600;
  int num_classes = 4, image_size = 32;
  long train_subset = 0;  // 0 = all

  // [model]
  std::string model_source = "train";  // train | checkpoint
  std::string model_checkpoint;
  std::string arch = "cls-v1-w12";
  TrainConfig train;

  // [ssl]
  std::string ssl_source = "train";  // train | checkpoint
  std::string ssl_checkpoint_dir;
  PretrainConfig pretrain;

  AttackSpec attack;
  std::vector<ReversalMode> modes{ReversalMode::None, ReversalMode::SingleTaskContrastive,
                                  ReversalMode::MultiTask};
  ReversalConfig reversal;
  SslConfigs ssl_configs;
  bool write_traces = true;

  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig from_ini(const IniFile& ini);
};

Dataset experiment_train_data(const ExperimentConfig& cfg);
Dataset experiment_test_data(const ExperimentConfig& cfg);
Classifier<double> obtain_classifier(const ExperimentConfig& cfg, const Dataset& train,
                                     const Dataset* heldout,
                                     const std::string& save_path = "");
SslHeads<double> obtain_heads(const ExperimentConfig& cfg, const Dataset& train,
                              const std::string& save_dir = "");

// Full pipeline: data -> model/heads -> attack -> paired evaluation -> files
// (report.csv, report.txt, traces/*.csv). Throws ConfigError / DataError /
// std::runtime_error; the CLI maps these to exit codes 1 / 2 / 3.
EvalReport run_experiment(const ExperimentConfig& cfg);

void write_report_files(const EvalReport& report, const std::string& out_dir);

std::vector<ReversalMode> parse_modes(const std::string& csv);

}  // namespace ssdef
