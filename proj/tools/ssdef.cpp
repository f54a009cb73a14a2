#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ssdef/eval.hpp"

namespace fs = std::filesystem;
using namespace ssdef;

namespace {

struct CommonFlags {
  std::string config;
  long seed = -1;
  std::string data_dir;
  std::string out;
  std::string checkpoint;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required = true) {
  auto* c = cmd->add_option("--config", f.config, "experiment config file");
  if (config_required) c->required();
  cmd->add_option("--seed", f.seed, "override the config's global seed");
  cmd->add_option("--data-dir", f.data_dir, "override the dataset directory");
  cmd->add_option("--out", f.out, "override the output directory");
  cmd->add_option("--checkpoint", f.checkpoint, "override the model checkpoint path");
}

ExperimentConfig load_config(const CommonFlags& f) {
  ExperimentConfig cfg = ExperimentConfig::load(f.config);
  if (f.seed >= 0) cfg.seed = static_cast<std::uint64_t>(f.seed);
  if (!f.data_dir.empty()) {
    cfg.data_dir = f.data_dir;
    cfg.data_source = "cifar10";
  }
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (!f.checkpoint.empty()) {
    cfg.model_checkpoint = f.checkpoint;
    cfg.model_source = "checkpoint";
  }
  return cfg;
}

void write_file(const std::string& path, const std::string& payload) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open for write: " + path);
  f << payload;
}

std::string loss_trace_csv(const std::vector<double>& trace) {
  std::ostringstream os;
  os.precision(12);
  os << "iteration,cross_entropy\n";
  for (std::size_t i = 0; i < trace.size(); ++i) os << i << ',' << trace[i] << '\n';
  return os.str();
}

int cmd_train_classifier(const CommonFlags& f) {
  ExperimentConfig cfg = load_config(f);
  Dataset train = experiment_train_data(cfg);
  Dataset test = experiment_test_data(cfg);
  fs::create_directories(cfg.out_dir);
  const std::string path = (fs::path(cfg.out_dir) / "model.ckpt").string();
  ClassifierSpec spec;
  spec.arch_id = cfg.arch;
  spec.num_classes = train.num_classes;
  spec.seed = mix_seed(cfg.seed, 0xC1A);
  TrainConfig tc = cfg.train;
  tc.seed = mix_seed(cfg.seed, 0x7A1);
  auto trained = train_classifier<double>(spec, train, tc, &test);
  save_checkpoint(trained.checkpoint, path);
  std::cout << "trained " << spec.arch_id << " on " << train.size() << " images ("
            << (cfg.train.mode == TrainMode::Adversarial ? "adversarial" : "standard")
            << "), held-out accuracy " << trained.held_out_accuracy << "\n"
            << "checkpoint: " << path << "\n";
  return 0;
}

int cmd_pretrain_ssl(const CommonFlags& f) {
  ExperimentConfig cfg = load_config(f);
  Dataset train = experiment_train_data(cfg);
  fs::create_directories(cfg.out_dir);
  cfg.ssl_source = "train";
  SslHeads<double> heads = obtain_heads(cfg, train, cfg.out_dir);
  Dataset probe = subset(train, std::min<std::size_t>(train.size(), 256), 1);
  std::cout << "pretrained heads on " << train.size() << " images\n"
            << "  contrastive loss "
            << mean_task_loss(TaskId::Contrastive, heads.contrastive, cfg.ssl_configs,
                              probe, 1)
            << "\n  rotation loss "
            << mean_task_loss(TaskId::Rotation, heads.rotation, cfg.ssl_configs, probe, 1)
            << " (accuracy "
            << rotation_accuracy(heads.rotation, probe, cfg.ssl_configs.rotation) << ")"
            << "\n  inpainting loss "
            << mean_task_loss(TaskId::Inpainting, heads.inpainting, cfg.ssl_configs, probe, 1)
            << "\ncheckpoints in " << cfg.out_dir << "\n";
  return 0;
}

int cmd_attack(const CommonFlags& f) {
  ExperimentConfig cfg = load_config(f);
  require(cfg.attack.kind != "none", "attack: config has attack.kind = none");
  Dataset train = experiment_train_data(cfg);
  Dataset test = experiment_test_data(cfg);
  fs::create_directories(cfg.out_dir);
  Classifier<double> model = obtain_classifier(cfg, train, nullptr);
  SslHeads<double> heads;
  if (cfg.attack.kind == "defense_aware") heads = obtain_heads(cfg, train);

  Dataset ev = subset(test, std::min<std::size_t>(test.size(), cfg.eval_n),
                      mix_seed(cfg.seed, 0xE7A1));
  std::vector<std::uint32_t> idx(ev.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::uint32_t>(i);
  std::vector<int> labels;
  ImageBatch<double> clean = to_image_batch(ev, idx, &labels);

  AttackResult<double> r;
  if (cfg.attack.kind == "fgsm")
    r = fgsm(clean, labels, model, cfg.attack.budget.epsilon);
  else if (cfg.attack.kind == "pgd")
    r = pgd_attack(clean, labels, model, cfg.attack.budget, mix_seed(cfg.seed, 0xA77));
  else {
    ReversalConfig target = cfg.reversal;
    target.mode = cfg.attack.adaptive_target;
    target.seed = mix_seed(cfg.seed, 0xDEF0);
    r = defense_aware_attack(clean, labels, model, heads, cfg.ssl_configs, target,
                             cfg.attack.budget, mix_seed(cfg.seed, 0xA77),
                             cfg.attack.adaptive);
  }

  Checkpoint out;
  out.kind = ModelKind::Tensors;
  out.arch_id = "attack:" + cfg.attack.kind;
  out.tensors.push_back(tensor_from_matrix("adversarial", r.adversarial.data));
  out.tensors.push_back(tensor_from_matrix("clean", clean.data));
  Matd lm(1, labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) lm(0, i) = labels[i];
  out.tensors.push_back(tensor_from_matrix("labels", lm));
  out.in_c = clean.channels;
  out.in_h = clean.height;
  out.in_w = clean.width;
  const std::string tpath = (fs::path(cfg.out_dir) / "attacked.ckpt").string();
  save_checkpoint(out, tpath);
  write_file((fs::path(cfg.out_dir) / "attack_trace.csv").string(),
             loss_trace_csv(r.loss_trace));

  long flips = 0;
  for (auto s : r.success_mask) flips += s;
  std::cout << cfg.attack.kind << " attack, eps = " << cfg.attack.budget.epsilon
            << ", n = " << labels.size() << "\n"
            << "misclassified after attack: " << flips << " ("
            << 100.0 * flips / labels.size() << "%)\n"
            << "max |perturbation| = " << r.perturbation.data.cwiseAbs().maxCoeff() << "\n"
            << "tensors: " << tpath << "\n";
  return 0;
}

int cmd_reverse(const CommonFlags& f, const std::string& input_tensors) {
  ExperimentConfig cfg = load_config(f);
  Dataset train = experiment_train_data(cfg);
  fs::create_directories(cfg.out_dir);
  SslHeads<double> heads = obtain_heads(cfg, train);

  ImageBatch<double> input;
  if (!input_tensors.empty()) {
    Checkpoint t = load_checkpoint(input_tensors);
    const NamedTensor* adv = nullptr;
    for (const auto& nt : t.tensors)
      if (nt.name == "adversarial") adv = &nt;
    require(adv != nullptr, "reverse: no 'adversarial' tensor in " + input_tensors);
    input = ImageBatch<double>(t.in_c, t.in_h, t.in_w, adv->cols);
    input.data = matrix_from_tensor(*adv);
  } else {
    Dataset test = experiment_test_data(cfg);
    Dataset ev = subset(test, std::min<std::size_t>(test.size(), cfg.eval_n),
                        mix_seed(cfg.seed, 0xE7A1));
    std::vector<std::uint32_t> idx(ev.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::uint32_t>(i);
    input = to_image_batch(ev, idx, nullptr);
  }

  for (const auto mode : cfg.modes) {
    if (mode == ReversalMode::None) continue;
    ReversalConfig rcfg = cfg.reversal;
    rcfg.mode = mode;
    rcfg.seed = mix_seed(cfg.seed, 0xDEF0);
    auto res = reverse(input, heads, cfg.ssl_configs, rcfg);
    const std::string name = mode_name(mode);
    write_file((fs::path(cfg.out_dir) / ("reverse_" + name + "_trace.csv")).string(),
               res.trace.to_csv());
    Checkpoint out;
    out.kind = ModelKind::Tensors;
    out.arch_id = "reverse:" + name;
    out.in_c = input.channels;
    out.in_h = input.height;
    out.in_w = input.width;
    out.tensors.push_back(tensor_from_matrix("repaired", res.repaired.data));
    save_checkpoint(out, (fs::path(cfg.out_dir) / ("repaired_" + name + ".ckpt")).string());
    std::cout << name << ": final ||x'-x||_inf = " << res.trace.final_linf
              << ", task grad evals (s/r/i) = " << res.trace.grad_evals.contrastive << "/"
              << res.trace.grad_evals.rotation << "/" << res.trace.grad_evals.inpainting
              << "\n";
  }
  std::cout << "outputs in " << cfg.out_dir << "\n";
  return 0;
}

int cmd_evaluate(const CommonFlags& f) {
  ExperimentConfig cfg = load_config(f);
  EvalReport report = run_experiment(cfg);
  std::cout << report.table() << "\n";
  if (report.cells.size() >= 4) std::cout << significance_table(compare_modes(report));
  std::cout << "report files in " << cfg.out_dir << "\n";
  return 0;
}

int cmd_report(const std::string& dir) {
  const std::string path = (fs::path(dir) / "report.csv").string();
  std::ifstream f(path);
  if (!f) throw DataError("report: cannot open " + path);
  std::string line;
  std::getline(f, line);  // header
  EvalReport report;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    EvalCell c;
    std::istringstream in(line);
    std::string n, correct, acc, se;
    std::getline(in, c.mode, ',');
    std::getline(in, c.condition, ',');
    std::getline(in, n, ',');
    std::getline(in, correct, ',');
    std::getline(in, acc, ',');
    std::getline(in, se, ',');
    c.n = std::stol(n);
    c.correct = std::stol(correct);
    c.accuracy = std::stod(acc);
    c.se = std::stod(se);
    report.cells.push_back(c);
    report.eval_n = c.n;
  }
  require(!report.cells.empty(), "report: empty report.csv");
  std::cout << report.table() << "\n";
  std::vector<std::string> modes;
  for (const auto& c : report.cells)
    if (std::find(modes.begin(), modes.end(), c.mode) == modes.end())
      modes.push_back(c.mode);
  if (modes.size() >= 2) std::cout << significance_table(compare_modes(report));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-supervised test-time defense: training, attacks, reversal, evaluation"};
  app.require_subcommand(1);

  CommonFlags f_train, f_ssl, f_attack, f_reverse, f_eval;
  std::string reverse_input, report_dir = "runs/out";

  add_common(app.add_subcommand("train-classifier", "train and checkpoint a classifier"),
             f_train);
  add_common(app.add_subcommand("pretrain-ssl", "pretrain the three task heads"), f_ssl);
  auto* atk = app.add_subcommand("attack", "generate adversarial examples");
  add_common(atk, f_attack);
  auto* rev = app.add_subcommand("reverse", "run the reversal on inputs");
  add_common(rev, f_reverse);
  rev->add_option("--in", reverse_input, "attacked.ckpt tensor file (default: clean subset)");
  add_common(app.add_subcommand("evaluate", "full paired evaluation -> report files"),
             f_eval);
  auto* rep = app.add_subcommand("report", "render a written report.csv");
  rep->add_option("--out", report_dir, "experiment output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("train-classifier")) return cmd_train_classifier(f_train);
    if (app.got_subcommand("pretrain-ssl")) return cmd_pretrain_ssl(f_ssl);
    if (app.got_subcommand("attack")) return cmd_attack(f_attack);
    if (app.got_subcommand("reverse")) return cmd_reverse(f_reverse, reverse_input);
    if (app.got_subcommand("evaluate")) return cmd_evaluate(f_eval);
    if (app.got_subcommand("report")) return cmd_report(report_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
