#include "ssdef/eval.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ssdef {

namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string format_g(double v, int precision = 12) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

void write_text_file(const std::string& path, const std::string& payload) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open for write: " + path);
  f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!f) throw DataError("write failed: " + path);
}

}  // namespace

std::vector<ReversalMode> parse_modes(const std::string& csv) {
  std::vector<ReversalMode> out;
  std::istringstream in(csv);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    auto b = tok.find_first_not_of(" \t");
    auto e = tok.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    const std::string m = tok.substr(b, e - b + 1);
    if (m == "none")
      out.push_back(ReversalMode::None);
    else if (m == "ssl")
      out.push_back(ReversalMode::SingleTaskContrastive);
    else if (m == "mtl")
      out.push_back(ReversalMode::MultiTask);
    else
      throw ConfigError("config: field reversal.modes has unknown mode '" + m + "'");
  }
  if (out.empty()) throw ConfigError("config: field reversal.modes is empty");
  return out;
}

const EvalCell* EvalReport::find(const std::string& mode, const std::string& condition) const {
  for (const auto& c : cells)
    if (c.mode == mode && c.condition == condition) return &c;
  return nullptr;
}

std::string EvalReport::csv() const {
  std::ostringstream os;
  os << "mode,input_condition,n,correct,accuracy,stderr\n";
  for (const auto& c : cells)
    os << c.mode << ',' << c.condition << ',' << c.n << ',' << c.correct << ','
       << format_g(c.accuracy) << ',' << format_g(c.se) << '\n';
  return os.str();
}

std::string EvalReport::table() const {
  std::ostringstream os;
  os << "classification accuracy (n = " << eval_n << ", attack = " << attack_kind;
  if (attack_kind != "none") os << ", eps = " << format_g(attack_epsilon, 6);
  os << ", seed = " << seed << ")\n";
  os << std::left << std::setw(8) << "mode" << std::setw(12) << "condition"
     << std::setw(10) << "n" << std::setw(10) << "correct" << std::setw(12) << "accuracy"
     << "stderr\n";
  for (const auto& c : cells)
    os << std::left << std::setw(8) << c.mode << std::setw(12) << c.condition
       << std::setw(10) << c.n << std::setw(10) << c.correct << std::setw(12)
       << format_g(c.accuracy, 6) << format_g(c.se, 6) << '\n';
  if (!attacked_hashes.empty()) {
    os << "\npaired attacked-input hash per mode:\n";
    for (const auto& [mode, h] : attacked_hashes)
      os << "  " << std::left << std::setw(8) << mode << std::hex << h << std::dec << '\n';
  }
  os << "\ncost accounting (gradient evaluations):\n";
  os << std::left << std::setw(8) << "mode" << std::setw(14) << "contrastive"
     << std::setw(10) << "rotation" << std::setw(12) << "inpainting" << std::setw(12)
     << "classifier" << "wall_s\n";
  for (const auto& c : costs)
    os << std::left << std::setw(8) << c.mode << std::setw(14) << c.task_grads.contrastive
       << std::setw(10) << c.task_grads.rotation << std::setw(12)
       << c.task_grads.inpainting << std::setw(12) << c.classifier_grads
       << format_g(c.wall_seconds, 4) << '\n';
  return os.str();
}

std::vector<SignificanceRow> compare_modes(const EvalReport& report) {
  std::vector<SignificanceRow> out;
  std::vector<std::string> modes;
  std::vector<std::string> conditions;
  for (const auto& c : report.cells) {
    if (std::find(modes.begin(), modes.end(), c.mode) == modes.end())
      modes.push_back(c.mode);
    if (std::find(conditions.begin(), conditions.end(), c.condition) == conditions.end())
      conditions.push_back(c.condition);
  }
  require(modes.size() >= 2, "compare_modes: need at least two modes");
  for (const auto& cond : conditions)
    for (std::size_t i = 0; i < modes.size(); ++i)
      for (std::size_t j = i + 1; j < modes.size(); ++j) {
        const EvalCell* a = report.find(modes[i], cond);
        const EvalCell* b = report.find(modes[j], cond);
        if (!a || !b) continue;
        require(a->n == b->n, "compare_modes: mismatched n between modes");
        SignificanceRow row;
        row.condition = cond;
        row.mode_a = modes[i];
        row.mode_b = modes[j];
        row.test = two_proportion_z(a->correct, a->n, b->correct, b->n);
        out.push_back(row);
      }
  return out;
}

std::string significance_table(const std::vector<SignificanceRow>& rows) {
  std::ostringstream os;
  os << "two-proportion z tests (95% two-sided):\n";
  os << std::left << std::setw(12) << "condition" << std::setw(14) << "pair"
     << std::setw(12) << "diff" << std::setw(10) << "z" << "significant\n";
  for (const auto& r : rows)
    os << std::left << std::setw(12) << r.condition << std::setw(14)
       << (r.mode_a + "-" + r.mode_b) << std::setw(12) << format_g(r.test.diff, 6)
       << std::setw(10) << format_g(r.test.z, 5)
       << (r.test.significant_95 ? "yes" : "no") << '\n';
  return os.str();
}

EvalReport evaluate(const Classifier<double>& model, const SslHeads<double>& heads,
                    const SslConfigs& cfgs, const Dataset& eval_data,
                    const AttackSpec& attack, const std::vector<ReversalMode>& modes,
                    const ReversalConfig& rev_template, std::uint64_t seed, long n,
                    int eval_batch, bool want_traces) {
  attack.validate();
  require(n > 0, "evaluate: n must be positive");
  require(!modes.empty(), "evaluate: no reversal modes given");
  require(static_cast<std::size_t>(n) <= eval_data.size(),
          "evaluate: n exceeds evaluation dataset size");
  const bool attacked_cond = attack.kind != "none";

  Dataset ev = subset(eval_data, static_cast<std::size_t>(n), mix_seed(seed, 0xE7A1));
  const auto chunks = epoch_batches(ev.size(), eval_batch, mix_seed(seed, 0xBA7C));

  struct ModeState {
    long clean_correct = 0, attacked_correct = 0;
    GradEvalCounts task_grads;
    double wall = 0;
    std::uint64_t attacked_hash = 0xcbf29ce484222325ULL;
  };
  std::map<std::string, ModeState> st;
  ModeCost attack_cost;
  attack_cost.mode = "attack";

  EvalReport report;
  report.attack_kind = attack.kind;
  report.attack_epsilon = attacked_cond ? attack.budget.epsilon : 0.0;
  report.eval_n = n;
  report.seed = seed;

  for (std::size_t bi = 0; bi < chunks.size(); ++bi) {
    std::vector<int> labels;
    ImageBatch<double> clean = to_image_batch(ev, chunks[bi], &labels);

    ImageBatch<double> attacked;
    if (attacked_cond) {
      const std::uint64_t aseed = mix_seed(seed, 0xA77AC0 + bi);
      const auto t0 = std::chrono::steady_clock::now();
      if (attack.kind == "fgsm") {
        auto r = fgsm(clean, labels, model, attack.budget.epsilon);
        attacked = std::move(r.adversarial);
        attack_cost.classifier_grads += r.classifier_grad_evals;
      } else if (attack.kind == "pgd") {
        auto r = pgd_attack(clean, labels, model, attack.budget, aseed);
        attacked = std::move(r.adversarial);
        attack_cost.classifier_grads += r.classifier_grad_evals;
      } else {  // defense_aware
        ReversalConfig target = rev_template;
        target.mode = attack.adaptive_target;
        target.seed = mix_seed(seed, 0xDEF0 + bi);
        auto r = defense_aware_attack(clean, labels, model, heads, cfgs, target,
                                      attack.budget, aseed, attack.adaptive);
        attacked = std::move(r.adversarial);
        attack_cost.classifier_grads += r.classifier_grad_evals;
        attack_cost.task_grads.contrastive += r.task_grad_evals.contrastive;
        attack_cost.task_grads.rotation += r.task_grad_evals.rotation;
        attack_cost.task_grads.inpainting += r.task_grad_evals.inpainting;
      }
      attack_cost.wall_seconds += seconds_since(t0);
    }

    for (const auto mode : modes) {
      auto& ms = st[mode_name(mode)];
      ReversalConfig rcfg = rev_template;
      rcfg.mode = mode;
      rcfg.seed = mix_seed(seed, 0xDEF0 + bi);

      const auto t0 = std::chrono::steady_clock::now();
      auto clean_pred = defend_and_classify(clean, model, heads, cfgs, rcfg);
      for (std::size_t i = 0; i < labels.size(); ++i)
        ms.clean_correct += clean_pred.labels[i] == labels[i];
      ms.task_grads.contrastive += clean_pred.trace.grad_evals.contrastive;
      ms.task_grads.rotation += clean_pred.trace.grad_evals.rotation;
      ms.task_grads.inpainting += clean_pred.trace.grad_evals.inpainting;
      if (want_traces && bi == 0 && mode != ReversalMode::None)
        report.traces[std::string(mode_name(mode)) + "_clean.csv"] =
            clean_pred.trace.to_csv();

      if (attacked_cond) {
        // paired evaluation: hash the exact tensor this mode consumes
        ms.attacked_hash = fnv1a64(attacked.data.data(),
                                   sizeof(double) * attacked.data.size(),
                                   ms.attacked_hash);
        auto att_pred = defend_and_classify(attacked, model, heads, cfgs, rcfg);
        for (std::size_t i = 0; i < labels.size(); ++i)
          ms.attacked_correct += att_pred.labels[i] == labels[i];
        ms.task_grads.contrastive += att_pred.trace.grad_evals.contrastive;
        ms.task_grads.rotation += att_pred.trace.grad_evals.rotation;
        ms.task_grads.inpainting += att_pred.trace.grad_evals.inpainting;
        if (want_traces && bi == 0 && mode != ReversalMode::None)
          report.traces[std::string(mode_name(mode)) + "_attacked.csv"] =
              att_pred.trace.to_csv();
      }
      ms.wall += seconds_since(t0);
    }
  }

  for (const auto mode : modes) {
    const std::string name = mode_name(mode);
    const auto& ms = st[name];
    EvalCell clean_cell;
    clean_cell.mode = name;
    clean_cell.condition = "clean";
    clean_cell.n = n;
    clean_cell.correct = ms.clean_correct;
    clean_cell.accuracy = double(ms.clean_correct) / n;
    clean_cell.se = binomial_se(clean_cell.accuracy, n);
    report.cells.push_back(clean_cell);
    if (attacked_cond) {
      EvalCell att;
      att.mode = name;
      att.condition = "attacked";
      att.n = n;
      att.correct = ms.attacked_correct;
      att.accuracy = double(ms.attacked_correct) / n;
      att.se = binomial_se(att.accuracy, n);
      report.cells.push_back(att);
      report.attacked_hashes.emplace_back(name, ms.attacked_hash);
    }
    ModeCost cost;
    cost.mode = name;
    cost.task_grads = ms.task_grads;
    cost.wall_seconds = ms.wall;
    report.costs.push_back(cost);
  }
  if (attacked_cond) {
    report.costs.push_back(attack_cost);
    for (const auto& [name, h] : report.attacked_hashes)
      require(h == report.attacked_hashes.front().second,
              "evaluate: paired evaluation violated (attacked tensors differ)");
  }
  return report;
}

// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from_ini(IniFile::parse_file(path));
}

ExperimentConfig ExperimentConfig::from_ini(const IniFile& ini) {
  ExperimentConfig c;
  c.ini = ini;
  c.seed = static_cast<std::uint64_t>(ini.get_int("experiment", "seed", 7));
  c.out_dir = ini.get_str("experiment", "out_dir", "runs/out");
  c.eval_n = ini.get_int("experiment", "eval_n", 200);
  c.eval_batch = static_cast<int>(ini.get_int("experiment", "eval_batch", 50));
  if (c.eval_n <= 0) throw ConfigError("config: field experiment.eval_n must be > 0");
  if (c.eval_batch < 2)
    throw ConfigError("config: field experiment.eval_batch must be >= 2");

  c.data_source = ini.get_str("data", "source", "synthetic");
  if (c.data_source != "synthetic" && c.data_source != "cifar10")
    throw ConfigError("config: field data.source must be synthetic or cifar10");
  c.data_dir = ini.get_str("data", "data_dir", "");
  if (c.data_source == "cifar10" && c.data_dir.empty())
    throw ConfigError("config: field data.data_dir is required for cifar10");
  c.synth_train_images = static_cast<int>(ini.get_int("data", "num_images", 2000));
  c.synth_test_images = static_cast<int>(ini.get_int("data", "test_images", 600));
  c.num_classes = static_cast<int>(ini.get_int("data", "num_classes", 4));
  c.image_size = static_cast<int>(ini.get_int("data", "image_size", 32));
  c.train_subset = ini.get_int("data", "train_subset", 0);

  c.model_source = ini.get_str("model", "source", "train");
  if (c.model_source != "train" && c.model_source != "checkpoint")
    throw ConfigError("config: field model.source must be train or checkpoint");
  c.model_checkpoint = ini.get_str("model", "checkpoint", "");
  if (c.model_source == "checkpoint" && c.model_checkpoint.empty())
    throw ConfigError("config: field model.checkpoint is required");
  c.arch = ini.get_str("model", "arch", "cls-v1-w12");
  const std::string training = ini.get_str("model", "training", "standard");
  if (training == "standard")
    c.train.mode = TrainMode::Standard;
  else if (training == "adversarial")
    c.train.mode = TrainMode::Adversarial;
  else
    throw ConfigError("config: field model.training must be standard or adversarial");
  c.train.epochs = static_cast<int>(ini.get_int("model", "epochs", 8));
  c.train.batch_size = static_cast<int>(ini.get_int("model", "batch_size", 64));
  c.train.lr = ini.get_num("model", "lr", 1e-3);
  c.train.adv_budget.epsilon = ini.get_num("model", "adv_epsilon", 8.0 / 255.0);
  c.train.adv_budget.step_size = ini.get_num("model", "adv_step_size", 2.0 / 255.0);
  c.train.adv_budget.iterations =
      static_cast<int>(ini.get_int("model", "adv_iterations", 5));

  c.ssl_source = ini.get_str("ssl", "source", "train");
  if (c.ssl_source != "train" && c.ssl_source != "checkpoint")
    throw ConfigError("config: field ssl.source must be train or checkpoint");
  c.ssl_checkpoint_dir = ini.get_str("ssl", "checkpoint_dir", "");
  if (c.ssl_source == "checkpoint" && c.ssl_checkpoint_dir.empty())
    throw ConfigError("config: field ssl.checkpoint_dir is required");
  c.pretrain.epochs = static_cast<int>(ini.get_int("ssl", "epochs", 6));
  c.pretrain.batch_size = static_cast<int>(ini.get_int("ssl", "batch_size", 64));
  c.pretrain.lr = ini.get_num("ssl", "lr", 1e-3);
  c.pretrain.width = static_cast<int>(ini.get_int("ssl", "width", 8));
  c.pretrain.embed_dim = static_cast<int>(ini.get_int("ssl", "embed_dim", 32));

  c.attack.kind = ini.get_str("attack", "kind", "pgd");
  c.attack.budget.epsilon = ini.get_num("attack", "epsilon", 8.0 / 255.0);
  c.attack.budget.step_size = ini.get_num("attack", "step_size", 2.0 / 255.0);
  c.attack.budget.iterations = static_cast<int>(ini.get_int("attack", "iterations", 20));
  const std::string amode = ini.get_str("attack", "adaptive_mode", "unrolled");
  if (amode == "unrolled")
    c.attack.adaptive.mode = AdaptiveMode::Unrolled;
  else if (amode == "bpda")
    c.attack.adaptive.mode = AdaptiveMode::Bpda;
  else
    throw ConfigError("config: field attack.adaptive_mode must be unrolled or bpda");
  c.attack.adaptive.unroll_depth =
      static_cast<int>(ini.get_int("attack", "unroll_depth", -1));
  const std::string target = ini.get_str("attack", "adaptive_target", "mtl");
  c.attack.adaptive_target = parse_modes(target).front();
  c.attack.validate();

  c.modes = parse_modes(ini.get_str("reversal", "modes", "none,ssl,mtl"));
  c.reversal.budget.epsilon = ini.get_num("reversal", "epsilon", 8.0 / 255.0);
  c.reversal.budget.step_size = ini.get_num("reversal", "step_size", 2.0 / 255.0);
  c.reversal.budget.iterations =
      static_cast<int>(ini.get_int("reversal", "iterations", 20));
  c.reversal.sign_steps = ini.get_bool("reversal", "sign_steps", false);
  c.reversal.validate();

  auto& s = c.ssl_configs;
  s.contrastive.temperature = ini.get_num("reversal", "tau", 0.5);
  s.contrastive.negatives_per_anchor =
      static_cast<int>(ini.get_int("reversal", "negatives", 62));
  s.contrastive.augment.crop_scale_min = ini.get_num("reversal", "crop_min", 0.6);
  s.contrastive.augment.crop_scale_max = ini.get_num("reversal", "crop_max", 1.0);
  s.contrastive.augment.brightness = ini.get_num("reversal", "brightness", 0.4);
  s.contrastive.augment.contrast = ini.get_num("reversal", "contrast", 0.4);
  s.contrastive.augment.saturation = ini.get_num("reversal", "saturation", 0.4);
  s.contrastive.augment.hflip_prob = ini.get_num("reversal", "hflip_prob", 0.5);
  s.contrastive.augment.grayscale_prob = ini.get_num("reversal", "grayscale_prob", 0.2);
  s.rotation.num_rotations = static_cast<int>(ini.get_int("reversal", "rotations", 4));
  s.inpainting.center_fraction = ini.get_num("reversal", "mask_fraction", 0.5);
  s.weight_s = ini.get_num("reversal", "weight_s", 1.0);
  s.weight_r = ini.get_num("reversal", "weight_r", 1.0);
  s.weight_i = ini.get_num("reversal", "weight_i", 1.0);
  s.contrastive.validate();
  s.rotation.validate();
  s.inpainting.validate();

  c.write_traces = ini.get_bool("output", "write_traces", true);
  return c;
}

Dataset experiment_train_data(const ExperimentConfig& cfg) {
  Dataset train;
  if (cfg.data_source == "synthetic") {
    SyntheticSpec spec;
    spec.num_images = cfg.synth_train_images;
    spec.image_size = cfg.image_size;
    spec.num_classes = cfg.num_classes;
    spec.seed = mix_seed(cfg.seed, 0x7DA7A);
    spec.split = Split::Train;
    train = generate_synthetic(spec);
  } else {
    train = load_cifar10(cfg.data_dir).train;
  }
  if (cfg.train_subset > 0 && static_cast<std::size_t>(cfg.train_subset) < train.size())
    train = subset(train, static_cast<std::size_t>(cfg.train_subset),
                   mix_seed(cfg.seed, 0x5b5));
  return train;
}

Dataset experiment_test_data(const ExperimentConfig& cfg) {
  if (cfg.data_source == "synthetic") {
    SyntheticSpec spec;
    spec.num_images = cfg.synth_test_images;
    spec.image_size = cfg.image_size;
    spec.num_classes = cfg.num_classes;
    spec.seed = mix_seed(cfg.seed, 0x7E57);
    spec.split = Split::Test;
    return generate_synthetic(spec);
  }
  return load_cifar10(cfg.data_dir).test;
}

Classifier<double> obtain_classifier(const ExperimentConfig& cfg, const Dataset& train,
                                     const Dataset* heldout, const std::string& save_path) {
  if (cfg.model_source == "checkpoint") {
    if (!fs::exists(cfg.model_checkpoint))
      throw DataError("model checkpoint not found: " + cfg.model_checkpoint);
    return classifier_from_checkpoint<double>(load_checkpoint(cfg.model_checkpoint));
  }
  ClassifierSpec spec;
  spec.arch_id = cfg.arch;
  spec.num_classes = train.num_classes;
  spec.seed = mix_seed(cfg.seed, 0xC1A);
  TrainConfig tc = cfg.train;
  tc.seed = mix_seed(cfg.seed, 0x7A1);
  auto trained = train_classifier<double>(spec, train, tc, heldout);
  if (!save_path.empty()) save_checkpoint(trained.checkpoint, save_path);
  return std::move(trained.model);
}

SslHeads<double> obtain_heads(const ExperimentConfig& cfg, const Dataset& train,
                              const std::string& save_dir) {
  SslHeads<double> heads;
  if (cfg.ssl_source == "checkpoint") {
    for (TaskId t : {TaskId::Contrastive, TaskId::Rotation, TaskId::Inpainting}) {
      const std::string path =
          (fs::path(cfg.ssl_checkpoint_dir) / ("ssl_" + std::string(task_name(t)) + ".ckpt"))
              .string();
      if (!fs::exists(path)) throw DataError("ssl checkpoint not found: " + path);
      auto head = head_from_checkpoint<double>(load_checkpoint(path));
      switch (t) {
        case TaskId::Contrastive: heads.contrastive = std::move(head); break;
        case TaskId::Rotation: heads.rotation = std::move(head); break;
        case TaskId::Inpainting: heads.inpainting = std::move(head); break;
      }
    }
    return heads;
  }
  PretrainConfig pc = cfg.pretrain;
  pc.seed = mix_seed(cfg.seed, 0x551);
  heads = pretrain_all_heads<double>(train, cfg.ssl_configs, pc);
  if (!save_dir.empty()) {
    fs::create_directories(save_dir);
    CheckpointMeta meta;
    meta.dataset_hash = train.content_hash;
    meta.epochs = pc.epochs;
    meta.seed = pc.seed;
    save_checkpoint(checkpoint_from_head(heads.contrastive, meta),
                    (fs::path(save_dir) / "ssl_contrastive.ckpt").string());
    save_checkpoint(checkpoint_from_head(heads.rotation, meta),
                    (fs::path(save_dir) / "ssl_rotation.ckpt").string());
    save_checkpoint(checkpoint_from_head(heads.inpainting, meta),
                    (fs::path(save_dir) / "ssl_inpainting.ckpt").string());
  }
  return heads;
}

void write_report_files(const EvalReport& report, const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_text_file((fs::path(out_dir) / "report.csv").string(), report.csv());
  std::string txt = report.table();
  if (report.cells.size() >= 4) {
    txt += "\n";
    txt += significance_table(compare_modes(report));
  }
  if (!report.config_echo.empty()) txt += "\nconfig echo:\n" + report.config_echo;
  write_text_file((fs::path(out_dir) / "report.txt").string(), txt);
  if (!report.traces.empty()) {
    fs::create_directories(fs::path(out_dir) / "traces");
    for (const auto& [name, payload] : report.traces)
      write_text_file((fs::path(out_dir) / "traces" / name).string(), payload);
  }
}

EvalReport run_experiment(const ExperimentConfig& cfg) {
  Dataset train = experiment_train_data(cfg);
  Dataset test = experiment_test_data(cfg);
  require(static_cast<std::size_t>(cfg.eval_n) <= test.size(),
          "run_experiment: eval_n exceeds test split size");

  fs::create_directories(cfg.out_dir);
  Classifier<double> model = obtain_classifier(
      cfg, train, &test, (fs::path(cfg.out_dir) / "model.ckpt").string());
  SslHeads<double> heads = obtain_heads(cfg, train, cfg.out_dir);

  EvalReport report =
      evaluate(model, heads, cfg.ssl_configs, test, cfg.attack, cfg.modes, cfg.reversal,
               cfg.seed, cfg.eval_n, cfg.eval_batch, cfg.write_traces);
  std::ostringstream echo;
  for (const auto& [sec, kv] : cfg.ini.sections()) {
    echo << "[" << sec << "]\n";
    for (const auto& [k, v] : kv) echo << k << " = " << v << "\n";
  }
  report.config_echo = echo.str();
  write_report_files(report, cfg.out_dir);
  return report;
}

}  // namespace ssdef
