#pragma once

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ssdef/perturbation.hpp"
#include "ssdef/ssl.hpp"
#include "ssdef/zoo.hpp"

namespace ssdef {

enum class ReversalMode { None, SingleTaskContrastive, MultiTask };

inline const char* mode_name(ReversalMode m) {
  switch (m) {
    case ReversalMode::None: return "none";
    case ReversalMode::SingleTaskContrastive: return "ssl";
    case ReversalMode::MultiTask: return "mtl";
  }
  return "?";
}

struct ReversalConfig {
  PerturbationBudget budget{8.0 / 255.0, 2.0 / 255.0, 20};  // eps_v, eta, K
  ReversalMode mode = ReversalMode::MultiTask;
  std::uint64_t seed = 0;
  bool sign_steps = false;  // ablation: sign-of-gradient steps

  void validate() const { budget.validate(0); }
};

struct IterationRecord {
  int iteration = 0;  // 1-based, matching the k = 1..K loop
  double l_s = 0, l_r = 0, l_i = 0, total = 0;
  double linf_dist = 0;  // after projection, vs the reversal anchor
  double weight_s = 0, grad_norm_s = 0, step_norm_s = 0;
  TaskId aux_task = TaskId::Rotation;
  double weight_aux = 0, grad_norm_aux = 0, step_norm_aux = 0;
  bool skipped = false;
};

struct GradEvalCounts {
  long contrastive = 0, rotation = 0, inpainting = 0;
  long per_task_total() const { return contrastive + rotation + inpainting; }
};

struct ReversalTrace {
  std::vector<IterationRecord> iterations;
  double final_linf = 0;
  GradEvalCounts grad_evals;
  int skipped_iterations = 0;

  std::string to_csv() const {
    std::ostringstream os;
    os << "iteration,l_s,l_r,l_i,total,linf_dist\n";
    os.precision(12);
    for (const auto& r : iterations)
      os << r.iteration << ',' << r.l_s << ',' << r.l_r << ',' << r.l_i << ','
         << r.total << ',' << r.linf_dist << '\n';
    return os.str();
  }
};

template <class S>
struct ReversalResult {
  ImageBatch<S> repaired;
  ReversalTrace trace;
  // iterates[k] is the point where iteration k+1 evaluated its losses;
  // kept only on request (used by the unrolled defense-aware attacker).
  std::vector<MatX<S>> iterates;
};

namespace detail {

// per-iteration augmentation seed; shared by every mode so that collapse
// checks (multi-task with zeroed aux weights vs single-task) line up.
inline std::uint64_t reversal_aug_seed(std::uint64_t seed, int k) {
  return mix_seed(seed, 0xA110 + static_cast<std::uint64_t>(k));
}
inline std::uint64_t reversal_noise_seed(std::uint64_t seed) {
  return mix_seed(seed, 0x1717);
}

}  // namespace detail

// Alternating loss-weighted descent on the self-supervised bundle:
//   x' <- x + n
//   for k = 1..K:
//     L = L_s + L_r + L_i          (at the current iterate)
//     x' <- x' - eta (L_s/L) grad L_s
//     x' <- x' - eta (L_t/L) grad L_t   (t = rotation on even k, inpainting on odd)
//     x' <- project(x', anchor=x, eps_v) then clamp to [0,1]
// Losses whose static weight is zero contribute nothing to L or the steps.
template <class S>
ReversalResult<S> reverse_multitask(const ImageBatch<S>& input, const SslHeads<S>& heads,
                                    const SslConfigs& cfgs, const ReversalConfig& rcfg,
                                    bool keep_iterates = false) {
  rcfg.validate();
  require(rcfg.mode == ReversalMode::MultiTask, "reverse_multitask: wrong mode");
  require(heads.all_trained(), "reverse_multitask: heads must be trained");

  const double eps = rcfg.budget.epsilon;
  const double eta = rcfg.budget.step_size;
  const int K = rcfg.budget.iterations;

  ReversalResult<S> out;
  ImageBatch<S> x = random_init(input, S(eps), detail::reversal_noise_seed(rcfg.seed));
  bool warned = false;
  for (int k = 1; k <= K; ++k) {
    if (keep_iterates) out.iterates.push_back(x.data);
    const std::uint64_t aug_seed = detail::reversal_aug_seed(rcfg.seed, k);

    auto s = contrastive_loss(x, heads.contrastive, cfgs.contrastive, aug_seed, true);
    out.trace.grad_evals.contrastive++;
    const bool rotation_turn = (k % 2 == 0);
    TaskLoss<S> aux;
    double l_r, l_i;
    if (rotation_turn) {
      aux = rotation_loss(x, heads.rotation, cfgs.rotation, true);
      out.trace.grad_evals.rotation++;
      l_r = cfgs.weight_r * aux.loss;
      l_i = cfgs.weight_i *
            inpainting_loss(x, heads.inpainting, cfgs.inpainting, false).loss;
    } else {
      aux = inpainting_loss(x, heads.inpainting, cfgs.inpainting, true);
      out.trace.grad_evals.inpainting++;
      l_i = cfgs.weight_i * aux.loss;
      l_r = cfgs.weight_r * rotation_loss(x, heads.rotation, cfgs.rotation, false).loss;
    }
    const double l_s = cfgs.weight_s * s.loss;
    const double aux_w_static = rotation_turn ? cfgs.weight_r : cfgs.weight_i;
    const double total = l_s + l_r + l_i;

    IterationRecord rec;
    rec.iteration = k;
    rec.l_s = l_s;
    rec.l_r = l_r;
    rec.l_i = l_i;
    rec.total = total;
    rec.aux_task = rotation_turn ? TaskId::Rotation : TaskId::Inpainting;

    if (total <= 0.0) {
      rec.skipped = true;
      out.trace.skipped_iterations++;
      if (!warned) {
        std::cerr << "[ssdef] reversal: zero task-loss total at iteration " << k
                  << "; skipping update\n";
        warned = true;
      }
    } else {
      const double w_s = loss_weight(l_s, total);
      const double w_aux = loss_weight(rotation_turn ? l_r : l_i, total);
      MatX<S> g_s = cfgs.weight_s * s.grad.data;
      MatX<S> g_aux = aux_w_static * aux.grad.data;
      if (rcfg.sign_steps) {
        g_s = g_s.unaryExpr([](S v) { return sgn0(v); });
        g_aux = g_aux.unaryExpr([](S v) { return sgn0(v); });
      }
      rec.weight_s = w_s;
      rec.grad_norm_s = g_s.norm();
      rec.weight_aux = w_aux;
      rec.grad_norm_aux = g_aux.norm();
      MatX<S> step_s = S(eta * w_s) * g_s;
      MatX<S> step_aux = S(eta * w_aux) * g_aux;
      rec.step_norm_s = step_s.norm();
      rec.step_norm_aux = step_aux.norm();
      x.data -= step_s;
      x.data -= step_aux;
    }
    x = project_ball(x, input, S(eps));
    rec.linf_dist = linf_distance(x, input);
    out.trace.iterations.push_back(rec);
  }
  out.trace.final_linf = linf_distance(x, input);
  out.repaired = std::move(x);
  return out;
}

// Table-1 "SSL" baseline: same loop, contrastive term only, unit weight.
template <class S>
ReversalResult<S> reverse_singletask(const ImageBatch<S>& input, const SslHeads<S>& heads,
                                     const SslConfigs& cfgs, const ReversalConfig& rcfg,
                                     bool keep_iterates = false) {
  rcfg.validate();
  require(rcfg.mode == ReversalMode::SingleTaskContrastive,
          "reverse_singletask: wrong mode");
  require(heads.contrastive.trained, "reverse_singletask: head must be trained");

  const double eps = rcfg.budget.epsilon;
  const double eta = rcfg.budget.step_size;
  const int K = rcfg.budget.iterations;

  ReversalResult<S> out;
  ImageBatch<S> x = random_init(input, S(eps), detail::reversal_noise_seed(rcfg.seed));
  for (int k = 1; k <= K; ++k) {
    if (keep_iterates) out.iterates.push_back(x.data);
    const std::uint64_t aug_seed = detail::reversal_aug_seed(rcfg.seed, k);
    auto s = contrastive_loss(x, heads.contrastive, cfgs.contrastive, aug_seed, true);
    out.trace.grad_evals.contrastive++;

    IterationRecord rec;
    rec.iteration = k;
    rec.l_s = s.loss;
    rec.total = s.loss;
    rec.weight_s = 1.0;
    MatX<S> g = s.grad.data;
    if (rcfg.sign_steps) g = g.unaryExpr([](S v) { return sgn0(v); });
    rec.grad_norm_s = g.norm();
    MatX<S> step = S(eta) * g;
    rec.step_norm_s = step.norm();
    x.data -= step;
    x = project_ball(x, input, S(eps));
    rec.linf_dist = linf_distance(x, input);
    out.trace.iterations.push_back(rec);
  }
  out.trace.final_linf = linf_distance(x, input);
  out.repaired = std::move(x);
  return out;
}

template <class S>
ReversalResult<S> reverse(const ImageBatch<S>& input, const SslHeads<S>& heads,
                          const SslConfigs& cfgs, const ReversalConfig& rcfg,
                          bool keep_iterates = false) {
  switch (rcfg.mode) {
    case ReversalMode::None: {
      ReversalResult<S> out;
      out.repaired = input;
      return out;
    }
    case ReversalMode::SingleTaskContrastive:
      return reverse_singletask(input, heads, cfgs, rcfg, keep_iterates);
    case ReversalMode::MultiTask:
      return reverse_multitask(input, heads, cfgs, rcfg, keep_iterates);
  }
  throw std::invalid_argument("reverse: bad mode");
}

template <class S>
struct DefendedPrediction {
  std::vector<int> labels;
  ReversalTrace trace;
};

// y_hat = F(x') on the repaired batch (mode None: F on the raw input).
template <class S>
DefendedPrediction<S> defend_and_classify(const ImageBatch<S>& input,
                                          const Classifier<S>& classifier,
                                          const SslHeads<S>& heads, const SslConfigs& cfgs,
                                          const ReversalConfig& rcfg) {
  DefendedPrediction<S> out;
  if (rcfg.mode == ReversalMode::None) {
    out.labels = predict_labels(classifier, input);
    return out;
  }
  auto rev = reverse(input, heads, cfgs, rcfg);
  out.labels = predict_labels(classifier, rev.repaired);
  out.trace = std::move(rev.trace);
  return out;
}

}  // namespace ssdef
