#pragma once

#include <cstdint>
#include <vector>

#include "ssdef/perturbation.hpp"
#include "ssdef/reversal.hpp"
#include "ssdef/zoo.hpp"

namespace ssdef {

template <class S>
struct AttackResult {
  ImageBatch<S> adversarial;
  ImageBatch<S> perturbation;            // adversarial - clean
  std::vector<std::uint8_t> success_mask;  // misclassified after the attack
  std::vector<double> loss_trace;          // cross-entropy per iterate
  long classifier_grad_evals = 0;
  GradEvalCounts task_grad_evals;          // nonzero only for the adaptive attack
};

namespace detail {
inline std::uint64_t attack_init_seed(std::uint64_t seed) {
  return mix_seed(seed, 0xADD);
}

template <class S>
void finish_attack(AttackResult<S>& r, const ImageBatch<S>& clean,
                   const Classifier<S>& classifier, const std::vector<int>& labels) {
  r.perturbation = clean.like_with(r.adversarial.data - clean.data);
  auto pred = predict_labels(classifier, r.adversarial);
  r.success_mask.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    r.success_mask[i] = pred[i] != labels[i];
}
}  // namespace detail

// Single signed-gradient step of size epsilon.
template <class S>
AttackResult<S> fgsm(const ImageBatch<S>& batch, const std::vector<int>& labels,
                     const Classifier<S>& classifier, double epsilon) {
  require(epsilon >= 0, "fgsm: negative epsilon");
  AttackResult<S> r;
  auto ce = cross_entropy_loss(classifier, batch, labels, true);
  r.classifier_grad_evals = 1;
  r.loss_trace.push_back(ce.loss);
  ImageBatch<S> adv =
      batch.like_with(batch.data + S(epsilon) * ce.grad.data.unaryExpr([](S v) {
        return sgn0(v);
      }));
  r.adversarial = project_ball(adv, batch, S(epsilon));
  r.loss_trace.push_back(
      cross_entropy_loss(classifier, r.adversarial, labels, false).loss);
  detail::finish_attack(r, batch, classifier, labels);
  return r;
}

// K iterations of x <- project(x + eta sign(grad L_c)) from a uniform random
// start inside the ball. With K=1, eta=epsilon and no random start this is
// exactly fgsm.
template <class S>
AttackResult<S> pgd_attack(const ImageBatch<S>& batch, const std::vector<int>& labels,
                           const Classifier<S>& classifier, const PerturbationBudget& budget,
                           std::uint64_t seed, bool random_start = true) {
  budget.validate(1);
  AttackResult<S> r;
  ImageBatch<S> x = random_start
                        ? random_init(batch, S(budget.epsilon), detail::attack_init_seed(seed))
                        : batch;
  for (int k = 0; k < budget.iterations; ++k) {
    auto ce = cross_entropy_loss(classifier, x, labels, true);
    r.classifier_grad_evals++;
    r.loss_trace.push_back(ce.loss);
    x.data += S(budget.step_size) * ce.grad.data.unaryExpr([](S v) { return sgn0(v); });
    x = project_ball(x, batch, S(budget.epsilon));
  }
  r.loss_trace.push_back(cross_entropy_loss(classifier, x, labels, false).loss);
  r.adversarial = std::move(x);
  detail::finish_attack(r, batch, classifier, labels);
  return r;
}

enum class AdaptiveMode { Unrolled, Bpda };

struct AdaptiveAttackConfig {
  AdaptiveMode mode = AdaptiveMode::Unrolled;
  // differentiate through the last `unroll_depth` reversal iterations
  // (-1 = all of them); must not exceed the reversal's iteration count.
  int unroll_depth = -1;
  double hvp_delta = 1e-3;  // finite-difference scale for Hessian-vector products
};

namespace detail {

// Hessian-vector product of one weighted task loss via central differences
// of its gradient. The augmentation seed is frozen to the reversal's.
template <class S>
MatX<S> task_hvp(const ImageBatch<S>& shape_like, const MatX<S>& z, const MatX<S>& v,
                 TaskId task, const SslHeads<S>& heads, const SslConfigs& cfgs,
                 std::uint64_t aug_seed, double delta, GradEvalCounts& counts) {
  const double vmax = v.cwiseAbs().maxCoeff();
  if (vmax == 0.0) return MatX<S>::Zero(z.rows(), z.cols());
  const double h = delta / vmax;
  auto grad_at = [&](const MatX<S>& point) -> MatX<S> {
    ImageBatch<S> p = shape_like.like_with(point);
    switch (task) {
      case TaskId::Contrastive: {
        counts.contrastive++;
        auto g = contrastive_loss(p, heads.contrastive, cfgs.contrastive, aug_seed, true);
        return cfgs.weight_s * g.grad.data;
      }
      case TaskId::Rotation: {
        counts.rotation++;
        auto g = rotation_loss(p, heads.rotation, cfgs.rotation, true);
        return cfgs.weight_r * g.grad.data;
      }
      default: {
        counts.inpainting++;
        auto g = inpainting_loss(p, heads.inpainting, cfgs.inpainting, true);
        return cfgs.weight_i * g.grad.data;
      }
    }
  };
  MatX<S> gp = grad_at(z + S(h) * v);
  MatX<S> gm = grad_at(z - S(h) * v);
  return (gp - gm) / S(2.0 * h);
}

}  // namespace detail

// White-box attacker that optimizes through the deployed reversal. Each
// iteration runs the reversal forward, takes grad L_c at its output, and either
// backpropagates through the unrolled update chain (projection and noise
// straight-through, loss weights frozen, curvature via finite-difference HVPs)
// or approximates the reversal Jacobian by identity (BPDA).
template <class S>
AttackResult<S> defense_aware_attack(const ImageBatch<S>& batch,
                                     const std::vector<int>& labels,
                                     const Classifier<S>& classifier,
                                     const SslHeads<S>& heads, const SslConfigs& cfgs,
                                     const ReversalConfig& rcfg,
                                     const PerturbationBudget& budget, std::uint64_t seed,
                                     const AdaptiveAttackConfig& acfg = {}) {
  budget.validate(1);
  rcfg.validate();
  const int K_rev = rcfg.budget.iterations;
  int depth = acfg.unroll_depth < 0 ? K_rev : acfg.unroll_depth;
  require(depth <= K_rev,
          "defense_aware_attack: unroll depth exceeds reversal iterations");

  AttackResult<S> r;
  ImageBatch<S> x = random_init(batch, S(budget.epsilon), detail::attack_init_seed(seed));
  const bool unroll = acfg.mode == AdaptiveMode::Unrolled &&
                      rcfg.mode != ReversalMode::None && !rcfg.sign_steps;
  for (int t = 0; t < budget.iterations; ++t) {
    auto rev = reverse(x, heads, cfgs, rcfg, /*keep_iterates=*/unroll);
    r.task_grad_evals.contrastive += rev.trace.grad_evals.contrastive;
    r.task_grad_evals.rotation += rev.trace.grad_evals.rotation;
    r.task_grad_evals.inpainting += rev.trace.grad_evals.inpainting;
    auto ce = cross_entropy_loss(classifier, rev.repaired, labels, true);
    r.classifier_grad_evals++;
    r.loss_trace.push_back(ce.loss);

    MatX<S> g = ce.grad.data;
    if (unroll) {
      // adjoint of z_k = z_{k-1} - eta (w_s grad L_s + w_aux grad L_aux)
      const auto& its = rev.trace.iterations;
      const int first = static_cast<int>(its.size()) - depth;
      for (int k = static_cast<int>(its.size()) - 1; k >= first; --k) {
        const auto& rec = its[k];
        if (rec.skipped) continue;
        const std::uint64_t aug_seed = detail::reversal_aug_seed(rcfg.seed, rec.iteration);
        const MatX<S>& z = rev.iterates[k];
        MatX<S> correction = detail::task_hvp(batch, z, g, TaskId::Contrastive, heads,
                                              cfgs, aug_seed, acfg.hvp_delta,
                                              r.task_grad_evals) *
                             S(rcfg.budget.step_size * rec.weight_s);
        if (rcfg.mode == ReversalMode::MultiTask)
          correction += detail::task_hvp(batch, z, g, rec.aux_task, heads, cfgs, aug_seed,
                                         acfg.hvp_delta, r.task_grad_evals) *
                        S(rcfg.budget.step_size * rec.weight_aux);
        g -= correction;
      }
    }
    x.data += S(budget.step_size) * g.unaryExpr([](S v) { return sgn0(v); });
    x = project_ball(x, batch, S(budget.epsilon));
  }
  {
    auto rev = reverse(x, heads, cfgs, rcfg);
    r.loss_trace.push_back(
        cross_entropy_loss(classifier, rev.repaired, labels, false).loss);
  }
  r.adversarial = std::move(x);
  // success is judged against the defended pipeline
  r.perturbation = batch.like_with(r.adversarial.data - batch.data);
  auto rev = reverse(r.adversarial, heads, cfgs, rcfg);
  auto pred = predict_labels(classifier, rev.repaired);
  r.success_mask.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    r.success_mask[i] = pred[i] != labels[i];
  return r;
}

}  // namespace ssdef
