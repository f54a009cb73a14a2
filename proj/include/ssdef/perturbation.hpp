#pragma once

#include <cstdint>

#include "ssdef/image_batch.hpp"
#include "ssdef/rng.hpp"

namespace ssdef {

enum class NormOrder { LInf };

// epsilon / step_size are in image-value units ([0,1] scale); a config value
// written "8/255" lands here as 8.0/255.0.
struct PerturbationBudget {
  double epsilon = 8.0 / 255.0;
  double step_size = 2.0 / 255.0;
  int iterations = 20;
  NormOrder norm_order = NormOrder::LInf;

  // Attacks require iterations >= 1; the reversal loop also admits K = 0
  // (noise-only), hence the parameter.
  void validate(int min_iterations = 1) const {
    require(epsilon >= 0.0, "PerturbationBudget: epsilon must be >= 0");
    require(step_size > 0.0, "PerturbationBudget: step_size must be > 0");
    require(iterations >= min_iterations, "PerturbationBudget: too few iterations");
    require(norm_order == NormOrder::LInf, "PerturbationBudget: only L_inf supported");
  }
};

// Clamp into the eps-ball around anchor, then into [0,1]. Ball clamp first:
// for anchors already in range both constraints hold simultaneously.
template <class S>
ImageBatch<S> project_ball(const ImageBatch<S>& candidate, const ImageBatch<S>& anchor,
                           S epsilon) {
  require(candidate.same_shape(anchor), "project_ball: shape mismatch");
  require(epsilon >= S(0), "project_ball: negative epsilon");
  MatX<S> lo = (anchor.data.array() - epsilon).cwiseMax(S(0));
  MatX<S> hi = (anchor.data.array() + epsilon).cwiseMin(S(1));
  return candidate.like_with(candidate.data.cwiseMax(lo).cwiseMin(hi));
}

// anchor + i.i.d. uniform noise on [-eps, eps], projected. Deterministic per seed.
template <class S>
ImageBatch<S> random_init(const ImageBatch<S>& anchor, S epsilon, std::uint64_t seed) {
  require(epsilon >= S(0), "random_init: negative epsilon");
  Rng rng(seed);
  ImageBatch<S> noisy = anchor;
  for (Eigen::Index j = 0; j < noisy.data.cols(); ++j)
    for (Eigen::Index i = 0; i < noisy.data.rows(); ++i)
      noisy.data(i, j) += static_cast<S>(rng.uniform(-double(epsilon), double(epsilon)));
  return project_ball(noisy, anchor, epsilon);
}

// Fraction of the bundle total owned by one task, in [0,1].
inline double loss_weight(double task_loss, double total_loss) {
  require(total_loss > 0.0, "loss_weight: total loss must be > 0");
  require(task_loss >= 0.0, "loss_weight: task loss must be >= 0");
  require(task_loss <= total_loss, "loss_weight: task loss exceeds total");
  return task_loss / total_loss;
}

}  // namespace ssdef
