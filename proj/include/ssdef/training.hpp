#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssdef/attack.hpp"
#include "ssdef/checkpoint.hpp"
#include "ssdef/data.hpp"
#include "ssdef/ssl.hpp"
#include "ssdef/zoo.hpp"

namespace ssdef {

enum class TrainMode { Standard, Adversarial };

struct TrainConfig {
  TrainMode mode = TrainMode::Standard;
  int epochs = 10;
  int batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  // Madry-style: minibatches are replaced by PGD examples from the live model
  PerturbationBudget adv_budget{8.0 / 255.0, 2.0 / 255.0, 7};
};

template <class S>
struct TrainedClassifier {
  Classifier<S> model;
  Checkpoint checkpoint;
  double held_out_accuracy = -1.0;
};

template <class S>
double eval_accuracy(const Classifier<S>& m, const Dataset& d, int batch_size = 200) {
  require(d.size() > 0, "eval_accuracy: empty dataset");
  std::size_t ok = 0;
  for (const auto& chunk : epoch_batches(d.size(), batch_size, 0)) {
    std::vector<int> labels;
    auto b = to_image_batch(d, chunk, &labels);
    auto pred = predict_labels(m, b);
    for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == labels[i];
  }
  return double(ok) / d.size();
}

template <class S>
TrainedClassifier<S> train_classifier(const ClassifierSpec& spec, const Dataset& train,
                                      const TrainConfig& cfg,
                                      const Dataset* heldout = nullptr) {
  require(train.size() > 0, "train_classifier: empty dataset");
  require(cfg.epochs >= 0 && cfg.batch_size >= 1, "train_classifier: bad config");
  require(train.num_classes == spec.num_classes,
          "train_classifier: dataset classes != spec classes");
  if (cfg.mode == TrainMode::Adversarial) cfg.adv_budget.validate(1);

  TrainedClassifier<S> out;
  out.model = build_classifier<S>(spec, train.channels, train.height, train.width);
  auto& net = out.model.net;
  nn::Adam<S> opt(cfg.lr);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto chunks =
        epoch_batches(train.size(), cfg.batch_size, mix_seed(cfg.seed, 31 + epoch));
    for (std::size_t bi = 0; bi < chunks.size(); ++bi) {
      std::vector<int> labels;
      ImageBatch<S> batch;
      {
        auto bd = to_image_batch(train, chunks[bi], &labels);
        batch = ImageBatch<S>(bd.channels, bd.height, bd.width, bd.batch_size());
        batch.data = bd.data.template cast<S>();
      }
      if (cfg.mode == TrainMode::Adversarial) {
        auto adv = pgd_attack(batch, labels, out.model, cfg.adv_budget,
                              mix_seed(cfg.seed, (epoch + 1) * 100003 + bi));
        batch = std::move(adv.adversarial);
      }
      typename nn::Network<S>::Workspace ws;
      MatX<S> logits = net.forward(batch.data, ws);
      MatX<S> dlogits;
      nn::softmax_cross_entropy<S>(logits, labels, &dlogits);
      nn::ParamGrads<S> pg;
      net.backward(dlogits, ws, &pg);
      auto grads = nn::Network<S>::flatten(pg);
      opt.step(net.param_tensors(), grads);
    }
  }
  CheckpointMeta meta;
  meta.dataset_hash = train.content_hash;
  meta.epochs = cfg.epochs;
  meta.seed = cfg.seed;
  if (heldout && heldout->size() > 0) {
    out.held_out_accuracy = eval_accuracy(out.model, *heldout);
    meta.held_out_accuracy = out.held_out_accuracy;
  }
  out.checkpoint = checkpoint_from_classifier(out.model, meta);
  return out;
}

// ---------------------------------------------------------------------------
// Self-supervised head pretraining

struct PretrainConfig {
  int epochs = 5;
  int batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int width = 8;
  int embed_dim = 32;  // contrastive head output
};

template <class S>
SslHead<S> pretrain_head(TaskId task, const Dataset& train, const SslConfigs& cfgs,
                         const PretrainConfig& cfg) {
  require(train.size() > 0, "pretrain_head: empty dataset");
  require(cfg.epochs >= 0 && cfg.batch_size >= 1, "pretrain_head: bad config");

  int outputs = 0;
  switch (task) {
    case TaskId::Contrastive: outputs = cfg.embed_dim; break;
    case TaskId::Rotation: outputs = cfgs.rotation.num_rotations; break;
    case TaskId::Inpainting: outputs = train.channels * train.height * train.width; break;
  }
  SslHead<S> head = build_ssl_head<S>(task, train.channels, train.height, train.width,
                                      outputs, cfg.seed, cfg.width);
  if (cfg.epochs == 0) return head;  // identical to initialization, not trained

  auto& net = head.net;
  nn::Adam<S> opt(cfg.lr);
  const int C = train.channels, H = train.height, W = train.width;
  const VecX<S> m = task == TaskId::Inpainting
                        ? mask_vector<S>(cfgs.inpainting, C, H, W)
                        : VecX<S>();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto chunks =
        epoch_batches(train.size(), cfg.batch_size, mix_seed(cfg.seed, 77 + epoch));
    for (std::size_t bi = 0; bi < chunks.size(); ++bi) {
      std::vector<int> labels;
      auto bd = to_image_batch(train, chunks[bi], &labels);
      ImageBatch<S> batch(bd.channels, bd.height, bd.width, bd.batch_size());
      batch.data = bd.data.template cast<S>();
      const int B = batch.batch_size();
      nn::ParamGrads<S> pg;
      switch (task) {
        case TaskId::Rotation: {
          // all rotations of every image, labeled by k
          const int K = cfgs.rotation.num_rotations;
          MatX<S> xs(batch.data.rows(), static_cast<Eigen::Index>(B) * K);
          std::vector<int> rl(static_cast<std::size_t>(B) * K);
          for (int k = 0; k < K; ++k) {
            ImageBatch<S> xr = rotate(batch, k, 4);
            xs.middleCols(static_cast<Eigen::Index>(k) * B, B) = xr.data;
            for (int b = 0; b < B; ++b) rl[static_cast<std::size_t>(k) * B + b] = k;
          }
          typename nn::Network<S>::Workspace ws;
          MatX<S> logits = net.forward(xs, ws);
          MatX<S> dlogits;
          nn::softmax_cross_entropy<S>(logits, rl, &dlogits);
          net.backward(dlogits, ws, &pg);
          break;
        }
        case TaskId::Inpainting: {
          MatX<S> u = batch.data;
          for (int b = 0; b < B; ++b)
            u.col(b) = u.col(b).cwiseProduct(VecX<S>::Ones(m.size()) - m);
          typename nn::Network<S>::Workspace ws;
          MatX<S> y = net.forward(u, ws);
          MatX<S> r = batch.data - y;
          for (int b = 0; b < B; ++b) r.col(b) = r.col(b).cwiseProduct(m);
          MatX<S> dy = (-2.0 / B) * r;
          net.backward(dy, ws, &pg);
          break;
        }
        case TaskId::Contrastive: {
          if (B < 2) continue;  // no in-batch negatives
          const std::uint64_t vseed = mix_seed(cfg.seed, (epoch + 1) * 7919 + bi);
          Rng aug_rng(mix_seed(vseed, 0xA06));
          MatX<S> views(batch.data.rows(), 2 * B);
          for (int b = 0; b < B; ++b) {
            auto p0 = draw_view_params(cfgs.contrastive.augment, H, W, aug_rng);
            auto p1 = draw_view_params(cfgs.contrastive.augment, H, W, aug_rng);
            augment_forward(batch.data.col(b).data(), views.col(b).data(), C, H, W, p0);
            augment_forward(batch.data.col(b).data(), views.col(B + b).data(), C, H, W, p1);
          }
          typename nn::Network<S>::Workspace ws;
          MatX<S> emb = net.forward(views, ws);
          Rng neg_rng(mix_seed(vseed, 0x9E6));
          auto cand = detail::contrastive_candidates(
              2 * B, cfgs.contrastive.negatives_per_anchor, neg_rng);
          MatX<S> demb;
          nt_xent_from_embeddings<S>(emb, cand, cfgs.contrastive.temperature, &demb);
          net.backward(demb, ws, &pg);
          break;
        }
      }
      if (pg.empty()) continue;
      auto grads = nn::Network<S>::flatten(pg);
      opt.step(net.param_tensors(), grads);
    }
  }
  head.trained = true;
  return head;
}

template <class S>
SslHeads<S> pretrain_all_heads(const Dataset& train, const SslConfigs& cfgs,
                               const PretrainConfig& cfg) {
  SslHeads<S> heads;
  PretrainConfig c = cfg;
  c.seed = mix_seed(cfg.seed, 1);
  heads.contrastive = pretrain_head<S>(TaskId::Contrastive, train, cfgs, c);
  c.seed = mix_seed(cfg.seed, 2);
  heads.rotation = pretrain_head<S>(TaskId::Rotation, train, cfgs, c);
  c.seed = mix_seed(cfg.seed, 3);
  heads.inpainting = pretrain_head<S>(TaskId::Inpainting, train, cfgs, c);
  return heads;
}

// Fraction of held-out images whose applied rotation the head identifies.
template <class S>
double rotation_accuracy(const SslHead<S>& head, const Dataset& d,
                         const RotationConfig& cfg, int max_images = 500) {
  require(head.task_id == TaskId::Rotation, "rotation_accuracy: wrong head");
  std::size_t n = std::min<std::size_t>(d.size(), max_images);
  std::size_t ok = 0, total = 0;
  for (const auto& chunk : epoch_batches(n, 100, 0)) {
    auto bd = to_image_batch(d, chunk, nullptr);
    ImageBatch<S> batch(bd.channels, bd.height, bd.width, bd.batch_size());
    batch.data = bd.data.template cast<S>();
    for (int k = 0; k < cfg.num_rotations; ++k) {
      MatX<S> logits = head.net.forward(rotate(batch, k, 4).data);
      for (Eigen::Index b = 0; b < logits.cols(); ++b) {
        Eigen::Index best;
        logits.col(b).maxCoeff(&best);
        ok += best == k;
        ++total;
      }
    }
  }
  return double(ok) / total;
}

// Mean task loss over (a subset of) a dataset, for before/after comparisons.
template <class S>
double mean_task_loss(TaskId task, const SslHead<S>& head, const SslConfigs& cfgs,
                      const Dataset& d, std::uint64_t seed, int max_images = 256,
                      int batch_size = 64) {
  std::size_t n = std::min<std::size_t>(d.size(), max_images);
  double sum = 0;
  int batches = 0;
  for (const auto& chunk : epoch_batches(n, batch_size, 0)) {
    auto bd = to_image_batch(d, chunk, nullptr);
    ImageBatch<S> batch(bd.channels, bd.height, bd.width, bd.batch_size());
    batch.data = bd.data.template cast<S>();
    switch (task) {
      case TaskId::Contrastive:
        if (batch.batch_size() < 2) continue;
        sum += contrastive_loss(batch, head, cfgs.contrastive,
                                mix_seed(seed, batches), false)
                   .loss;
        break;
      case TaskId::Rotation:
        sum += rotation_loss(batch, head, cfgs.rotation, false).loss;
        break;
      case TaskId::Inpainting:
        sum += inpainting_loss(batch, head, cfgs.inpainting, false).loss;
        break;
    }
    ++batches;
  }
  require(batches > 0, "mean_task_loss: no usable batches");
  return sum / batches;
}

}  // namespace ssdef
