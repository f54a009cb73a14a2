#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "ssdef/augment.hpp"
#include "ssdef/data.hpp"
#include "ssdef/image_batch.hpp"
#include "ssdef/nn.hpp"
#include "ssdef/perturbation.hpp"

namespace ssdef {

enum class TaskId { Contrastive, Rotation, Inpainting };

inline const char* task_name(TaskId t) {
  switch (t) {
    case TaskId::Contrastive: return "contrastive";
    case TaskId::Rotation: return "rotation";
    case TaskId::Inpainting: return "inpainting";
  }
  return "?";
}

template <class S>
struct SslHead {
  TaskId task_id = TaskId::Contrastive;
  std::string arch_id;
  int in_c = 3, in_h = 32, in_w = 32;
  int num_outputs = 0;  // embedding dim / rotation classes / flat image dim
  nn::Network<S> net;
  bool trained = false;
};

// arch ids look like "con-v1-w8"; width is the trunk's first conv channels.
inline int arch_width(const std::string& arch_id, int fallback) {
  auto pos = arch_id.rfind("-w");
  if (pos == std::string::npos) return fallback;
  try {
    return std::stoi(arch_id.substr(pos + 2));
  } catch (...) {
    return fallback;
  }
}

template <class S>
SslHead<S> build_ssl_head(TaskId task, int c, int h, int w, int num_outputs,
                          std::uint64_t seed, int width = 8) {
  using namespace nn;
  SslHead<S> head;
  head.task_id = task;
  head.in_c = c;
  head.in_h = h;
  head.in_w = w;
  head.num_outputs = num_outputs;
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(task) + 0x55D0));
  auto& net = head.net;
  switch (task) {
    case TaskId::Contrastive: {
      require(h % 8 == 0 && w % 8 == 0, "contrastive head: dims must be /8");
      net.add(std::make_unique<Conv2d<S>>(c, h, w, width, 3, 1, 1, rng));
      net.add(std::make_unique<Elu<S>>());
      net.add(std::make_unique<AvgPool2<S>>(width, h, w));
      net.add(std::make_unique<Conv2d<S>>(width, h / 2, w / 2, 2 * width, 3, 1, 1, rng));
      net.add(std::make_unique<Elu<S>>());
      net.add(std::make_unique<AvgPool2<S>>(2 * width, h / 2, w / 2));
      net.add(std::make_unique<Conv2d<S>>(2 * width, h / 4, w / 4, 4 * width, 3, 1, 1, rng));
      net.add(std::make_unique<Elu<S>>());
      net.add(std::make_unique<AvgPool2<S>>(4 * width, h / 4, w / 4));
      const int flat = 4 * width * (h / 8) * (w / 8);
      net.add(std::make_unique<Dense<S>>(flat, 4 * width, rng));
      net.add(std::make_unique<Elu<S>>());
      net.add(std::make_unique<Dense<S>>(4 * width, num_outputs, rng));
      head.arch_id = "con-v1-w" + std::to_string(width);
      break;
    }
    case TaskId::Rotation: {
      require(h % 4 == 0 && w % 4 == 0, "rotation head: dims must be /4");
      net.add(std::make_unique<Conv2d<S>>(c, h, w, width, 3, 1, 1, rng));
      net.add(std::make_unique<Elu<S>>());
      net.add(std::make_unique<AvgPool2<S>>(width, h, w));
      net.add(std::make_unique<Conv2d<S>>(width, h / 2, w / 2, 2 * width, 3, 1, 1, rng));
      net.add(std::make_unique<Elu<S>>());
      net.add(std::make_unique<AvgPool2<S>>(2 * width, h / 2, w / 2));
      const int flat = 2 * width * (h / 4) * (w / 4);
      net.add(std::make_unique<Dense<S>>(flat, 4 * width, rng));
      net.add(std::make_unique<Elu<S>>());
      net.add(std::make_unique<Dense<S>>(4 * width, num_outputs, rng));
      head.arch_id = "rot-v1-w" + std::to_string(width);
      break;
    }
    case TaskId::Inpainting: {
      require(h % 4 == 0 && w % 4 == 0, "inpainting head: dims must be /4");
      net.add(std::make_unique<Conv2d<S>>(c, h, w, width, 3, 1, 1, rng));
      net.add(std::make_unique<Elu<S>>());
      net.add(std::make_unique<AvgPool2<S>>(width, h, w));
      net.add(std::make_unique<Conv2d<S>>(width, h / 2, w / 2, 2 * width, 3, 1, 1, rng));
      net.add(std::make_unique<Elu<S>>());
      net.add(std::make_unique<AvgPool2<S>>(2 * width, h / 2, w / 2));
      net.add(std::make_unique<Conv2d<S>>(2 * width, h / 4, w / 4, 2 * width, 3, 1, 1, rng));
      net.add(std::make_unique<Elu<S>>());
      net.add(std::make_unique<Upsample2<S>>(2 * width, h / 4, w / 4));
      net.add(std::make_unique<Conv2d<S>>(2 * width, h / 2, w / 2, width, 3, 1, 1, rng));
      net.add(std::make_unique<Elu<S>>());
      net.add(std::make_unique<Upsample2<S>>(width, h / 2, w / 2));
      // linear output: reconstruction range is learned, not squashed
      net.add(std::make_unique<Conv2d<S>>(width, h, w, c, 3, 1, 1, rng));
      head.arch_id = "inp-v1-w" + std::to_string(width);
      head.num_outputs = c * h * w;
      break;
    }
  }
  return head;
}

// ---------------------------------------------------------------------------
// Task configs

struct ContrastiveConfig {
  double temperature = 0.5;
  int num_views = 2;
  int negatives_per_anchor = 62;  // capped at the 2B-2 available in-batch
  AugmentConfig augment;

  void validate() const {
    require(temperature > 0, "ContrastiveConfig: temperature must be > 0");
    require(num_views == 2, "ContrastiveConfig: num_views is fixed to 2");
    require(negatives_per_anchor >= 1, "ContrastiveConfig: need >= 1 negative");
    augment.validate();
  }
};

struct RotationConfig {
  int num_rotations = 4;  // 90-degree multiples starting at 0

  void validate() const {
    require(num_rotations >= 1 && num_rotations <= 4,
            "RotationConfig: num_rotations must be in [1,4]");
  }
};

struct InpaintingConfig {
  enum class MaskKind { CenterSquare };
  MaskKind mask_kind = MaskKind::CenterSquare;
  double center_fraction = 0.5;
  Matd mask;  // optional explicit H x W binary mask; empty -> derived

  void validate() const {
    require(center_fraction > 0 && center_fraction < 1,
            "InpaintingConfig: center_fraction must be in (0,1)");
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      for (Eigen::Index i = 0; i < mask.rows(); ++i)
        require(mask(i, j) == 0.0 || mask(i, j) == 1.0,
                "InpaintingConfig: mask must be binary");
  }
};

struct SslConfigs {
  ContrastiveConfig contrastive;
  RotationConfig rotation;
  InpaintingConfig inpainting;
  // static task weights (exposed, default 1 = the plain summed bundle)
  double weight_s = 1.0, weight_r = 1.0, weight_i = 1.0;
};

struct TaskLossBundle {
  double l_s = 0, l_r = 0, l_i = 0;
  double total = 0;

  static TaskLossBundle make(double ls, double lr, double li) {
    TaskLossBundle b;
    b.l_s = ls;
    b.l_r = lr;
    b.l_i = li;
    b.total = ls + lr + li;
    return b;
  }
};

template <class S>
struct TaskLoss {
  double loss = 0;
  ImageBatch<S> grad;  // dloss/dbatch when requested
};

// ---------------------------------------------------------------------------
// Contrastive (NT-Xent over two augmented views of each image)

// Core softmax cross-entropy over similarity logits. sim(a, c): logit of
// candidate c for anchor a (invalid candidates already excluded by caller).
// Returns the mean over anchors of -log softmax(positive).
template <class S>
double nt_xent_from_similarities(const MatX<S>& sim, const std::vector<int>& positive,
                                 MatX<S>* dsim = nullptr) {
  const int A = static_cast<int>(sim.rows());
  require(A >= 1 && sim.cols() >= 2, "nt_xent: need >= 2 candidates");
  require(static_cast<int>(positive.size()) == A, "nt_xent: positives size mismatch");
  if (dsim) dsim->setZero(sim.rows(), sim.cols());
  double loss = 0;
  for (int a = 0; a < A; ++a) {
    require(positive[a] >= 0 && positive[a] < sim.cols(), "nt_xent: bad positive index");
    const S mx = sim.row(a).maxCoeff();
    double z = 0;
    for (Eigen::Index c = 0; c < sim.cols(); ++c) z += std::exp(double(sim(a, c) - mx));
    const double lse = std::log(z) + double(mx);
    loss += lse - double(sim(a, positive[a]));
    if (dsim) {
      for (Eigen::Index c = 0; c < sim.cols(); ++c)
        (*dsim)(a, c) = S(std::exp(double(sim(a, c) - mx)) / z / A);
      (*dsim)(a, positive[a]) -= S(1.0 / A);
    }
  }
  return loss / A;
}

namespace detail {

// candidate index lists per anchor for the 2B-view batch: positive first,
// then negatives (optionally subsampled).
inline std::vector<std::vector<int>> contrastive_candidates(int two_b, int negatives_cap,
                                                            Rng& rng) {
  std::vector<std::vector<int>> cand(two_b);
  const int b = two_b / 2;
  for (int a = 0; a < two_b; ++a) {
    const int pos = a < b ? a + b : a - b;
    cand[a].push_back(pos);
    std::vector<int> negs;
    negs.reserve(two_b - 2);
    for (int m = 0; m < two_b; ++m)
      if (m != a && m != pos) negs.push_back(m);
    if (negatives_cap < static_cast<int>(negs.size())) {
      rng.shuffle(negs.begin(), negs.end());
      negs.resize(negatives_cap);
    }
    cand[a].insert(cand[a].end(), negs.begin(), negs.end());
  }
  return cand;
}

}  // namespace detail

// Embedding-level NT-Xent. z: (dim x M) columns, unnormalized; they are
// L2-normalized here (smoothed at 0) before the dot-product logits.
template <class S>
double nt_xent_from_embeddings(const MatX<S>& e, const std::vector<std::vector<int>>& cand,
                               double tau, MatX<S>* de = nullptr) {
  const int M = static_cast<int>(e.cols());
  require(M >= 2, "nt_xent: need >= 2 embeddings");
  MatX<S> z = e;
  VecX<S> norms(M);
  for (int m = 0; m < M; ++m) {
    const double n = std::sqrt(e.col(m).squaredNorm() + 1e-12);
    norms(m) = S(n);
    z.col(m) /= S(n);
  }
  double loss = 0;
  MatX<S> dz;
  if (de) dz = MatX<S>::Zero(e.rows(), M);
  const int A = M;
  for (int a = 0; a < A; ++a) {
    const auto& cs = cand[a];
    require(cs.size() >= 2, "nt_xent: anchor needs >= 2 candidates");
    Eigen::ArrayXd s(cs.size());
    for (std::size_t j = 0; j < cs.size(); ++j)
      s[j] = double(z.col(a).dot(z.col(cs[j]))) / tau;
    const double mx = s.maxCoeff();
    const Eigen::ArrayXd ex = (s - mx).exp();
    const double zsum = ex.sum();
    loss += std::log(zsum) + mx - s[0];  // candidate 0 is the positive
    if (de) {
      for (std::size_t j = 0; j < cs.size(); ++j) {
        double ds = ex[j] / zsum / A;
        if (j == 0) ds -= 1.0 / A;
        ds /= tau;
        dz.col(a) += S(ds) * z.col(cs[j]);
        dz.col(cs[j]) += S(ds) * z.col(a);
      }
    }
  }
  loss /= A;
  if (de) {
    de->setZero(e.rows(), M);
    for (int m = 0; m < M; ++m) {
      const S zd = z.col(m).dot(dz.col(m));
      de->col(m) = (dz.col(m) - z.col(m) * zd) / norms(m);
    }
  }
  return loss;
}

// L_s: mean NT-Xent over the anchors of two augmented views per image.
// Deterministic for a fixed seed (augmentations and negative sampling).
template <class S>
TaskLoss<S> contrastive_loss(const ImageBatch<S>& batch, const SslHead<S>& head,
                             const ContrastiveConfig& cfg, std::uint64_t seed,
                             bool want_grad = true) {
  cfg.validate();
  require(head.task_id == TaskId::Contrastive, "contrastive_loss: wrong head");
  const int B = batch.batch_size();
  require(B >= 2, "contrastive_loss: batch of size < 2 has no in-batch negatives");
  require(batch.channels == head.in_c && batch.height == head.in_h &&
              batch.width == head.in_w,
          "contrastive_loss: batch dims do not match head");

  const int C = batch.channels, H = batch.height, W = batch.width;
  const Eigen::Index D = batch.pixels_per_image();
  Rng aug_rng(mix_seed(seed, 0xA06));
  std::vector<ViewParams> params(2 * B);
  MatX<S> views(D, 2 * B);
  for (int b = 0; b < B; ++b) {
    params[b] = draw_view_params(cfg.augment, H, W, aug_rng);
    params[B + b] = draw_view_params(cfg.augment, H, W, aug_rng);
    augment_forward(batch.data.col(b).data(), views.col(b).data(), C, H, W, params[b]);
    augment_forward(batch.data.col(b).data(), views.col(B + b).data(), C, H, W,
                    params[B + b]);
  }

  typename nn::Network<S>::Workspace ws;
  MatX<S> emb = head.net.forward(views, ws);

  Rng neg_rng(mix_seed(seed, 0x9E6));
  const auto cand =
      detail::contrastive_candidates(2 * B, cfg.negatives_per_anchor, neg_rng);

  TaskLoss<S> out;
  if (!want_grad) {
    out.loss = nt_xent_from_embeddings<S>(emb, cand, cfg.temperature, nullptr);
    return out;
  }
  MatX<S> demb;
  out.loss = nt_xent_from_embeddings<S>(emb, cand, cfg.temperature, &demb);
  MatX<S> dviews = head.net.backward(demb, ws, nullptr);
  out.grad = ImageBatch<S>(C, H, W, B);
  for (int b = 0; b < B; ++b) {
    augment_backward(dviews.col(b).data(), out.grad.data.col(b).data(), C, H, W, params[b]);
    augment_backward(dviews.col(B + b).data(), out.grad.data.col(b).data(), C, H, W,
                     params[B + b]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rotation

// Exact 90-degree CCW rotation applied k times (pixel permutation).
template <class S>
ImageBatch<S> rotate(const ImageBatch<S>& b, int k, int k_max = 4) {
  require(k >= 0 && k < k_max, "rotate: k out of range");
  if (k == 0) return b;
  require(b.height == b.width, "rotate: square spatial dims required");
  const int n = b.height, C = b.channels, B = b.batch_size();
  ImageBatch<S> out(C, n, n, B);
  for (int bi = 0; bi < B; ++bi)
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          // one CCW quarter turn: (y, x) <- (x, n-1-y), applied k times
          int sy = y, sx = x;
          for (int t = 0; t < k; ++t) {
            const int ny = sx, nx = n - 1 - sy;
            sy = ny;
            sx = nx;
          }
          out.at(bi, c, y, x) = b.at(bi, c, sy, sx);
        }
  return out;
}

// L_r: mean over the K rotations (and the batch) of the cross-entropy of
// predicting which rotation was applied. Gradient is w.r.t. the un-rotated
// batch (chain rule through the permutation).
template <class S>
TaskLoss<S> rotation_loss(const ImageBatch<S>& batch, const SslHead<S>& head,
                          const RotationConfig& cfg, bool want_grad = true) {
  cfg.validate();
  require(head.task_id == TaskId::Rotation, "rotation_loss: wrong head");
  require(batch.height == batch.width, "rotation_loss: square images required");
  require(head.num_outputs == cfg.num_rotations,
          "rotation_loss: head outputs != num_rotations");
  const int B = batch.batch_size();
  const int K = cfg.num_rotations;
  TaskLoss<S> out;
  if (want_grad) out.grad = ImageBatch<S>(batch.channels, batch.height, batch.width, B);
  for (int k = 0; k < K; ++k) {
    ImageBatch<S> xr = rotate(batch, k, 4);
    typename nn::Network<S>::Workspace ws;
    MatX<S> logits = head.net.forward(xr.data, ws);
    std::vector<int> labels(B, k);
    MatX<S> dlogits;
    out.loss += nn::softmax_cross_entropy<S>(logits, labels,
                                             want_grad ? &dlogits : nullptr,
                                             1.0 / (double(K) * B));
    if (want_grad) {
      MatX<S> dxr = head.net.backward(dlogits, ws, nullptr);
      ImageBatch<S> g = xr.like_with(std::move(dxr));
      out.grad.data += rotate(g, (4 - k) % 4, 4).data;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inpainting

inline Matd make_center_mask(int h, int w, double fraction) {
  require(fraction > 0 && fraction < 1, "make_center_mask: fraction in (0,1)");
  const int sh = std::max(1, std::min(h, (int)std::lround(h * fraction)));
  const int sw = std::max(1, std::min(w, (int)std::lround(w * fraction)));
  const int top = (h - sh) / 2, left = (w - sw) / 2;
  Matd m = Matd::Zero(h, w);
  m.block(top, left, sh, sw).setOnes();
  return m;
}

template <class S>
VecX<S> mask_vector(const InpaintingConfig& cfg, int c, int h, int w) {
  Matd m;
  if (cfg.mask.size() > 0) {
    require(cfg.mask.rows() == h && cfg.mask.cols() == w,
            "inpainting: mask shape mismatch");
    m = cfg.mask;
  } else {
    m = make_center_mask(h, w, cfg.center_fraction);
  }
  VecX<S> v(static_cast<Eigen::Index>(c) * h * w);
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        v[(static_cast<Eigen::Index>(ci) * h + y) * w + x] = S(m(y, x));
  return v;
}

// L_i = ||M (x - F((1-M) x))||^2 averaged over the batch. The gradient covers
// both appearances of x: the residual target and the encoder input.
template <class S>
TaskLoss<S> inpainting_loss(const ImageBatch<S>& batch, const SslHead<S>& head,
                            const InpaintingConfig& cfg, bool want_grad = true) {
  cfg.validate();
  require(head.task_id == TaskId::Inpainting, "inpainting_loss: wrong head");
  const int B = batch.batch_size();
  require(B >= 1, "inpainting_loss: empty batch");
  const VecX<S> m = mask_vector<S>(cfg, batch.channels, batch.height, batch.width);
  MatX<S> u = batch.data;
  for (int b = 0; b < B; ++b)
    u.col(b) = u.col(b).cwiseProduct(VecX<S>::Ones(m.size()) - m);
  typename nn::Network<S>::Workspace ws;
  MatX<S> y = head.net.forward(u, ws);
  require(y.rows() == batch.data.rows(), "inpainting_loss: decoder output dim mismatch");
  MatX<S> r = batch.data - y;
  for (int b = 0; b < B; ++b) r.col(b) = r.col(b).cwiseProduct(m);
  TaskLoss<S> out;
  out.loss = r.squaredNorm() / B;
  if (want_grad) {
    MatX<S> dy = (-2.0 / B) * r;
    MatX<S> du = head.net.backward(dy, ws, nullptr);
    out.grad = ImageBatch<S>(batch.channels, batch.height, batch.width, B);
    for (int b = 0; b < B; ++b)
      out.grad.data.col(b) = (2.0 / B) * r.col(b) +
                             du.col(b).cwiseProduct(VecX<S>::Ones(m.size()) - m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bundle

template <class S>
struct SslHeads {
  SslHead<S> contrastive, rotation, inpainting;

  bool all_trained() const {
    return contrastive.trained && rotation.trained && inpainting.trained;
  }
  const SslHead<S>& by_task(TaskId t) const {
    switch (t) {
      case TaskId::Contrastive: return contrastive;
      case TaskId::Rotation: return rotation;
      default: return inpainting;
    }
  }
};

template <class S>
struct BundleResult {
  TaskLossBundle bundle;
  ImageBatch<S> grad_s, grad_r, grad_i;  // per task, not summed
};

// L = L_s + L_r + L_i at one point, with per-task gradients.
template <class S>
BundleResult<S> bundle_losses(const ImageBatch<S>& batch, const SslHeads<S>& heads,
                              const SslConfigs& cfgs, std::uint64_t seed,
                              bool want_grads = true) {
  require(heads.all_trained(), "bundle_losses: all three heads must be trained");
  BundleResult<S> out;
  auto s = contrastive_loss(batch, heads.contrastive, cfgs.contrastive, seed, want_grads);
  auto r = rotation_loss(batch, heads.rotation, cfgs.rotation, want_grads);
  auto i = inpainting_loss(batch, heads.inpainting, cfgs.inpainting, want_grads);
  out.bundle = TaskLossBundle::make(s.loss, r.loss, i.loss);
  if (want_grads) {
    out.grad_s = std::move(s.grad);
    out.grad_r = std::move(r.grad);
    out.grad_i = std::move(i.grad);
  }
  return out;
}

}  // namespace ssdef
