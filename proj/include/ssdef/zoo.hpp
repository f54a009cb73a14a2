#pragma once

#include <string>
#include <vector>

#include "ssdef/image_batch.hpp"
#include "ssdef/nn.hpp"
#include "ssdef/rng.hpp"
#include "ssdef/ssl.hpp"

namespace ssdef {

// Small convnet family sized for 32x32x3 inputs; width is the first conv's
// channel count (arch id "cls-v1-w16").
struct ClassifierSpec {
  std::string arch_id = "cls-v1-w16";
  int num_classes = 10;
  std::uint64_t seed = 0;
};

template <class S>
struct Classifier {
  std::string arch_id;
  int num_classes = 0;
  int in_c = 3, in_h = 32, in_w = 32;
  nn::Network<S> net;
};

template <class S>
Classifier<S> build_classifier(const ClassifierSpec& spec, int c = 3, int h = 32,
                               int w = 32) {
  using namespace nn;
  require(spec.num_classes >= 2, "build_classifier: need >= 2 classes");
  require(h % 8 == 0 && w % 8 == 0, "build_classifier: dims must be /8");
  const int width = arch_width(spec.arch_id, 16);
  Classifier<S> m;
  m.arch_id = "cls-v1-w" + std::to_string(width);
  m.num_classes = spec.num_classes;
  m.in_c = c;
  m.in_h = h;
  m.in_w = w;
  Rng rng(mix_seed(spec.seed, 0xC1A55));
  auto& net = m.net;
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
  net.add(std::make_unique<Dense<S>>(flat, 8 * width, rng));
  net.add(std::make_unique<Elu<S>>());
  net.add(std::make_unique<Dense<S>>(8 * width, spec.num_classes, rng));
  return m;
}

template <class S>
MatX<S> logits_of(const Classifier<S>& m, const ImageBatch<S>& batch) {
  require(batch.channels == m.in_c && batch.height == m.in_h && batch.width == m.in_w,
          "logits_of: batch dims do not match classifier");
  return m.net.forward(batch.data);
}

template <class S>
std::vector<int> predict_labels(const Classifier<S>& m, const ImageBatch<S>& batch) {
  MatX<S> logits = logits_of(m, batch);
  std::vector<int> out(logits.cols());
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    Eigen::Index best;
    logits.col(b).maxCoeff(&best);
    out[b] = static_cast<int>(best);
  }
  return out;
}

inline double accuracy(const std::vector<int>& pred, const std::vector<int>& labels) {
  require(pred.size() == labels.size() && !pred.empty(), "accuracy: size mismatch");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == labels[i];
  return double(ok) / pred.size();
}

// L_c = H(F(x), y): mean softmax cross-entropy; gradient w.r.t. the input
// pixels through the classifier.
template <class S>
TaskLoss<S> cross_entropy_loss(const Classifier<S>& m, const ImageBatch<S>& batch,
                               const std::vector<int>& labels, bool want_grad = true) {
  require(static_cast<int>(labels.size()) == batch.batch_size(),
          "cross_entropy_loss: labels size mismatch");
  typename nn::Network<S>::Workspace ws;
  MatX<S> logits = m.net.forward(batch.data, ws);
  TaskLoss<S> out;
  MatX<S> dlogits;
  out.loss = nn::softmax_cross_entropy<S>(logits, labels, want_grad ? &dlogits : nullptr);
  if (want_grad) {
    out.grad = batch.like_with(m.net.backward(dlogits, ws, nullptr));
  }
  return out;
}

}  // namespace ssdef
