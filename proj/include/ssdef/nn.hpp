#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "ssdef/common.hpp"
#include "ssdef/rng.hpp"

namespace ssdef {
namespace nn {

// Activations flow as (features x batch) matrices, one column per example.
// Layers are const during forward/backward; per-call state lives in the
// caller-owned cache so a network can serve concurrent evaluations.

template <class S>
struct LayerCache {
  MatX<S> input;
  MatX<S> aux;  // layer-specific (e.g. im2col buffer)
};

template <class S>
using ParamGrads = std::vector<std::vector<MatX<S>>>;  // [layer][tensor]

template <class S>
class Layer {
 public:
  using Mat = MatX<S>;
  virtual ~Layer() = default;

  virtual Mat forward(const Mat& x, LayerCache<S>& cache) const = 0;
  // Returns dL/dinput. When pgrad != nullptr, accumulates dL/dparam into it
  // (entries must already be zero-sized or param-shaped).
  virtual Mat backward(const Mat& gy, const LayerCache<S>& cache,
                       std::vector<Mat>* pgrad) const = 0;

  virtual std::vector<Mat*> params() { return {}; }
  virtual std::vector<const Mat*> params() const { return {}; }
  virtual std::vector<std::string> param_names() const { return {}; }
  virtual std::string signature() const = 0;
};

template <class S>
class Dense : public Layer<S> {
 public:
  using Mat = MatX<S>;

  Dense(int in_dim, int out_dim, Rng& rng) : in_(in_dim), out_(out_dim) {
    weight_.resize(out_dim, in_dim);
    const double scale = std::sqrt(2.0 / in_dim);
    for (Eigen::Index j = 0; j < weight_.cols(); ++j)
      for (Eigen::Index i = 0; i < weight_.rows(); ++i)
        weight_(i, j) = static_cast<S>(rng.normal() * scale);
    bias_ = Mat::Zero(out_dim, 1);
  }

  Mat forward(const Mat& x, LayerCache<S>& cache) const override {
    require(x.rows() == in_, "Dense: input dim mismatch");
    cache.input = x;
    Mat y = weight_ * x;
    y.colwise() += bias_.col(0);
    return y;
  }

  Mat backward(const Mat& gy, const LayerCache<S>& cache,
               std::vector<Mat>* pgrad) const override {
    if (pgrad) {
      ensure_shapes(*pgrad);
      (*pgrad)[0] += gy * cache.input.transpose();
      (*pgrad)[1].col(0) += gy.rowwise().sum();
    }
    return weight_.transpose() * gy;
  }

  std::vector<Mat*> params() override { return {&weight_, &bias_}; }
  std::vector<const Mat*> params() const override { return {&weight_, &bias_}; }
  std::vector<std::string> param_names() const override { return {"weight", "bias"}; }
  std::string signature() const override {
    return "dense(" + std::to_string(in_) + "->" + std::to_string(out_) + ")";
  }

 private:
  void ensure_shapes(std::vector<Mat>& g) const {
    if (g.empty()) {
      g.push_back(Mat::Zero(out_, in_));
      g.push_back(Mat::Zero(out_, 1));
    }
  }
  int in_, out_;
  Mat weight_, bias_;
};

template <class S>
class Conv2d : public Layer<S> {
 public:
  using Mat = MatX<S>;

  Conv2d(int in_c, int in_h, int in_w, int out_c, int ksize, int stride, int pad,
         Rng& rng)
      : in_c_(in_c), in_h_(in_h), in_w_(in_w), out_c_(out_c), k_(ksize),
        stride_(stride), pad_(pad) {
    out_h_ = (in_h + 2 * pad - ksize) / stride + 1;
    out_w_ = (in_w + 2 * pad - ksize) / stride + 1;
    require(out_h_ > 0 && out_w_ > 0, "Conv2d: empty output");
    const int fan_in = in_c * ksize * ksize;
    weight_.resize(out_c, fan_in);
    const double scale = std::sqrt(2.0 / fan_in);
    for (Eigen::Index j = 0; j < weight_.cols(); ++j)
      for (Eigen::Index i = 0; i < weight_.rows(); ++i)
        weight_(i, j) = static_cast<S>(rng.normal() * scale);
    bias_ = Mat::Zero(out_c, 1);
  }

  Mat forward(const Mat& x, LayerCache<S>& cache) const override {
    require(x.rows() == Eigen::Index(in_c_) * in_h_ * in_w_, "Conv2d: input dim mismatch");
    const int B = static_cast<int>(x.cols());
    const int hw = out_h_ * out_w_;
    const int kk = in_c_ * k_ * k_;
    cache.input = x;
    cache.aux.resize(kk, static_cast<Eigen::Index>(hw) * B);
    Mat y(static_cast<Eigen::Index>(out_c_) * hw, B);
    for (int b = 0; b < B; ++b) {
      auto col = cache.aux.middleCols(static_cast<Eigen::Index>(b) * hw, hw);
      im2col(x.col(b).data(), col);
      Mat yb = weight_ * col;           // out_c x hw
      yb.colwise() += bias_.col(0);
      Eigen::Map<Mat>(y.col(b).data(), hw, out_c_) = yb.transpose();
    }
    return y;
  }

  Mat backward(const Mat& gy, const LayerCache<S>& cache,
               std::vector<Mat>* pgrad) const override {
    const int B = static_cast<int>(gy.cols());
    const int hw = out_h_ * out_w_;
    if (pgrad && pgrad->empty()) {
      pgrad->push_back(Mat::Zero(weight_.rows(), weight_.cols()));
      pgrad->push_back(Mat::Zero(out_c_, 1));
    }
    Mat gx = Mat::Zero(cache.input.rows(), B);
    for (int b = 0; b < B; ++b) {
      Eigen::Map<const Mat> gt(gy.col(b).data(), hw, out_c_);
      Mat g = gt.transpose();  // out_c x hw
      auto col = cache.aux.middleCols(static_cast<Eigen::Index>(b) * hw, hw);
      if (pgrad) {
        (*pgrad)[0] += g * col.transpose();
        (*pgrad)[1].col(0) += g.rowwise().sum();
      }
      Mat gcol = weight_.transpose() * g;  // kk x hw
      col2im(gcol, gx.col(b).data());
    }
    return gx;
  }

  std::vector<Mat*> params() override { return {&weight_, &bias_}; }
  std::vector<const Mat*> params() const override { return {&weight_, &bias_}; }
  std::vector<std::string> param_names() const override { return {"weight", "bias"}; }
  std::string signature() const override {
    return "conv(" + std::to_string(in_c_) + "x" + std::to_string(in_h_) + "x" +
           std::to_string(in_w_) + "->" + std::to_string(out_c_) + ",k" +
           std::to_string(k_) + ",s" + std::to_string(stride_) + ",p" +
           std::to_string(pad_) + ")";
  }

  int out_channels() const { return out_c_; }
  int out_height() const { return out_h_; }
  int out_width() const { return out_w_; }

 private:
  template <class Block>
  void im2col(const S* img, Block col) const {
    for (int ci = 0; ci < in_c_; ++ci) {
      const S* plane = img + static_cast<std::ptrdiff_t>(ci) * in_h_ * in_w_;
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          const int r = (ci * k_ + ky) * k_ + kx;
          for (int oy = 0; oy < out_h_; ++oy) {
            const int y = oy * stride_ - pad_ + ky;
            for (int ox = 0; ox < out_w_; ++ox) {
              const int x = ox * stride_ - pad_ + kx;
              const bool in = (y >= 0 && y < in_h_ && x >= 0 && x < in_w_);
              col(r, oy * out_w_ + ox) = in ? plane[y * in_w_ + x] : S(0);
            }
          }
        }
      }
    }
  }

  void col2im(const Mat& gcol, S* gimg) const {
    for (int ci = 0; ci < in_c_; ++ci) {
      S* plane = gimg + static_cast<std::ptrdiff_t>(ci) * in_h_ * in_w_;
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          const int r = (ci * k_ + ky) * k_ + kx;
          for (int oy = 0; oy < out_h_; ++oy) {
            const int y = oy * stride_ - pad_ + ky;
            if (y < 0 || y >= in_h_) continue;
            for (int ox = 0; ox < out_w_; ++ox) {
              const int x = ox * stride_ - pad_ + kx;
              if (x < 0 || x >= in_w_) continue;
              plane[y * in_w_ + x] += gcol(r, oy * out_w_ + ox);
            }
          }
        }
      }
    }
  }

  int in_c_, in_h_, in_w_, out_c_, k_, stride_, pad_;
  int out_h_, out_w_;
  Mat weight_, bias_;
};

// 2x2 average pooling; requires even spatial dims.
template <class S>
class AvgPool2 : public Layer<S> {
 public:
  using Mat = MatX<S>;

  AvgPool2(int c, int h, int w) : c_(c), h_(h), w_(w) {
    require(h % 2 == 0 && w % 2 == 0, "AvgPool2: odd spatial dims");
  }

  Mat forward(const Mat& x, LayerCache<S>& cache) const override {
    (void)cache;
    const int B = static_cast<int>(x.cols());
    const int oh = h_ / 2, ow = w_ / 2;
    Mat y(static_cast<Eigen::Index>(c_) * oh * ow, B);
    for (int b = 0; b < B; ++b) {
      const S* in = x.col(b).data();
      S* out = y.col(b).data();
      for (int c = 0; c < c_; ++c)
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            const S* p = in + (static_cast<std::ptrdiff_t>(c) * h_ + 2 * oy) * w_ + 2 * ox;
            out[(static_cast<std::ptrdiff_t>(c) * oh + oy) * ow + ox] =
                (p[0] + p[1] + p[w_] + p[w_ + 1]) * S(0.25);
          }
    }
    return y;
  }

  Mat backward(const Mat& gy, const LayerCache<S>&, std::vector<Mat>*) const override {
    const int B = static_cast<int>(gy.cols());
    const int oh = h_ / 2, ow = w_ / 2;
    Mat gx(static_cast<Eigen::Index>(c_) * h_ * w_, B);
    for (int b = 0; b < B; ++b) {
      const S* g = gy.col(b).data();
      S* out = gx.col(b).data();
      for (int c = 0; c < c_; ++c)
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            const S v = g[(static_cast<std::ptrdiff_t>(c) * oh + oy) * ow + ox] * S(0.25);
            S* p = out + (static_cast<std::ptrdiff_t>(c) * h_ + 2 * oy) * w_ + 2 * ox;
            p[0] = v;
            p[1] = v;
            p[w_] = v;
            p[w_ + 1] = v;
          }
    }
    return gx;
  }

  std::string signature() const override {
    return "avgpool2(" + std::to_string(c_) + "x" + std::to_string(h_) + "x" +
           std::to_string(w_) + ")";
  }

 private:
  int c_, h_, w_;
};

// Nearest-neighbor 2x upsampling.
template <class S>
class Upsample2 : public Layer<S> {
 public:
  using Mat = MatX<S>;

  Upsample2(int c, int h, int w) : c_(c), h_(h), w_(w) {}

  Mat forward(const Mat& x, LayerCache<S>& cache) const override {
    (void)cache;
    const int B = static_cast<int>(x.cols());
    const int oh = h_ * 2, ow = w_ * 2;
    Mat y(static_cast<Eigen::Index>(c_) * oh * ow, B);
    for (int b = 0; b < B; ++b) {
      const S* in = x.col(b).data();
      S* out = y.col(b).data();
      for (int c = 0; c < c_; ++c)
        for (int yy = 0; yy < oh; ++yy)
          for (int xx = 0; xx < ow; ++xx)
            out[(static_cast<std::ptrdiff_t>(c) * oh + yy) * ow + xx] =
                in[(static_cast<std::ptrdiff_t>(c) * h_ + yy / 2) * w_ + xx / 2];
    }
    return y;
  }

  Mat backward(const Mat& gy, const LayerCache<S>&, std::vector<Mat>*) const override {
    const int B = static_cast<int>(gy.cols());
    const int oh = h_ * 2, ow = w_ * 2;
    Mat gx = Mat::Zero(static_cast<Eigen::Index>(c_) * h_ * w_, B);
    for (int b = 0; b < B; ++b) {
      const S* g = gy.col(b).data();
      S* out = gx.col(b).data();
      for (int c = 0; c < c_; ++c)
        for (int yy = 0; yy < oh; ++yy)
          for (int xx = 0; xx < ow; ++xx)
            out[(static_cast<std::ptrdiff_t>(c) * h_ + yy / 2) * w_ + xx / 2] +=
                g[(static_cast<std::ptrdiff_t>(c) * oh + yy) * ow + xx];
    }
    return gx;
  }

  std::string signature() const override {
    return "upsample2(" + std::to_string(c_) + "x" + std::to_string(h_) + "x" +
           std::to_string(w_) + ")";
  }

 private:
  int c_, h_, w_;
};

// ELU (alpha = 1). Smooth enough for finite-difference gradient audits.
template <class S>
class Elu : public Layer<S> {
 public:
  using Mat = MatX<S>;

  Mat forward(const Mat& x, LayerCache<S>& cache) const override {
    cache.input = x;
    return x.unaryExpr([](S v) { return v > S(0) ? v : S(std::expm1(double(v))); });
  }

  Mat backward(const Mat& gy, const LayerCache<S>& cache,
               std::vector<Mat>*) const override {
    return gy.binaryExpr(cache.input, [](S g, S v) {
      return v > S(0) ? g : S(g * std::exp(double(v)));
    });
  }

  std::string signature() const override { return "elu"; }
};

template <class S>
class Network {
 public:
  using Mat = MatX<S>;
  using Workspace = std::vector<LayerCache<S>>;

  Network() = default;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  void add(std::unique_ptr<Layer<S>> l) { layers_.push_back(std::move(l)); }
  std::size_t num_layers() const { return layers_.size(); }

  Mat forward(const Mat& x, Workspace& ws) const {
    ws.resize(layers_.size());
    Mat h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) h = layers_[i]->forward(h, ws[i]);
    return h;
  }

  Mat forward(const Mat& x) const {
    Workspace ws;
    return forward(x, ws);
  }

  // gy is dL/doutput; returns dL/dinput. pgrads, when given, accumulates.
  Mat backward(const Mat& gy, const Workspace& ws, ParamGrads<S>* pgrads) const {
    require(ws.size() == layers_.size(), "Network::backward: stale workspace");
    if (pgrads && pgrads->empty()) pgrads->resize(layers_.size());
    Mat g = gy;
    for (std::size_t i = layers_.size(); i-- > 0;)
      g = layers_[i]->backward(g, ws[i], pgrads ? &(*pgrads)[i] : nullptr);
    return g;
  }

  std::vector<Mat*> param_tensors() {
    std::vector<Mat*> out;
    for (auto& l : layers_)
      for (auto* p : l->params()) out.push_back(p);
    return out;
  }
  std::vector<const Mat*> param_tensors() const {
    std::vector<const Mat*> out;
    for (const auto& l : layers_)
      for (const auto* p : static_cast<const Layer<S>&>(*l).params()) out.push_back(p);
    return out;
  }

  std::vector<std::string> param_labels() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      for (const auto& n : layers_[i]->param_names())
        out.push_back("L" + std::to_string(i) + "." + n);
    return out;
  }

  std::string signature() const {
    std::string s;
    for (const auto& l : layers_) {
      if (!s.empty()) s += "|";
      s += l->signature();
    }
    return s;
  }

  static std::vector<Mat*> flatten(ParamGrads<S>& pg) {
    std::vector<Mat*> out;
    for (auto& layer : pg)
      for (auto& m : layer) out.push_back(&m);
    return out;
  }

 private:
  std::vector<std::unique_ptr<Layer<S>>> layers_;
};

template <class S>
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

  void step(const std::vector<MatX<S>*>& params, const std::vector<MatX<S>*>& grads) {
    require(params.size() == grads.size(), "Adam: param/grad count mismatch");
    if (m_.empty()) {
      for (auto* p : params) {
        m_.push_back(MatX<S>::Zero(p->rows(), p->cols()));
        v_.push_back(MatX<S>::Zero(p->rows(), p->cols()));
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, t_);
    const double c2 = 1.0 - std::pow(b2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& m = m_[i];
      auto& v = v_[i];
      const auto& g = *grads[i];
      m = S(b1_) * m + S(1.0 - b1_) * g;
      v = (S(b2_) * v.array() + S(1.0 - b2_) * g.array().square()).matrix();
      auto mhat = m.array() / S(c1);
      auto vhat = v.array() / S(c2);
      params[i]->array() -= S(lr_) * mhat / (vhat.sqrt() + S(eps_));
    }
  }

 private:
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  std::vector<MatX<S>> m_, v_;
};

template <class S>
class SgdMomentum {
 public:
  explicit SgdMomentum(double lr = 0.01, double momentum = 0.9)
      : lr_(lr), mu_(momentum) {}

  void step(const std::vector<MatX<S>*>& params, const std::vector<MatX<S>*>& grads) {
    require(params.size() == grads.size(), "SgdMomentum: param/grad count mismatch");
    if (vel_.empty())
      for (auto* p : params) vel_.push_back(MatX<S>::Zero(p->rows(), p->cols()));
    for (std::size_t i = 0; i < params.size(); ++i) {
      vel_[i] = S(mu_) * vel_[i] - S(lr_) * (*grads[i]);
      *params[i] += vel_[i];
    }
  }

 private:
  double lr_, mu_;
  std::vector<MatX<S>> vel_;
};

// Softmax cross-entropy over columns. logits: (classes x batch); labels are
// class indices per column. Returns scale * sum_b CE_b; dlogits matches.
template <class S>
double softmax_cross_entropy(const MatX<S>& logits, const std::vector<int>& labels,
                             MatX<S>* dlogits = nullptr, double scale = -1.0) {
  const int B = static_cast<int>(logits.cols());
  require(B >= 1, "softmax_cross_entropy: empty batch");
  require(static_cast<int>(labels.size()) == B,
          "softmax_cross_entropy: labels size mismatch");
  if (scale < 0) scale = 1.0 / B;
  if (dlogits) dlogits->setZero(logits.rows(), logits.cols());
  double loss = 0;
  for (int b = 0; b < B; ++b) {
    require(labels[b] >= 0 && labels[b] < logits.rows(),
            "softmax_cross_entropy: label out of range");
    const S mx = logits.col(b).maxCoeff();
    double z = 0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i)
      z += std::exp(double(logits(i, b) - mx));
    loss += std::log(z) + double(mx) - double(logits(labels[b], b));
    if (dlogits) {
      for (Eigen::Index i = 0; i < logits.rows(); ++i)
        (*dlogits)(i, b) = S(std::exp(double(logits(i, b) - mx)) / z * scale);
      (*dlogits)(labels[b], b) -= S(scale);
    }
  }
  return loss * scale;
}

}  // namespace nn

template <class S>
std::uint64_t params_hash(const nn::Network<S>& net) {
  return hash_matrices<S>(net.param_tensors());
}

}  // namespace ssdef
