#pragma once

#include <string>

#include "ssdef/common.hpp"
#include "ssdef/hash.hpp"

namespace ssdef {

// Batch of images in [0,1]. One column per image, flattened channel-major:
// element index of (c, y, x) is (c*height + y)*width + x. This matches the
// CIFAR-10 binary record layout (R plane row-major, then G, then B).
template <class S>
struct ImageBatch {
  using Mat = MatX<S>;

  Mat data;  // (channels*height*width) x batch
  int channels = 0;
  int height = 0;
  int width = 0;

  ImageBatch() = default;
  ImageBatch(int c, int h, int w, int b)
      : data(Mat::Zero(static_cast<Eigen::Index>(c) * h * w, b)),
        channels(c), height(h), width(w) {}

  int batch_size() const { return static_cast<int>(data.cols()); }
  Eigen::Index pixels_per_image() const {
    return static_cast<Eigen::Index>(channels) * height * width;
  }

  Eigen::Index flat_index(int c, int y, int x) const {
    return (static_cast<Eigen::Index>(c) * height + y) * width + x;
  }
  S& at(int b, int c, int y, int x) { return data(flat_index(c, y, x), b); }
  S at(int b, int c, int y, int x) const { return data(flat_index(c, y, x), b); }

  bool same_shape(const ImageBatch& o) const {
    return channels == o.channels && height == o.height && width == o.width &&
           data.cols() == o.data.cols();
  }

  ImageBatch like_with(Mat d) const {
    ImageBatch out;
    out.data = std::move(d);
    out.channels = channels;
    out.height = height;
    out.width = width;
    return out;
  }

  std::uint64_t content_hash() const { return hash_matrix(data); }
};

template <class S>
S linf_distance(const ImageBatch<S>& a, const ImageBatch<S>& b) {
  require(a.same_shape(b), "linf_distance: shape mismatch");
  if (a.data.size() == 0) return S(0);
  return (a.data - b.data).cwiseAbs().maxCoeff();
}

template <class S>
bool in_unit_range(const ImageBatch<S>& b, S tol = S(0)) {
  if (b.data.size() == 0) return true;
  return b.data.minCoeff() >= -tol && b.data.maxCoeff() <= S(1) + tol;
}

using ImageBatchD = ImageBatch<double>;

}  // namespace ssdef
