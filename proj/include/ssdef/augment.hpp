#pragma once

#include <cmath>
#include <vector>

#include "ssdef/image_batch.hpp"
#include "ssdef/rng.hpp"

namespace ssdef {

// View pipeline, applied in order: random crop (+ bilinear resize back to
// full size), color jitter (brightness, contrast, saturation), then random
// horizontal flip and/or grayscale. Every op is linear in the pixels once
// the random draw is frozen, so the exact input gradient is the transpose
// chain applied in reverse.
struct AugmentConfig {
  double crop_scale_min = 0.6;  // area fraction
  double crop_scale_max = 1.0;
  double brightness = 0.4;  // factor drawn from [1-s, 1+s]
  double contrast = 0.4;
  double saturation = 0.4;
  double hflip_prob = 0.5;
  double grayscale_prob = 0.2;

  void validate() const {
    require(crop_scale_min > 0 && crop_scale_min <= crop_scale_max &&
                crop_scale_max <= 1.0,
            "AugmentConfig: bad crop scale range");
    require(brightness >= 0 && contrast >= 0 && saturation >= 0,
            "AugmentConfig: negative jitter strength");
    require(hflip_prob >= 0 && hflip_prob <= 1, "AugmentConfig: bad flip prob");
    require(grayscale_prob >= 0 && grayscale_prob <= 1, "AugmentConfig: bad gray prob");
  }
};

struct ViewParams {
  int crop_top = 0, crop_left = 0, crop_h = 0, crop_w = 0;
  double f_bright = 1.0, f_contrast = 1.0, f_sat = 1.0;
  bool flip = false, gray = false;
};

inline ViewParams draw_view_params(const AugmentConfig& cfg, int h, int w, Rng& rng) {
  ViewParams p;
  const double area = rng.uniform(cfg.crop_scale_min, cfg.crop_scale_max);
  const double side = std::sqrt(area);
  p.crop_h = std::max(1, std::min(h, (int)std::lround(h * side)));
  p.crop_w = std::max(1, std::min(w, (int)std::lround(w * side)));
  p.crop_top = rng.uniform_int(h - p.crop_h + 1);
  p.crop_left = rng.uniform_int(w - p.crop_w + 1);
  p.f_bright = rng.uniform(std::max(0.0, 1.0 - cfg.brightness), 1.0 + cfg.brightness);
  p.f_contrast = rng.uniform(std::max(0.0, 1.0 - cfg.contrast), 1.0 + cfg.contrast);
  p.f_sat = rng.uniform(std::max(0.0, 1.0 - cfg.saturation), 1.0 + cfg.saturation);
  p.flip = rng.bernoulli(cfg.hflip_prob);
  p.gray = rng.bernoulli(cfg.grayscale_prob);
  return p;
}

namespace detail {

inline double luma_weight(int c, int channels) {
  if (channels == 3) {
    static constexpr double w[3] = {0.299, 0.587, 0.114};
    return w[c];
  }
  return 1.0 / channels;
}

// One bilinear tap row: output (y,x) samples the crop window at fractional
// coordinates; taps are clamped inside the window.
struct Tap {
  int i0, i1;
  double w0, w1;
};

inline Tap make_tap(int out_i, int out_n, int start, int crop_n) {
  const double s = start + (out_i + 0.5) * crop_n / static_cast<double>(out_n) - 0.5;
  const double f = std::floor(s);
  Tap t;
  t.w1 = s - f;
  t.w0 = 1.0 - t.w1;
  const int lo = start, hi = start + crop_n - 1;
  t.i0 = std::min(std::max(static_cast<int>(f), lo), hi);
  t.i1 = std::min(std::max(static_cast<int>(f) + 1, lo), hi);
  return t;
}

}  // namespace detail

// src: one image (C*H*W, channel-major). dst: same size, overwritten.
template <class S>
void augment_forward(const S* src, S* dst, int C, int H, int W, const ViewParams& p) {
  const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(H) * W;
  // crop + bilinear resize to (H, W)
  for (int y = 0; y < H; ++y) {
    const auto ty = detail::make_tap(y, H, p.crop_top, p.crop_h);
    for (int x = 0; x < W; ++x) {
      const auto tx = detail::make_tap(x, W, p.crop_left, p.crop_w);
      for (int c = 0; c < C; ++c) {
        const S* pl = src + c * plane;
        const double v = ty.w0 * (tx.w0 * pl[ty.i0 * W + tx.i0] + tx.w1 * pl[ty.i0 * W + tx.i1]) +
                         ty.w1 * (tx.w0 * pl[ty.i1 * W + tx.i0] + tx.w1 * pl[ty.i1 * W + tx.i1]);
        dst[c * plane + y * W + x] = static_cast<S>(v);
      }
    }
  }
  // brightness
  for (std::ptrdiff_t i = 0; i < C * plane; ++i) dst[i] = static_cast<S>(dst[i] * p.f_bright);
  // contrast: blend toward the image's mean luma
  {
    double m = 0.0;
    for (int c = 0; c < C; ++c) {
      const double wc = detail::luma_weight(c, C);
      for (std::ptrdiff_t i = 0; i < plane; ++i) m += wc * dst[c * plane + i];
    }
    m /= static_cast<double>(plane);
    for (std::ptrdiff_t i = 0; i < C * plane; ++i)
      dst[i] = static_cast<S>(p.f_contrast * dst[i] + (1.0 - p.f_contrast) * m);
  }
  // saturation: blend toward per-pixel luma
  for (std::ptrdiff_t i = 0; i < plane; ++i) {
    double g = 0.0;
    for (int c = 0; c < C; ++c) g += detail::luma_weight(c, C) * dst[c * plane + i];
    for (int c = 0; c < C; ++c)
      dst[c * plane + i] = static_cast<S>(p.f_sat * dst[c * plane + i] + (1.0 - p.f_sat) * g);
  }
  // horizontal flip
  if (p.flip) {
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < H; ++y) {
        S* row = dst + c * plane + static_cast<std::ptrdiff_t>(y) * W;
        for (int x = 0; x < W / 2; ++x) std::swap(row[x], row[W - 1 - x]);
      }
  }
  // grayscale
  if (p.gray) {
    for (std::ptrdiff_t i = 0; i < plane; ++i) {
      double g = 0.0;
      for (int c = 0; c < C; ++c) g += detail::luma_weight(c, C) * dst[c * plane + i];
      for (int c = 0; c < C; ++c) dst[c * plane + i] = static_cast<S>(g);
    }
  }
}

// Transpose of augment_forward: maps a gradient w.r.t. the view back to a
// gradient w.r.t. the source image (accumulated into gsrc).
template <class S>
void augment_backward(const S* gview, S* gsrc, int C, int H, int W, const ViewParams& p) {
  const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(H) * W;
  std::vector<S> g(gview, gview + C * plane);
  // grayscale^T
  if (p.gray) {
    for (std::ptrdiff_t i = 0; i < plane; ++i) {
      double t = 0.0;
      for (int c = 0; c < C; ++c) t += g[c * plane + i];
      for (int c = 0; c < C; ++c)
        g[c * plane + i] = static_cast<S>(detail::luma_weight(c, C) * t);
    }
  }
  // flip^T = flip
  if (p.flip) {
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < H; ++y) {
        S* row = g.data() + c * plane + static_cast<std::ptrdiff_t>(y) * W;
        for (int x = 0; x < W / 2; ++x) std::swap(row[x], row[W - 1 - x]);
      }
  }
  // saturation^T
  for (std::ptrdiff_t i = 0; i < plane; ++i) {
    double t = 0.0;
    for (int c = 0; c < C; ++c) t += g[c * plane + i];
    for (int c = 0; c < C; ++c)
      g[c * plane + i] = static_cast<S>(p.f_sat * g[c * plane + i] +
                                        detail::luma_weight(c, C) * (1.0 - p.f_sat) * t);
  }
  // contrast^T
  {
    double total = 0.0;
    for (std::ptrdiff_t i = 0; i < C * plane; ++i) total += g[i];
    for (int c = 0; c < C; ++c) {
      const double u = detail::luma_weight(c, C) / static_cast<double>(plane);
      for (std::ptrdiff_t i = 0; i < plane; ++i)
        g[c * plane + i] = static_cast<S>(p.f_contrast * g[c * plane + i] +
                                          (1.0 - p.f_contrast) * total * u);
    }
  }
  // brightness^T
  for (std::ptrdiff_t i = 0; i < C * plane; ++i) g[i] = static_cast<S>(g[i] * p.f_bright);
  // resize^T: scatter bilinear weights back into the crop window
  for (int y = 0; y < H; ++y) {
    const auto ty = detail::make_tap(y, H, p.crop_top, p.crop_h);
    for (int x = 0; x < W; ++x) {
      const auto tx = detail::make_tap(x, W, p.crop_left, p.crop_w);
      for (int c = 0; c < C; ++c) {
        const double gv = g[c * plane + y * W + x];
        S* pl = gsrc + c * plane;
        pl[ty.i0 * W + tx.i0] += static_cast<S>(gv * ty.w0 * tx.w0);
        pl[ty.i0 * W + tx.i1] += static_cast<S>(gv * ty.w0 * tx.w1);
        pl[ty.i1 * W + tx.i0] += static_cast<S>(gv * ty.w1 * tx.w0);
        pl[ty.i1 * W + tx.i1] += static_cast<S>(gv * ty.w1 * tx.w1);
      }
    }
  }
}

}  // namespace ssdef
