#include <algorithm>
#include <cmath>

#include "ssdef/data.hpp"

namespace ssdef {

void SyntheticSpec::validate() const {
  require(num_classes >= 1, "SyntheticSpec: need at least one class");
  require(num_classes <= 10, "SyntheticSpec: shape palette holds 10 classes");
  require(num_images >= 0, "SyntheticSpec: negative image count");
  require(image_size >= 8 && image_size % 8 == 0,
          "SyntheticSpec: image_size must be a positive multiple of 8");
}

namespace {

struct Painter {
  std::vector<double>* img;  // 3 planes, row-major
  int n;
  double opacity = 1.0;  // global blend for everything drawn

  void set(int x, int y, const double rgb[3], double alpha = 1.0) {
    if (x < 0 || x >= n || y < 0 || y >= n) return;
    alpha *= opacity;
    for (int c = 0; c < 3; ++c) {
      double& v = (*img)[static_cast<std::size_t>(c) * n * n + y * n + x];
      v = (1.0 - alpha) * v + alpha * rgb[c];
    }
  }

  void disc(double cx, double cy, double r, const double rgb[3]) {
    for (int y = (int)std::floor(cy - r) - 1; y <= (int)std::ceil(cy + r) + 1; ++y)
      for (int x = (int)std::floor(cx - r) - 1; x <= (int)std::ceil(cx + r) + 1; ++x) {
        const double d = std::hypot(x - cx, y - cy);
        const double a = std::clamp(r - d + 0.5, 0.0, 1.0);
        if (a > 0) set(x, y, rgb, a);
      }
  }

  void rect(double x0, double y0, double x1, double y1, const double rgb[3]) {
    for (int y = (int)std::floor(y0); y <= (int)std::ceil(y1); ++y)
      for (int x = (int)std::floor(x0); x <= (int)std::ceil(x1); ++x)
        if (x >= x0 - 0.5 && x <= x1 + 0.5 && y >= y0 - 0.5 && y <= y1 + 0.5)
          set(x, y, rgb);
  }
};

// One bright, oriented shape per class; every shape has a distinct top so the
// rotation task is learnable, and all are drawn near the center so the
// inpainting mask covers non-constant content.
void draw_shape(Painter& p, int cls, double cx, double cy, double h, const double rgb[3]) {
  static constexpr double white[3] = {0.95, 0.95, 0.95};
  switch (cls) {
    case 0: {  // filled triangle, apex up
      for (int y = (int)(cy - h); y <= (int)(cy + h); ++y) {
        const double t = (y - (cy - h)) / (2 * h);
        const double hw = std::max(0.0, t * h);
        for (int x = (int)(cx - hw); x <= (int)(cx + hw); ++x) p.set(x, y, rgb);
      }
      break;
    }
    case 1: {  // square frame, marked top-left corner
      const double th = std::max(1.5, h / 3.0);
      for (int y = (int)(cy - h); y <= (int)(cy + h); ++y)
        for (int x = (int)(cx - h); x <= (int)(cx + h); ++x) {
          const double d = std::max(std::abs(x - cx), std::abs(y - cy));
          if (d <= h && d >= h - th) p.set(x, y, rgb);
        }
      p.disc(cx - h, cy - h, h / 3.5, white);
      break;
    }
    case 2: {  // T: cap on top
      p.rect(cx - h / 4, cy - h, cx + h / 4, cy + h, rgb);
      p.rect(cx - h, cy - h, cx + h, cy - h / 2, rgb);
      break;
    }
    case 3: {  // disc with a dot above it
      p.disc(cx, cy, 0.75 * h, rgb);
      p.disc(cx, cy - h, 0.28 * h, white);
      break;
    }
    case 4: {  // main diagonal stripe, blob at the top-left end
      const double th = h / 2.5;
      for (int y = (int)(cy - h); y <= (int)(cy + h); ++y)
        for (int x = (int)(cx - h); x <= (int)(cx + h); ++x)
          if (std::abs((x - cx) - (y - cy)) <= th) p.set(x, y, rgb);
      p.disc(cx - h, cy - h, 0.35 * h, white);
      break;
    }
    case 5: {  // cross with the top arm longer
      p.rect(cx - h / 6, cy - 1.25 * h, cx + h / 6, cy + 0.75 * h, rgb);
      p.rect(cx - h, cy - h / 6, cx + h, cy + h / 6, rgb);
      break;
    }
    case 6: {  // bright top half-square
      p.rect(cx - h, cy - h, cx + h, cy, rgb);
      break;
    }
    case 7: {  // ring with a gap at the top
      for (int y = (int)(cy - h) - 1; y <= (int)(cy + h) + 1; ++y)
        for (int x = (int)(cx - h) - 1; x <= (int)(cx + h) + 1; ++x) {
          const double d = std::hypot(x - cx, y - cy);
          if (d <= h && d >= 0.6 * h) {
            if (std::abs(x - cx) < 0.32 * h && (y - cy) < -0.3 * h) continue;
            p.set(x, y, rgb);
          }
        }
      break;
    }
    case 8: {  // arrow up: head + tail
      for (int y = (int)(cy - h); y <= (int)(cy - h / 4); ++y) {
        const double t = (y - (cy - h)) / (0.75 * h);
        const double hw = std::max(0.0, t * h);
        for (int x = (int)(cx - hw); x <= (int)(cx + hw); ++x) p.set(x, y, rgb);
      }
      p.rect(cx - h / 5, cy - h / 4, cx + h / 5, cy + h, rgb);
      break;
    }
    default: {  // 9: big dot over small dot
      p.disc(cx, cy - h / 2, 0.55 * h, rgb);
      p.disc(cx, cy + h / 2, 0.3 * h, rgb);
      break;
    }
  }
}

constexpr double kPalette[10][3] = {
    {0.95, 0.25, 0.20}, {0.20, 0.85, 0.30}, {0.25, 0.45, 0.95}, {0.95, 0.85, 0.20},
    {0.85, 0.30, 0.90}, {0.20, 0.85, 0.85}, {0.95, 0.55, 0.15}, {0.60, 0.95, 0.20},
    {0.40, 0.20, 0.90}, {0.90, 0.50, 0.60},
};

void hsv_to_rgb(double h, double s, double v, double rgb[3]) {
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const double m = v - c;
  rgb[0] = r + m;
  rgb[1] = g + m;
  rgb[2] = b + m;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Dataset d;
  d.channels = 3;
  d.height = spec.image_size;
  d.width = spec.image_size;
  d.num_classes = spec.num_classes;
  d.split = spec.split;
  const int n = spec.image_size;
  const std::size_t plane = static_cast<std::size_t>(n) * n;
  d.pixels.reserve(static_cast<std::size_t>(spec.num_images) * 3 * plane);
  d.labels.reserve(spec.num_images);

  std::vector<double> img(3 * plane);
  for (int i = 0; i < spec.num_images; ++i) {
    Rng rng(mix_seed(spec.seed, 0x57A9E5 + static_cast<std::uint64_t>(i) * 2 +
                                    (spec.split == Split::Test ? 1 : 0)));
    const int cls = i % spec.num_classes;

    // background: dim base + mild random-direction gradient + speckle
    double base[3];
    for (double& b : base) b = rng.uniform(0.08, 0.30);
    const double ang = rng.uniform(0.0, 2.0 * M_PI);
    const double gx = std::cos(ang), gy = std::sin(ang);
    const double gmag = rng.uniform(0.05, 0.15);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double t = ((x - n / 2.0) * gx + (y - n / 2.0) * gy) / n;
        for (int c = 0; c < 3; ++c)
          img[c * plane + y * n + x] =
              std::clamp(base[c] + gmag * t + rng.uniform(-0.07, 0.07), 0.0, 1.0);
      }

    Painter p{&img, n};
    p.opacity = spec.class_colors ? 1.0 : rng.uniform(0.32, 0.52);
    if (!spec.class_colors) {
      // distractor clutter shares the shape's color statistics
      const int blobs = 3 + rng.uniform_int(4);
      for (int d = 0; d < blobs; ++d) {
        double drgb[3];
        hsv_to_rgb(rng.uniform(0, 1), rng.uniform(0.3, 0.9), rng.uniform(0.3, 0.8), drgb);
        p.disc(rng.uniform(0.1, 0.9) * n, rng.uniform(0.1, 0.9) * n,
               rng.uniform(0.05, 0.12) * n, drgb);
      }
    }

    double rgb[3];
    if (spec.class_colors) {
      for (int c = 0; c < 3; ++c)
        rgb[c] = std::clamp(kPalette[cls][c] + rng.uniform(-0.08, 0.08), 0.0, 1.0);
    } else {
      hsv_to_rgb(rng.uniform(0, 1), rng.uniform(0.55, 1.0), rng.uniform(0.65, 1.0), rgb);
    }
    const double h = n * rng.uniform(0.24, 0.36);
    const double cx = n / 2.0 + rng.uniform(-0.09, 0.09) * n;
    const double cy = n / 2.0 + rng.uniform(-0.09, 0.09) * n;
    draw_shape(p, cls, cx, cy, h, rgb);

    for (double v : img)
      d.pixels.push_back(static_cast<std::uint8_t>(
          std::clamp<long>(std::lround(v * 255.0), 0, 255)));
    d.labels.push_back(static_cast<std::uint8_t>(cls));
  }
  d.recompute_hash();
  return d;
}

}  // namespace ssdef
