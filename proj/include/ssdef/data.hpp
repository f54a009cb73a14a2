#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssdef/hash.hpp"
#include "ssdef/image_batch.hpp"
#include "ssdef/rng.hpp"

namespace ssdef {

enum class Split { Train, Test };

// Images stay in byte form (the CIFAR-10 record encoding); [0,1] doubles are
// materialized per batch. content_hash is a multiset hash (sum of per-record
// FNV64), so any permutation of the same records hashes identically.
struct Dataset {
  int channels = 3;
  int height = 32;
  int width = 32;
  int num_classes = 10;
  Split split = Split::Train;
  std::vector<std::uint8_t> pixels;  // size() * channels*height*width
  std::vector<std::uint8_t> labels;
  std::uint64_t content_hash = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t image_bytes() const {
    return static_cast<std::size_t>(channels) * height * width;
  }

  void recompute_hash() {
    std::uint64_t h = 0;
    const std::size_t n = image_bytes();
    for (std::size_t i = 0; i < size(); ++i) {
      std::uint64_t rh = fnv1a64(&labels[i], 1);
      rh = fnv1a64(pixels.data() + i * n, n, rh);
      h += rh;  // wrapping sum: order independent
    }
    content_hash = h;
  }

  void validate() const {
    require(pixels.size() == size() * image_bytes(), "Dataset: pixel/label size mismatch");
    for (auto l : labels)
      require(l < num_classes, "Dataset: label out of range");
  }
};

inline ImageBatch<double> to_image_batch(const Dataset& d, const std::vector<std::uint32_t>& idx,
                                         std::vector<int>* labels_out = nullptr) {
  ImageBatch<double> b(d.channels, d.height, d.width, static_cast<int>(idx.size()));
  const std::size_t n = d.image_bytes();
  if (labels_out) labels_out->clear();
  for (std::size_t j = 0; j < idx.size(); ++j) {
    require(idx[j] < d.size(), "to_image_batch: index out of range");
    const std::uint8_t* rec = d.pixels.data() + static_cast<std::size_t>(idx[j]) * n;
    for (std::size_t i = 0; i < n; ++i) b.data(i, j) = rec[i] / 255.0;
    if (labels_out) labels_out->push_back(d.labels[idx[j]]);
  }
  return b;
}

// Deterministic sample of n distinct records (a permutation when n == size).
inline Dataset subset(const Dataset& d, std::size_t n, std::uint64_t seed) {
  require(n <= d.size(), "subset: n exceeds dataset size");
  std::vector<std::uint32_t> idx(d.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::uint32_t>(i);
  Rng rng(mix_seed(seed, 0x5085e7));
  rng.shuffle(idx.begin(), idx.end());
  Dataset out;
  out.channels = d.channels;
  out.height = d.height;
  out.width = d.width;
  out.num_classes = d.num_classes;
  out.split = d.split;
  const std::size_t nb = d.image_bytes();
  out.pixels.resize(n * nb);
  out.labels.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::copy_n(d.pixels.data() + static_cast<std::size_t>(idx[j]) * nb, nb,
                out.pixels.data() + j * nb);
    out.labels[j] = d.labels[idx[j]];
  }
  out.recompute_hash();
  return out;
}

// Shuffled index chunks for one epoch; every record appears at most once.
inline std::vector<std::vector<std::uint32_t>> epoch_batches(std::size_t n, int batch_size,
                                                             std::uint64_t seed) {
  require(batch_size >= 1, "epoch_batches: batch_size must be >= 1");
  std::vector<std::uint32_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
  Rng rng(mix_seed(seed, 0xba7c4));
  rng.shuffle(idx.begin(), idx.end());
  std::vector<std::vector<std::uint32_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t stop = std::min(n, start + batch_size);
    out.emplace_back(idx.begin() + start, idx.begin() + stop);
  }
  return out;
}

// --- CIFAR-10 binary format (src/cifar.cpp) ---
// Per record: 1 label byte + 3072 pixel bytes (R, G, B planes, row-major).
struct Cifar10 {
  Dataset train, test;
};
Cifar10 load_cifar10(const std::string& dir);
Dataset load_cifar_records(const std::string& file, int num_classes = 10,
                           Split split = Split::Train);
void write_cifar_records(const Dataset& d, const std::string& file);
// Canonical layout: data_batch_1..5.bin (10k records each) + test_batch.bin.
void export_cifar10(const Dataset& train, const Dataset& test, const std::string& dir);

// --- Synthetic structured images (src/synthetic.cpp) ---
// Oriented shape classes (distinct top/bottom) with non-constant centers, so
// rotation prediction and inpainting both have signal.
struct SyntheticSpec {
  int num_images = 1000;
  int image_size = 32;
  int num_classes = 4;
  std::uint64_t seed = 0;
  Split split = Split::Train;
  // false: every class draws from the same per-image color distribution, so
  // class identity is carried by shape alone; true: fixed per-class colors.
  bool class_colors = false;

  void validate() const;
};
Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace ssdef
