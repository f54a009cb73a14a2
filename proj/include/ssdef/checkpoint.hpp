#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssdef/ssl.hpp"
#include "ssdef/zoo.hpp"

namespace ssdef {

// Single-file container: magic + version header, named parameter tensors as
// little-endian IEEE-754 float32, trailing FNV64 checksum. The interchange
// precision is float32; in-memory models widen to their scalar type, so a
// restored model re-serializes bit-identically.
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'S', 'S', 'D', 'C'};

enum class ModelKind : std::uint8_t { Classifier = 0, SslHead = 1, Tensors = 2 };

struct NamedTensor {
  std::string name;
  std::uint32_t rows = 0, cols = 0;
  std::vector<float> data;  // column-major
};

struct CheckpointMeta {
  std::uint64_t dataset_hash = 0;
  std::uint32_t epochs = 0;
  std::uint64_t seed = 0;
  double held_out_accuracy = -1.0;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  ModelKind kind = ModelKind::Tensors;
  std::uint8_t task = 0;  // TaskId for SslHead checkpoints
  std::string arch_id;
  std::uint32_t num_outputs = 0;
  std::uint32_t in_c = 0, in_h = 0, in_w = 0;
  CheckpointMeta meta;
  std::vector<NamedTensor> tensors;
};

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);  // IntegrityError on corruption

// --- network <-> tensor bridges ---

template <class S>
std::vector<NamedTensor> tensors_from_network(const nn::Network<S>& net) {
  std::vector<NamedTensor> out;
  auto params = net.param_tensors();
  auto labels = net.param_labels();
  for (std::size_t i = 0; i < params.size(); ++i) {
    NamedTensor t;
    t.name = labels[i];
    t.rows = static_cast<std::uint32_t>(params[i]->rows());
    t.cols = static_cast<std::uint32_t>(params[i]->cols());
    t.data.resize(static_cast<std::size_t>(t.rows) * t.cols);
    for (Eigen::Index k = 0; k < params[i]->size(); ++k)
      t.data[k] = static_cast<float>(params[i]->data()[k]);
    out.push_back(std::move(t));
  }
  return out;
}

template <class S>
void load_network_params(nn::Network<S>& net, const std::vector<NamedTensor>& tensors) {
  auto params = net.param_tensors();
  auto labels = net.param_labels();
  if (tensors.size() != params.size())
    throw IntegrityError("checkpoint: parameter tensor count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = tensors[i];
    if (t.name != labels[i])
      throw IntegrityError("checkpoint: tensor name mismatch at " + t.name);
    if (t.rows != params[i]->rows() || t.cols != params[i]->cols())
      throw IntegrityError("checkpoint: tensor shape mismatch at " + t.name);
    for (Eigen::Index k = 0; k < params[i]->size(); ++k)
      params[i]->data()[k] = static_cast<S>(t.data[k]);
  }
}

inline NamedTensor tensor_from_matrix(const std::string& name, const Matd& m) {
  NamedTensor t;
  t.name = name;
  t.rows = static_cast<std::uint32_t>(m.rows());
  t.cols = static_cast<std::uint32_t>(m.cols());
  t.data.resize(static_cast<std::size_t>(m.size()));
  for (Eigen::Index k = 0; k < m.size(); ++k) t.data[k] = static_cast<float>(m.data()[k]);
  return t;
}

inline Matd matrix_from_tensor(const NamedTensor& t) {
  Matd m(t.rows, t.cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = t.data[k];
  return m;
}

template <class S>
Checkpoint checkpoint_from_classifier(const Classifier<S>& m,
                                      CheckpointMeta meta = {}) {
  Checkpoint c;
  c.kind = ModelKind::Classifier;
  c.arch_id = m.arch_id;
  c.num_outputs = m.num_classes;
  c.in_c = m.in_c;
  c.in_h = m.in_h;
  c.in_w = m.in_w;
  c.meta = meta;
  c.tensors = tensors_from_network(m.net);
  return c;
}

template <class S>
Classifier<S> classifier_from_checkpoint(const Checkpoint& c) {
  if (c.kind != ModelKind::Classifier)
    throw IntegrityError("checkpoint: not a classifier checkpoint");
  ClassifierSpec spec;
  spec.arch_id = c.arch_id;
  spec.num_classes = static_cast<int>(c.num_outputs);
  Classifier<S> m = build_classifier<S>(spec, c.in_c, c.in_h, c.in_w);
  load_network_params(m.net, c.tensors);
  return m;
}

template <class S>
Checkpoint checkpoint_from_head(const SslHead<S>& head, CheckpointMeta meta = {}) {
  Checkpoint c;
  c.kind = ModelKind::SslHead;
  c.task = static_cast<std::uint8_t>(head.task_id);
  c.arch_id = head.arch_id;
  c.num_outputs = head.num_outputs;
  c.in_c = head.in_c;
  c.in_h = head.in_h;
  c.in_w = head.in_w;
  c.meta = meta;
  c.tensors = tensors_from_network(head.net);
  return c;
}

template <class S>
SslHead<S> head_from_checkpoint(const Checkpoint& c) {
  if (c.kind != ModelKind::SslHead)
    throw IntegrityError("checkpoint: not an ssl-head checkpoint");
  const auto task = static_cast<TaskId>(c.task);
  SslHead<S> head = build_ssl_head<S>(task, c.in_c, c.in_h, c.in_w,
                                      static_cast<int>(c.num_outputs), c.meta.seed,
                                      arch_width(c.arch_id, 8));
  load_network_params(head.net, c.tensors);
  head.trained = true;
  return head;
}

}  // namespace ssdef
