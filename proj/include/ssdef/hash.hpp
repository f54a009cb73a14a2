#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <vector>

#include "ssdef/common.hpp"

namespace ssdef {

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <class S>
std::uint64_t hash_matrix(const MatX<S>& m, std::uint64_t h = 0xcbf29ce484222325ULL) {
  // column-major dense storage, hashed as raw scalar bytes
  return fnv1a64(m.data(), sizeof(S) * static_cast<std::size_t>(m.size()), h);
}

template <class S>
std::uint64_t hash_matrices(const std::vector<const MatX<S>*>& ms) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto* m : ms) h = hash_matrix(*m, h);
  return h;
}

}  // namespace ssdef
