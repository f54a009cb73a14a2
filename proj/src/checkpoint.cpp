#include "ssdef/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "ssdef/hash.hpp"

namespace ssdef {

namespace {

void put_bytes(std::string& b, const void* p, std::size_t n) {
  b.append(static_cast<const char*>(p), n);
}
void put_u8(std::string& b, std::uint8_t v) { put_bytes(b, &v, 1); }
void put_u16(std::string& b, std::uint16_t v) {
  const std::uint8_t x[2] = {std::uint8_t(v), std::uint8_t(v >> 8)};
  put_bytes(b, x, 2);
}
void put_u32(std::string& b, std::uint32_t v) {
  const std::uint8_t x[4] = {std::uint8_t(v), std::uint8_t(v >> 8),
                             std::uint8_t(v >> 16), std::uint8_t(v >> 24)};
  put_bytes(b, x, 4);
}
void put_u64(std::string& b, std::uint64_t v) {
  put_u32(b, static_cast<std::uint32_t>(v));
  put_u32(b, static_cast<std::uint32_t>(v >> 32));
}
void put_f32(std::string& b, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  put_u32(b, u);
}
void put_f64(std::string& b, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  put_u64(b, u);
}
void put_str(std::string& b, const std::string& s) {
  if (s.size() > 0xffff) throw std::invalid_argument("checkpoint: string too long");
  put_u16(b, static_cast<std::uint16_t>(s.size()));
  put_bytes(b, s.data(), s.size());
}

struct Reader {
  const std::uint8_t* p;
  std::size_t n;
  std::size_t off = 0;

  void need(std::size_t k) const {
    if (off + k > n) throw IntegrityError("checkpoint: truncated file");
  }
  std::uint8_t u8() {
    need(1);
    return p[off++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = std::uint16_t(p[off]) | std::uint16_t(p[off + 1]) << 8;
    off += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[off + i];
    off += 4;
    return v;
  }
  std::uint64_t u64() {
    const std::uint64_t lo = u32();
    const std::uint64_t hi = u32();
    return lo | (hi << 32);
  }
  float f32() {
    const std::uint32_t u = u32();
    float v;
    std::memcpy(&v, &u, 4);
    return v;
  }
  double f64() {
    const std::uint64_t u = u64();
    double v;
    std::memcpy(&v, &u, 8);
    return v;
  }
  std::string str() {
    const std::uint16_t len = u16();
    need(len);
    std::string s(reinterpret_cast<const char*>(p + off), len);
    off += len;
    return s;
  }
};

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::string buf;
  put_bytes(buf, kCheckpointMagic, 4);
  put_u32(buf, c.version);
  put_u8(buf, static_cast<std::uint8_t>(c.kind));
  put_u8(buf, c.task);
  put_str(buf, c.arch_id);
  put_u32(buf, c.num_outputs);
  put_u32(buf, c.in_c);
  put_u32(buf, c.in_h);
  put_u32(buf, c.in_w);
  put_u64(buf, c.meta.dataset_hash);
  put_u32(buf, c.meta.epochs);
  put_u64(buf, c.meta.seed);
  put_f64(buf, c.meta.held_out_accuracy);
  put_u32(buf, static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& t : c.tensors) {
    put_str(buf, t.name);
    put_u32(buf, t.rows);
    put_u32(buf, t.cols);
    if (t.data.size() != std::size_t(t.rows) * t.cols)
      throw std::invalid_argument("checkpoint: tensor size mismatch at " + t.name);
    for (float v : t.data) put_f32(buf, v);
  }
  put_u64(buf, fnv1a64(buf.data(), buf.size()));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("checkpoint: cannot open for write: " + path);
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw DataError("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw DataError("checkpoint: cannot open: " + path);
  const std::streamsize size = f.tellg();
  f.seekg(0);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(size));
  if (size > 0) f.read(reinterpret_cast<char*>(buf.data()), size);
  if (!f) throw DataError("checkpoint: read failed: " + path);

  if (buf.size() < 4 + 4 + 8) throw IntegrityError("checkpoint: truncated file");
  const std::size_t payload = buf.size() - 8;
  Reader tail{buf.data(), buf.size(), payload};
  const std::uint64_t stored = tail.u64();
  if (stored != fnv1a64(buf.data(), payload))
    throw IntegrityError("checkpoint: checksum mismatch (corrupt or truncated)");

  Reader r{buf.data(), payload, 0};
  char magic[4];
  r.need(4);
  std::memcpy(magic, r.p, 4);
  r.off = 4;
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw IntegrityError("checkpoint: bad magic bytes");
  Checkpoint c;
  c.version = r.u32();
  if (c.version != kCheckpointVersion)
    throw IntegrityError("checkpoint: unsupported format version " +
                         std::to_string(c.version) + " (expected " +
                         std::to_string(kCheckpointVersion) + ")");
  c.kind = static_cast<ModelKind>(r.u8());
  c.task = r.u8();
  c.arch_id = r.str();
  c.num_outputs = r.u32();
  c.in_c = r.u32();
  c.in_h = r.u32();
  c.in_w = r.u32();
  c.meta.dataset_hash = r.u64();
  c.meta.epochs = r.u32();
  c.meta.seed = r.u64();
  c.meta.held_out_accuracy = r.f64();
  const std::uint32_t count = r.u32();
  c.tensors.resize(count);
  for (auto& t : c.tensors) {
    t.name = r.str();
    t.rows = r.u32();
    t.cols = r.u32();
    const std::size_t k = std::size_t(t.rows) * t.cols;
    t.data.resize(k);
    for (std::size_t i = 0; i < k; ++i) t.data[i] = r.f32();
  }
  if (r.off != payload) throw IntegrityError("checkpoint: trailing garbage");
  return c;
}

}  // namespace ssdef
