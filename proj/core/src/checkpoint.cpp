#include "arena/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

namespace arena {
namespace {

constexpr std::uint8_t kMagic[4] = {'A', 'R', 'N', 'N'};

class Writer {
public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }

  std::vector<std::uint8_t> bytes;
};

class Reader {
public:
  Reader(const std::vector<std::uint8_t>& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  [[nodiscard]] std::size_t pos() const { return pos_; }

private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw CheckpointError("checkpoint truncated");
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(0L, data, static_cast<uInt>(n)));
}

void write_shape(Writer& w, const NetShape& s) {
  w.u32(static_cast<std::uint32_t>(s.crop_cells));
  w.u32(static_cast<std::uint32_t>(s.materials));
  w.u32(static_cast<std::uint32_t>(s.embed_dim));
  w.u32(static_cast<std::uint32_t>(s.entity_features));
  w.u32(static_cast<std::uint32_t>(s.entity_dim));
  w.u32(static_cast<std::uint32_t>(s.hidden));
  w.u32(static_cast<std::uint32_t>(s.activation));
}

void write_tensors(Writer& w, const PolicyParams& params) {
  w.u32(kTensorCount);
  for (int t = 0; t < kTensorCount; ++t) {
    const auto& m = params[t];
    w.u32(static_cast<std::uint32_t>(m.rows()));
    w.u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) w.f32(static_cast<float>(m(i, j)));
    }
  }
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const PolicyParams& params, const CheckpointMeta& meta) {
  Writer w;
  w.bytes.assign(std::begin(kMagic), std::end(kMagic));
  w.u32(kCheckpointVersion);
  w.u32(meta.population);
  w.u64(meta.update);
  write_shape(w, params.shape);
  write_tensors(w, params);
  w.u32(crc(w.bytes.data(), w.bytes.size()));
  return std::move(w.bytes);
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw CheckpointError("bad checkpoint magic");
  const std::size_t body = bytes.size() - 4;
  {
    // checksum lives in the last four bytes
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body + i]) << (8 * i);
    if (stored != crc(bytes.data(), body)) throw CheckpointError("checkpoint checksum mismatch");
  }
  Reader r(bytes, body);
  r.u32();  // magic
  const auto version = r.u32();
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.meta.population = r.u32();
  ck.meta.update = r.u64();
  NetShape s;
  s.crop_cells = static_cast<int>(r.u32());
  s.materials = static_cast<int>(r.u32());
  s.embed_dim = static_cast<int>(r.u32());
  s.entity_features = static_cast<int>(r.u32());
  s.entity_dim = static_cast<int>(r.u32());
  s.hidden = static_cast<int>(r.u32());
  const auto act = r.u32();
  if (act > static_cast<std::uint32_t>(Activation::Tanh)) throw CheckpointError("unknown activation id");
  s.activation = static_cast<Activation>(act);
  if (s.crop_cells <= 0 || s.materials <= 0 || s.embed_dim <= 0 || s.entity_features <= 0 || s.entity_dim <= 0 ||
      s.hidden <= 0) {
    throw CheckpointError("checkpoint has a non-positive dimension");
  }
  ck.params = PolicyParams::zeros(s);
  if (r.u32() != kTensorCount) throw CheckpointError("unexpected tensor count");
  for (int t = 0; t < kTensorCount; ++t) {
    auto& m = ck.params[t];
    const auto rows = r.u32();
    const auto cols = r.u32();
    if (rows != static_cast<std::uint32_t>(m.rows()) || cols != static_cast<std::uint32_t>(m.cols())) {
      throw CheckpointError(std::string("tensor ") + tensor_name(t) + " shape does not match header dimensions");
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = r.f32();
    }
  }
  if (r.pos() != body) throw CheckpointError("trailing bytes before checksum");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params, const CheckpointMeta& meta) {
  const auto bytes = serialize_checkpoint(params, meta);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

std::uint32_t params_checksum(const PolicyParams& params) {
  Writer w;
  write_shape(w, params.shape);
  write_tensors(w, params);
  return crc(w.bytes.data(), w.bytes.size());
}

}  // namespace arena
