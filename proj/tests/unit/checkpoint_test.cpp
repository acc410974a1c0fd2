#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "arena/checkpoint.hpp"
#include "gradcheck.hpp"
#include "helpers.hpp"

namespace arena {
namespace {

std::uint32_t bitwise_crc32(const std::uint8_t* data, std::size_t n) {
  std::uint32_t c = 0xffffffffu;
  for (std::size_t i = 0; i < n; ++i) {
    c ^= data[i];
    for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0xedb88320u & (0u - (c & 1u)));
  }
  return ~c;
}

std::uint32_t read_u32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

PolicyParams sample_params() {
  Rng rng(21);
  return testing::random_params(make_shape(NeuralConfig{}, ObsConfig{}), rng);
}

TEST(Checkpoint, LayoutAndCrc) {
  const auto p = sample_params();
  const auto bytes = serialize_checkpoint(p, {3, 77});
  ASSERT_GT(bytes.size(), 16u);
  EXPECT_EQ(std::memcmp(bytes.data(), "ARNN", 4), 0);
  EXPECT_EQ(read_u32(bytes, 4), kCheckpointVersion);
  EXPECT_EQ(read_u32(bytes, 8), 3u);
  EXPECT_EQ(read_u32(bytes, 12), 77u);
  EXPECT_EQ(read_u32(bytes, 16), 0u);
  EXPECT_EQ(read_u32(bytes, 20), 225u);
  EXPECT_EQ(read_u32(bytes, 48), static_cast<std::uint32_t>(kTensorCount));
  const std::size_t expected = 52 + kTensorCount * 8 + p.parameter_count() * 4 + 4;
  EXPECT_EQ(bytes.size(), expected);
  EXPECT_EQ(read_u32(bytes, bytes.size() - 4), bitwise_crc32(bytes.data(), bytes.size() - 4));
}

TEST(Checkpoint, RoundTripIsStable) {
  const auto p = sample_params();
  const auto bytes = serialize_checkpoint(p, {1, 5});
  const auto ck = deserialize_checkpoint(bytes);
  EXPECT_EQ(ck.meta, (CheckpointMeta{1, 5}));
  EXPECT_EQ(ck.params.shape, p.shape);
  for (int t = 0; t < kTensorCount; ++t) {
    for (Eigen::Index i = 0; i < p[t].size(); ++i) {
      ASSERT_EQ(ck.params[t].data()[i], static_cast<double>(static_cast<float>(p[t].data()[i])));
    }
  }
  EXPECT_EQ(serialize_checkpoint(ck.params, ck.meta), bytes);
  EXPECT_EQ(params_checksum(ck.params), params_checksum(p));
}

TEST(Checkpoint, FileRoundTrip) {
  const auto dir = testing::scratch_dir("checkpoint");
  const auto p = sample_params();
  save_checkpoint(dir / "a.ckpt", p, {0, 9});
  const auto ck = load_checkpoint(dir / "a.ckpt");
  EXPECT_EQ(ck.meta.update, 9u);
  EXPECT_EQ(params_checksum(ck.params), params_checksum(p));
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), CheckpointError);
}

TEST(Checkpoint, EveryCorruptByteIsDetected) {
  const auto bytes = serialize_checkpoint(sample_params(), {0, 0});
  for (std::size_t at : {std::size_t{0}, std::size_t{6}, std::size_t{30}, std::size_t{200}, bytes.size() / 2,
                         bytes.size() - 1}) {
    auto bad = bytes;
    bad[at] ^= 0x10;
    EXPECT_THROW(deserialize_checkpoint(bad), CheckpointError) << "byte " << at;
  }
}

TEST(Checkpoint, TruncatedAndTrailing) {
  const auto bytes = serialize_checkpoint(sample_params(), {0, 0});
  auto shorter = bytes;
  shorter.resize(bytes.size() - 10);
  EXPECT_THROW(deserialize_checkpoint(shorter), CheckpointError);
  EXPECT_THROW(deserialize_checkpoint({}), CheckpointError);
  auto longer = bytes;
  longer.push_back(0);
  EXPECT_THROW(deserialize_checkpoint(longer), CheckpointError);
}

TEST(Checkpoint, ChecksumTracksWeights) {
  auto p = sample_params();
  const auto before = params_checksum(p);
  p[kValueB](0, 0) += 0.5;
  EXPECT_NE(params_checksum(p), before);
}

}  // namespace
}  // namespace arena
