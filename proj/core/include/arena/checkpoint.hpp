#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "arena/neural.hpp"

namespace arena {

/// Binary layout, all integers little-endian:
///
///   bytes 0..3   magic "ARNN"
///   u32          format version (1)
///   u32          population index
///   u64          update index
///   u32 x 7      crop_cells materials embed_dim entity_features entity_dim
///                hidden activation
///   u32          tensor count (11)
///   per tensor   u32 rows, u32 cols, rows*cols IEEE-754 float32, row-major
///   u32          CRC-32 (zlib polynomial) of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::uint32_t population = 0;
  std::uint64_t update = 0;

  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
  PolicyParams params;
  CheckpointMeta meta;
};

class CheckpointError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> serialize_checkpoint(const PolicyParams& params, const CheckpointMeta& meta);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params, const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// CRC-32 of the float32 serialization; equal checksums mean bit-identical
/// stored weights.
std::uint32_t params_checksum(const PolicyParams& params);

}  // namespace arena
