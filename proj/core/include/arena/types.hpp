#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace arena {

enum class TileKind : std::uint8_t { Grass = 0, Forest, Scrub, Stone, Water, Lava };

inline constexpr int kTileKindCount = 6;

const char* to_string(TileKind kind);
char tile_char(TileKind kind);
TileKind tile_from_char(char c);
TileKind tile_from_name(const std::string& name);

struct Position {
  int row = 0;
  int col = 0;

  friend bool operator==(const Position&, const Position&) = default;
};

using AgentId = std::uint32_t;

/// Thrown on invalid parameters handed to any module.
class ConfigurationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace arena
