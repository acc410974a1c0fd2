#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "arena/config.hpp"
#include "arena/types.hpp"

namespace arena {

/// Row-major scalar field.
struct HeightField {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  [[nodiscard]] double at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }

  friend bool operator==(const HeightField&, const HeightField&) = default;
};

class GameMap {
public:
  GameMap() = default;
  GameMap(int width, int height, std::uint64_t seed, TileKind fill = TileKind::Grass);

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::size_t cell_count() const { return cells_.size(); }

  [[nodiscard]] bool in_bounds(int row, int col) const {
    return row >= 0 && col >= 0 && row < height_ && col < width_;
  }
  [[nodiscard]] bool in_bounds(Position p) const { return in_bounds(p.row, p.col); }

  [[nodiscard]] std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * width_ + col;
  }
  [[nodiscard]] std::size_t index(Position p) const { return index(p.row, p.col); }

  [[nodiscard]] TileKind at(int row, int col) const { return cells_[index(row, col)]; }
  [[nodiscard]] TileKind at(Position p) const { return cells_[index(p)]; }
  void set(int row, int col, TileKind kind) { cells_[index(row, col)] = kind; }
  void set(Position p, TileKind kind) { cells_[index(p)] = kind; }

  [[nodiscard]] std::span<const TileKind> cells() const { return cells_; }

  /// True if any of the four cardinal neighbours of (row, col) is Water.
  [[nodiscard]] bool water_adjacent(int row, int col) const;

  [[nodiscard]] std::size_t count(TileKind kind) const;

  friend bool operator==(const GameMap&, const GameMap&) = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<TileKind> cells_;
};

class GenerationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class MapFormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Stone is the only impassable tile. Lava can be entered but kills.
constexpr bool is_passable(TileKind kind) { return kind != TileKind::Stone; }

/// Octave sum of ridged Perlin noise (1 - |n| per octave), renormalized
/// onto [0, 1] between its 1st and 99th percentiles (tails clamped). Throws ConfigurationError on bad params.
HeightField ridge_fractal(std::uint64_t seed, int width, int height, const FractalParams& params);

/// Band lookup: the first threshold whose upper bound exceeds h, so a value
/// on a boundary belongs to the upper band. h == 1.0 maps to the last band.
TileKind classify_tile(double h, std::span<const Threshold> thresholds);

/// size x size map: outer ring Lava, second ring Grass (the spawn ring),
/// interior classified from the ridge fractal. Retries with a new sub-seed
/// until spawn_reachable() holds; throws GenerationError when
/// `max_retries` attempts all fail and ConfigurationError if size < 16.
GameMap generate_map(std::uint64_t seed, int size, const FractalParams& params, int max_retries = 16);

GameMap generate_map(const WorldgenConfig& config);

/// Passable, non-lava cells of the second ring in row-major order.
std::vector<Position> spawn_cells(const GameMap& map);

/// Flood fill over passable non-lava tiles from the spawn ring reaches at
/// least one Forest tile and one cell next to Water.
bool spawn_reachable(const GameMap& map);

/// Text format: a header line "<width> <height> <seed>" followed by
/// `height` lines of `width` characters from G F S R W L
/// (Grass Forest Scrub Stone Water Lava).
void write_map(std::ostream& out, const GameMap& map);
GameMap read_map(std::istream& in);
void save_map(const std::filesystem::path& path, const GameMap& map);
GameMap load_map(const std::filesystem::path& path);

}  // namespace arena
