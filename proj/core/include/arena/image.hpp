#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "arena/types.hpp"
#include "arena/worldgen.hpp"

namespace arena {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// 8-bit RGB raster, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  Image() = default;
  Image(int w, int h, Rgb fill = {});

  [[nodiscard]] Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
  /// Fills the scale x scale block of grid cell (row, col).
  void fill_cell(int row, int col, int scale, Rgb c);

  friend bool operator==(const Image&, const Image&) = default;
};

class ImageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

enum class Palette : std::uint8_t { Heat = 0, Gray };

/// Colour for t in [0, 1]; values outside are clamped.
Rgb palette_color(Palette palette, double t);
Rgb tile_color(TileKind kind);
Rgb population_color(int population);
Rgb blend(Rgb under, Rgb over, double alpha);

/// One scale x scale block per tile.
Image render_map(const GameMap& map, int scale);

}  // namespace arena
