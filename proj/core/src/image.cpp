#include "arena/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

namespace arena {

Image::Image(int w, int h, Rgb fill) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3) {
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = fill.r;
    pixels[i + 1] = fill.g;
    pixels[i + 2] = fill.b;
  }
}

Rgb Image::at(int x, int y) const {
  const auto i = (static_cast<std::size_t>(y) * width + x) * 3;
  return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

void Image::set(int x, int y, Rgb c) {
  const auto i = (static_cast<std::size_t>(y) * width + x) * 3;
  pixels[i] = c.r;
  pixels[i + 1] = c.g;
  pixels[i + 2] = c.b;
}

void Image::fill_cell(int row, int col, int scale, Rgb c) {
  for (int y = row * scale; y < (row + 1) * scale; ++y) {
    for (int x = col * scale; x < (col + 1) * scale; ++x) set(x, y, c);
  }
}

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.width <= 0 || image.height <= 0) throw ImageError("cannot write an empty image");
  std::unique_ptr<FILE, FileCloser> fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw ImageError("cannot open '" + path.string() + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw ImageError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageError("libpng failed writing '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, image.pixels.data() + static_cast<std::size_t>(y) * image.width * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw ImageError("cannot read '" + path.string() + "': " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  Image out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&img);
    throw ImageError("cannot decode '" + path.string() + "': " + img.message);
  }
  return out;
}

Rgb palette_color(Palette palette, double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  if (palette == Palette::Gray) {
    const auto v = static_cast<std::uint8_t>(std::lround(255.0 * t));
    return {v, v, v};
  }
  // black -> red -> yellow -> white
  static constexpr std::array<std::array<double, 3>, 4> stops{{{0, 0, 0}, {200, 30, 0}, {255, 210, 0}, {255, 255, 255}}};
  const double x = t * 3.0;
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(x), 2);
  const double f = x - static_cast<double>(i);
  Rgb c;
  c.r = static_cast<std::uint8_t>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0])));
  c.g = static_cast<std::uint8_t>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1])));
  c.b = static_cast<std::uint8_t>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2])));
  return c;
}

Rgb tile_color(TileKind kind) {
  switch (kind) {
    case TileKind::Grass:
      return {120, 180, 80};
    case TileKind::Forest:
      return {30, 100, 40};
    case TileKind::Scrub:
      return {160, 150, 90};
    case TileKind::Stone:
      return {110, 110, 110};
    case TileKind::Water:
      return {50, 100, 200};
    case TileKind::Lava:
      return {220, 60, 20};
  }
  return {};
}

Rgb population_color(int population) {
  static constexpr std::array<Rgb, 8> colors{{{230, 25, 75},
                                              {60, 180, 75},
                                              {0, 130, 200},
                                              {245, 130, 48},
                                              {145, 30, 180},
                                              {70, 240, 240},
                                              {240, 50, 230},
                                              {255, 225, 25}}};
  return colors[static_cast<std::size_t>(population) % colors.size()];
}

Rgb blend(Rgb under, Rgb over, double alpha) {
  alpha = std::clamp(alpha, 0.0, 1.0);
  const auto mix = [alpha](std::uint8_t a, std::uint8_t b) {
    return static_cast<std::uint8_t>(std::lround((1.0 - alpha) * a + alpha * b));
  };
  return {mix(under.r, over.r), mix(under.g, over.g), mix(under.b, over.b)};
}

Image render_map(const GameMap& map, int scale) {
  if (scale < 1) throw ImageError("scale must be positive");
  Image img(map.width() * scale, map.height() * scale);
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) img.fill_cell(r, c, scale, tile_color(map.at(r, c)));
  }
  return img;
}

}  // namespace arena
