#include "arena/worldgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>

#include "arena/rng.hpp"

namespace arena {

const char* to_string(TileKind kind) {
  switch (kind) {
    case TileKind::Grass: return "grass";
    case TileKind::Forest: return "forest";
    case TileKind::Scrub: return "scrub";
    case TileKind::Stone: return "stone";
    case TileKind::Water: return "water";
    case TileKind::Lava: return "lava";
  }
  return "?";
}

char tile_char(TileKind kind) {
  static constexpr std::array<char, kTileKindCount> kChars = {'G', 'F', 'S', 'R', 'W', 'L'};
  return kChars[static_cast<std::size_t>(kind)];
}

TileKind tile_from_char(char c) {
  switch (c) {
    case 'G': return TileKind::Grass;
    case 'F': return TileKind::Forest;
    case 'S': return TileKind::Scrub;
    case 'R': return TileKind::Stone;
    case 'W': return TileKind::Water;
    case 'L': return TileKind::Lava;
    default: throw MapFormatError(std::string("unknown tile character '") + c + "'");
  }
}

TileKind tile_from_name(const std::string& name) {
  for (int k = 0; k < kTileKindCount; ++k) {
    const auto kind = static_cast<TileKind>(k);
    if (name == to_string(kind)) return kind;
  }
  throw ConfigurationError("unknown tile kind '" + name + "'");
}

void FractalParams::validate() const {
  if (octaves < 1) throw ConfigurationError("fractal octaves must be >= 1");
  if (!(base_frequency > 0.0)) throw ConfigurationError("fractal base frequency must be positive");
  if (!(lacunarity > 0.0)) throw ConfigurationError("fractal lacunarity must be positive");
  if (!(persistence > 0.0)) throw ConfigurationError("fractal persistence must be positive");
  if (thresholds.empty()) throw ConfigurationError("threshold table is empty");
  double prev = 0.0;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const double u = thresholds[i].upper;
    if (!(u > prev) || u > 1.0) throw ConfigurationError("thresholds must be strictly increasing within (0, 1]");
    prev = u;
  }
  if (thresholds.back().upper != 1.0) throw ConfigurationError("last threshold must end at 1.0");
}

GameMap::GameMap(int width, int height, std::uint64_t seed, TileKind fill)
    : width_(width), height_(height), seed_(seed), cells_(static_cast<std::size_t>(width) * height, fill) {
  if (width <= 0 || height <= 0) throw ConfigurationError("map dimensions must be positive");
}

bool GameMap::water_adjacent(int row, int col) const {
  static constexpr std::array<std::array<int, 2>, 4> kDirs = {{{-1, 0}, {1, 0}, {0, 1}, {0, -1}}};
  for (const auto& d : kDirs) {
    const int r = row + d[0];
    const int c = col + d[1];
    if (in_bounds(r, c) && at(r, c) == TileKind::Water) return true;
  }
  return false;
}

std::size_t GameMap::count(TileKind kind) const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), kind));
}

namespace {

// Improved Perlin noise over a seeded permutation.
class Perlin {
public:
  explicit Perlin(Rng rng) {
    std::array<std::uint8_t, 256> p{};
    for (int i = 0; i < 256; ++i) p[i] = static_cast<std::uint8_t>(i);
    rng.shuffle(std::span<std::uint8_t>(p));
    for (int i = 0; i < 512; ++i) perm_[i] = p[i & 255];
  }

  // Roughly in [-1, 1].
  [[nodiscard]] double operator()(double x, double y) const {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const int xi = static_cast<int>(fx) & 255;
    const int yi = static_cast<int>(fy) & 255;
    const double xf = x - fx;
    const double yf = y - fy;
    const double u = fade(xf);
    const double v = fade(yf);
    const int aa = perm_[perm_[xi] + yi];
    const int ab = perm_[perm_[xi] + yi + 1];
    const int ba = perm_[perm_[xi + 1] + yi];
    const int bb = perm_[perm_[xi + 1] + yi + 1];
    const double x1 = lerp(grad(aa, xf, yf), grad(ba, xf - 1, yf), u);
    const double x2 = lerp(grad(ab, xf, yf - 1), grad(bb, xf - 1, yf - 1), u);
    return std::sqrt(2.0) * lerp(x1, x2, v);
  }

private:
  static double fade(double t) { return t * t * t * (t * (t * 6 - 15) + 10); }
  static double lerp(double a, double b, double t) { return a + t * (b - a); }

  // Eight unit gradients at 45 degree spacing.
  static double grad(int hash, double x, double y) {
    static constexpr double kDiag = 0.70710678118654752440;
    switch (hash & 7) {
      case 0: return x;
      case 1: return -x;
      case 2: return y;
      case 3: return -y;
      case 4: return kDiag * (x + y);
      case 5: return kDiag * (x - y);
      case 6: return kDiag * (-x + y);
      default: return kDiag * (-x - y);
    }
  }

  std::array<int, 512> perm_{};
};

}  // namespace

HeightField ridge_fractal(std::uint64_t seed, int width, int height, const FractalParams& params) {
  if (width <= 0 || height <= 0) throw ConfigurationError("height field dimensions must be positive");
  params.validate();

  HeightField field{width, height, std::vector<double>(static_cast<std::size_t>(width) * height, 0.0)};
  const Rng base(seed, 0x7e77a1);
  double frequency = params.base_frequency;
  double amplitude = 1.0;
  for (int octave = 0; octave < params.octaves; ++octave) {
    Rng octave_rng = base.derive(static_cast<std::uint64_t>(octave));
    const Perlin noise(octave_rng);
    // Per-octave offset so lattice points of different octaves don't align.
    const double ox = octave_rng.uniform01() * 256.0;
    const double oy = octave_rng.uniform01() * 256.0;
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const double n = std::clamp(noise(c * frequency + ox, r * frequency + oy), -1.0, 1.0);
        field.values[static_cast<std::size_t>(r) * width + c] += amplitude * (1.0 - std::abs(n));
      }
    }
    frequency *= params.lacunarity;
    amplitude *= params.persistence;
  }

  // Percentile min-max: the extreme 1% tails are clipped so a handful of
  // outlier cells can't compress the rest of the field into one band.
  std::vector<double> sorted = field.values;
  const std::size_t n = sorted.size();
  const std::size_t lo_rank = n / 100;
  const std::size_t hi_rank = (n - 1) - (n - 1) / 100;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(lo_rank), sorted.end());
  const double lo = sorted[lo_rank];
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(hi_rank), sorted.end());
  const double span = sorted[hi_rank] - lo;
  for (auto& v : field.values) v = span > 0.0 ? std::clamp((v - lo) / span, 0.0, 1.0) : 0.0;
  return field;
}

TileKind classify_tile(double h, std::span<const Threshold> thresholds) {
  for (const auto& t : thresholds) {
    if (h < t.upper) return t.kind;
  }
  return thresholds.back().kind;
}

namespace {

GameMap build_map(std::uint64_t map_seed, std::uint64_t field_seed, int size, const FractalParams& params) {
  const HeightField field = ridge_fractal(field_seed, size, size, params);
  GameMap map(size, size, map_seed);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const int ring = std::min({r, c, size - 1 - r, size - 1 - c});
      if (ring == 0) {
        map.set(r, c, TileKind::Lava);
      } else if (ring == 1) {
        map.set(r, c, TileKind::Grass);
      } else {
        map.set(r, c, classify_tile(field.at(r, c), params.thresholds));
      }
    }
  }
  return map;
}

}  // namespace

GameMap generate_map(std::uint64_t seed, int size, const FractalParams& params, int max_retries) {
  if (size < 16) throw ConfigurationError("map size must be >= 16, got " + std::to_string(size));
  params.validate();
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    const std::uint64_t sub_seed = attempt == 0 ? seed : mix_seed(seed, static_cast<std::uint64_t>(attempt));
    GameMap map = build_map(seed, sub_seed, size, params);
    if (spawn_reachable(map)) return map;
  }
  throw GenerationError("map generation for seed " + std::to_string(seed) + " failed the reachability check after " +
                        std::to_string(max_retries) + " attempts");
}

GameMap generate_map(const WorldgenConfig& config) {
  return generate_map(config.seed, config.size, config.fractal, config.max_retries);
}

std::vector<Position> spawn_cells(const GameMap& map) {
  std::vector<Position> cells;
  const int h = map.height();
  const int w = map.width();
  for (int r = 1; r < h - 1; ++r) {
    for (int c = 1; c < w - 1; ++c) {
      const bool ring = r == 1 || c == 1 || r == h - 2 || c == w - 2;
      if (!ring) continue;
      const TileKind k = map.at(r, c);
      if (is_passable(k) && k != TileKind::Lava) cells.push_back({r, c});
    }
  }
  return cells;
}

bool spawn_reachable(const GameMap& map) {
  std::vector<std::uint8_t> seen(map.cell_count(), 0);
  std::queue<Position> frontier;
  for (const auto p : spawn_cells(map)) {
    seen[map.index(p)] = 1;
    frontier.push(p);
  }
  bool forest = false;
  bool water = false;
  static constexpr std::array<std::array<int, 2>, 4> kDirs = {{{-1, 0}, {1, 0}, {0, 1}, {0, -1}}};
  while (!frontier.empty() && !(forest && water)) {
    const Position p = frontier.front();
    frontier.pop();
    forest = forest || map.at(p) == TileKind::Forest;
    water = water || map.water_adjacent(p.row, p.col);
    for (const auto& d : kDirs) {
      const Position n{p.row + d[0], p.col + d[1]};
      if (!map.in_bounds(n) || seen[map.index(n)]) continue;
      const TileKind k = map.at(n);
      if (!is_passable(k) || k == TileKind::Lava) continue;
      seen[map.index(n)] = 1;
      frontier.push(n);
    }
  }
  return forest && water;
}

void write_map(std::ostream& out, const GameMap& map) {
  out << map.width() << ' ' << map.height() << ' ' << map.seed() << '\n';
  std::string row(static_cast<std::size_t>(map.width()), ' ');
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) row[static_cast<std::size_t>(c)] = tile_char(map.at(r, c));
    out << row << '\n';
  }
}

GameMap read_map(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw MapFormatError("map file is empty");
  std::istringstream hs(header);
  int width = 0;
  int height = 0;
  std::uint64_t seed = 0;
  if (!(hs >> width >> height >> seed) || width <= 0 || height <= 0) {
    throw MapFormatError("malformed map header '" + header + "'");
  }
  GameMap map(width, height, seed);
  std::string line;
  for (int r = 0; r < height; ++r) {
    if (!std::getline(in, line)) throw MapFormatError("map truncated at row " + std::to_string(r));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (static_cast<int>(line.size()) != width) {
      throw MapFormatError("map row " + std::to_string(r) + " has " + std::to_string(line.size()) +
                           " cells, expected " + std::to_string(width));
    }
    for (int c = 0; c < width; ++c) map.set(r, c, tile_from_char(line[static_cast<std::size_t>(c)]));
  }
  return map;
}

void save_map(const std::filesystem::path& path, const GameMap& map) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write map file '" + path.string() + "'");
  write_map(out, map);
}

GameMap load_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MapFormatError("cannot open map file '" + path.string() + "'");
  return read_map(in);
}

}  // namespace arena
