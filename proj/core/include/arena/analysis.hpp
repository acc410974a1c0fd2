#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "arena/config.hpp"
#include "arena/image.hpp"
#include "arena/neural.hpp"
#include "arena/obsact.hpp"
#include "arena/replay.hpp"
#include "arena/worldgen.hpp"

namespace arena {

/// Row-major grid of doubles.
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  Grid() = default;
  Grid(int w, int h, double fill = 0.0) : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * width + col]; }
  [[nodiscard]] double at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
  [[nodiscard]] double sum() const;
  [[nodiscard]] std::size_t nonzero() const;

  Grid& operator+=(const Grid& other);
  friend bool operator==(const Grid&, const Grid&) = default;
};

class AnalysisError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Throws AnalysisError if the replay header disagrees with the map size or a
/// record points outside it.
void check_replay_matches(const std::vector<ReplayRecord>& records, const GameMap& map);

struct ExplorationResult {
  Grid visits;             // spawn and move records per cell
  double coverage = 0.0;   // visited passable cells / passable cells
  std::size_t visited = 0;
  std::size_t passable = 0;
};

ExplorationResult exploration_map(const std::vector<ReplayRecord>& records, const GameMap& map);

/// Mean over agents of the number of distinct cells each agent occupied
/// during its lifetime, and the same normalised by the passable cell count.
struct LifetimeCoverage {
  std::size_t agents = 0;
  double mean_cells = 0.0;
  double mean_fraction = 0.0;
};

LifetimeCoverage lifetime_coverage(const std::vector<ReplayRecord>& records, const GameMap& map);

struct NicheResult {
  std::vector<Grid> populations;  // visit grid per population
  Grid total;
  /// Sum over cells of min_p share_p, where share_p is the fraction of
  /// population p's visits that fall on the cell. 0 for disjoint
  /// populations, 1 for identical visit distributions.
  double overlap = 0.0;
};

/// Throws AnalysisError if a record names a population >= `populations`.
NicheResult niche_map(const std::vector<ReplayRecord>& records, const GameMap& map, int populations);

/// Each visited cell takes the colour of its most frequent population, with
/// opacity proportional to its visit count relative to the busiest cell.
Image niche_overlay(const NicheResult& niches, const GameMap& map, int scale);

enum class ProbePopulation : std::uint8_t { Same = 0, Other };

struct ProbeSpec {
  int age = 100;
  int health = 10;
  int food = 32;
  int water = 32;
  ProbePopulation population = ProbePopulation::Same;
};

ProbeSpec probe_from_config(const AnalysisConfig& config, ProbePopulation population);

/// Observation of a lone agent standing at `center`, with full stats.
Observation base_observation(const GameMap& map, Position center, const EngineConfig& engine,
                             const ObsConfig& obs);

/// Value-head output with one probe agent inserted at each crop cell of
/// `base`. The centre cell holds the value of `base` itself.
Grid dependency_map(const PolicyParams& params, const Observation& base, const ObsConfig& obs,
                    const ProbeSpec& probe);

struct AttackMapResult {
  std::array<Grid, kAttackCount> styles;  // melee, range, mage at attacker cells
  std::array<double, kAttackCount> shares{};
  std::size_t total = 0;
};

AttackMapResult attack_map(const std::vector<ReplayRecord>& records, const GameMap& map);

/// Writes `path` as PNG (cell (r, c) covers pixels [c*scale, (c+1)*scale) x
/// [r*scale, (r+1)*scale)) with values min-max normalised onto the palette,
/// plus the raw grid as CSV next to it (same stem, .csv).
void render_heatmap(const Grid& grid, Palette palette, const std::filesystem::path& path, int scale);
Image heatmap_image(const Grid& grid, Palette palette, int scale);

void write_grid_csv(const Grid& grid, const std::filesystem::path& path);
Grid read_grid_csv(const std::filesystem::path& path);

/// Renders one frame per tick record (state after that tick): tiles plus
/// agents coloured by population. Files are frame_<tick>.png. Returns the
/// frame count. Throws AnalysisError naming the tick of an inconsistent
/// record.
std::size_t render_replay(const std::vector<ReplayRecord>& records, const GameMap& map,
                          const std::filesystem::path& out_dir, int scale);

}  // namespace arena
