#include "arena/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "arena/engine.hpp"

namespace arena {

double Grid::sum() const {
  double s = 0.0;
  for (const double v : values) s += v;
  return s;
}

std::size_t Grid::nonzero() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](double v) { return v != 0.0; }));
}

Grid& Grid::operator+=(const Grid& other) {
  if (other.width != width || other.height != height) throw AnalysisError("grid dimensions differ");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
  return *this;
}

namespace {

std::string at_tick(const ReplayRecord& r) { return "tick " + std::to_string(r.tick) + ": "; }

bool has_position(RecordType t) {
  return t == RecordType::Spawn || t == RecordType::Move || t == RecordType::Harvest || t == RecordType::Attack ||
         t == RecordType::Death || t == RecordType::Regen;
}

std::size_t passable_cells(const GameMap& map) {
  std::size_t n = 0;
  for (const auto k : map.cells()) n += is_passable(k) && k != TileKind::Lava ? 1 : 0;
  return n;
}

}  // namespace

void check_replay_matches(const std::vector<ReplayRecord>& records, const GameMap& map) {
  for (const auto& r : records) {
    if (r.type == RecordType::Header) {
      if (r.width != map.width() || r.height != map.height()) {
        throw AnalysisError("replay is for a " + std::to_string(r.width) + "x" + std::to_string(r.height) +
                            " map but the map is " + std::to_string(map.width()) + "x" +
                            std::to_string(map.height()));
      }
      if (r.seed != map.seed()) throw AnalysisError("replay map seed does not match the map file");
      continue;
    }
    if (has_position(r.type) && !map.in_bounds(r.pos)) throw AnalysisError(at_tick(r) + "position outside the map");
    if (r.type == RecordType::Attack && !map.in_bounds(r.target_pos)) {
      throw AnalysisError(at_tick(r) + "attack target outside the map");
    }
  }
}

ExplorationResult exploration_map(const std::vector<ReplayRecord>& records, const GameMap& map) {
  check_replay_matches(records, map);
  ExplorationResult out;
  out.visits = Grid(map.width(), map.height());
  for (const auto& r : records) {
    if (r.type == RecordType::Spawn || r.type == RecordType::Move) out.visits.at(r.pos.row, r.pos.col) += 1.0;
  }
  // lava visits are fatal and stone is never entered, so neither counts towards coverage
  out.passable = passable_cells(map);
  for (int row = 0; row < map.height(); ++row) {
    for (int col = 0; col < map.width(); ++col) {
      const auto k = map.at(row, col);
      if (out.visits.at(row, col) > 0.0 && is_passable(k) && k != TileKind::Lava) ++out.visited;
    }
  }
  out.coverage = out.passable == 0 ? 0.0 : static_cast<double>(out.visited) / static_cast<double>(out.passable);
  return out;
}

LifetimeCoverage lifetime_coverage(const std::vector<ReplayRecord>& records, const GameMap& map) {
  check_replay_matches(records, map);
  std::map<AgentId, std::set<std::size_t>> cells;
  for (const auto& r : records) {
    if (r.type == RecordType::Spawn || r.type == RecordType::Move) cells[r.agent].insert(map.index(r.pos));
  }
  LifetimeCoverage out;
  out.agents = cells.size();
  if (cells.empty()) return out;
  double total = 0.0;
  for (const auto& [id, set] : cells) total += static_cast<double>(set.size());
  out.mean_cells = total / static_cast<double>(cells.size());
  const auto passable = passable_cells(map);
  out.mean_fraction = passable == 0 ? 0.0 : out.mean_cells / static_cast<double>(passable);
  return out;
}

NicheResult niche_map(const std::vector<ReplayRecord>& records, const GameMap& map, int populations) {
  if (populations < 1) throw AnalysisError("population count must be at least 1");
  check_replay_matches(records, map);
  NicheResult out;
  out.populations.assign(static_cast<std::size_t>(populations), Grid(map.width(), map.height()));
  out.total = Grid(map.width(), map.height());
  std::map<AgentId, int> pop_of;
  for (const auto& r : records) {
    if (r.type == RecordType::Spawn) {
      if (r.population < 0 || r.population >= populations) {
        throw AnalysisError(at_tick(r) + "population " + std::to_string(r.population) + " outside [0, " +
                            std::to_string(populations) + ")");
      }
      pop_of[r.agent] = r.population;
    }
    if (r.type != RecordType::Spawn && r.type != RecordType::Move) continue;
    const auto it = pop_of.find(r.agent);
    if (it == pop_of.end()) throw AnalysisError(at_tick(r) + "move of agent " + std::to_string(r.agent) + " before its spawn");
    out.populations[static_cast<std::size_t>(it->second)].at(r.pos.row, r.pos.col) += 1.0;
    out.total.at(r.pos.row, r.pos.col) += 1.0;
  }

  std::vector<double> totals;
  for (const auto& g : out.populations) totals.push_back(g.sum());
  if (std::all_of(totals.begin(), totals.end(), [](double t) { return t > 0.0; })) {
    for (std::size_t i = 0; i < out.total.values.size(); ++i) {
      double m = 1.0;
      for (std::size_t p = 0; p < totals.size(); ++p) m = std::min(m, out.populations[p].values[i] / totals[p]);
      out.overlap += m;
    }
  }
  out.overlap = std::clamp(out.overlap, 0.0, 1.0);
  return out;
}

Image niche_overlay(const NicheResult& niches, const GameMap& map, int scale) {
  Image img = render_map(map, scale);
  double busiest = 0.0;
  for (const double v : niches.total.values) busiest = std::max(busiest, v);
  if (busiest == 0.0) return img;
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      const double total = niches.total.at(r, c);
      if (total == 0.0) continue;
      std::size_t best = 0;
      for (std::size_t p = 1; p < niches.populations.size(); ++p) {
        if (niches.populations[p].at(r, c) > niches.populations[best].at(r, c)) best = p;
      }
      const double alpha = 0.25 + 0.75 * total / busiest;
      img.fill_cell(r, c, scale, blend(tile_color(map.at(r, c)), population_color(static_cast<int>(best)), alpha));
    }
  }
  return img;
}

ProbeSpec probe_from_config(const AnalysisConfig& config, ProbePopulation population) {
  return {config.probe_age, config.probe_health, config.probe_food, config.probe_water, population};
}

Observation base_observation(const GameMap& map, Position center, const EngineConfig& engine,
                             const ObsConfig& obs) {
  if (!map.in_bounds(center)) throw AnalysisError("probe centre outside the map");
  EngineConfig ec = engine;
  ec.spawn_cap = 1;
  World world(map, ec, 0);
  const auto id = world.spawn_agent(0);
  if (!id) throw AnalysisError("map has no free spawn cell");
  world.move_agent_to(*id, center);
  return observe(world, *id, obs);
}

Grid dependency_map(const PolicyParams& params, const Observation& base, const ObsConfig& obs,
                    const ProbeSpec& probe) {
  const int size = base.crop_size();
  const int r = base.radius;
  EntityRecord self;
  bool found = false;
  for (const auto& e : base.entities) {
    if (e.delta_row == 0 && e.delta_col == 0) {
      self = e;
      found = true;
      break;
    }
  }
  if (!found) throw AnalysisError("base observation has no centred agent");

  Observation lone = base;
  lone.entities = {self};
  std::fill(lone.counts.begin(), lone.counts.end(), 0);
  lone.counts[static_cast<std::size_t>(r) * size + r] = 1;

  std::vector<EncodedObs> encoded;
  encoded.reserve(static_cast<std::size_t>(size) * size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      Observation o = lone;
      if (i != r || j != r) {
        EntityRecord p;
        p.id = 0;
        p.lifetime = probe.age;
        p.health = probe.health;
        p.food = probe.food;
        p.water = probe.water;
        p.delta_row = i - r;
        p.delta_col = j - r;
        p.pos = {base.center.row + p.delta_row, base.center.col + p.delta_col};
        p.same_population = probe.population == ProbePopulation::Same;
        o.entities.push_back(p);
        ++o.counts[static_cast<std::size_t>(i) * size + j];
      }
      encoded.push_back(encode(o, obs));
    }
  }
  std::vector<const EncodedObs*> batch;
  for (const auto& e : encoded) batch.push_back(&e);
  const auto out = forward_batch(params, batch);
  Grid g(size, size);
  for (std::size_t k = 0; k < out.size(); ++k) g.values[k] = out[k].value;
  return g;
}

AttackMapResult attack_map(const std::vector<ReplayRecord>& records, const GameMap& map) {
  check_replay_matches(records, map);
  AttackMapResult out;
  for (auto& g : out.styles) g = Grid(map.width(), map.height());
  for (const auto& r : records) {
    if (r.type != RecordType::Attack) continue;
    out.styles[static_cast<std::size_t>(r.style)].at(r.pos.row, r.pos.col) += 1.0;
    ++out.total;
  }
  if (out.total > 0) {
    for (std::size_t s = 0; s < out.styles.size(); ++s) out.shares[s] = out.styles[s].sum() / static_cast<double>(out.total);
  }
  return out;
}

Image heatmap_image(const Grid& grid, Palette palette, int scale) {
  if (scale < 1) throw AnalysisError("scale must be positive");
  if (grid.width < 1 || grid.height < 1) throw AnalysisError("empty grid");
  double lo = grid.values.front();
  double hi = lo;
  for (const double v : grid.values) {
    if (!std::isfinite(v)) throw AnalysisError("grid contains a non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Image img(grid.width * scale, grid.height * scale);
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      const double t = hi > lo ? (grid.at(r, c) - lo) / (hi - lo) : 0.0;
      img.fill_cell(r, c, scale, palette_color(palette, t));
    }
  }
  return img;
}

void render_heatmap(const Grid& grid, Palette palette, const std::filesystem::path& path, int scale) {
  const auto img = heatmap_image(grid, palette, scale);
  try {
    write_png(path, img);
  } catch (const ImageError& e) {
    throw AnalysisError(e.what());
  }
  auto csv = path;
  csv.replace_extension(".csv");
  write_grid_csv(grid, csv);
}

void write_grid_csv(const Grid& grid, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw AnalysisError("cannot write '" + path.string() + "'");
  char buf[64];
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      if (c > 0) out << ',';
      const auto res = std::to_chars(buf, buf + sizeof(buf), grid.at(r, c));
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
  if (!out) throw AnalysisError("failed writing '" + path.string() + "'");
}

Grid read_grid_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw AnalysisError("cannot open '" + path.string() + "'");
  Grid g;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    int cols = 0;
    std::size_t start = 0;
    while (start <= line.size()) {
      const auto end = std::min(line.find(',', start), line.size());
      double v = 0.0;
      const auto res = std::from_chars(line.data() + start, line.data() + end, v);
      if (res.ec != std::errc() || res.ptr != line.data() + end) {
        throw AnalysisError(path.string() + ":" + std::to_string(row) + ": malformed number");
      }
      g.values.push_back(v);
      ++cols;
      start = end + 1;
    }
    if (g.width == 0) g.width = cols;
    if (cols != g.width) throw AnalysisError(path.string() + ":" + std::to_string(row) + ": ragged row");
  }
  g.height = row;
  return g;
}

std::size_t render_replay(const std::vector<ReplayRecord>& records, const GameMap& map,
                          const std::filesystem::path& out_dir, int scale) {
  check_replay_matches(records, map);
  std::filesystem::create_directories(out_dir);
  GameMap tiles = map;
  struct Live {
    Position pos;
    int population;
  };
  std::map<AgentId, Live> live;
  std::size_t frames = 0;
  char name[48];
  for (const auto& r : records) {
    const auto missing = [&](AgentId id) {
      if (!live.count(id)) throw AnalysisError(at_tick(r) + "agent " + std::to_string(id) + " is not alive");
    };
    switch (r.type) {
      case RecordType::Header:
        break;
      case RecordType::Spawn:
        if (live.count(r.agent)) throw AnalysisError(at_tick(r) + "agent " + std::to_string(r.agent) + " spawned twice");
        if (!is_passable(tiles.at(r.pos))) throw AnalysisError(at_tick(r) + "spawn on an impassable tile");
        live[r.agent] = {r.pos, r.population};
        break;
      case RecordType::Move:
        missing(r.agent);
        if (!is_passable(tiles.at(r.pos))) throw AnalysisError(at_tick(r) + "move onto an impassable tile");
        live[r.agent].pos = r.pos;
        break;
      case RecordType::Harvest:
        missing(r.agent);
        if (r.forest) {
          if (tiles.at(r.pos) != TileKind::Forest) throw AnalysisError(at_tick(r) + "harvest of a tile that is not forest");
          tiles.set(r.pos, TileKind::Scrub);
        }
        break;
      case RecordType::Attack:
        missing(r.agent);
        missing(r.target);
        break;
      case RecordType::Death:
        missing(r.agent);
        live.erase(r.agent);
        break;
      case RecordType::Regen:
        if (tiles.at(r.pos) != TileKind::Scrub) throw AnalysisError(at_tick(r) + "regrowth of a tile that is not scrub");
        tiles.set(r.pos, TileKind::Forest);
        break;
      case RecordType::Tick: {
        Image img = render_map(tiles, scale);
        for (const auto& [id, a] : live) {
          // agents are drawn as an inset square so the tile stays visible
          const int inset = scale >= 4 ? scale / 4 : 0;
          for (int y = a.pos.row * scale + inset; y < (a.pos.row + 1) * scale - inset; ++y) {
            for (int x = a.pos.col * scale + inset; x < (a.pos.col + 1) * scale - inset; ++x) {
              img.set(x, y, population_color(a.population));
            }
          }
        }
        std::snprintf(name, sizeof(name), "frame_%06lld.png", static_cast<long long>(r.tick));
        write_png(out_dir / name, img);
        ++frames;
        break;
      }
    }
  }
  return frames;
}

}  // namespace arena
