// arena: command line front end for map generation, training, tournaments,
// analysis artifacts and replay rendering.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "arena/analysis.hpp"
#include "arena/checkpoint.hpp"
#include "arena/config.hpp"
#include "arena/image.hpp"
#include "arena/replay.hpp"
#include "arena/tournament.hpp"
#include "arena/training.hpp"
#include "arena/worldgen.hpp"

namespace fs = std::filesystem;
using namespace arena;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kRuntime = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string log_level = "info";
};

Config load(const Globals& g) {
  Config cfg = g.config_path.empty() ? Config{} : parse_config(g.config_path);
  if (g.seed) cfg.override_seeds(*g.seed);
  cfg.validate();
  return cfg;
}

GameMap map_for(const Config& cfg, const std::string& path) {
  return path.empty() ? generate_map(cfg.worldgen) : load_map(path);
}

Position default_center(const GameMap& map) {
  // nearest passable, non-lava cell to the middle of the map
  const Position mid{map.height() / 2, map.width() / 2};
  for (int d = 0; d < std::max(map.width(), map.height()); ++d) {
    for (int r = mid.row - d; r <= mid.row + d; ++r) {
      for (int c = mid.col - d; c <= mid.col + d; ++c) {
        if (!map.in_bounds(r, c)) continue;
        const auto k = map.at(r, c);
        if (is_passable(k) && k != TileKind::Lava) return {r, c};
      }
    }
  }
  throw UsageError("map has no passable cell");
}

Position parse_position(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw UsageError("expected ROW,COL but got '" + s + "'");
  try {
    return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw UsageError("expected ROW,COL but got '" + s + "'");
  }
}

fs::path with_suffix(const fs::path& out, const std::string& suffix) {
  auto stem = out;
  stem.replace_extension();
  return fs::path(stem.string() + suffix + ".png");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persistent multi-agent survival arena: world generation, training, evaluation and analysis."};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("-c,--config", g.config_path, "Configuration file")->envname("ARENA_CONFIG");
  app.add_option("--seed", g.seed, "Override every seed in the configuration");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off");

  auto* gen = app.add_subcommand("generate", "Generate a map");
  std::optional<std::uint64_t> gen_seed;
  std::optional<int> gen_size;
  std::string gen_out;
  std::string gen_preview;
  gen->add_option("--seed", gen_seed, "Map seed (defaults to worldgen.seed)");
  gen->add_option("--size", gen_size, "Map side length (defaults to worldgen.size)");
  gen->add_option("--out", gen_out, "Output map file")->required();
  gen->add_option("--preview", gen_preview, "Optional PNG preview");

  auto* tr = app.add_subcommand("train", "Train policies");
  std::string train_out;
  tr->add_option("--out", train_out, "Output directory (defaults to training.output_dir)");

  auto* tour = app.add_subcommand("tournament", "Merge trained populations into shared worlds and compare lifetimes");
  std::string tour_out;
  std::string tour_replays;
  tour->add_option("--out", tour_out, "Output prefix for .txt and .csv (defaults to tournament.output)");
  tour->add_option("--replays", tour_replays, "Directory for per-seed replay logs");

  auto* an = app.add_subcommand("analyze", "Produce exploration, niche, dependency or attack maps");
  std::string kind;
  std::string an_in;
  std::string an_out;
  std::string an_map;
  std::string an_center;
  std::string an_probe = "same";
  int an_pops = 0;
  std::optional<int> an_scale;
  an->add_option("--kind", kind, "Analysis kind")
      ->required()
      ->check(CLI::IsMember({"exploration", "niche", "dependency", "attack"}));
  an->add_option("--in", an_in, "Replay log, or a checkpoint for --kind dependency")->required();
  an->add_option("--out", an_out, "Output PNG path; CSVs are written next to it")->required();
  an->add_option("--map", an_map, "Map file (defaults to a map generated from the configuration)");
  an->add_option("--populations", an_pops, "Population count for niche maps (defaults to the largest seen + 1)");
  an->add_option("--center", an_center, "ROW,COL of the observer for dependency maps");
  an->add_option("--probe", an_probe, "Probe population for dependency maps")->check(CLI::IsMember({"same", "other"}));
  an->add_option("--scale", an_scale, "Pixels per cell (defaults to analysis.image_scale)");

  auto* rp = app.add_subcommand("replay", "Render a replay log to one PNG frame per tick");
  std::string rp_in;
  std::string rp_map;
  std::string rp_out;
  std::optional<int> rp_scale;
  rp->add_option("--in", rp_in, "Replay log")->required();
  rp->add_option("--map", rp_map, "Map file")->required();
  rp->add_option("--out", rp_out, "Output directory")->required();
  rp->add_option("--scale", rp_scale, "Pixels per cell (defaults to analysis.image_scale)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    const Config cfg = load(g);

    if (gen->parsed()) {
      auto wg = cfg.worldgen;
      if (gen_seed) wg.seed = *gen_seed;
      if (gen_size) wg.size = *gen_size;
      const auto map = generate_map(wg);
      save_map(gen_out, map);
      if (!gen_preview.empty()) write_png(gen_preview, render_map(map, cfg.analysis.image_scale));
      std::cout << "wrote " << gen_out << " (" << map.width() << "x" << map.height() << ", seed " << map.seed()
                << ")\n";
    } else if (tr->parsed()) {
      const fs::path dir = train_out.empty() ? fs::path(cfg.training.output_dir) : fs::path(train_out);
      const auto result = train(cfg, dir);
      std::cout << "trained " << result.params.size() << " population(s) for " << result.metrics.size()
                << " updates; artifacts in " << dir.string() << "\n";
    } else if (tour->parsed()) {
      std::optional<fs::path> replays;
      if (!tour_replays.empty()) replays = tour_replays;
      const auto result = run_tournament(cfg, replays);
      const std::string prefix = tour_out.empty() ? cfg.tournament.output : tour_out;
      const auto table = format_table(result);
      std::cout << table;
      std::ofstream(prefix + ".txt") << table;
      std::ofstream csv(prefix + ".csv");
      write_csv(result, csv);
    } else if (an->parsed()) {
      const int scale = an_scale.value_or(cfg.analysis.image_scale);
      const fs::path out = an_out;
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      if (kind == "dependency") {
        const auto ck = load_checkpoint(an_in);
        const auto map = map_for(cfg, an_map);
        const Position center = an_center.empty() ? default_center(map) : parse_position(an_center);
        const auto base = base_observation(map, center, cfg.engine, cfg.obs);
        const auto probe =
            probe_from_config(cfg.analysis, an_probe == "same" ? ProbePopulation::Same : ProbePopulation::Other);
        const auto grid = dependency_map(ck.params, base, cfg.obs, probe);
        render_heatmap(grid, Palette::Heat, out, scale);
      } else {
        if (an_map.empty()) throw UsageError("--map is required for replay-based analyses");
        const auto map = load_map(an_map);
        const auto records = load_replay(an_in);
        if (kind == "exploration") {
          const auto ex = exploration_map(records, map);
          render_heatmap(ex.visits, Palette::Heat, out, scale);
          std::cout << "coverage " << ex.coverage << " (" << ex.visited << " of " << ex.passable << " cells)\n";
        } else if (kind == "niche") {
          int pops = an_pops;
          if (pops <= 0) {
            for (const auto& r : records) {
              if (r.type == RecordType::Spawn) pops = std::max(pops, r.population + 1);
            }
            pops = std::max(pops, 1);
          }
          const auto niche = niche_map(records, map, pops);
          write_png(out, niche_overlay(niche, map, scale));
          for (int p = 0; p < pops; ++p) {
            render_heatmap(niche.populations[static_cast<std::size_t>(p)], Palette::Heat,
                           with_suffix(out, "_pop" + std::to_string(p)), scale);
          }
          std::cout << "overlap " << niche.overlap << "\n";
        } else {
          const auto atk = attack_map(records, map);
          for (int s = 0; s < kAttackCount; ++s) {
            render_heatmap(atk.styles[static_cast<std::size_t>(s)], Palette::Heat,
                           with_suffix(out, std::string("_") + to_string(static_cast<AttackStyle>(s))), scale);
          }
          std::cout << "attacks " << atk.total << " melee " << atk.shares[0] << " range " << atk.shares[1]
                    << " mage " << atk.shares[2] << "\n";
        }
      }
    } else if (rp->parsed()) {
      const auto map = load_map(rp_map);
      const auto records = load_replay(rp_in);
      const auto frames = render_replay(records, map, rp_out, rp_scale.value_or(cfg.analysis.image_scale));
      std::cout << "rendered " << frames << " frames to " << rp_out << "\n";
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ConfigurationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
