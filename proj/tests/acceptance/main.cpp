// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "arena/analysis.hpp"
#include "arena/checkpoint.hpp"
#include "arena/config.hpp"
#include "arena/engine.hpp"
#include "arena/replay.hpp"
#include "arena/tournament.hpp"
#include "arena/training.hpp"
#include "gradcheck.hpp"
#include "pinned.hpp"
#include "random_agents.hpp"
#include "records.hpp"

namespace fs = std::filesystem;
using namespace arena;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("arena_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// 1

Outcome pinned_constants() {
  const auto t0 = Clock::now();
  const Config c;
  std::size_t checked = 0;
  std::string bad;
  for (const auto& p : testing::kPinned) {
    const auto v = config_value(c, p.key);
    if (!v || std::stod(*v) != std::stod(p.value)) bad += std::string(" ") + p.key;
    ++checked;
  }
  const struct {
    const char* what;
    int got;
    int want;
  } derived[] = {
      {"crop size", c.obs.crop_size(), 15},
      {"starting food", c.engine.max_food, 32},
      {"starting water", c.engine.max_water, 32},
      {"starting health", c.engine.max_health, 10},
  };
  for (const auto& d : derived) {
    if (d.got != d.want) bad += std::string(" ") + d.what;
    ++checked;
  }
  // a freshly spawned agent carries the starting stats
  World w(generate_map(c.worldgen), c.engine, 1);
  const auto* a = w.find(*w.spawn_agent(0));
  if (a->food != 32 || a->water != 32 || a->health != 10) bad += " spawn stats";
  const double secs = seconds_since(t0);
  if (secs >= 1.0) bad += " runtime";
  return {bad.empty(), std::to_string(checked) + " constants checked in " + fmt("%.3f s", secs) +
                           (bad.empty() ? "" : ", mismatched:" + bad)};
}

// ---------------------------------------------------------------------------
// 2

Outcome invariant_suite() {
  const auto t0 = Clock::now();
  std::int64_t agent_ticks = 0;
  std::size_t violations = 0;
  std::string first;
  const auto violate = [&](std::uint64_t seed, std::int64_t tick, const std::string& what) {
    if (violations++ == 0) first = "seed " + std::to_string(seed) + " tick " + std::to_string(tick) + ": " + what;
  };

  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    EngineConfig ec;
    ec.spawn_cap = 8 + static_cast<int>(seed % 57);
    const GameMap map = generate_map(seed, 40 + static_cast<int>(seed % 3) * 8, FractalParams{});
    World w(map, ec, seed, [](Rng& r) { return static_cast<int>(r.uniform_int(4)); });
    Rng act(seed, 0xac7);
    const auto food_tiles = [](const GameMap& m) { return m.count(TileKind::Forest) + m.count(TileKind::Scrub); };
    const std::size_t food_total = food_tiles(map);
    std::map<AgentId, std::int64_t> spawned_at;
    std::int64_t seed_ticks = 0;
    while (seed_ticks < 10000) {
      const GameMap before = w.map();
      std::map<AgentId, int> frozen;
      ActionMap actions;
      for (const auto& a : w.agents()) {
        if (a.freeze_remaining > 0) frozen[a.id] = a.freeze_remaining;
        actions[a.id] = {static_cast<Move>(act.uniform_int(kMoveCount)),
                         static_cast<AttackStyle>(act.uniform_int(kAttackCount))};
      }
      const auto tick = w.tick();
      const auto ev = w.step(actions);
      seed_ticks += static_cast<std::int64_t>(actions.size());

      for (const auto& p : w.check_invariants()) violate(seed, tick, p);
      if (ev.spawns.size() > 1) violate(seed, tick, "more than one spawn");
      for (const auto& s : ev.spawns) spawned_at[s.agent] = tick;
      for (const auto& h : ev.attacks) {
        if (tick - spawned_at[h.target] < ec.combat.immunity_ticks) violate(seed, tick, "hit on an immune agent");
        if (h.target_population == h.attacker_population) violate(seed, tick, "friendly fire");
      }
      for (const auto& m : ev.moves) {
        if (frozen.count(m.agent)) violate(seed, tick, "frozen agent moved");
        if (std::abs(m.to.row - m.from.row) + std::abs(m.to.col - m.from.col) != 1) violate(seed, tick, "jump");
      }
      for (const auto& d : ev.deaths) {
        if (w.find(d.agent) != nullptr) violate(seed, tick, "dead agent kept");
      }
      if (food_tiles(w.map()) != food_total) violate(seed, tick, "forest+scrub count changed");
      std::set<std::size_t> harvested;
      std::set<std::size_t> regrown;
      for (const auto& h : ev.harvests) {
        if (h.consumed_forest) harvested.insert(map.index(h.pos));
      }
      for (const auto& p : ev.regenerated) regrown.insert(map.index(p));
      const auto now = w.map().cells();
      const auto was = before.cells();
      for (std::size_t i = 0; i < now.size(); ++i) {
        if (now[i] == was[i]) continue;
        const bool eaten = was[i] == TileKind::Forest && now[i] == TileKind::Scrub && harvested.count(i);
        const bool grown = was[i] == TileKind::Scrub && now[i] == TileKind::Forest && regrown.count(i);
        if (!eaten && !grown) violate(seed, tick, "illegal tile change");
      }
    }
    agent_ticks += seed_ticks;
  }
  const double secs = seconds_since(t0);
  const bool ok = violations == 0 && agent_ticks >= 1000000 && secs < 60.0;
  return {ok, std::to_string(agent_ticks) + " agent-ticks over 100 seeds, " + std::to_string(violations) +
                  " violations, " + fmt("%.1f s", secs) + (first.empty() ? "" : "; first: " + first)};
}

// ---------------------------------------------------------------------------
// training runs shared by 3, 7, 8, 9 and 11

constexpr int kUpdates = 40;
const std::vector<std::int64_t> kEvalSeeds = {1, 2, 3, 4, 5};

Config training_config(int cap, bool combat) {
  Config c;
  c.engine.combat.enabled = combat;
  c.training.worlds = 4;
  c.training.cap_mode = CapMode::Fixed;
  c.training.spawn_cap = cap;
  c.training.max_updates = kUpdates;
  c.training.threads = 1;
  c.training.checkpoint_every = 5;
  c.training.replay_worlds = {0, 1, 2, 3};
  return c;
}

Config eval_config(int cap, bool combat) {
  Config c;
  c.tournament.spawn_cap = cap;
  c.tournament.combat = combat;
  c.tournament.fixed_map = true;
  c.tournament.ticks = 1000;
  c.tournament.seeds = kEvalSeeds;
  return c;
}

Competitor competitor(const std::string& name, const PolicyParams& p) {
  Competitor c;
  c.name = name;
  c.policies.push_back(p);
  return c;
}

std::string seed_means(const TournamentResult& r, std::size_t c) {
  std::string s;
  for (const double m : r.seed_means(c)) s += (s.empty() ? "" : " ") + fmt("%.1f", m);
  return s;
}

struct SmokeRuns {
  fs::path dir_a;
  fs::path dir_b;
  TrainResult result;
  double seconds = 0.0;
};

SmokeRuns smoke_runs() {
  SmokeRuns s;
  s.dir_a = scratch("smoke_a");
  s.dir_b = scratch("smoke_b");
  const auto cfg = training_config(8, false);
  const auto t0 = Clock::now();
  s.result = train(cfg, s.dir_a);
  s.seconds = seconds_since(t0);
  train(cfg, s.dir_b);
  return s;
}

// ---------------------------------------------------------------------------
// 3

Outcome determinism(const SmokeRuns& s) {
  std::size_t compared = 0;
  std::string differ;
  for (const auto& entry : fs::directory_iterator(s.dir_a)) {
    const auto name = entry.path().filename().string();
    const bool logged = name == "metrics.ndjson" || name.rfind("replay_", 0) == 0 || entry.path().extension() == ".ckpt";
    if (!logged) continue;
    ++compared;
    if (!fs::exists(s.dir_b / name) || read_file(entry.path()) != read_file(s.dir_b / name)) differ += " " + name;
  }
  const bool ok = differ.empty() && compared >= 5;
  return {ok, std::to_string(compared) + " replay/metrics/checkpoint files compared across two smoke runs" +
                  (differ.empty() ? ", all byte-identical" : ", differing:" + differ)};
}

// ---------------------------------------------------------------------------
// 4

Outcome scrub_regen() {
  EngineConfig ec;
  ec.spawn_cap = 1;
  GameMap m(40, 40, 1, TileKind::Scrub);
  World w(m, ec, 2024);
  std::int64_t scrub_ticks = 0;
  std::int64_t regrown = 0;
  for (int t = 0; t < 100; ++t) {
    TickEvents ev;
    scrub_ticks += static_cast<std::int64_t>(w.map().count(TileKind::Scrub));
    regrown += w.regen_tiles(ev);
    for (const auto p : ev.regenerated) w.set_tile(p, TileKind::Scrub);
  }
  const double rate = static_cast<double>(regrown) / static_cast<double>(scrub_ticks);
  const bool ok = scrub_ticks >= 100000 && std::abs(rate - 0.025) <= 0.002;
  return {ok, fmt("rate %.5f", rate) + " over " + std::to_string(scrub_ticks) + " scrub-ticks (target 0.025 +- 0.002)"};
}

// ---------------------------------------------------------------------------
// 5

Outcome gradient_oracle() {
  const auto shape = make_shape(NeuralConfig{}, ObsConfig{});
  Rng rng(5150);
  double worst = 0.0;
  std::size_t checked = 0;
  for (int trial = 0; trial < 32; ++trial) {
    const auto params = testing::random_params(shape, rng);
    const auto obs = testing::random_obs(shape, rng);
    const Sample s{&obs, static_cast<int>(rng.uniform_int(kMoveCount)), static_cast<int>(rng.uniform_int(kAttackCount)),
                   4.0 * rng.uniform01() - 2.0, 2.0 * rng.uniform01() - 1.0, true};
    const auto r = testing::grad_check(params, std::span<const Sample>(&s, 1), LossCoefficients{}, rng, 16);
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
  }
  return {worst <= 1e-4, fmt("max relative error %.3g", worst) + " over " + std::to_string(checked) +
                             " coordinates in 32 draws (eps 1e-5, limit 1e-4)"};
}

// ---------------------------------------------------------------------------
// 6

Outcome return_arithmetic() {
  const std::vector<double> ones(1000, 1.0);
  const double r0 = compute_returns(ones, 0.99, 0.0, false)[0];
  const double expected = (1.0 - std::pow(0.99, 1000)) / 0.01;
  const double err = std::abs(r0 - expected);
  return {err <= 1e-6, fmt("R0 = %.10f", r0) + fmt(", expected %.10f", expected) + fmt(", error %.2g", err)};
}

// ---------------------------------------------------------------------------
// 7

Outcome learning_smoke(const SmokeRuns& s) {
  const auto cfg = eval_config(8, false);
  const auto trained = evaluate(cfg, {competitor("trained", s.result.params[0])});
  const auto random = evaluate(cfg, {random_competitor()});
  const double t = trained.stats[0].mean();
  const double r = random.stats[0].mean();
  const bool ok = r > 0.0 && t >= 1.5 * r;
  return {ok, fmt("trained mean lifetime %.2f", t) + fmt(" vs random %.2f", r) + fmt(" (ratio %.2f, need >= 1.5)", t / r) +
                  fmt("; training took %.0f s", s.seconds)};
}

// ---------------------------------------------------------------------------
// 8, 9

struct TrendPolicies {
  PolicyParams forage8;
  PolicyParams forage32;
  PolicyParams combat8;
};

Outcome combat_beats_forage(const TrendPolicies& p) {
  const auto r = evaluate(eval_config(16, true), {competitor("combat", p.combat8), competitor("forage", p.forage8)});
  const double c = r.stats[0].mean();
  const double f = r.stats[1].mean();
  return {c > f, fmt("merged combat world, cap 16: combat-trained %.2f", c) + fmt(" vs forage-only %.2f", f) +
                     " (per seed: " + seed_means(r, 0) + " | " + seed_means(r, 1) + ")"};
}

Outcome large_cap_beats_small(const TrendPolicies& p) {
  const auto r = evaluate(eval_config(16, false), {competitor("cap32", p.forage32), competitor("cap8", p.forage8)});
  const double a = r.stats[0].mean();
  const double b = r.stats[1].mean();
  return {a > b, fmt("merged at cap 16: cap-32-trained %.2f", a) + fmt(" vs cap-8-trained %.2f", b) + " (per seed: " +
                     seed_means(r, 0) + " | " + seed_means(r, 1) + ")"};
}

double coverage_at_cap(const PolicyParams& params, int cap, const std::string& tag) {
  const auto dir = scratch("coverage_" + tag);
  const auto cfg = eval_config(cap, false);
  evaluate(cfg, {competitor(tag, params)}, dir);
  const GameMap map = generate_map(cfg.worldgen);
  double cells = 0.0;
  std::size_t agents = 0;
  for (const auto seed : kEvalSeeds) {
    const auto c = lifetime_coverage(load_replay((dir / ("replay_seed" + std::to_string(seed) + ".ndjson")).string()), map);
    cells += c.mean_cells * static_cast<double>(c.agents);
    agents += c.agents;
  }
  return agents == 0 ? 0.0 : cells / static_cast<double>(agents);
}

Outcome exploration_trend(const TrendPolicies& p) {
  const double big = coverage_at_cap(p.forage32, 32, "cap32");
  const double small = coverage_at_cap(p.forage8, 8, "cap8");
  return {big > small, fmt("mean unique cells per lifetime on the fixed map: cap-32 training %.2f", big) +
                           fmt(" vs cap-8 training %.2f", small)};
}

// ---------------------------------------------------------------------------
// 10

Outcome throughput() {
  bench::RandomAgents sim(80, 128, 7);
  for (int i = 0; i < 50; ++i) sim.step();
  std::size_t acted = 0;
  const auto t0 = Clock::now();
  while (seconds_since(t0) < 2.0) {
    for (int i = 0; i < 100; ++i) acted += sim.step();
  }
  const double rate = static_cast<double>(acted) / seconds_since(t0);
  return {rate >= 50000.0, fmt("%.0f agent-ticks/s with 128 agents on 80x80 (floor 50000)", rate)};
}

// ---------------------------------------------------------------------------
// 11

Position central_cell(const GameMap& map) {
  const Position mid{map.height() / 2, map.width() / 2};
  for (int d = 0;; ++d) {
    for (int r = mid.row - d; r <= mid.row + d; ++r) {
      for (int c = mid.col - d; c <= mid.col + d; ++c) {
        if (map.in_bounds(r, c) && is_passable(map.at(r, c)) && map.at(r, c) != TileKind::Lava) return {r, c};
      }
    }
  }
}

// agent ids of world w are shifted by w * stride when logs are merged
constexpr AgentId kWorldIdStride = 100000000;

Outcome analysis_outputs(const SmokeRuns& s) {
  using namespace testing;
  std::vector<std::string> failed;
  const auto check = [&failed](bool ok, const char* what) {
    if (!ok) failed.emplace_back(what);
  };
  const Config cfg = training_config(8, false);
  const GameMap map = generate_map(cfg.worldgen);
  const Position p0 = central_cell(map);

  // exploration
  const std::vector<ReplayRecord> still{header(map), spawn(0, 1, 0, p0), tick(0), tick(1), tick(2)};
  const auto ex = exploration_map(still, map);
  check(ex.visits.nonzero() == 1 && ex.visits.at(p0.row, p0.col) == 1.0, "exploration: standing agent");
  std::vector<std::vector<ReplayRecord>> logs;
  for (int w = 0; w < 4; ++w) logs.push_back(load_replay((s.dir_a / ("replay_world" + std::to_string(w) + ".ndjson")).string()));
  std::vector<ReplayRecord> merged{logs[0].front()};
  Grid sum(map.width(), map.height());
  for (std::size_t w = 0; w < logs.size(); ++w) {
    const auto e = exploration_map(logs[w], map);
    check(e.coverage >= 0.0 && e.coverage <= 1.0, "exploration: coverage fraction");
    sum += e.visits;
    for (auto r : std::vector<ReplayRecord>(logs[w].begin() + 1, logs[w].end())) {
      if (r.agent != 0) r.agent += static_cast<AgentId>(w) * kWorldIdStride;
      if (r.target != 0) r.target += static_cast<AgentId>(w) * kWorldIdStride;
      merged.push_back(r);
    }
  }
  const auto ex_merged = exploration_map(merged, map);
  check(ex_merged.visits == sum, "exploration: merged logs add");

  // niche
  const auto single = niche_map(logs[0], map, 1);
  check(single.populations[0] == exploration_map(logs[0], map).visits, "niche: single population");
  const auto overlay = niche_overlay(single, map, 1);
  const auto base = render_map(map, 1);
  bool recolored = true;
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      recolored &= (overlay.at(c, r) != base.at(c, r)) == (single.total.at(r, c) > 0.0) ||
                   tile_color(map.at(r, c)) == population_color(0);
    }
  }
  check(recolored, "niche: overlay recolors exactly the visited cells");
  std::vector<ReplayRecord> halves{header(map)};
  for (int i = 0; i < 8; ++i) {
    halves.push_back(spawn(i, static_cast<AgentId>(10 + i), 0, {2 + i, 2}));
    halves.push_back(spawn(i, static_cast<AgentId>(20 + i), 1, {2 + i, map.width() - 3}));
  }
  check(niche_map(halves, map, 2).overlap == 0.0, "niche: disjoint halves");
  const Position A{5, 5};
  const Position B{5, 6};
  const Position C{9, 9};
  const std::vector<ReplayRecord> hand{header(map),       spawn(0, 1, 0, A), spawn(0, 2, 1, A),
                                       spawn(0, 3, 1, C), spawn(0, 4, 1, C), spawn(0, 5, 1, C),
                                       move(1, 1, B),     move(2, 1, A),     move(3, 1, B)};
  check(std::abs(niche_map(hand, map, 2).overlap - 0.25) < 1e-15, "niche: hand-counted overlap");
  std::vector<ReplayRecord> merged_pops{merged.front()};
  for (auto r : std::vector<ReplayRecord>(merged.begin() + 1, merged.end())) {
    // relabel each world's agents as a separate population
    if (r.type == RecordType::Spawn) r.population = static_cast<int>(r.agent / kWorldIdStride);
    merged_pops.push_back(r);
  }
  const auto niches = niche_map(merged_pops, map, 4);
  Grid niche_sum(map.width(), map.height());
  for (const auto& g : niches.populations) niche_sum += g;
  check(niche_sum == ex_merged.visits, "niche: grids sum to the exploration grid");

  // dependency
  const auto obs_base = base_observation(map, p0, cfg.engine, cfg.obs);
  auto zero = PolicyParams::zeros(make_shape(cfg.neural, cfg.obs));
  zero[kValueB](0, 0) = 0.5;
  const auto flat = dependency_map(zero, obs_base, cfg.obs, probe_from_config(cfg.analysis, ProbePopulation::Same));
  check(std::all_of(flat.values.begin(), flat.values.end(), [](double v) { return v == 0.5; }),
        "dependency: zero weights give a constant grid");
  const auto early = load_checkpoint(s.dir_a / "pop0_update5.ckpt");
  const auto dep = dependency_map(early.params, obs_base, cfg.obs, probe_from_config(cfg.analysis, ProbePopulation::Same));
  check(dep.width == 15 && dep.height == 15 &&
            std::all_of(dep.values.begin(), dep.values.end(), [](double v) { return std::isfinite(v); }),
        "dependency: 15x15 finite grid");
  const double near = (dep.at(6, 7) + dep.at(8, 7) + dep.at(7, 6) + dep.at(7, 8)) / 4.0;
  const double far = (dep.at(0, 0) + dep.at(0, 14) + dep.at(14, 0) + dep.at(14, 14)) / 4.0;
  check(near != far, "dependency: early checkpoint gives a nonconstant map");

  // attack
  const auto none = attack_map(logs[0], map);
  check(none.total == 0 && none.styles[0].sum() + none.styles[1].sum() + none.styles[2].sum() == 0.0,
        "attack: no attacks give zero grids");
  std::vector<ReplayRecord> melee{header(map)};
  for (int i = 0; i < 10; ++i) melee.push_back(attack(i, AttackStyle::Melee, A));
  melee.push_back(attack(10, AttackStyle::Range, B));
  const auto atk = attack_map(melee, map);
  check(atk.styles[0].at(A.row, A.col) == 10.0, "attack: ten melee events at one cell");
  check(std::abs(atk.shares[0] + atk.shares[1] + atk.shares[2] - 1.0) < 1e-15, "attack: shares sum to 1");

  // heatmap plumbing
  const auto dir = scratch("heatmap");
  const auto uniform = heatmap_image(Grid(4, 4, 3.0), Palette::Heat, 2);
  bool same = true;
  for (int y = 0; y < uniform.height; ++y) {
    for (int x = 0; x < uniform.width; ++x) same &= uniform.at(x, y) == uniform.at(0, 0);
  }
  check(same, "heatmap: constant grid is uniform");
  const auto small = heatmap_image(Grid(2, 2, 1.0), Palette::Heat, 6);
  check(small.width == 12 && small.height == 12, "heatmap: 2x2 geometry");
  render_heatmap(dep, Palette::Heat, dir / "dep.png", 4);
  check(read_grid_csv(dir / "dep.csv") == dep, "heatmap: CSV round trip");

  std::string detail = failed.empty() ? "all exploration, niche, dependency, attack and heatmap examples reproduced"
                                      : "failed:";
  for (const auto& f : failed) detail += " [" + f + "]";
  detail += fmt("; niche overlap across smoke worlds %.3f", niches.overlap);
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);

  report(1, "pinned constants", pinned_constants());
  report(2, "invariant suite", invariant_suite());
  report(4, "scrub regeneration", scrub_regen());
  report(5, "gradient oracle", gradient_oracle());
  report(6, "return arithmetic", return_arithmetic());
  report(10, "throughput", throughput());

  const auto smoke = smoke_runs();
  report(3, "determinism", determinism(smoke));
  report(7, "learning smoke test", learning_smoke(smoke));
  report(11, "analysis outputs", analysis_outputs(smoke));

  TrendPolicies trend{smoke.result.params[0], train(training_config(32, false)).params[0],
                      train(training_config(8, true)).params[0]};
  report(8, "tournament (a) combat vs forage", combat_beats_forage(trend));
  report(8, "tournament (b) cap 32 vs cap 8", large_cap_beats_small(trend));
  report(9, "exploration trend", exploration_trend(trend));

  std::printf("%s: %d criterion check(s) failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
