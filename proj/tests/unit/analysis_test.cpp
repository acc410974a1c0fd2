#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "arena/analysis.hpp"
#include "gradcheck.hpp"
#include "helpers.hpp"
#include "records.hpp"

namespace arena {
namespace {

using testing::attack;
using testing::header;
using testing::move;
using testing::open_map;
using testing::spawn;
using testing::tick;

// A real replay from random play on the open map.
std::vector<ReplayRecord> simulated_replay(const GameMap& m, std::uint64_t seed, int populations) {
  std::stringstream log;
  write_replay_header(log, m);
  World w(m, testing::engine_with_cap(10), seed,
          [populations](Rng& r) { return static_cast<int>(r.uniform_int(static_cast<std::uint64_t>(populations))); });
  Rng act(seed + 100);
  for (int t = 0; t < 200; ++t) {
    ActionMap actions;
    for (const auto& a : w.agents()) actions[a.id] = {static_cast<Move>(act.uniform_int(kMoveCount)), AttackStyle::Melee};
    write_replay_tick(log, w.step(actions));
  }
  return read_replay(log);
}

TEST(Exploration, StandingStillIsOneCell) {
  const auto m = open_map();
  const std::vector<ReplayRecord> log{header(m), spawn(0, 1, 0, {3, 4}), tick(0), tick(1), tick(2)};
  const auto e = exploration_map(log, m);
  EXPECT_EQ(e.visits.nonzero(), 1u);
  EXPECT_EQ(e.visits.at(3, 4), 1.0);
  EXPECT_EQ(e.visited, 1u);
  EXPECT_EQ(e.passable, 18u * 18u);
}

TEST(Exploration, CoverageIsAFraction) {
  const auto m = open_map();
  for (std::uint64_t s = 1; s <= 3; ++s) {
    const auto e = exploration_map(simulated_replay(m, s, 1), m);
    EXPECT_GE(e.coverage, 0.0);
    EXPECT_LE(e.coverage, 1.0);
    EXPECT_GT(e.visited, 1u);
  }
}

TEST(Exploration, MergedLogsAdd) {
  const auto m = open_map();
  const auto a = simulated_replay(m, 1, 1);
  const auto b = simulated_replay(m, 2, 1);
  auto merged = a;
  merged.insert(merged.end(), b.begin() + 1, b.end());
  auto sum = exploration_map(a, m).visits;
  sum += exploration_map(b, m).visits;
  EXPECT_EQ(exploration_map(merged, m).visits, sum);
}

TEST(Exploration, MapMismatch) {
  const auto m = open_map();
  const auto other = open_map(24);
  const std::vector<ReplayRecord> log{header(other), spawn(0, 1, 0, {3, 4})};
  EXPECT_THROW(exploration_map(log, m), AnalysisError);
  const std::vector<ReplayRecord> outside{header(m), spawn(0, 1, 0, {30, 4})};
  EXPECT_THROW(exploration_map(outside, m), AnalysisError);
}

TEST(Coverage, PerLifetimeUniqueCells) {
  const auto m = open_map();
  const std::vector<ReplayRecord> log{header(m),         spawn(0, 1, 0, {3, 3}), spawn(1, 2, 0, {5, 5}),
                                      move(2, 1, {3, 4}), move(3, 1, {3, 3}),    move(4, 1, {4, 3})};
  const auto c = lifetime_coverage(log, m);
  EXPECT_EQ(c.agents, 2u);
  EXPECT_DOUBLE_EQ(c.mean_cells, 2.0);  // (3 + 1) / 2
  EXPECT_DOUBLE_EQ(c.mean_fraction, 2.0 / 324.0);
}

TEST(Niche, SinglePopulationMatchesExploration) {
  const auto m = open_map();
  const auto log = simulated_replay(m, 4, 1);
  const auto n = niche_map(log, m, 1);
  const auto e = exploration_map(log, m);
  EXPECT_EQ(n.populations[0], e.visits);
  EXPECT_EQ(n.total, e.visits);
  EXPECT_DOUBLE_EQ(n.overlap, 1.0);
  const auto base = render_map(m, 2);
  const auto overlay = niche_overlay(n, m, 2);
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      EXPECT_EQ(overlay.at(c * 2, r * 2) != base.at(c * 2, r * 2), e.visits.at(r, c) > 0.0);
    }
  }
}

TEST(Niche, DisjointHalvesHaveZeroOverlap) {
  const auto m = open_map();
  std::vector<ReplayRecord> log{header(m), spawn(0, 1, 0, {5, 2}), spawn(0, 2, 1, {5, 15})};
  for (int t = 1; t < 6; ++t) {
    log.push_back(move(t, 1, {5 + t, 2}));
    log.push_back(move(t, 2, {5 + t, 15}));
  }
  EXPECT_EQ(niche_map(log, m, 2).overlap, 0.0);
}

TEST(Niche, OverlapHandCount) {
  // population 0 visits A twice and B twice: shares 1/2, 1/2
  // population 1 visits A once and C three times: shares 1/4, 3/4
  // overlap = min(1/2, 1/4) + min(1/2, 0) + min(0, 3/4) = 1/4
  const auto m = open_map();
  const Position A{4, 4};
  const Position B{4, 5};
  const Position C{9, 9};
  const std::vector<ReplayRecord> log{header(m), spawn(0, 1, 0, A), spawn(0, 2, 1, A), spawn(0, 3, 1, C),
                                        spawn(0, 4, 1, C), spawn(0, 5, 1, C), move(1, 1, B), move(2, 1, A),
                                        move(3, 1, B)};
  const auto n = niche_map(log, m, 2);
  EXPECT_DOUBLE_EQ(n.populations[0].sum(), 4.0);
  EXPECT_DOUBLE_EQ(n.populations[1].sum(), 4.0);
  EXPECT_DOUBLE_EQ(n.overlap, 0.25);
}

TEST(Niche, GridsSumToExploration) {
  const auto m = open_map();
  auto log = simulated_replay(m, 5, 3);
  const auto more = simulated_replay(m, 6, 3);
  // second log's agent ids clash with the first; offset them
  for (auto r : std::vector<ReplayRecord>(more.begin() + 1, more.end())) {
    if (r.agent != 0) r.agent += 100000;
    log.push_back(r);
  }
  const auto n = niche_map(log, m, 3);
  Grid sum(m.width(), m.height());
  for (const auto& g : n.populations) sum += g;
  EXPECT_EQ(sum, exploration_map(log, m).visits);
  EXPECT_GE(n.overlap, 0.0);
  EXPECT_LE(n.overlap, 1.0);
}

TEST(Niche, PopulationOutOfRange) {
  const auto m = open_map();
  const std::vector<ReplayRecord> log{header(m), spawn(0, 1, 2, {3, 3})};
  EXPECT_THROW(niche_map(log, m, 2), AnalysisError);
}

TEST(Attack, NoAttacksAllZero) {
  const auto m = open_map();
  const auto a = attack_map(simulated_replay(m, 1, 1), m);
  for (const auto& g : a.styles) EXPECT_EQ(g.sum(), 0.0);
  EXPECT_EQ(a.total, 0u);
}

TEST(Attack, TenMeleeAtOneCell) {
  const auto m = open_map();
  std::vector<ReplayRecord> log{header(m)};
  for (int i = 0; i < 10; ++i) log.push_back(attack(i, AttackStyle::Melee, {6, 7}));
  log.push_back(attack(11, AttackStyle::Mage, {2, 2}));
  const auto a = attack_map(log, m);
  EXPECT_EQ(a.styles[0].at(6, 7), 10.0);
  EXPECT_EQ(a.styles[2].at(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(a.shares[0] + a.shares[1] + a.shares[2], 1.0);
  EXPECT_DOUBLE_EQ(a.shares[0], 10.0 / 11.0);
}

TEST(Dependency, ZeroWeightsGiveConstantGrid) {
  const auto m = open_map();
  const auto base = base_observation(m, {10, 10}, EngineConfig{}, ObsConfig{});
  const auto shape = make_shape(NeuralConfig{}, ObsConfig{});
  auto p = PolicyParams::zeros(shape);
  p[kValueB](0, 0) = 0.75;
  const auto g = dependency_map(p, base, ObsConfig{}, ProbeSpec{});
  EXPECT_EQ(g.width, 15);
  EXPECT_EQ(g.height, 15);
  for (double v : g.values) EXPECT_EQ(v, 0.75);
}

TEST(Dependency, FiniteAndCentreIsBaseline) {
  const auto m = open_map();
  const auto base = base_observation(m, {3, 3}, EngineConfig{}, ObsConfig{});
  Rng rng(8);
  const auto p = testing::random_params(make_shape(NeuralConfig{}, ObsConfig{}), rng);
  const auto g = dependency_map(p, base, ObsConfig{}, ProbeSpec{});
  for (double v : g.values) EXPECT_TRUE(std::isfinite(v));
  EXPECT_DOUBLE_EQ(g.at(7, 7), forward(p, encode(base, ObsConfig{})).value);
  EXPECT_NE(g.at(7, 8), g.at(0, 0));
}

TEST(Dependency, ProbePopulationMatters) {
  const auto m = open_map();
  const auto base = base_observation(m, {10, 10}, EngineConfig{}, ObsConfig{});
  Rng rng(9);
  const auto p = testing::random_params(make_shape(NeuralConfig{}, ObsConfig{}), rng);
  ProbeSpec other;
  other.population = ProbePopulation::Other;
  EXPECT_NE(dependency_map(p, base, ObsConfig{}, ProbeSpec{}), dependency_map(p, base, ObsConfig{}, other));
}

TEST(Heatmap, ConstantGridIsUniform) {
  const Grid g(3, 2, 4.0);
  const auto img = heatmap_image(g, Palette::Heat, 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) EXPECT_EQ(img.at(x, y), img.at(0, 0));
  }
}

TEST(Heatmap, Geometry) {
  Grid g(2, 2);
  g.at(1, 0) = 1.0;
  const auto img = heatmap_image(g, Palette::Gray, 5);
  EXPECT_EQ(img.width, 10);
  EXPECT_EQ(img.height, 10);
  EXPECT_EQ(img.at(0, 5), palette_color(Palette::Gray, 1.0));
  EXPECT_EQ(img.at(9, 9), palette_color(Palette::Gray, 0.0));
}

TEST(Heatmap, CsvRoundTripIsExact) {
  const auto dir = testing::scratch_dir("heatmap");
  Grid g(4, 3);
  Rng rng(2);
  for (auto& v : g.values) v = rng.uniform01() * 1e6 - 3.0;
  g.values[5] = 1.0 / 3.0;
  render_heatmap(g, Palette::Heat, dir / "h.png", 2);
  EXPECT_EQ(read_grid_csv(dir / "h.csv"), g);
  const auto img = read_png(dir / "h.png");
  EXPECT_EQ(img.width, 8);
  EXPECT_EQ(img.height, 6);
}

TEST(Heatmap, UnwritablePath) {
  const Grid g(2, 2, 1.0);
  EXPECT_THROW(render_heatmap(g, Palette::Heat, "/nonexistent/dir/h.png", 2), AnalysisError);
}

TEST(Heatmap, NonFiniteRejected) {
  Grid g(2, 2, 1.0);
  g.values[1] = NAN;
  EXPECT_THROW(heatmap_image(g, Palette::Heat, 2), AnalysisError);
}

TEST(ReplayRender, FramesPerTick) {
  const auto dir = testing::scratch_dir("frames");
  const auto m = open_map();
  std::vector<ReplayRecord> log = simulated_replay(m, 3, 2);
  log.resize(60);
  std::size_t ticks = 0;
  for (const auto& r : log) ticks += r.type == RecordType::Tick ? 1 : 0;
  EXPECT_EQ(render_replay(log, m, dir, 2), ticks);
}

TEST(ReplayRender, InconsistentRecordNamesTick) {
  const auto dir = testing::scratch_dir("frames_bad");
  const auto m = open_map();
  const std::vector<ReplayRecord> log{header(m), move(7, 3, {4, 4})};
  try {
    render_replay(log, m, dir, 2);
    FAIL();
  } catch (const AnalysisError& e) {
    EXPECT_NE(std::string(e.what()).find("tick 7"), std::string::npos);
  }
}

}  // namespace
}  // namespace arena
