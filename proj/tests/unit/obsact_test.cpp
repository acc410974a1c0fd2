#include <gtest/gtest.h>

#include "arena/obsact.hpp"
#include "helpers.hpp"

namespace arena {
namespace {

using testing::engine_with_cap;
using testing::open_map;
using testing::place_agent;

std::size_t cell(const Observation& o, int dr, int dc) {
  return static_cast<std::size_t>(dr + o.radius) * o.crop_size() + (dc + o.radius);
}

TEST(Observe, CropShapeAndPadding) {
  World w(open_map(), engine_with_cap(1), 1);
  const auto id = place_agent(w, {2, 3});
  const auto o = observe(w, id, ObsConfig{});
  EXPECT_EQ(o.crop_size(), 15);
  EXPECT_EQ(o.materials.size(), 225u);
  EXPECT_EQ(o.materials[cell(o, 0, 0)], static_cast<std::uint8_t>(TileKind::Grass));
  EXPECT_EQ(o.materials[cell(o, -2, 0)], static_cast<std::uint8_t>(TileKind::Lava));
  EXPECT_EQ(o.materials[cell(o, -3, 0)], kPadMaterial);
  EXPECT_EQ(o.materials[cell(o, 0, -4)], kPadMaterial);
  EXPECT_EQ(o.materials[cell(o, 7, 7)], static_cast<std::uint8_t>(TileKind::Grass));
}

TEST(Observe, SelfIsAnEntity) {
  World w(open_map(), engine_with_cap(1), 1);
  const auto id = place_agent(w, {9, 9});
  const auto o = observe(w, id, ObsConfig{});
  ASSERT_EQ(o.entities.size(), 1u);
  EXPECT_EQ(o.entities[0].id, id);
  EXPECT_EQ(o.entities[0].delta_row, 0);
  EXPECT_TRUE(o.entities[0].same_population);
  EXPECT_EQ(o.counts[cell(o, 0, 0)], 1);
}

TEST(Observe, OthersInsideCropOnly) {
  World w(open_map(30), engine_with_cap(4), 1);
  const auto me = place_agent(w, {10, 10}, 0);
  const auto near = place_agent(w, {12, 7}, 1);
  place_agent(w, {10, 18}, 1);  // eight columns away
  const auto o = observe(w, me, ObsConfig{});
  ASSERT_EQ(o.entities.size(), 2u);
  const auto& e = o.entities[0].id == near ? o.entities[0] : o.entities[1];
  EXPECT_EQ(e.delta_row, 2);
  EXPECT_EQ(e.delta_col, -3);
  EXPECT_FALSE(e.same_population);
}

TEST(Observe, DeadAgentThrows) {
  World w(open_map(), engine_with_cap(1), 1);
  EXPECT_THROW(observe(w, 42, ObsConfig{}), std::invalid_argument);
}

TEST(Observe, DoesNotMutateWorld) {
  World w(open_map(), engine_with_cap(2), 1);
  const auto id = place_agent(w, {5, 5});
  const std::vector<AgentState> before(w.agents().begin(), w.agents().end());
  const auto tick = w.tick();
  observe(w, id, ObsConfig{});
  const std::vector<AgentState> after(w.agents().begin(), w.agents().end());
  EXPECT_EQ(before, after);
  EXPECT_EQ(w.tick(), tick);
}

TEST(Encode, FeaturesInUnitInterval) {
  World w(open_map(), engine_with_cap(3), 1);
  const auto me = place_agent(w, {5, 5}, 0);
  const auto other = place_agent(w, {6, 7}, 1);
  w.find_mutable(other)->freeze_remaining = 1;
  w.find_mutable(other)->last_damage_taken = 25;
  w.find_mutable(me)->age = 5000;
  const auto enc = encode(observe(w, me, ObsConfig{}), ObsConfig{});
  ASSERT_EQ(enc.entity_count(), 2u);
  for (const double v : enc.entities) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  for (std::size_t i = 0; i < enc.entity_count(); ++i) {
    const double* f = enc.entity(i);
    if (f[kFeatSamePopulation] == 1.0) {
      EXPECT_DOUBLE_EQ(f[kFeatLifetime], 1.0);
      EXPECT_DOUBLE_EQ(f[kFeatDeltaRow], 0.5);
    } else {
      EXPECT_DOUBLE_EQ(f[kFeatFrozen], 1.0);
      EXPECT_DOUBLE_EQ(f[kFeatDamage], 1.0);
      EXPECT_DOUBLE_EQ(f[kFeatDeltaRow], 8.0 / 14.0);
      EXPECT_DOUBLE_EQ(f[kFeatDeltaCol], 9.0 / 14.0);
    }
  }
}

TEST(Encode, StatScaling) {
  World w(open_map(), engine_with_cap(1), 1);
  const auto me = place_agent(w, {5, 5});
  auto* a = w.find_mutable(me);
  a->health = 5;
  a->food = 8;
  a->water = 16;
  const auto enc = encode(observe(w, me, ObsConfig{}), ObsConfig{});
  EXPECT_DOUBLE_EQ(enc.entity(0)[kFeatHealth], 0.5);
  EXPECT_DOUBLE_EQ(enc.entity(0)[kFeatFood], 0.25);
  EXPECT_DOUBLE_EQ(enc.entity(0)[kFeatWater], 0.5);
  EXPECT_DOUBLE_EQ(enc.entity(0)[kFeatRow], 5.0 / 19.0);
}

TEST(Encode, CountsSaturate) {
  World w(open_map(), engine_with_cap(12), 1);
  const auto me = place_agent(w, {5, 5});
  for (int i = 0; i < 10; ++i) place_agent(w, {5, 6});
  const auto o = observe(w, me, ObsConfig{});
  const auto enc = encode(o, ObsConfig{});
  EXPECT_DOUBLE_EQ(enc.counts[cell(o, 0, 1)], 1.0);
  EXPECT_DOUBLE_EQ(enc.counts[cell(o, 0, 0)], 1.0 / 8.0);
}

TEST(Decode, RoundTripAllIndices) {
  for (int m = 0; m < kMoveCount; ++m) {
    for (int a = 0; a < kAttackCount; ++a) {
      EXPECT_EQ(action_indices(decode_action(m, a)), std::make_pair(m, a));
    }
  }
  EXPECT_EQ(decode_action(3, 2).move, Move::West);
  EXPECT_EQ(decode_action(3, 2).attack, AttackStyle::Mage);
}

TEST(Decode, OutOfRange) {
  EXPECT_THROW(decode_action(5, 0), std::out_of_range);
  EXPECT_THROW(decode_action(0, 3), std::out_of_range);
  EXPECT_THROW(decode_action(-1, 0), std::out_of_range);
}

}  // namespace
}  // namespace arena
