#pragma once

#include <filesystem>
#include <string>

#include "arena/engine.hpp"
#include "arena/worldgen.hpp"

namespace arena::testing {

/// Grass field with the usual lava border.
inline GameMap open_map(int size = 20, std::uint64_t seed = 1) {
  GameMap m(size, size, seed, TileKind::Grass);
  for (int i = 0; i < size; ++i) {
    m.set(0, i, TileKind::Lava);
    m.set(size - 1, i, TileKind::Lava);
    m.set(i, 0, TileKind::Lava);
    m.set(i, size - 1, TileKind::Lava);
  }
  return m;
}

inline EngineConfig engine_with_cap(int cap) {
  EngineConfig ec;
  ec.spawn_cap = cap;
  return ec;
}

/// Spawns an agent and moves it to `pos`.
inline AgentId place_agent(World& world, Position pos, int population = 0) {
  const auto id = world.spawn_agent(population);
  if (!id) throw std::runtime_error("spawn failed");
  world.move_agent_to(*id, pos);
  return *id;
}

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("arena_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace arena::testing
