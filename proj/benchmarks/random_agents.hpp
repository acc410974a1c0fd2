#pragma once

#include <cstdint>

#include "arena/engine.hpp"
#include "arena/rng.hpp"
#include "arena/worldgen.hpp"

namespace arena::bench {

/// Random-action world kept at a fixed live population: dead agents are
/// replaced directly after every tick so the per-tick load stays constant.
class RandomAgents {
public:
  RandomAgents(int size, int live, std::uint64_t seed)
      : world_(generate_map(seed, size, FractalParams{}, 16), make_config(live), seed), rng_(seed, 77), target_(live) {
    top_up();
  }

  /// One tick; returns the number of agents that acted.
  std::size_t step() {
    actions_.clear();
    for (const auto& a : world_.agents()) {
      actions_[a.id] = {static_cast<Move>(rng_.uniform_int(kMoveCount)),
                        static_cast<AttackStyle>(rng_.uniform_int(kAttackCount))};
    }
    const auto acted = world_.live_count();
    world_.step(actions_);
    top_up();
    return acted;
  }

  [[nodiscard]] const World& world() const { return world_; }

private:
  static EngineConfig make_config(int live) {
    EngineConfig ec;
    ec.spawn_cap = live;
    return ec;
  }

  void top_up() {
    while (world_.live_count() < static_cast<std::size_t>(target_)) {
      if (!world_.spawn_agent(static_cast<int>(rng_.uniform_int(4)))) break;
    }
  }

  World world_;
  Rng rng_;
  ActionMap actions_;
  int target_;
};

}  // namespace arena::bench
