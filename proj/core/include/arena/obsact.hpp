#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "arena/config.hpp"
#include "arena/engine.hpp"

namespace arena {

/// Embedding index used for crop cells that fall outside the map.
inline constexpr std::uint8_t kPadMaterial = kTileKindCount;
inline constexpr int kMaterialCount = kTileKindCount + 1;

/// Per-entity feature layout produced by encode().
enum EntityFeature : int {
  kFeatLifetime = 0,
  kFeatHealth,
  kFeatFood,
  kFeatWater,
  kFeatRow,
  kFeatCol,
  kFeatDeltaRow,
  kFeatDeltaCol,
  kFeatDamage,
  kFeatSamePopulation,
  kFeatFrozen,
  kEntityFeatureCount
};

struct EntityRecord {
  AgentId id = 0;
  int lifetime = 0;
  int health = 0;
  int food = 0;
  int water = 0;
  Position pos;
  int delta_row = 0;  // entity minus observer
  int delta_col = 0;
  int last_damage = 0;
  bool same_population = false;
  bool frozen = false;
};

struct Observation {
  int radius = 7;
  Position center;
  std::vector<std::uint8_t> materials;  // crop_size^2, row-major
  std::vector<std::uint16_t> counts;    // occupants per crop cell
  std::vector<EntityRecord> entities;   // includes the observer itself
  // normalisation context
  int map_height = 0;
  int map_width = 0;
  int max_health = 10;
  int max_food = 32;
  int max_water = 32;

  [[nodiscard]] int crop_size() const { return 2 * radius + 1; }
};

struct EncodedObs {
  int crop_size = 15;
  std::vector<std::uint8_t> tiles;  // material indices in [0, kMaterialCount)
  std::vector<double> counts;       // occupant counts scaled to [0, 1]
  std::vector<double> entities;     // row-major, entity_count() x kEntityFeatureCount

  [[nodiscard]] std::size_t entity_count() const { return entities.size() / kEntityFeatureCount; }
  [[nodiscard]] const double* entity(std::size_t i) const { return entities.data() + i * kEntityFeatureCount; }
};

/// Egocentric crop around a live agent. Reads the world only. Throws
/// std::invalid_argument for unknown or dead agents.
Observation observe(const World& world, AgentId agent, const ObsConfig& config);

/// Entity attributes scaled into [0, 1]: stats by their maxima, lifetime by
/// lifetime_scale (clamped), deltas mapped from [-r, r], damage by
/// damage_scale (clamped), flags as 0/1.
EncodedObs encode(const Observation& obs, const ObsConfig& config);

/// Head indices: North South East West Pass / Melee Range Mage.
/// Throws std::out_of_range for indices outside [0,5) x [0,3).
ActionPair decode_action(int move_index, int attack_index);
std::pair<int, int> action_indices(const ActionPair& action);

}  // namespace arena
