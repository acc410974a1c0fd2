#include "arena/obsact.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace arena {

Observation observe(const World& world, AgentId agent, const ObsConfig& config) {
  const AgentState* self = world.find(agent);
  if (self == nullptr || !self->alive) {
    throw std::invalid_argument("observe: agent " + std::to_string(agent) + " is not alive");
  }
  const GameMap& map = world.map();
  const EngineConfig& ec = world.config();

  Observation obs;
  obs.radius = config.crop_radius;
  obs.center = self->pos;
  obs.map_height = map.height();
  obs.map_width = map.width();
  obs.max_health = ec.max_health;
  obs.max_food = ec.max_food;
  obs.max_water = ec.max_water;

  const int size = obs.crop_size();
  const int r0 = self->pos.row - obs.radius;
  const int c0 = self->pos.col - obs.radius;
  obs.materials.assign(static_cast<std::size_t>(size) * size, kPadMaterial);
  obs.counts.assign(static_cast<std::size_t>(size) * size, 0);

  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const Position p{r0 + i, c0 + j};
      if (!map.in_bounds(p)) continue;
      const auto cell = static_cast<std::size_t>(i) * size + j;
      obs.materials[cell] = static_cast<std::uint8_t>(map.at(p));
      const auto occ = world.occupants(p);
      obs.counts[cell] = static_cast<std::uint16_t>(occ.size());
      for (const AgentId id : occ) {
        const AgentState& a = *world.find(id);
        EntityRecord e;
        e.id = a.id;
        e.lifetime = a.age;
        e.health = a.health;
        e.food = a.food;
        e.water = a.water;
        e.pos = a.pos;
        e.delta_row = a.pos.row - self->pos.row;
        e.delta_col = a.pos.col - self->pos.col;
        e.last_damage = a.last_damage_taken;
        e.same_population = a.population == self->population;
        e.frozen = a.freeze_remaining > 0;
        obs.entities.push_back(e);
      }
    }
  }
  return obs;
}

EncodedObs encode(const Observation& obs, const ObsConfig& config) {
  EncodedObs enc;
  enc.crop_size = obs.crop_size();
  enc.tiles = obs.materials;
  enc.counts.resize(obs.counts.size());
  const double cs = config.count_scale;
  for (std::size_t i = 0; i < obs.counts.size(); ++i) enc.counts[i] = std::min<double>(obs.counts[i], cs) / cs;

  const double radius = obs.radius;
  const auto unit = [](double v) { return std::clamp(v, 0.0, 1.0); };
  const double row_scale = std::max(1, obs.map_height - 1);
  const double col_scale = std::max(1, obs.map_width - 1);
  enc.entities.reserve(obs.entities.size() * kEntityFeatureCount);
  for (const auto& e : obs.entities) {
    double f[kEntityFeatureCount];
    f[kFeatLifetime] = unit(e.lifetime / config.lifetime_scale);
    f[kFeatHealth] = unit(static_cast<double>(e.health) / obs.max_health);
    f[kFeatFood] = unit(static_cast<double>(e.food) / obs.max_food);
    f[kFeatWater] = unit(static_cast<double>(e.water) / obs.max_water);
    f[kFeatRow] = unit(e.pos.row / row_scale);
    f[kFeatCol] = unit(e.pos.col / col_scale);
    f[kFeatDeltaRow] = unit((e.delta_row + radius) / (2.0 * radius));
    f[kFeatDeltaCol] = unit((e.delta_col + radius) / (2.0 * radius));
    f[kFeatDamage] = unit(e.last_damage / config.damage_scale);
    f[kFeatSamePopulation] = e.same_population ? 1.0 : 0.0;
    f[kFeatFrozen] = e.frozen ? 1.0 : 0.0;
    enc.entities.insert(enc.entities.end(), f, f + kEntityFeatureCount);
  }
  return enc;
}

ActionPair decode_action(int move_index, int attack_index) {
  if (move_index < 0 || move_index >= kMoveCount) {
    throw std::out_of_range("move index " + std::to_string(move_index) + " outside [0, 5)");
  }
  if (attack_index < 0 || attack_index >= kAttackCount) {
    throw std::out_of_range("attack index " + std::to_string(attack_index) + " outside [0, 3)");
  }
  return {static_cast<Move>(move_index), static_cast<AttackStyle>(attack_index)};
}

std::pair<int, int> action_indices(const ActionPair& action) {
  return {static_cast<int>(action.move), static_cast<int>(action.attack)};
}

}  // namespace arena
