#include "arena/engine.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <tuple>

#include <spdlog/spdlog.h>

namespace arena {

const char* to_string(Move m) {
  switch (m) {
    case Move::North: return "north";
    case Move::South: return "south";
    case Move::East: return "east";
    case Move::West: return "west";
    case Move::Pass: return "pass";
  }
  return "?";
}

const char* to_string(AttackStyle s) {
  switch (s) {
    case AttackStyle::Melee: return "melee";
    case AttackStyle::Range: return "range";
    case AttackStyle::Mage: return "mage";
  }
  return "?";
}

AttackStyle attack_style_from_name(const std::string& name) {
  for (int i = 0; i < kAttackCount; ++i) {
    const auto s = static_cast<AttackStyle>(i);
    if (name == to_string(s)) return s;
  }
  throw std::invalid_argument("unknown attack style '" + name + "'");
}

const char* to_string(DeathCause c) {
  switch (c) {
    case DeathCause::Starvation: return "starvation";
    case DeathCause::Dehydration: return "dehydration";
    case DeathCause::Combat: return "combat";
    case DeathCause::Lava: return "lava";
  }
  return "?";
}

DeathCause death_cause_from_name(const std::string& name) {
  for (int i = 0; i < kDeathCauseCount; ++i) {
    const auto c = static_cast<DeathCause>(i);
    if (name == to_string(c)) return c;
  }
  throw std::invalid_argument("unknown death cause '" + name + "'");
}

int apply_metabolism(AgentState& agent, const EngineConfig& config) {
  const int before = agent.health;
  const bool starving = agent.food == 0;
  const bool thirsty = agent.water == 0;
  agent.food = std::max(0, agent.food - config.food_decay);
  agent.water = std::max(0, agent.water - config.water_decay);
  if (starving) agent.health -= config.starvation_damage;
  if (thirsty) agent.health -= config.dehydration_damage;
  if (agent.food > config.regen_food_above && agent.water > config.regen_water_above) {
    agent.health = std::min(config.max_health, agent.health + config.health_regen);
  }
  agent.health = std::max(0, agent.health);
  ++agent.age;
  return agent.health - before;
}

World::World(GameMap map, EngineConfig config, std::uint64_t seed, PopulationPicker picker)
    : map_(std::move(map)),
      config_(config),
      rng_(seed, 0xe9e1e),
      picker_(std::move(picker)),
      occupants_(map_.cell_count()),
      spawn_cells_(spawn_cells(map_)) {
  if (!picker_) picker_ = [](Rng&) { return 0; };
  scrubs_ = map_.count(TileKind::Scrub);
}

const AgentState* World::find(AgentId id) const {
  const auto it = std::lower_bound(agents_.begin(), agents_.end(), id,
                                   [](const AgentState& a, AgentId key) { return a.id < key; });
  return it != agents_.end() && it->id == id ? &*it : nullptr;
}

AgentState* World::find_mutable(AgentId id) {
  return const_cast<AgentState*>(std::as_const(*this).find(id));
}

void World::place(AgentId id, Position p) { occupants_[map_.index(p)].push_back(id); }

void World::unplace(AgentId id, Position p) {
  auto& cell = occupants_[map_.index(p)];
  cell.erase(std::find(cell.begin(), cell.end(), id));
}

void World::set_tile(Position p, TileKind kind) {
  const TileKind old = map_.at(p);
  if (old == TileKind::Scrub) --scrubs_;
  if (kind == TileKind::Scrub) ++scrubs_;
  map_.set(p, kind);
}

void World::move_agent_to(AgentId id, Position p) {
  AgentState* a = find_mutable(id);
  if (a == nullptr || !a->alive) throw std::invalid_argument("move_agent_to: no live agent " + std::to_string(id));
  unplace(id, a->pos);
  a->pos = p;
  place(id, p);
}

std::optional<AgentId> World::spawn_agent(int population) {
  if (live_ >= static_cast<std::size_t>(config_.spawn_cap)) return std::nullopt;
  std::vector<Position> free;
  free.reserve(spawn_cells_.size());
  for (const auto p : spawn_cells_) {
    if (occupants_[map_.index(p)].empty()) free.push_back(p);
  }
  if (free.empty()) return std::nullopt;
  const Position pos = free[static_cast<std::size_t>(rng_.uniform_int(free.size()))];

  AgentState a;
  a.id = next_id_++;
  a.population = population;
  a.pos = pos;
  a.health = config_.max_health;
  a.food = config_.max_food;
  a.water = config_.max_water;
  a.alive = true;
  a.spawn_tick = tick_;
  agents_.push_back(a);
  place(a.id, pos);
  ++live_;
  return a.id;
}

void World::kill(AgentState& agent, DeathCause cause, TickEvents& events) {
  agent.alive = false;
  unplace(agent.id, agent.pos);
  --live_;
  events.deaths.push_back({agent.id, agent.population, cause, agent.pos, agent.age, tick_ - agent.spawn_tick});
}

void World::resolve_movement(AgentId id, Move move, TickEvents& events) {
  AgentState* a = find_mutable(id);
  if (a == nullptr || !a->alive) return;
  if (a->freeze_remaining > 0) {
    --a->freeze_remaining;
    return;
  }
  Position to = a->pos;
  switch (move) {
    case Move::North: --to.row; break;
    case Move::South: ++to.row; break;
    case Move::East: ++to.col; break;
    case Move::West: --to.col; break;
    case Move::Pass: return;
  }
  if (!map_.in_bounds(to) || !is_passable(map_.at(to))) return;
  const Position from = a->pos;
  unplace(id, from);
  a->pos = to;
  place(id, to);
  events.moves.push_back({id, from, to});
  if (map_.at(to) == TileKind::Lava) kill(*a, DeathCause::Lava, events);
}

const AttackSpec& World::attack_spec(AttackStyle style) const {
  switch (style) {
    case AttackStyle::Melee: return config_.combat.melee;
    case AttackStyle::Range: return config_.combat.range;
    case AttackStyle::Mage: break;
  }
  return config_.combat.mage;
}

std::optional<AgentId> World::select_target(AgentId attacker, AttackStyle style) const {
  const AgentState* a = find(attacker);
  if (a == nullptr || !a->alive) return std::nullopt;
  const int r = attack_spec(style).range;
  std::optional<AgentId> best;
  std::tuple<int, int, AgentId> best_key{};
  for (int row = a->pos.row - r; row <= a->pos.row + r; ++row) {
    for (int col = a->pos.col - r; col <= a->pos.col + r; ++col) {
      if (!map_.in_bounds(row, col)) continue;
      for (const AgentId other : occupants_[map_.index(row, col)]) {
        if (other == attacker) continue;
        const AgentState* t = find(other);
        if (!config_.combat.friendly_fire && t->population == a->population) continue;
        if (t->age < config_.combat.immunity_ticks) continue;
        const int l1 = std::abs(row - a->pos.row) + std::abs(col - a->pos.col);
        const std::tuple<int, int, AgentId> key{t->health, l1, t->id};
        if (!best || key < best_key) {
          best = t->id;
          best_key = key;
        }
      }
    }
  }
  return best;
}

std::optional<AttackEvent> World::resolve_attack(AgentId attacker, AttackStyle style, TickEvents& events) {
  const auto target_id = select_target(attacker, style);
  if (!target_id) return std::nullopt;
  AgentState& a = *find_mutable(attacker);
  AgentState& t = *find_mutable(*target_id);
  const AttackSpec& spec = attack_spec(style);

  AttackEvent ev;
  ev.attacker = a.id;
  ev.target = t.id;
  ev.style = style;
  ev.damage = spec.damage;
  ev.attacker_pos = a.pos;
  ev.target_pos = t.pos;
  ev.attacker_population = a.population;
  ev.target_population = t.population;
  ev.stolen_food = std::min(spec.damage, t.food);
  ev.stolen_water = std::min(spec.damage, t.water);

  t.health = std::max(0, t.health - spec.damage);
  t.food -= ev.stolen_food;
  t.water -= ev.stolen_water;
  t.last_damage_taken = spec.damage;
  if (spec.freeze_ticks > 0) {
    // a target that has yet to act this tick also loses this tick's move
    const auto it = std::lower_bound(tick_order_.begin(), tick_order_.end(), t.id);
    const bool pending = it != tick_order_.end() && *it == t.id && !acted_[static_cast<std::size_t>(it - tick_order_.begin())];
    t.freeze_remaining = spec.freeze_ticks + (pending ? 1 : 0);
  }
  a.food = std::min(config_.max_food, a.food + ev.stolen_food);
  a.water = std::min(config_.max_water, a.water + ev.stolen_water);

  events.attacks.push_back(ev);
  if (t.health == 0) kill(t, DeathCause::Combat, events);
  return ev;
}

std::optional<HarvestEvent> World::harvest(AgentId id, TickEvents& events) {
  AgentState* a = find_mutable(id);
  if (a == nullptr || !a->alive) return std::nullopt;
  HarvestEvent ev{id, a->pos, 0, 0, false};
  if (map_.at(a->pos) == TileKind::Forest) {
    const int before = a->food;
    a->food = std::min(config_.max_food, a->food + config_.forest_food);
    ev.food = a->food - before;
    ev.consumed_forest = true;
    set_tile(a->pos, TileKind::Scrub);
  }
  if (map_.water_adjacent(a->pos.row, a->pos.col)) {
    const int before = a->water;
    a->water = std::min(config_.max_water, a->water + config_.water_gain);
    ev.water = a->water - before;
  }
  if (!ev.consumed_forest && ev.water == 0) return std::nullopt;
  events.harvests.push_back(ev);
  return ev;
}

int World::regen_tiles(TickEvents& events) {
  if (scrubs_ == 0) return 0;
  int regenerated = 0;
  const auto cells = map_.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] != TileKind::Scrub) continue;
    if (!rng_.bernoulli(config_.scrub_regen_probability)) continue;
    const Position p{static_cast<int>(i / static_cast<std::size_t>(map_.width())),
                     static_cast<int>(i % static_cast<std::size_t>(map_.width()))};
    set_tile(p, TileKind::Forest);
    events.regenerated.push_back(p);
    ++regenerated;
  }
  return regenerated;
}

TickEvents World::step(const ActionMap& actions) {
  TickEvents events;
  events.tick = tick_;

  std::vector<AgentId> order;
  order.reserve(agents_.size());
  for (const auto& a : agents_) {
    if (a.alive) order.push_back(a.id);
  }
  for (const auto& [id, action] : actions) {
    const AgentState* a = find(id);
    if (a == nullptr || !a->alive) {
      ++events.ignored_actions;
      spdlog::warn("tick {}: ignoring action for unknown or dead agent {}", tick_, id);
    }
  }

  // (1) spawn
  if (live_ < static_cast<std::size_t>(config_.spawn_cap)) {
    bool any_free = false;
    for (const auto p : spawn_cells_) {
      if (occupants_[map_.index(p)].empty()) {
        any_free = true;
        break;
      }
    }
    if (any_free) {
      const int population = picker_(rng_);
      const auto id = spawn_agent(population);
      const AgentState* a = find(*id);
      events.spawns.push_back({a->id, a->population, a->pos});
    }
  }

  // (2) per-agent resolution in shuffled order
  tick_order_ = order;
  acted_.assign(order.size(), 0);
  rng_.shuffle(std::span<AgentId>(order));
  for (const AgentId id : order) events.rewards.push_back({id, 1.0});
  for (const AgentId id : order) {
    acted_[static_cast<std::size_t>(std::lower_bound(tick_order_.begin(), tick_order_.end(), id) - tick_order_.begin())] = 1;
    AgentState* a = find_mutable(id);
    if (!a->alive) continue;
    const auto it = actions.find(id);
    if (it == actions.end()) {
      ++events.ignored_actions;
      spdlog::warn("tick {}: no action for agent {}, treating as pass", tick_, id);
    }
    const ActionPair action = it != actions.end() ? it->second : ActionPair{};

    resolve_movement(id, action.move, events);
    a = find_mutable(id);
    if (!a->alive) continue;

    if (config_.combat.enabled && it != actions.end()) resolve_attack(id, action.attack, events);

    harvest(id, events);

    const bool starving = a->food == 0;
    apply_metabolism(*a, config_);
    if (a->health <= 0) kill(*a, starving ? DeathCause::Starvation : DeathCause::Dehydration, events);
  }

  tick_order_.clear();
  acted_.clear();

  // (3) death removal
  std::erase_if(agents_, [](const AgentState& a) { return !a.alive; });

  // (4) tile regeneration
  regen_tiles(events);

  // (5)
  ++tick_;
  events.alive_after = live_;
  return events;
}

std::vector<std::string> World::check_invariants() const {
  std::vector<std::string> out;
  if (live_ > static_cast<std::size_t>(config_.spawn_cap)) {
    out.push_back("live count " + std::to_string(live_) + " exceeds cap " + std::to_string(config_.spawn_cap));
  }
  if (live_ != agents_.size()) out.push_back("live counter out of sync with agent list");
  std::size_t listed = 0;
  for (const auto& cell : occupants_) listed += cell.size();
  if (listed != agents_.size()) out.push_back("occupant lists hold " + std::to_string(listed) + " ids for " +
                                             std::to_string(agents_.size()) + " agents");
  for (const auto& a : agents_) {
    const std::string who = "agent " + std::to_string(a.id) + ": ";
    if (!a.alive) out.push_back(who + "dead agent retained");
    if (a.health <= 0 || a.health > config_.max_health) out.push_back(who + "health " + std::to_string(a.health));
    if (a.food < 0 || a.food > config_.max_food) out.push_back(who + "food " + std::to_string(a.food));
    if (a.water < 0 || a.water > config_.max_water) out.push_back(who + "water " + std::to_string(a.water));
    if (a.freeze_remaining < 0 || a.freeze_remaining > config_.combat.mage.freeze_ticks) {
      out.push_back(who + "freeze " + std::to_string(a.freeze_remaining));
    }
    if (!map_.in_bounds(a.pos) || !is_passable(map_.at(a.pos)) || map_.at(a.pos) == TileKind::Lava) {
      out.push_back(who + "standing on an illegal cell");
    } else {
      const auto& cell = occupants_[map_.index(a.pos)];
      if (std::find(cell.begin(), cell.end(), a.id) == cell.end()) out.push_back(who + "missing from occupant list");
    }
  }
  std::size_t scrubs = map_.count(TileKind::Scrub);
  if (scrubs != scrubs_) out.push_back("scrub counter out of sync");
  return out;
}

}  // namespace arena
