#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arena/config.hpp"
#include "arena/rng.hpp"
#include "arena/types.hpp"
#include "arena/worldgen.hpp"

namespace arena {

enum class Move : std::uint8_t { North = 0, South, East, West, Pass };
enum class AttackStyle : std::uint8_t { Melee = 0, Range, Mage };

inline constexpr int kMoveCount = 5;
inline constexpr int kAttackCount = 3;

const char* to_string(Move m);
const char* to_string(AttackStyle s);
AttackStyle attack_style_from_name(const std::string& name);

struct ActionPair {
  Move move = Move::Pass;
  AttackStyle attack = AttackStyle::Melee;

  friend bool operator==(const ActionPair&, const ActionPair&) = default;
};

using ActionMap = std::map<AgentId, ActionPair>;

struct AgentState {
  AgentId id = 0;
  int population = 0;
  Position pos;
  int health = 0;
  int food = 0;
  int water = 0;
  int age = 0;  // metabolism ticks survived
  int freeze_remaining = 0;
  int last_damage_taken = 0;
  bool alive = false;
  std::int64_t spawn_tick = 0;

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

enum class DeathCause : std::uint8_t { Starvation = 0, Dehydration, Combat, Lava };

inline constexpr int kDeathCauseCount = 4;

const char* to_string(DeathCause c);
DeathCause death_cause_from_name(const std::string& name);

struct SpawnEvent {
  AgentId agent = 0;
  int population = 0;
  Position pos;
};

struct MoveEvent {
  AgentId agent = 0;
  Position from;
  Position to;
};

struct HarvestEvent {
  AgentId agent = 0;
  Position pos;
  int food = 0;  // gained after clamping
  int water = 0;
  bool consumed_forest = false;
};

struct AttackEvent {
  AgentId attacker = 0;
  AgentId target = 0;
  AttackStyle style = AttackStyle::Melee;
  int damage = 0;
  int stolen_food = 0;  // taken from the target
  int stolen_water = 0;
  Position attacker_pos;
  Position target_pos;
  int attacker_population = 0;
  int target_population = 0;
};

struct DeathEvent {
  AgentId agent = 0;
  int population = 0;
  DeathCause cause = DeathCause::Starvation;
  Position pos;
  int age = 0;
  std::int64_t lifetime = 0;  // death tick - spawn tick
};

struct Reward {
  AgentId agent = 0;
  double value = 1.0;
};

struct TickEvents {
  std::int64_t tick = 0;
  std::vector<SpawnEvent> spawns;
  std::vector<MoveEvent> moves;
  std::vector<HarvestEvent> harvests;
  std::vector<AttackEvent> attacks;
  std::vector<DeathEvent> deaths;
  std::vector<Position> regenerated;
  std::vector<Reward> rewards;
  int ignored_actions = 0;
  std::size_t alive_after = 0;
};

/// Chooses the population of the next spawned agent. Called only when a
/// spawn is certain to succeed.
using PopulationPicker = std::function<int(Rng&)>;

/// Authoritative state of one server. Single-threaded; distinct worlds are
/// independent and may be stepped from different threads.
class World {
public:
  World(GameMap map, EngineConfig config, std::uint64_t seed, PopulationPicker picker = {});

  [[nodiscard]] const GameMap& map() const { return map_; }
  [[nodiscard]] const EngineConfig& config() const { return config_; }
  [[nodiscard]] std::int64_t tick() const { return tick_; }
  [[nodiscard]] std::size_t live_count() const { return live_; }
  [[nodiscard]] int spawn_cap() const { return config_.spawn_cap; }

  /// Live agents in ascending id order. Dead agents are dropped at the end of
  /// each tick.
  [[nodiscard]] std::span<const AgentState> agents() const { return agents_; }
  [[nodiscard]] const AgentState* find(AgentId id) const;
  [[nodiscard]] std::span<const AgentId> occupants(Position p) const { return occupants_[map_.index(p)]; }

  /// Spawns on a uniformly random unoccupied spawn-ring cell. Returns nullopt
  /// when the world is at its cap or every spawn cell is occupied.
  std::optional<AgentId> spawn_agent(int population);

  /// One server tick: at most one spawn while below the cap, then each agent
  /// that held an action, in a freshly shuffled order, resolves movement,
  /// attack, harvest and metabolism; dead agents are removed; scrubs
  /// regenerate; the tick counter advances.
  TickEvents step(const ActionMap& actions);

  /// Sub-steps of step(), public for direct testing.
  void resolve_movement(AgentId id, Move move, TickEvents& events);
  [[nodiscard]] std::optional<AgentId> select_target(AgentId attacker, AttackStyle style) const;
  std::optional<AttackEvent> resolve_attack(AgentId attacker, AttackStyle style, TickEvents& events);
  std::optional<HarvestEvent> harvest(AgentId id, TickEvents& events);
  int regen_tiles(TickEvents& events);

  /// Direct state edits for tests and synthetic scenarios.
  AgentState* find_mutable(AgentId id);
  void set_tile(Position p, TileKind kind);
  void move_agent_to(AgentId id, Position p);

  /// Human-readable descriptions of every broken structural invariant.
  [[nodiscard]] std::vector<std::string> check_invariants() const;

private:
  void kill(AgentState& agent, DeathCause cause, TickEvents& events);
  void place(AgentId id, Position p);
  void unplace(AgentId id, Position p);
  [[nodiscard]] const AttackSpec& attack_spec(AttackStyle style) const;

  GameMap map_;
  EngineConfig config_;
  Rng rng_;
  PopulationPicker picker_;
  std::vector<AgentState> agents_;
  std::vector<std::vector<AgentId>> occupants_;
  std::vector<Position> spawn_cells_;
  std::vector<AgentId> tick_order_;  // sorted ids acting this tick
  std::vector<char> acted_;          // parallel to tick_order_
  std::size_t live_ = 0;
  std::size_t scrubs_ = 0;
  std::int64_t tick_ = 0;
  AgentId next_id_ = 1;
};

/// Per-tick upkeep: food and water drop (floored at 0); health drops by the
/// starvation/dehydration damage for each of food and water that was already
/// at 0 when the tick began; health regenerates while both stay above their
/// thresholds; age advances. Returns the net health change.
int apply_metabolism(AgentState& agent, const EngineConfig& config);

}  // namespace arena
