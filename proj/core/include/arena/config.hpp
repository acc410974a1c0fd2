#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "arena/types.hpp"

namespace arena {

struct Threshold {
  double upper = 1.0;  // exclusive, except for the last band which includes 1.0
  TileKind kind = TileKind::Grass;

  friend bool operator==(const Threshold&, const Threshold&) = default;
};

struct FractalParams {
  int octaves = 6;
  double base_frequency = 1.0 / 32.0;
  double lacunarity = 2.0;
  double persistence = 0.5;
  std::vector<Threshold> thresholds = {
      {0.30, TileKind::Water},
      {0.57, TileKind::Grass},
      {0.715, TileKind::Forest},
      {1.0, TileKind::Stone},
  };

  /// Throws ConfigurationError.
  void validate() const;

  friend bool operator==(const FractalParams&, const FractalParams&) = default;
};

struct WorldgenConfig {
  int size = 80;
  std::uint64_t seed = 1;
  int max_retries = 16;
  FractalParams fractal;

  friend bool operator==(const WorldgenConfig&, const WorldgenConfig&) = default;
};

struct AttackSpec {
  int damage = 0;
  int range = 0;
  int freeze_ticks = 0;

  friend bool operator==(const AttackSpec&, const AttackSpec&) = default;
};

struct CombatConfig {
  bool enabled = true;
  AttackSpec melee{10, 1, 0};
  AttackSpec range{2, 2, 0};
  AttackSpec mage{1, 3, 2};
  int immunity_ticks = 15;
  bool friendly_fire = false;

  friend bool operator==(const CombatConfig&, const CombatConfig&) = default;
};

struct EngineConfig {
  // tiles
  int forest_food = 5;
  int water_gain = 5;
  double scrub_regen_probability = 0.025;
  // agent
  int max_health = 10;
  int max_food = 32;
  int max_water = 32;
  // foraging
  int food_decay = 1;
  int water_decay = 1;
  int starvation_damage = 1;
  int dehydration_damage = 1;
  int regen_food_above = 16;
  int regen_water_above = 16;
  int health_regen = 1;
  // spawning
  int spawn_cap = 16;

  CombatConfig combat;

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

struct ObsConfig {
  int crop_radius = 7;  // 15x15 crop
  double lifetime_scale = 1000.0;
  double damage_scale = 10.0;
  int count_scale = 8;

  [[nodiscard]] int crop_size() const { return 2 * crop_radius + 1; }

  friend bool operator==(const ObsConfig&, const ObsConfig&) = default;
};

enum class Activation : std::uint8_t { Identity = 0, Relu, Tanh };

const char* to_string(Activation a);

struct NeuralConfig {
  int embed_dim = 7;
  int entity_dim = 32;
  int hidden = 48;
  Activation activation = Activation::Relu;
  double init_scale = 1.0;
  double value_coef = 0.5;
  double entropy_coef = 1e-2;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-5;

  friend bool operator==(const NeuralConfig&, const NeuralConfig&) = default;
};

enum class CapMode : std::uint8_t {
  Fixed = 0,   // every world uses spawn_cap
  Experiment,  // c = agents_per_population * populations
  Uniform,     // c ~ Uniform{1..spawn_cap} per world
};

const char* to_string(CapMode m);

struct TrainingConfig {
  int worlds = 100;
  int populations = 1;
  CapMode cap_mode = CapMode::Experiment;
  int spawn_cap = 16;
  int agents_per_population = 16;
  double gamma = 0.99;
  int horizon = 256;
  std::int64_t trajectory_budget = 100000;
  int max_updates = 0;  // 0 = bounded by the trajectory budget only
  int epochs = 1;
  int minibatch = 0;  // 0 = whole buffer
  bool normalize_advantage = false;
  std::uint64_t seed = 1;
  bool fixed_map = true;
  std::string output_dir = "runs/default";
  int checkpoint_every = 10;
  std::vector<std::int64_t> replay_worlds = {0};
  int threads = 0;  // 0 = hardware concurrency

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

struct TournamentConfig {
  std::vector<std::string> competitors;
  int spawn_cap = 32;
  int ticks = 1000;
  std::vector<std::int64_t> seeds = {1, 2, 3, 4, 5};
  bool combat = true;
  bool fixed_map = false;
  bool include_censored = false;
  std::string output = "tournament";

  friend bool operator==(const TournamentConfig&, const TournamentConfig&) = default;
};

struct AnalysisConfig {
  int probe_age = 100;
  int probe_health = 10;
  int probe_food = 32;
  int probe_water = 32;
  int image_scale = 8;

  friend bool operator==(const AnalysisConfig&, const AnalysisConfig&) = default;
};

struct Config {
  WorldgenConfig worldgen;
  EngineConfig engine;
  ObsConfig obs;
  NeuralConfig neural;
  TrainingConfig training;
  TournamentConfig tournament;
  AnalysisConfig analysis;

  /// Throws ConfigError naming the first offending key.
  void validate() const;

  /// Replaces every seed with one derived from `seed`.
  void override_seeds(std::uint64_t seed);

  friend bool operator==(const Config&, const Config&) = default;
};

class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string key, int line, const std::string& message);

  [[nodiscard]] const std::string& key() const { return key_; }
  [[nodiscard]] int line() const { return line_; }

private:
  std::string key_;
  int line_;
};

/// Grammar (one statement per line, `#` starts a comment):
///
///     [section]
///     key = value
///     section.key = value
///
/// Values are integers, reals, `true`/`false`, double-quoted strings, or
/// bracketed comma-separated lists of those. Unknown keys are errors.
Config parse_config(const std::filesystem::path& path);
Config parse_config_string(std::string_view text);

/// Canonical text form; parse_config_string(dump_config(c)) == c.
std::string dump_config(const Config& config);

/// Dotted keys of every configurable field, in dump order.
std::vector<std::string> config_keys();

/// Current value of a field rendered as in dump_config, or nullopt for an
/// unknown key.
std::optional<std::string> config_value(const Config& config, std::string_view key);

}  // namespace arena
