#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "arena/config.hpp"
#include "arena/engine.hpp"
#include "arena/neural.hpp"
#include "arena/obsact.hpp"
#include "arena/rng.hpp"

namespace arena {

/// R_t = r_t + gamma * R_{t+1}. The tail after the last step is 0 for a
/// terminal trajectory and `bootstrap` for a truncated one.
std::vector<double> compute_returns(std::span<const double> rewards, double gamma, double bootstrap, bool truncated);

/// Uniform draw over [0, populations).
int assign_population(Rng& rng, int populations);

/// Spawn cap of world `world` under the configured cap mode. Uniform mode
/// draws from `rng`.
int world_spawn_cap(const TrainingConfig& config, Rng& rng);

/// One agent's experience between two barriers (or until its death).
struct Trajectory {
  int population = 0;
  int world = 0;
  AgentId agent = 0;
  std::vector<EncodedObs> obs;
  std::vector<int> moves;
  std::vector<int> attacks;
  std::vector<double> rewards;
  std::vector<double> values;  // value estimate at each observation
  bool terminal = false;       // ended by death
  bool truncated = false;      // cut at the barrier
  double bootstrap = 0.0;      // value of the observation at the barrier
  std::int64_t lifetime = 0;   // set for terminal trajectories

  [[nodiscard]] std::size_t size() const { return rewards.size(); }
};

struct PopulationMetrics {
  int population = 0;
  std::size_t samples = 0;
  std::size_t deaths = 0;
  std::size_t truncated = 0;
  std::optional<double> mean_lifetime;  // over deaths in this update
  LossTerms loss;
};

struct UpdateMetrics {
  int update = 0;  // 1-based
  std::int64_t tick = 0;
  std::size_t live_agents = 0;
  std::vector<PopulationMetrics> populations;
};

class TrainingError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Synchronous rollout/update loop. Every update steps each world for
/// `horizon` ticks with the parameter snapshot taken at the previous
/// barrier, then performs one learning step per population using only that
/// population's trajectories.
class Trainer {
public:
  /// With an output directory the trainer writes maps, replays of the
  /// selected worlds, metrics.ndjson and checkpoints there.
  explicit Trainer(Config config, std::optional<std::filesystem::path> output_dir = std::nullopt);
  ~Trainer();
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  UpdateMetrics update();

  /// True once every population has completed the trajectory budget or the
  /// update limit is reached.
  [[nodiscard]] bool done() const;
  [[nodiscard]] int updates() const { return updates_; }
  [[nodiscard]] int populations() const { return static_cast<int>(params_.size()); }
  [[nodiscard]] const PolicyParams& params(int population) const { return params_.at(static_cast<std::size_t>(population)); }
  [[nodiscard]] std::int64_t completed_trajectories(int population) const {
    return completed_.at(static_cast<std::size_t>(population));
  }
  [[nodiscard]] std::size_t world_count() const;
  [[nodiscard]] const World& world(std::size_t index) const;
  [[nodiscard]] const Config& config() const { return config_; }

  /// Trajectories consumed by the last update, grouped by population.
  [[nodiscard]] const std::vector<std::vector<Trajectory>>& last_buffers() const { return buffers_; }

  /// Writes per-population final checkpoints to the output directory.
  void finish();

private:
  struct WorldContext;

  void rollout(WorldContext& ctx, const std::vector<PolicyParams>& snapshot);
  LossTerms learn(int population, const std::vector<Trajectory>& buffer);
  void write_checkpoints(const std::string& tag) const;
  void write_metrics(const UpdateMetrics& m);

  Config config_;
  std::optional<std::filesystem::path> output_dir_;
  std::vector<PolicyParams> params_;
  std::vector<AdamState> adam_;
  std::vector<std::unique_ptr<WorldContext>> worlds_;
  std::vector<std::vector<Trajectory>> buffers_;
  std::vector<std::int64_t> completed_;
  std::unique_ptr<std::ofstream> metrics_out_;
  Rng learner_rng_;
  int updates_ = 0;
};

struct TrainResult {
  std::vector<PolicyParams> params;
  std::vector<UpdateMetrics> metrics;
};

/// Runs Trainer to completion. Writes artifacts when `output_dir` is set.
TrainResult train(const Config& config, std::optional<std::filesystem::path> output_dir = std::nullopt);

/// Metrics record as one NDJSON line (no trailing newline).
std::string metrics_to_json(const UpdateMetrics& m);

}  // namespace arena
