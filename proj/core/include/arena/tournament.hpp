#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arena/config.hpp"
#include "arena/engine.hpp"
#include "arena/neural.hpp"
#include "arena/replay.hpp"

namespace arena {

/// Lifetime sample set for one population or competitor.
struct LifetimeStats {
  std::size_t spawned = 0;
  std::size_t deaths = 0;
  std::size_t censored = 0;  // still alive when observation ended
  std::array<std::size_t, kDeathCauseCount> causes{};
  std::vector<std::int64_t> lifetimes;  // samples entering the statistics

  [[nodiscard]] std::size_t count() const { return lifetimes.size(); }
  [[nodiscard]] double sum() const;
  [[nodiscard]] double mean() const;    // 0 when empty
  [[nodiscard]] double median() const;  // 0 when empty
  [[nodiscard]] std::int64_t max() const;
  [[nodiscard]] double stddev() const;  // sample standard deviation
  [[nodiscard]] double ci95() const;    // half-width of the normal 95% interval

  void add_death(DeathCause cause, std::int64_t lifetime);
  void merge(const LifetimeStats& other);
};

LifetimeStats merge(const LifetimeStats& a, const LifetimeStats& b);

struct ReplayStats {
  std::map<int, LifetimeStats> by_population;
  LifetimeStats total;
};

/// Deaths and spawns per population from replay records. Agents without a
/// death record are counted as censored and excluded from the lifetimes.
ReplayStats lifetime_stats(const std::vector<ReplayRecord>& records);
/// Throws ReplayFormatError with the line number of a malformed record.
ReplayStats lifetime_stats(std::istream& replay);

/// A frozen player base: a uniform-random policy or one network per trained
/// population.
struct Competitor {
  std::string name;
  bool random = false;
  std::vector<PolicyParams> policies;
};

class TournamentError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

Competitor random_competitor();

/// "random", a checkpoint path, or several paths joined with '+'. Throws
/// TournamentError when a checkpoint does not match `expected`.
Competitor load_competitor(const std::string& spec, const NetShape& expected);

struct TournamentResult {
  std::vector<std::string> names;
  std::vector<LifetimeStats> stats;                  // per competitor, all seeds
  std::vector<std::vector<LifetimeStats>> per_seed;  // [competitor][seed]
  std::vector<std::int64_t> seeds;
  int ticks = 0;

  [[nodiscard]] std::vector<double> seed_means(std::size_t competitor) const;
};

/// Runs every competitor inside one shared world per seed. New agents are
/// assigned round-robin over competitors (and over the populations of a
/// competitor), so spawn counts never differ by more than one. Policies are
/// sampled stochastically and never updated. Accepts a single competitor,
/// which gives a plain evaluation. With `replay_dir` set, one replay log per
/// seed is written there as replay_seed<seed>.ndjson.
TournamentResult evaluate(const Config& config, const std::vector<Competitor>& competitors,
                          const std::optional<std::filesystem::path>& replay_dir = std::nullopt);

/// Loads config.tournament.competitors (at least two) and runs evaluate().
TournamentResult run_tournament(const Config& config,
                                const std::optional<std::filesystem::path>& replay_dir = std::nullopt);

std::string format_table(const TournamentResult& result);
void write_csv(const TournamentResult& result, std::ostream& out);

}  // namespace arena
