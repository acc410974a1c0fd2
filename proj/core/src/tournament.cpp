#include "arena/tournament.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numeric>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "arena/checkpoint.hpp"
#include "arena/obsact.hpp"
#include "arena/worldgen.hpp"

namespace arena {

double LifetimeStats::sum() const {
  double s = 0.0;
  for (const auto l : lifetimes) s += static_cast<double>(l);
  return s;
}

double LifetimeStats::mean() const { return lifetimes.empty() ? 0.0 : sum() / static_cast<double>(lifetimes.size()); }

double LifetimeStats::median() const {
  if (lifetimes.empty()) return 0.0;
  auto v = lifetimes;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? static_cast<double>(v[n / 2]) : 0.5 * static_cast<double>(v[n / 2 - 1] + v[n / 2]);
}

std::int64_t LifetimeStats::max() const {
  return lifetimes.empty() ? 0 : *std::max_element(lifetimes.begin(), lifetimes.end());
}

double LifetimeStats::stddev() const {
  if (lifetimes.size() < 2) return 0.0;
  const double mu = mean();
  double ss = 0.0;
  for (const auto l : lifetimes) ss += (static_cast<double>(l) - mu) * (static_cast<double>(l) - mu);
  return std::sqrt(ss / static_cast<double>(lifetimes.size() - 1));
}

double LifetimeStats::ci95() const {
  if (lifetimes.size() < 2) return 0.0;
  return 1.96 * stddev() / std::sqrt(static_cast<double>(lifetimes.size()));
}

void LifetimeStats::add_death(DeathCause cause, std::int64_t lifetime) {
  ++deaths;
  ++causes[static_cast<std::size_t>(cause)];
  lifetimes.push_back(lifetime);
}

void LifetimeStats::merge(const LifetimeStats& other) {
  spawned += other.spawned;
  deaths += other.deaths;
  censored += other.censored;
  for (std::size_t i = 0; i < causes.size(); ++i) causes[i] += other.causes[i];
  lifetimes.insert(lifetimes.end(), other.lifetimes.begin(), other.lifetimes.end());
}

LifetimeStats merge(const LifetimeStats& a, const LifetimeStats& b) {
  LifetimeStats out = a;
  out.merge(b);
  return out;
}

ReplayStats lifetime_stats(const std::vector<ReplayRecord>& records) {
  ReplayStats out;
  std::map<AgentId, int> open;
  for (const auto& r : records) {
    if (r.type == RecordType::Spawn) {
      ++out.by_population[r.population].spawned;
      ++out.total.spawned;
      open[r.agent] = r.population;
    } else if (r.type == RecordType::Death) {
      out.by_population[r.population].add_death(r.cause, r.lifetime);
      out.total.add_death(r.cause, r.lifetime);
      open.erase(r.agent);
    }
  }
  for (const auto& [agent, pop] : open) {
    ++out.by_population[pop].censored;
    ++out.total.censored;
  }
  return out;
}

ReplayStats lifetime_stats(std::istream& replay) { return lifetime_stats(read_replay(replay)); }

Competitor random_competitor() {
  Competitor c;
  c.name = "random";
  c.random = true;
  return c;
}

Competitor load_competitor(const std::string& spec, const NetShape& expected) {
  if (spec == "random") return random_competitor();
  Competitor c;
  c.name = spec;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto end = std::min(spec.find('+', start), spec.size());
    const auto path = spec.substr(start, end - start);
    if (path.empty()) throw TournamentError("empty checkpoint path in competitor '" + spec + "'");
    Checkpoint ck;
    try {
      ck = load_checkpoint(path);
    } catch (const CheckpointError& e) {
      throw TournamentError(e.what());
    }
    if (!(ck.params.shape == expected)) {
      throw TournamentError("checkpoint '" + path + "' does not match the configured network shape");
    }
    c.policies.push_back(std::move(ck.params));
    start = end + 1;
  }
  return c;
}

namespace {

struct Slot {
  std::size_t competitor;
  std::size_t policy;  // index into Competitor::policies, unused for random
};

struct SeedResult {
  std::vector<LifetimeStats> stats;
};

SeedResult run_seed(const Config& config, const std::vector<Competitor>& competitors, const std::vector<Slot>& slots,
                    std::int64_t seed, std::ostream* replay) {
  const auto& tc = config.tournament;
  const auto useed = static_cast<std::uint64_t>(seed);
  auto wg = config.worldgen;
  if (!tc.fixed_map) wg.seed = mix_seed(config.worldgen.seed, useed);
  GameMap map = generate_map(wg);

  EngineConfig ec = config.engine;
  ec.spawn_cap = tc.spawn_cap;
  ec.combat.enabled = tc.combat;

  // round-robin over competitors, and over each competitor's populations
  const std::size_t nc = competitors.size();
  std::vector<std::vector<int>> slot_of(nc);
  for (std::size_t s = 0; s < slots.size(); ++s) slot_of[slots[s].competitor].push_back(static_cast<int>(s));
  auto spawns = std::make_shared<std::vector<std::size_t>>(nc, 0);
  auto turn = std::make_shared<std::size_t>(0);
  PopulationPicker picker = [slot_of, spawns, turn, nc](Rng&) {
    const std::size_t c = (*turn)++ % nc;
    const auto& own = slot_of[c];
    const int slot = own[(*spawns)[c]++ % own.size()];
    return slot;
  };

  World world(std::move(map), ec, mix_seed(useed, 0x70a7), picker);
  Rng sampler(useed, 0x5a3);
  if (replay) write_replay_header(*replay, world.map());

  SeedResult out;
  out.stats.resize(nc);
  for (int t = 0; t < tc.ticks; ++t) {
    ActionMap actions;
    std::vector<std::vector<std::pair<AgentId, EncodedObs>>> by_slot(slots.size());
    for (const auto& a : world.agents()) {
      const auto& slot = slots[static_cast<std::size_t>(a.population)];
      if (competitors[slot.competitor].random) continue;
      by_slot[static_cast<std::size_t>(a.population)].emplace_back(a.id, encode(observe(world, a.id, config.obs), config.obs));
    }
    std::map<AgentId, ForwardOutput> outputs;
    for (std::size_t s = 0; s < slots.size(); ++s) {
      if (by_slot[s].empty()) continue;
      std::vector<const EncodedObs*> batch;
      for (const auto& [id, obs] : by_slot[s]) batch.push_back(&obs);
      const auto fwd = forward_batch(competitors[slots[s].competitor].policies[slots[s].policy], batch);
      for (std::size_t k = 0; k < fwd.size(); ++k) outputs[by_slot[s][k].first] = fwd[k];
    }
    for (const auto& a : world.agents()) {
      int m = 0;
      int k = 0;
      if (const auto it = outputs.find(a.id); it != outputs.end()) {
        m = sample(it->second.move_logits, sampler);
        k = sample(it->second.attack_logits, sampler);
      } else {
        m = static_cast<int>(sampler.uniform_int(kMoveCount));
        k = static_cast<int>(sampler.uniform_int(kAttackCount));
      }
      actions[a.id] = decode_action(m, k);
    }
    const auto events = world.step(actions);
    if (replay) write_replay_tick(*replay, events);
    for (const auto& s : events.spawns) ++out.stats[slots[static_cast<std::size_t>(s.population)].competitor].spawned;
    for (const auto& d : events.deaths) {
      out.stats[slots[static_cast<std::size_t>(d.population)].competitor].add_death(d.cause, d.lifetime);
    }
  }
  for (const auto& a : world.agents()) {
    auto& st = out.stats[slots[static_cast<std::size_t>(a.population)].competitor];
    ++st.censored;
    if (tc.include_censored) st.lifetimes.push_back(world.tick() - a.spawn_tick);
  }
  return out;
}

}  // namespace

std::vector<double> TournamentResult::seed_means(std::size_t competitor) const {
  std::vector<double> out;
  for (const auto& s : per_seed.at(competitor)) out.push_back(s.mean());
  return out;
}

TournamentResult evaluate(const Config& config, const std::vector<Competitor>& competitors,
                          const std::optional<std::filesystem::path>& replay_dir) {
  if (competitors.empty()) throw TournamentError("no competitors");
  const auto& tc = config.tournament;
  if (tc.seeds.empty()) throw TournamentError("no evaluation seeds");
  const auto shape = make_shape(config.neural, config.obs);
  std::vector<Slot> slots;
  for (std::size_t c = 0; c < competitors.size(); ++c) {
    const auto& comp = competitors[c];
    if (comp.random) {
      slots.push_back({c, 0});
      continue;
    }
    if (comp.policies.empty()) throw TournamentError("competitor '" + comp.name + "' has no policies");
    for (std::size_t p = 0; p < comp.policies.size(); ++p) {
      if (!(comp.policies[p].shape == shape)) {
        throw TournamentError("competitor '" + comp.name + "' does not match the configured network shape");
      }
      slots.push_back({c, p});
    }
  }

  if (replay_dir) std::filesystem::create_directories(*replay_dir);
  std::vector<SeedResult> per_seed(tc.seeds.size());
  const auto threads =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), tc.seeds.size());
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](std::size_t t) {
    try {
      for (std::size_t i = t; i < tc.seeds.size(); i += threads) {
        std::unique_ptr<std::ofstream> replay;
        if (replay_dir) {
          replay = std::make_unique<std::ofstream>(*replay_dir / ("replay_seed" + std::to_string(tc.seeds[i]) + ".ndjson"));
        }
        per_seed[i] = run_seed(config, competitors, slots, tc.seeds[i], replay.get());
      }
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  TournamentResult result;
  result.seeds = tc.seeds;
  result.ticks = tc.ticks;
  result.stats.resize(competitors.size());
  result.per_seed.resize(competitors.size());
  for (std::size_t c = 0; c < competitors.size(); ++c) {
    result.names.push_back(competitors[c].name);
    for (const auto& s : per_seed) {
      result.stats[c].merge(s.stats[c]);
      result.per_seed[c].push_back(s.stats[c]);
    }
  }
  return result;
}

TournamentResult run_tournament(const Config& config, const std::optional<std::filesystem::path>& replay_dir) {
  const auto& names = config.tournament.competitors;
  if (names.size() < 2) throw TournamentError("a tournament needs at least two competitors");
  const auto shape = make_shape(config.neural, config.obs);
  std::vector<Competitor> competitors;
  for (const auto& n : names) competitors.push_back(load_competitor(n, shape));
  return evaluate(config, competitors, replay_dir);
}

std::string format_table(const TournamentResult& result) {
  std::ostringstream out;
  out << std::left << std::setw(28) << "competitor" << std::right << std::setw(8) << "spawned" << std::setw(8)
      << "deaths" << std::setw(9) << "censored" << std::setw(10) << "mean" << std::setw(9) << "ci95" << std::setw(9)
      << "median" << std::setw(7) << "max";
  for (int c = 0; c < kDeathCauseCount; ++c) out << std::setw(12) << to_string(static_cast<DeathCause>(c));
  out << '\n' << std::fixed;
  for (std::size_t i = 0; i < result.names.size(); ++i) {
    const auto& s = result.stats[i];
    auto name = result.names[i];
    if (name.size() > 27) name = "..." + name.substr(name.size() - 24);
    out << std::left << std::setw(28) << name << std::right << std::setw(8) << s.spawned << std::setw(8) << s.deaths
        << std::setw(9) << s.censored << std::setw(10) << std::setprecision(2) << s.mean() << std::setw(9) << s.ci95()
        << std::setw(9) << std::setprecision(1) << s.median() << std::setw(7) << s.max();
    for (const auto n : s.causes) out << std::setw(12) << n;
    out << '\n';
  }
  return out.str();
}

void write_csv(const TournamentResult& result, std::ostream& out) {
  out << "competitor,seed,spawned,deaths,censored,mean_lifetime,ci95,median_lifetime,max_lifetime";
  for (int c = 0; c < kDeathCauseCount; ++c) out << ',' << to_string(static_cast<DeathCause>(c));
  out << '\n' << std::setprecision(17);
  const auto row = [&out](const std::string& name, const std::string& seed, const LifetimeStats& s) {
    out << name << ',' << seed << ',' << s.spawned << ',' << s.deaths << ',' << s.censored << ',' << s.mean() << ','
        << s.ci95() << ',' << s.median() << ',' << s.max();
    for (const auto n : s.causes) out << ',' << n;
    out << '\n';
  };
  for (std::size_t i = 0; i < result.names.size(); ++i) {
    row(result.names[i], "all", result.stats[i]);
    for (std::size_t k = 0; k < result.seeds.size(); ++k) {
      row(result.names[i], std::to_string(result.seeds[k]), result.per_seed[i][k]);
    }
  }
}

}  // namespace arena
