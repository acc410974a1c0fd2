#include "arena/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "arena/checkpoint.hpp"
#include "arena/replay.hpp"
#include "arena/worldgen.hpp"

namespace arena {

std::vector<double> compute_returns(std::span<const double> rewards, double gamma, double bootstrap, bool truncated) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  std::vector<double> out(rewards.size());
  double acc = truncated ? bootstrap : 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    out[i] = acc;
  }
  return out;
}

int assign_population(Rng& rng, int populations) {
  if (populations < 1) throw std::invalid_argument("population count must be at least 1");
  if (populations == 1) return 0;
  return static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(populations)));
}

int world_spawn_cap(const TrainingConfig& config, Rng& rng) {
  switch (config.cap_mode) {
    case CapMode::Fixed:
      return config.spawn_cap;
    case CapMode::Experiment:
      return config.agents_per_population * config.populations;
    case CapMode::Uniform:
      return 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(config.spawn_cap)));
  }
  return config.spawn_cap;
}

struct Trainer::WorldContext {
  int index = 0;
  World world;
  Rng sampler;
  std::map<AgentId, Trajectory> open;
  std::vector<Trajectory> finished;
  std::unique_ptr<std::ofstream> replay;

  WorldContext(int i, World w, Rng r) : index(i), world(std::move(w)), sampler(r) {}
};

namespace {

struct Pending {
  AgentId id;
  int population;
  EncodedObs obs;
};

// Observes every live agent and runs one batched forward pass per population.
std::vector<std::pair<Pending, ForwardOutput>> evaluate_live(const World& world, const Config& config,
                                                             const std::vector<PolicyParams>& params) {
  std::vector<Pending> pending;
  pending.reserve(world.live_count());
  for (const auto& a : world.agents()) {
    pending.push_back({a.id, a.population, encode(observe(world, a.id, config.obs), config.obs)});
  }
  std::vector<std::pair<Pending, ForwardOutput>> out(pending.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    std::vector<const EncodedObs*> batch;
    std::vector<std::size_t> where;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (pending[i].population == static_cast<int>(p)) {
        batch.push_back(&pending[i].obs);
        where.push_back(i);
      }
    }
    if (batch.empty()) continue;
    const auto fwd = forward_batch(params[p], batch);
    for (std::size_t k = 0; k < where.size(); ++k) out[where[k]].second = fwd[k];
  }
  for (std::size_t i = 0; i < pending.size(); ++i) out[i].first = std::move(pending[i]);
  return out;
}

}  // namespace

Trainer::Trainer(Config config, std::optional<std::filesystem::path> output_dir)
    : config_(std::move(config)), output_dir_(std::move(output_dir)), learner_rng_(config_.training.seed, 0x1ea7) {
  config_.validate();
  const auto& tc = config_.training;
  const auto shape = make_shape(config_.neural, config_.obs);

  Rng init_rng(config_.training.seed, 0x1417);
  for (int p = 0; p < tc.populations; ++p) {
    Rng r = init_rng.derive(static_cast<std::uint64_t>(p));
    params_.push_back(PolicyParams::initialize(shape, r, config_.neural.init_scale));
    adam_.push_back(AdamState::for_params(params_.back()));
  }
  completed_.assign(static_cast<std::size_t>(tc.populations), 0);
  buffers_.resize(static_cast<std::size_t>(tc.populations));

  if (output_dir_) std::filesystem::create_directories(*output_dir_);

  Rng cap_rng(tc.seed, 0xca9);
  std::optional<GameMap> shared;
  if (tc.fixed_map) shared = generate_map(config_.worldgen);
  const int npop = tc.populations;
  for (int i = 0; i < tc.worlds; ++i) {
    GameMap map;
    if (shared) {
      map = *shared;
    } else {
      auto wg = config_.worldgen;
      wg.seed = mix_seed(config_.worldgen.seed, static_cast<std::uint64_t>(i));
      map = generate_map(wg);
    }
    EngineConfig ec = config_.engine;
    ec.spawn_cap = world_spawn_cap(tc, cap_rng);
    const auto world_seed = mix_seed(tc.seed, static_cast<std::uint64_t>(i));
    World w(std::move(map), ec, world_seed, [npop](Rng& r) { return assign_population(r, npop); });
    auto ctx = std::make_unique<WorldContext>(i, std::move(w), Rng(world_seed, 1));
    const bool logged = std::find(tc.replay_worlds.begin(), tc.replay_worlds.end(), i) != tc.replay_worlds.end();
    if (output_dir_ && logged) {
      save_map(*output_dir_ / ("map_world" + std::to_string(i) + ".txt"), ctx->world.map());
      ctx->replay = std::make_unique<std::ofstream>(*output_dir_ / ("replay_world" + std::to_string(i) + ".ndjson"));
      write_replay_header(*ctx->replay, ctx->world.map());
    }
    worlds_.push_back(std::move(ctx));
  }
  if (output_dir_) {
    std::ofstream(*output_dir_ / "config.toml") << dump_config(config_);
    metrics_out_ = std::make_unique<std::ofstream>(*output_dir_ / "metrics.ndjson");
  }
}

Trainer::~Trainer() = default;

std::size_t Trainer::world_count() const { return worlds_.size(); }

const World& Trainer::world(std::size_t index) const { return worlds_.at(index)->world; }

bool Trainer::done() const {
  const auto& tc = config_.training;
  if (tc.max_updates > 0 && updates_ >= tc.max_updates) return true;
  return std::all_of(completed_.begin(), completed_.end(),
                     [&](std::int64_t c) { return c >= tc.trajectory_budget; });
}

void Trainer::rollout(WorldContext& ctx, const std::vector<PolicyParams>& snapshot) {
  World& world = ctx.world;
  for (int t = 0; t < config_.training.horizon; ++t) {
    auto live = evaluate_live(world, config_, snapshot);
    ActionMap actions;
    for (auto& [pending, out] : live) {
      const int m = sample(out.move_logits, ctx.sampler);
      const int a = sample(out.attack_logits, ctx.sampler);
      actions[pending.id] = decode_action(m, a);
      auto& traj = ctx.open[pending.id];
      if (traj.obs.empty()) {
        traj.population = pending.population;
        traj.world = ctx.index;
        traj.agent = pending.id;
      }
      traj.obs.push_back(std::move(pending.obs));
      traj.moves.push_back(m);
      traj.attacks.push_back(a);
      traj.values.push_back(out.value);
    }
    const auto events = world.step(actions);
    if (ctx.replay) write_replay_tick(*ctx.replay, events);
    for (const auto& r : events.rewards) ctx.open.at(r.agent).rewards.push_back(r.value);
    for (const auto& d : events.deaths) {
      auto node = ctx.open.extract(d.agent);
      auto& traj = node.mapped();
      traj.terminal = true;
      traj.lifetime = d.lifetime;
      ctx.finished.push_back(std::move(traj));
    }
  }
  // barrier: cut every surviving trajectory and bootstrap from its current value
  const auto live = evaluate_live(world, config_, snapshot);
  for (const auto& [pending, out] : live) {
    auto it = ctx.open.find(pending.id);
    if (it == ctx.open.end()) continue;  // spawned on the final tick, no experience yet
    it->second.truncated = true;
    it->second.bootstrap = out.value;
    ctx.finished.push_back(std::move(it->second));
  }
  ctx.open.clear();
  if (ctx.replay) ctx.replay->flush();
}

LossTerms Trainer::learn(int population, const std::vector<Trajectory>& buffer) {
  const auto& tc = config_.training;
  std::vector<Sample> samples;
  for (const auto& traj : buffer) {
    if (traj.population != population) throw TrainingError("trajectory routed to the wrong population");
    const auto ret = compute_returns(traj.rewards, tc.gamma, traj.bootstrap, traj.truncated);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      samples.push_back({&traj.obs[i], traj.moves[i], traj.attacks[i], ret[i], ret[i] - traj.values[i],
                         config_.engine.combat.enabled});
    }
  }
  LossTerms mean;
  if (samples.empty()) return mean;
  if (tc.normalize_advantage && samples.size() > 1) {
    double mu = 0.0;
    for (const auto& s : samples) mu += s.advantage;
    mu /= static_cast<double>(samples.size());
    double var = 0.0;
    for (const auto& s : samples) var += (s.advantage - mu) * (s.advantage - mu);
    const double sd = std::sqrt(var / static_cast<double>(samples.size())) + 1e-8;
    for (auto& s : samples) s.advantage = (s.advantage - mu) / sd;
  }

  const LossCoefficients coef{config_.neural.value_coef, config_.neural.entropy_coef};
  const std::size_t mb = tc.minibatch > 0 ? static_cast<std::size_t>(tc.minibatch) : samples.size();
  auto& params = params_[static_cast<std::size_t>(population)];
  auto grad = PolicyParams::zeros(params.shape);
  double weight = 0.0;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    if (mb < samples.size()) learner_rng_.shuffle(std::span<Sample>(samples));
    for (std::size_t start = 0; start < samples.size(); start += mb) {
      const auto batch = std::span<const Sample>(samples).subspan(start, std::min(mb, samples.size() - start));
      LossTerms terms;
      try {
        terms = backward(params, batch, coef, grad);
      } catch (const NonFiniteLossError& e) {
        if (output_dir_) {
          const auto path = *output_dir_ / ("pop" + std::to_string(population) + "_diagnostic.ckpt");
          save_checkpoint(path, params, {static_cast<std::uint32_t>(population), static_cast<std::uint64_t>(updates_)});
          spdlog::error("diagnostic checkpoint written to {}", path.string());
        }
        throw TrainingError(std::string("update ") + std::to_string(updates_ + 1) + ", population " +
                            std::to_string(population) + ": " + e.what());
      }
      adam_step(adam_[static_cast<std::size_t>(population)], params, grad, config_.neural);
      const double w = static_cast<double>(batch.size());
      mean.policy += w * terms.policy;
      mean.value += w * terms.value;
      mean.entropy += w * terms.entropy;
      mean.total += w * terms.total;
      weight += w;
    }
  }
  mean.policy /= weight;
  mean.value /= weight;
  mean.entropy /= weight;
  mean.total /= weight;
  return mean;
}

UpdateMetrics Trainer::update() {
  const std::vector<PolicyParams> snapshot = params_;

  int threads = config_.training.threads;
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min<int>(threads, static_cast<int>(worlds_.size()));
  if (threads <= 1) {
    for (auto& ctx : worlds_) rollout(*ctx, snapshot);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = static_cast<std::size_t>(t); i < worlds_.size(); i += static_cast<std::size_t>(threads)) {
            rollout(*worlds_[i], snapshot);
          }
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  // merge in world order so the buffers do not depend on thread scheduling
  for (auto& b : buffers_) b.clear();
  for (auto& ctx : worlds_) {
    for (auto& traj : ctx->finished) buffers_[static_cast<std::size_t>(traj.population)].push_back(std::move(traj));
    ctx->finished.clear();
  }

  UpdateMetrics m;
  m.update = ++updates_;
  m.tick = worlds_.empty() ? 0 : worlds_.front()->world.tick();
  for (const auto& ctx : worlds_) m.live_agents += ctx->world.live_count();
  for (int p = 0; p < populations(); ++p) {
    const auto& buffer = buffers_[static_cast<std::size_t>(p)];
    PopulationMetrics pm;
    pm.population = p;
    double lifetime_sum = 0.0;
    for (const auto& traj : buffer) {
      pm.samples += traj.size();
      if (traj.terminal) {
        ++pm.deaths;
        lifetime_sum += static_cast<double>(traj.lifetime);
      } else {
        ++pm.truncated;
      }
    }
    if (pm.deaths > 0) pm.mean_lifetime = lifetime_sum / static_cast<double>(pm.deaths);
    pm.loss = learn(p, buffer);
    completed_[static_cast<std::size_t>(p)] += static_cast<std::int64_t>(pm.deaths);
    m.populations.push_back(pm);
  }

  write_metrics(m);
  const int every = config_.training.checkpoint_every;
  if (output_dir_ && every > 0 && updates_ % every == 0) write_checkpoints("update" + std::to_string(updates_));
  return m;
}

void Trainer::write_checkpoints(const std::string& tag) const {
  for (int p = 0; p < populations(); ++p) {
    save_checkpoint(*output_dir_ / ("pop" + std::to_string(p) + "_" + tag + ".ckpt"), params(p),
                    {static_cast<std::uint32_t>(p), static_cast<std::uint64_t>(updates_)});
  }
}

void Trainer::write_metrics(const UpdateMetrics& m) {
  if (!metrics_out_) return;
  *metrics_out_ << metrics_to_json(m) << '\n';
  metrics_out_->flush();
}

void Trainer::finish() {
  if (output_dir_) write_checkpoints("final");
  for (auto& ctx : worlds_) {
    if (ctx->replay) ctx->replay->flush();
  }
}

std::string metrics_to_json(const UpdateMetrics& m) {
  nlohmann::ordered_json j;
  j["update"] = m.update;
  j["tick"] = m.tick;
  j["live"] = m.live_agents;
  auto pops = nlohmann::ordered_json::array();
  for (const auto& p : m.populations) {
    nlohmann::ordered_json r;
    r["pop"] = p.population;
    r["samples"] = p.samples;
    r["deaths"] = p.deaths;
    r["truncated"] = p.truncated;
    r["mean_lifetime"] = p.mean_lifetime ? nlohmann::ordered_json(*p.mean_lifetime) : nlohmann::ordered_json();
    r["policy_loss"] = p.loss.policy;
    r["value_loss"] = p.loss.value;
    r["entropy"] = p.loss.entropy;
    r["total_loss"] = p.loss.total;
    pops.push_back(std::move(r));
  }
  j["populations"] = std::move(pops);
  return j.dump();
}

TrainResult train(const Config& config, std::optional<std::filesystem::path> output_dir) {
  Trainer trainer(config, std::move(output_dir));
  TrainResult result;
  while (!trainer.done()) {
    result.metrics.push_back(trainer.update());
    const auto& m = result.metrics.back();
    for (const auto& p : m.populations) {
      spdlog::info("update {} pop {}: samples {} deaths {} mean lifetime {:.2f} loss {:.4f} entropy {:.4f}", m.update,
                   p.population, p.samples, p.deaths, p.mean_lifetime.value_or(0.0), p.loss.total, p.loss.entropy);
    }
  }
  trainer.finish();
  for (int p = 0; p < trainer.populations(); ++p) result.params.push_back(trainer.params(p));
  return result;
}

}  // namespace arena
