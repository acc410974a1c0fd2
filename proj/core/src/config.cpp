#include "arena/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace arena {
namespace {

struct Value {
  enum class Kind { Int, Real, Bool, String, List } kind = Kind::Int;
  std::int64_t integer = 0;
  double real = 0.0;
  bool boolean = false;
  std::string text;
  std::vector<Value> list;
};

struct Context {
  const std::string& key;
  int line;

  [[noreturn]] void fail(const std::string& message) const {
    throw ConfigError(key, line, message);
  }
};

struct Field {
  std::string key;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const Value&, const Context&)> set;
};

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, end);
  // Keep reals visibly real so they never reparse as integers.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

template <typename T>
using Accessor = std::function<T&(Config&)>;

template <typename T>
T& access(const Accessor<T>& acc, const Config& c) {
  return acc(const_cast<Config&>(c));
}

std::int64_t expect_int(const Value& v, const Context& ctx) {
  if (v.kind != Value::Kind::Int) ctx.fail("expected an integer");
  return v.integer;
}

double expect_real(const Value& v, const Context& ctx) {
  if (v.kind == Value::Kind::Int) return static_cast<double>(v.integer);
  if (v.kind != Value::Kind::Real) ctx.fail("expected a number");
  return v.real;
}

const std::string& expect_string(const Value& v, const Context& ctx) {
  if (v.kind != Value::Kind::String) ctx.fail("expected a quoted string");
  return v.text;
}

Field int_field(std::string key, Accessor<int> acc, std::int64_t lo,
                std::int64_t hi = std::numeric_limits<int>::max()) {
  return {std::move(key), [acc](const Config& c) { return std::to_string(access(acc, c)); },
          [acc, lo, hi](Config& c, const Value& v, const Context& ctx) {
            const auto x = expect_int(v, ctx);
            if (x < lo || x > hi) {
              ctx.fail("value " + std::to_string(x) + " out of range [" + std::to_string(lo) +
                       ", " + std::to_string(hi) + "]");
            }
            acc(c) = static_cast<int>(x);
          }};
}

Field i64_field(std::string key, Accessor<std::int64_t> acc, std::int64_t lo) {
  return {std::move(key), [acc](const Config& c) { return std::to_string(access(acc, c)); },
          [acc, lo](Config& c, const Value& v, const Context& ctx) {
            const auto x = expect_int(v, ctx);
            if (x < lo) ctx.fail("value " + std::to_string(x) + " below minimum " + std::to_string(lo));
            acc(c) = x;
          }};
}

Field seed_field(std::string key, Accessor<std::uint64_t> acc) {
  return {std::move(key), [acc](const Config& c) { return std::to_string(access(acc, c)); },
          [acc](Config& c, const Value& v, const Context& ctx) {
            const auto x = expect_int(v, ctx);
            if (x < 0) ctx.fail("seed must be non-negative");
            acc(c) = static_cast<std::uint64_t>(x);
          }};
}

enum class Bound { Closed, Open };

Field real_field(std::string key, Accessor<double> acc, double lo, double hi,
                 Bound lo_bound = Bound::Closed, Bound hi_bound = Bound::Closed) {
  return {std::move(key), [acc](const Config& c) { return format_real(access(acc, c)); },
          [=](Config& c, const Value& v, const Context& ctx) {
            const double x = expect_real(v, ctx);
            const bool below = lo_bound == Bound::Closed ? x < lo : x <= lo;
            const bool above = hi_bound == Bound::Closed ? x > hi : x >= hi;
            if (!std::isfinite(x) || below || above) {
              ctx.fail("value " + format_real(x) + " out of range " +
                       (lo_bound == Bound::Closed ? "[" : "(") + format_real(lo) + ", " +
                       format_real(hi) + (hi_bound == Bound::Closed ? "]" : ")"));
            }
            acc(c) = x;
          }};
}

Field bool_field(std::string key, Accessor<bool> acc) {
  return {std::move(key), [acc](const Config& c) { return access(acc, c) ? "true" : "false"; },
          [acc](Config& c, const Value& v, const Context& ctx) {
            if (v.kind != Value::Kind::Bool) ctx.fail("expected true or false");
            acc(c) = v.boolean;
          }};
}

Field string_field(std::string key, Accessor<std::string> acc) {
  return {std::move(key), [acc](const Config& c) { return quote(access(acc, c)); },
          [acc](Config& c, const Value& v, const Context& ctx) { acc(c) = expect_string(v, ctx); }};
}

Field string_list_field(std::string key, Accessor<std::vector<std::string>> acc) {
  return {std::move(key),
          [acc](const Config& c) {
            std::string out = "[";
            const auto& xs = access(acc, c);
            for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + quote(xs[i]);
            return out + "]";
          },
          [acc](Config& c, const Value& v, const Context& ctx) {
            if (v.kind != Value::Kind::List) ctx.fail("expected a list of strings");
            std::vector<std::string> xs;
            for (const auto& item : v.list) xs.push_back(expect_string(item, ctx));
            acc(c) = std::move(xs);
          }};
}

Field int_list_field(std::string key, Accessor<std::vector<std::int64_t>> acc, std::int64_t lo) {
  return {std::move(key),
          [acc](const Config& c) {
            std::string out = "[";
            const auto& xs = access(acc, c);
            for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + std::to_string(xs[i]);
            return out + "]";
          },
          [acc, lo](Config& c, const Value& v, const Context& ctx) {
            if (v.kind != Value::Kind::List) ctx.fail("expected a list of integers");
            std::vector<std::int64_t> xs;
            for (const auto& item : v.list) {
              const auto x = expect_int(item, ctx);
              if (x < lo) ctx.fail("list entry " + std::to_string(x) + " below minimum " + std::to_string(lo));
              xs.push_back(x);
            }
            acc(c) = std::move(xs);
          }};
}

Field activation_field() {
  return {"neural.activation",
          [](const Config& c) { return quote(to_string(c.neural.activation)); },
          [](Config& c, const Value& v, const Context& ctx) {
            const auto& s = expect_string(v, ctx);
            if (s == "identity") c.neural.activation = Activation::Identity;
            else if (s == "relu") c.neural.activation = Activation::Relu;
            else if (s == "tanh") c.neural.activation = Activation::Tanh;
            else ctx.fail("unknown activation '" + s + "' (identity, relu, tanh)");
          }};
}

Field cap_mode_field() {
  return {"training.cap_mode",
          [](const Config& c) { return quote(to_string(c.training.cap_mode)); },
          [](Config& c, const Value& v, const Context& ctx) {
            const auto& s = expect_string(v, ctx);
            if (s == "fixed") c.training.cap_mode = CapMode::Fixed;
            else if (s == "experiment") c.training.cap_mode = CapMode::Experiment;
            else if (s == "uniform") c.training.cap_mode = CapMode::Uniform;
            else ctx.fail("unknown cap mode '" + s + "' (fixed, experiment, uniform)");
          }};
}

// Threshold bands are written as "kind:upper", e.g. "water:0.3".
Field thresholds_field() {
  return {"worldgen.thresholds",
          [](const Config& c) {
            std::string out = "[";
            const auto& ts = c.worldgen.fractal.thresholds;
            for (std::size_t i = 0; i < ts.size(); ++i) {
              out += (i ? ", " : "") + quote(std::string(to_string(ts[i].kind)) + ":" + format_real(ts[i].upper));
            }
            return out + "]";
          },
          [](Config& c, const Value& v, const Context& ctx) {
            if (v.kind != Value::Kind::List) ctx.fail("expected a list of \"kind:upper\" strings");
            std::vector<Threshold> ts;
            for (const auto& item : v.list) {
              const auto& s = expect_string(item, ctx);
              const auto colon = s.find(':');
              if (colon == std::string::npos) ctx.fail("threshold '" + s + "' is not kind:upper");
              Threshold t;
              try {
                t.kind = tile_from_name(s.substr(0, colon));
                std::size_t used = 0;
                t.upper = std::stod(s.substr(colon + 1), &used);
                if (used != s.size() - colon - 1) throw std::invalid_argument("trailing text");
              } catch (const std::exception&) {
                ctx.fail("threshold '" + s + "' is not kind:upper");
              }
              ts.push_back(t);
            }
            FractalParams probe;
            probe.thresholds = ts;
            try {
              probe.validate();
            } catch (const ConfigurationError& e) {
              ctx.fail(e.what());
            }
            c.worldgen.fractal.thresholds = std::move(ts);
          }};
}

#define ARENA_ACC(T, member) Accessor<T>([](Config& c) -> T& { return c.member; })

const std::vector<Field>& fields() {
  constexpr auto kOpen = Bound::Open;
  constexpr auto kClosed = Bound::Closed;
  static const std::vector<Field> table = {
      int_field("worldgen.size", ARENA_ACC(int, worldgen.size), 16, 4096),
      seed_field("worldgen.seed", ARENA_ACC(std::uint64_t, worldgen.seed)),
      int_field("worldgen.max_retries", ARENA_ACC(int, worldgen.max_retries), 1, 10000),
      int_field("worldgen.octaves", ARENA_ACC(int, worldgen.fractal.octaves), 1, 24),
      real_field("worldgen.base_frequency", ARENA_ACC(double, worldgen.fractal.base_frequency), 0.0, 1.0, kOpen),
      real_field("worldgen.lacunarity", ARENA_ACC(double, worldgen.fractal.lacunarity), 0.0, 16.0, kOpen),
      real_field("worldgen.persistence", ARENA_ACC(double, worldgen.fractal.persistence), 0.0, 4.0, kOpen),
      thresholds_field(),

      int_field("tiles.forest_food", ARENA_ACC(int, engine.forest_food), 0),
      int_field("tiles.water_gain", ARENA_ACC(int, engine.water_gain), 0),
      real_field("tiles.scrub_regen_probability", ARENA_ACC(double, engine.scrub_regen_probability), 0.0, 1.0),

      int_field("agent.max_health", ARENA_ACC(int, engine.max_health), 1),
      int_field("agent.max_food", ARENA_ACC(int, engine.max_food), 1),
      int_field("agent.max_water", ARENA_ACC(int, engine.max_water), 1),

      int_field("foraging.food_decay", ARENA_ACC(int, engine.food_decay), 0),
      int_field("foraging.water_decay", ARENA_ACC(int, engine.water_decay), 0),
      int_field("foraging.starvation_damage", ARENA_ACC(int, engine.starvation_damage), 0),
      int_field("foraging.dehydration_damage", ARENA_ACC(int, engine.dehydration_damage), 0),
      int_field("foraging.regen_food_above", ARENA_ACC(int, engine.regen_food_above), 0),
      int_field("foraging.regen_water_above", ARENA_ACC(int, engine.regen_water_above), 0),
      int_field("foraging.health_regen", ARENA_ACC(int, engine.health_regen), 0),

      int_field("spawn.cap", ARENA_ACC(int, engine.spawn_cap), 1),

      bool_field("combat.enabled", ARENA_ACC(bool, engine.combat.enabled)),
      int_field("combat.melee_damage", ARENA_ACC(int, engine.combat.melee.damage), 0),
      int_field("combat.melee_range", ARENA_ACC(int, engine.combat.melee.range), 0, 64),
      int_field("combat.ranged_damage", ARENA_ACC(int, engine.combat.range.damage), 0),
      int_field("combat.ranged_range", ARENA_ACC(int, engine.combat.range.range), 0, 64),
      int_field("combat.mage_damage", ARENA_ACC(int, engine.combat.mage.damage), 0),
      int_field("combat.mage_range", ARENA_ACC(int, engine.combat.mage.range), 0, 64),
      int_field("combat.mage_freeze_ticks", ARENA_ACC(int, engine.combat.mage.freeze_ticks), 0, 1000),
      int_field("combat.immunity_ticks", ARENA_ACC(int, engine.combat.immunity_ticks), 0),
      bool_field("combat.friendly_fire", ARENA_ACC(bool, engine.combat.friendly_fire)),

      int_field("obs.crop_radius", ARENA_ACC(int, obs.crop_radius), 1, 64),
      real_field("obs.lifetime_scale", ARENA_ACC(double, obs.lifetime_scale), 0.0, 1e12, kOpen),
      real_field("obs.damage_scale", ARENA_ACC(double, obs.damage_scale), 0.0, 1e12, kOpen),
      int_field("obs.count_scale", ARENA_ACC(int, obs.count_scale), 1),

      int_field("neural.embed_dim", ARENA_ACC(int, neural.embed_dim), 1, 4096),
      int_field("neural.entity_dim", ARENA_ACC(int, neural.entity_dim), 1, 4096),
      int_field("neural.hidden", ARENA_ACC(int, neural.hidden), 1, 65536),
      activation_field(),
      real_field("neural.init_scale", ARENA_ACC(double, neural.init_scale), 0.0, 1e6),
      real_field("neural.value_coef", ARENA_ACC(double, neural.value_coef), 0.0, 1e6),
      real_field("neural.entropy_coef", ARENA_ACC(double, neural.entropy_coef), 0.0, 1e6),
      real_field("neural.learning_rate", ARENA_ACC(double, neural.learning_rate), 0.0, 10.0, kOpen),
      real_field("neural.beta1", ARENA_ACC(double, neural.beta1), 0.0, 1.0, kClosed, kOpen),
      real_field("neural.beta2", ARENA_ACC(double, neural.beta2), 0.0, 1.0, kClosed, kOpen),
      real_field("neural.epsilon", ARENA_ACC(double, neural.epsilon), 0.0, 1.0, kOpen),
      real_field("neural.weight_decay", ARENA_ACC(double, neural.weight_decay), 0.0, 1.0),

      int_field("training.worlds", ARENA_ACC(int, training.worlds), 1, 100000),
      int_field("training.populations", ARENA_ACC(int, training.populations), 1, 4096),
      cap_mode_field(),
      int_field("training.spawn_cap", ARENA_ACC(int, training.spawn_cap), 1),
      int_field("training.agents_per_population", ARENA_ACC(int, training.agents_per_population), 1),
      real_field("training.gamma", ARENA_ACC(double, training.gamma), 0.0, 1.0, kOpen, kOpen),
      int_field("training.horizon", ARENA_ACC(int, training.horizon), 1),
      i64_field("training.trajectory_budget", ARENA_ACC(std::int64_t, training.trajectory_budget), 1),
      int_field("training.max_updates", ARENA_ACC(int, training.max_updates), 0),
      int_field("training.epochs", ARENA_ACC(int, training.epochs), 1, 1000),
      int_field("training.minibatch", ARENA_ACC(int, training.minibatch), 0),
      bool_field("training.normalize_advantage", ARENA_ACC(bool, training.normalize_advantage)),
      seed_field("training.seed", ARENA_ACC(std::uint64_t, training.seed)),
      bool_field("training.fixed_map", ARENA_ACC(bool, training.fixed_map)),
      string_field("training.output_dir", ARENA_ACC(std::string, training.output_dir)),
      int_field("training.checkpoint_every", ARENA_ACC(int, training.checkpoint_every), 0),
      int_list_field("training.replay_worlds", ARENA_ACC(std::vector<std::int64_t>, training.replay_worlds), 0),
      int_field("training.threads", ARENA_ACC(int, training.threads), 0, 1024),

      string_list_field("tournament.competitors", ARENA_ACC(std::vector<std::string>, tournament.competitors)),
      int_field("tournament.spawn_cap", ARENA_ACC(int, tournament.spawn_cap), 1),
      int_field("tournament.ticks", ARENA_ACC(int, tournament.ticks), 1),
      int_list_field("tournament.seeds", ARENA_ACC(std::vector<std::int64_t>, tournament.seeds), 0),
      bool_field("tournament.combat", ARENA_ACC(bool, tournament.combat)),
      bool_field("tournament.fixed_map", ARENA_ACC(bool, tournament.fixed_map)),
      bool_field("tournament.include_censored", ARENA_ACC(bool, tournament.include_censored)),
      string_field("tournament.output", ARENA_ACC(std::string, tournament.output)),

      int_field("analysis.probe_age", ARENA_ACC(int, analysis.probe_age), 0),
      int_field("analysis.probe_health", ARENA_ACC(int, analysis.probe_health), 0),
      int_field("analysis.probe_food", ARENA_ACC(int, analysis.probe_food), 0),
      int_field("analysis.probe_water", ARENA_ACC(int, analysis.probe_water), 0),
      int_field("analysis.image_scale", ARENA_ACC(int, analysis.image_scale), 1, 256),
  };
  return table;
}

#undef ARENA_ACC

const Field* find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class ValueParser {
public:
  ValueParser(std::string_view text, const Context& ctx) : text_(text), ctx_(ctx) {}

  Value parse() {
    Value v = parse_value();
    skip_ws();
    if (pos_ != text_.size()) ctx_.fail("unexpected trailing text '" + std::string(text_.substr(pos_)) + "'");
    return v;
  }

private:
  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  Value parse_value() {
    skip_ws();
    if (pos_ >= text_.size()) ctx_.fail("missing value");
    const char c = text_[pos_];
    if (c == '"') return parse_string();
    if (c == '[') return parse_list();
    return parse_scalar();
  }

  Value parse_string() {
    Value v;
    v.kind = Value::Kind::String;
    ++pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
      v.text += text_[pos_++];
    }
    if (pos_ >= text_.size()) ctx_.fail("unterminated string");
    ++pos_;
    return v;
  }

  Value parse_list() {
    Value v;
    v.kind = Value::Kind::List;
    ++pos_;
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return v;
    }
    while (true) {
      v.list.push_back(parse_value());
      skip_ws();
      if (pos_ >= text_.size()) ctx_.fail("unterminated list");
      if (text_[pos_] == ']') {
        ++pos_;
        return v;
      }
      if (text_[pos_] != ',') ctx_.fail("expected ',' or ']' in list");
      ++pos_;
    }
  }

  Value parse_scalar() {
    const auto start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' && text_[pos_] != ' ' &&
           text_[pos_] != '\t') {
      ++pos_;
    }
    const std::string_view tok = text_.substr(start, pos_ - start);
    Value v;
    if (tok == "true" || tok == "false") {
      v.kind = Value::Kind::Bool;
      v.boolean = tok == "true";
      return v;
    }
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    if (tok.find_first_of(".eE") == std::string_view::npos) {
      auto [p, ec] = std::from_chars(b, e, v.integer);
      if (ec == std::errc() && p == e) {
        v.kind = Value::Kind::Int;
        return v;
      }
    }
    auto [p, ec] = std::from_chars(b, e, v.real);
    if (ec == std::errc() && p == e) {
      v.kind = Value::Kind::Real;
      return v;
    }
    ctx_.fail("cannot parse value '" + std::string(tok) + "'");
  }

  std::string_view text_;
  const Context& ctx_;
  std::size_t pos_ = 0;
};

// Strips a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && in_string) {
      ++i;
    } else if (line[i] == '"') {
      in_string = !in_string;
    } else if (line[i] == '#' && !in_string) {
      return line.substr(0, i);
    }
  }
  return line;
}

}  // namespace

const char* to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

const char* to_string(CapMode m) {
  switch (m) {
    case CapMode::Fixed: return "fixed";
    case CapMode::Experiment: return "experiment";
    case CapMode::Uniform: return "uniform";
  }
  return "?";
}

ConfigError::ConfigError(std::string key, int line, const std::string& message)
    : std::runtime_error((key.empty() ? std::string("config") : key) +
                         (line > 0 ? " (line " + std::to_string(line) + ")" : std::string()) + ": " + message),
      key_(std::move(key)),
      line_(line) {}

void Config::validate() const {
  try {
    worldgen.fractal.validate();
  } catch (const ConfigurationError& e) {
    throw ConfigError("worldgen", 0, e.what());
  }
  if (training.trajectory_budget < 1) throw ConfigError("training.trajectory_budget", 0, "must be positive");
  for (auto w : training.replay_worlds) {
    if (w >= training.worlds) throw ConfigError("training.replay_worlds", 0, "world index out of range");
  }
  if (analysis.probe_health > engine.max_health) {
    throw ConfigError("analysis.probe_health", 0, "exceeds agent.max_health");
  }
}

void Config::override_seeds(std::uint64_t seed) {
  worldgen.seed = seed;
  training.seed = seed;
  for (std::size_t i = 0; i < tournament.seeds.size(); ++i) {
    tournament.seeds[i] = static_cast<std::int64_t>(seed + i);
  }
}

Config parse_config_string(std::string_view text) {
  Config config;
  std::string section;
  std::vector<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(std::string(line), line_no, "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ConfigError("", line_no, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(std::string(line), line_no, "expected key = value");
    const auto name = trim(line.substr(0, eq));
    if (name.empty()) throw ConfigError("", line_no, "missing key");
    const std::string key = section.empty() ? std::string(name) : section + "." + std::string(name);
    const Context ctx{key, line_no};
    const Field* field = find_field(key);
    if (field == nullptr) ctx.fail("unknown key");
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) ctx.fail("duplicate key");
    seen.push_back(key);
    field->set(config, ValueParser(line.substr(eq + 1), ctx).parse(), ctx);
  }
  config.validate();
  return config;
}

Config parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot open config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_string(buffer.str());
}

std::string dump_config(const Config& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    const auto dot = f.key.find('.');
    const auto sec = f.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += '\n';
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += f.key.substr(dot + 1) + " = " + f.get(config) + "\n";
  }
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

std::optional<std::string> config_value(const Config& config, std::string_view key) {
  const Field* f = find_field(key);
  if (f == nullptr) return std::nullopt;
  return f->get(config);
}

}  // namespace arena
