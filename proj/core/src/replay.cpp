#include "arena/replay.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace arena {

using ordered_json = nlohmann::ordered_json;

const char* to_string(RecordType t) {
  switch (t) {
    case RecordType::Header: return "header";
    case RecordType::Spawn: return "spawn";
    case RecordType::Move: return "move";
    case RecordType::Harvest: return "harvest";
    case RecordType::Attack: return "attack";
    case RecordType::Death: return "death";
    case RecordType::Regen: return "regen";
    case RecordType::Tick: return "tick";
  }
  return "?";
}

ReplayFormatError::ReplayFormatError(std::size_t line, const std::string& message)
    : std::runtime_error("replay line " + std::to_string(line) + ": " + message), line_(line) {}

namespace {

void emit(std::ostream& out, const ordered_json& j) { out << j.dump() << '\n'; }

ordered_json record(const char* ev, std::int64_t tick) {
  ordered_json j;
  j["t"] = tick;
  j["ev"] = ev;
  return j;
}

}  // namespace

void write_replay_header(std::ostream& out, const GameMap& map) {
  ordered_json j;
  j["ev"] = "header";
  j["width"] = map.width();
  j["height"] = map.height();
  j["seed"] = map.seed();
  emit(out, j);
}

void write_replay_tick(std::ostream& out, const TickEvents& events) {
  const auto t = events.tick;
  for (const auto& s : events.spawns) {
    auto j = record("spawn", t);
    j["agent"] = s.agent;
    j["pop"] = s.population;
    j["r"] = s.pos.row;
    j["c"] = s.pos.col;
    emit(out, j);
  }
  for (const auto& m : events.moves) {
    auto j = record("move", t);
    j["agent"] = m.agent;
    j["r"] = m.to.row;
    j["c"] = m.to.col;
    emit(out, j);
  }
  for (const auto& h : events.harvests) {
    auto j = record("harvest", t);
    j["agent"] = h.agent;
    j["r"] = h.pos.row;
    j["c"] = h.pos.col;
    j["food"] = h.food;
    j["water"] = h.water;
    j["forest"] = h.consumed_forest;
    emit(out, j);
  }
  for (const auto& a : events.attacks) {
    auto j = record("attack", t);
    j["agent"] = a.attacker;
    j["target"] = a.target;
    j["style"] = to_string(a.style);
    j["dmg"] = a.damage;
    j["food"] = a.stolen_food;
    j["water"] = a.stolen_water;
    j["r"] = a.attacker_pos.row;
    j["c"] = a.attacker_pos.col;
    j["tr"] = a.target_pos.row;
    j["tc"] = a.target_pos.col;
    j["pop"] = a.attacker_population;
    j["tpop"] = a.target_population;
    emit(out, j);
  }
  for (const auto& d : events.deaths) {
    auto j = record("death", t);
    j["agent"] = d.agent;
    j["pop"] = d.population;
    j["cause"] = to_string(d.cause);
    j["age"] = d.age;
    j["lifetime"] = d.lifetime;
    j["r"] = d.pos.row;
    j["c"] = d.pos.col;
    emit(out, j);
  }
  for (const auto& p : events.regenerated) {
    auto j = record("regen", t);
    j["r"] = p.row;
    j["c"] = p.col;
    emit(out, j);
  }
  auto j = record("tick", t);
  j["alive"] = events.alive_after;
  emit(out, j);
}

ReplayRecord parse_replay_line(const std::string& line, std::size_t line_no) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ReplayFormatError(line_no, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("ev")) throw ReplayFormatError(line_no, "record without \"ev\"");

  ReplayRecord r;
  try {
    const auto ev = j.at("ev").get<std::string>();
    auto pos = [&](const char* rk, const char* ck) { return Position{j.at(rk).get<int>(), j.at(ck).get<int>()}; };
    if (ev == "header") {
      r.type = RecordType::Header;
      r.width = j.at("width").get<int>();
      r.height = j.at("height").get<int>();
      r.seed = j.at("seed").get<std::uint64_t>();
      return r;
    }
    r.tick = j.at("t").get<std::int64_t>();
    if (ev == "spawn") {
      r.type = RecordType::Spawn;
      r.agent = j.at("agent").get<AgentId>();
      r.population = j.at("pop").get<int>();
      r.pos = pos("r", "c");
    } else if (ev == "move") {
      r.type = RecordType::Move;
      r.agent = j.at("agent").get<AgentId>();
      r.pos = pos("r", "c");
    } else if (ev == "harvest") {
      r.type = RecordType::Harvest;
      r.agent = j.at("agent").get<AgentId>();
      r.pos = pos("r", "c");
      r.food = j.at("food").get<int>();
      r.water = j.at("water").get<int>();
      r.forest = j.at("forest").get<bool>();
    } else if (ev == "attack") {
      r.type = RecordType::Attack;
      r.agent = j.at("agent").get<AgentId>();
      r.target = j.at("target").get<AgentId>();
      r.style = attack_style_from_name(j.at("style").get<std::string>());
      r.damage = j.at("dmg").get<int>();
      r.food = j.at("food").get<int>();
      r.water = j.at("water").get<int>();
      r.pos = pos("r", "c");
      r.target_pos = pos("tr", "tc");
      r.population = j.at("pop").get<int>();
      r.target_population = j.at("tpop").get<int>();
    } else if (ev == "death") {
      r.type = RecordType::Death;
      r.agent = j.at("agent").get<AgentId>();
      r.population = j.at("pop").get<int>();
      r.cause = death_cause_from_name(j.at("cause").get<std::string>());
      r.age = j.at("age").get<int>();
      r.lifetime = j.at("lifetime").get<std::int64_t>();
      r.pos = pos("r", "c");
    } else if (ev == "regen") {
      r.type = RecordType::Regen;
      r.pos = pos("r", "c");
    } else if (ev == "tick") {
      r.type = RecordType::Tick;
      r.alive = j.at("alive").get<std::int64_t>();
    } else {
      throw ReplayFormatError(line_no, "unknown record type '" + ev + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ReplayFormatError(line_no, std::string("bad field: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ReplayFormatError(line_no, e.what());
  }
  return r;
}

std::vector<ReplayRecord> read_replay(std::istream& in) {
  std::vector<ReplayRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    records.push_back(parse_replay_line(line, line_no));
  }
  return records;
}

std::vector<ReplayRecord> load_replay(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open replay '" + path + "'");
  return read_replay(in);
}

}  // namespace arena
