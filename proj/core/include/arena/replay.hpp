#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "arena/engine.hpp"

namespace arena {

/// Newline-delimited JSON, one object per record. Every record carries "ev";
/// all but the header carry the tick "t". Field order is fixed, so a replay of
/// the same (map, seed, action stream) is byte-identical. See
/// docs/replay_format.md for the field-by-field layout.
enum class RecordType : std::uint8_t { Header, Spawn, Move, Harvest, Attack, Death, Regen, Tick };

const char* to_string(RecordType t);

struct ReplayRecord {
  RecordType type = RecordType::Tick;
  std::int64_t tick = 0;
  AgentId agent = 0;
  AgentId target = 0;
  int population = 0;
  int target_population = 0;
  Position pos;
  Position target_pos;
  AttackStyle style = AttackStyle::Melee;
  int damage = 0;
  int food = 0;
  int water = 0;
  bool forest = false;
  DeathCause cause = DeathCause::Starvation;
  int age = 0;
  std::int64_t lifetime = 0;
  std::int64_t alive = 0;
  // header only
  int width = 0;
  int height = 0;
  std::uint64_t seed = 0;
};

class ReplayFormatError : public std::runtime_error {
public:
  ReplayFormatError(std::size_t line, const std::string& message);
  [[nodiscard]] std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

void write_replay_header(std::ostream& out, const GameMap& map);
void write_replay_tick(std::ostream& out, const TickEvents& events);

ReplayRecord parse_replay_line(const std::string& line, std::size_t line_no);

/// Reads every record; throws ReplayFormatError naming the 1-based line.
std::vector<ReplayRecord> read_replay(std::istream& in);
std::vector<ReplayRecord> load_replay(const std::string& path);

}  // namespace arena
