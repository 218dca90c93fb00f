#pragma once

// Domain types shared by the whole screening pipeline.

#include <chrono>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dgscreen/errors.hpp"

namespace dgscreen {

/// Event times, integer milliseconds.
using Millis = std::chrono::milliseconds;
using Seconds = std::chrono::duration<double>;

inline double to_seconds(Millis t) { return std::chrono::duration_cast<Seconds>(t).count(); }
Millis from_seconds(double seconds);

enum class GameStage { game1, game2a, game2b, game2c };

inline constexpr GameStage kGame2Stages[] = {GameStage::game2a, GameStage::game2b,
                                             GameStage::game2c};

std::string_view to_string(GameStage stage);
std::optional<GameStage> parse_game_stage(std::string_view s);
inline bool is_game2(GameStage s) { return s != GameStage::game1; }

/// Ordering is fixed (normal < dysgraphic); it breaks majority ties in the tree.
enum class Label { normal = 0, dysgraphic = 1 };
inline constexpr int kNumLabels = 2;

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view s);

/// Ground-truth test condition of a simulated child (evaluation only).
enum class Condition { suitable, confused };

std::string_view to_string(Condition c);
std::optional<Condition> parse_condition(std::string_view s);

struct ResponseEvent {
  Millis t{0};
  bool correct = false;

  friend bool operator==(const ResponseEvent&, const ResponseEvent&) = default;
};

struct SessionRecord {
  std::string session_id;
  GameStage game_stage = GameStage::game1;
  std::vector<ResponseEvent> events;

  std::size_t size() const noexcept { return events.size(); }
  friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

/// Differences between consecutive response times.
struct ClickTimeSeq {
  std::vector<Millis> intervals;

  std::size_t size() const noexcept { return intervals.size(); }
  friend bool operator==(const ClickTimeSeq&, const ClickTimeSeq&) = default;
};

/// One child's session: a record per played stage. Deliberately carries no
/// identifying fields beyond the opaque session id.
struct LabeledSession {
  std::string session_id;
  std::map<GameStage, SessionRecord> records;
  std::optional<Label> actual_label;
  std::optional<Condition> condition;

  const SessionRecord* find(GameStage s) const {
    auto it = records.find(s);
    return it == records.end() ? nullptr : &it->second;
  }
  friend bool operator==(const LabeledSession&, const LabeledSession&) = default;
};

struct Violation {
  std::string message;
  std::optional<std::size_t> index;
};

/// Empty result means the record is valid.
std::vector<Violation> validate_record(const SessionRecord& record);
inline bool is_valid(const SessionRecord& record) { return validate_record(record).empty(); }

/// Throws InsufficientData for fewer than two events.
ClickTimeSeq click_time_seq(const SessionRecord& record);

/// Inserts a (exit time, wrong) event for every exit window (previous exit,
/// current exit] with no reaction. The first window opens at stage start.
SessionRecord normalize_multitarget(std::string session_id, GameStage stage,
                                    std::span<const ResponseEvent> reactions,
                                    std::span<const Millis> target_exit_times);

/// Shift applied to a synthetic exit event that collides with a reaction.
inline constexpr Millis kCollisionEpsilon{1};

}  // namespace dgscreen
