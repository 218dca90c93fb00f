#include "dgscreen/core.hpp"

#include <algorithm>
#include <cmath>

namespace dgscreen {

Millis from_seconds(double seconds) {
  return Millis{std::llround(seconds * 1000.0)};
}

std::string_view to_string(GameStage stage) {
  switch (stage) {
    case GameStage::game1:
      return "game1";
    case GameStage::game2a:
      return "game2a";
    case GameStage::game2b:
      return "game2b";
    case GameStage::game2c:
      return "game2c";
  }
  return "game1";
}

std::optional<GameStage> parse_game_stage(std::string_view s) {
  if (s == "game1") return GameStage::game1;
  if (s == "game2a") return GameStage::game2a;
  if (s == "game2b") return GameStage::game2b;
  if (s == "game2c") return GameStage::game2c;
  return std::nullopt;
}

std::string_view to_string(Label label) {
  return label == Label::dysgraphic ? "dysgraphic" : "normal";
}

std::optional<Label> parse_label(std::string_view s) {
  if (s == "normal") return Label::normal;
  if (s == "dysgraphic") return Label::dysgraphic;
  return std::nullopt;
}

std::string_view to_string(Condition c) {
  return c == Condition::confused ? "confused" : "suitable";
}

std::optional<Condition> parse_condition(std::string_view s) {
  if (s == "suitable") return Condition::suitable;
  if (s == "confused") return Condition::confused;
  return std::nullopt;
}

std::vector<Violation> validate_record(const SessionRecord& record) {
  std::vector<Violation> out;
  if (record.events.empty()) {
    out.push_back({"empty record", std::nullopt});
    return out;
  }
  for (std::size_t i = 0; i < record.events.size(); ++i) {
    if (record.events[i].t < Millis{0}) {
      out.push_back({"negative time at index " + std::to_string(i), i});
    }
    if (i > 0 && record.events[i].t <= record.events[i - 1].t) {
      out.push_back({"non-ascending at index " + std::to_string(i), i});
    }
  }
  return out;
}

ClickTimeSeq click_time_seq(const SessionRecord& record) {
  if (record.events.size() < 2) {
    throw InsufficientData("click time seq needs at least 2 events, got " +
                           std::to_string(record.events.size()));
  }
  ClickTimeSeq seq;
  seq.intervals.reserve(record.events.size() - 1);
  for (std::size_t i = 1; i < record.events.size(); ++i) {
    seq.intervals.push_back(record.events[i].t - record.events[i - 1].t);
  }
  return seq;
}

SessionRecord normalize_multitarget(std::string session_id, GameStage stage,
                                    std::span<const ResponseEvent> reactions,
                                    std::span<const Millis> target_exit_times) {
  std::vector<std::string> bad;
  for (std::size_t i = 1; i < target_exit_times.size(); ++i) {
    if (target_exit_times[i] <= target_exit_times[i - 1]) {
      bad.push_back("target_exit_times not strictly ascending at index " + std::to_string(i));
    }
  }
  for (std::size_t i = 1; i < reactions.size(); ++i) {
    if (reactions[i].t <= reactions[i - 1].t) {
      bad.push_back("reactions not strictly ascending at index " + std::to_string(i));
    }
  }
  if (!bad.empty()) throw SchemaError(std::move(bad));

  SessionRecord out{std::move(session_id), stage, {}};
  out.events.reserve(reactions.size() + target_exit_times.size());

  std::size_t r = 0;
  Millis window_open{-1};  // stage start: the first window is [0, exit]
  for (Millis exit : target_exit_times) {
    bool reacted = false;
    while (r < reactions.size() && reactions[r].t <= exit) {
      if (reactions[r].t > window_open) reacted = true;
      out.events.push_back(reactions[r]);
      ++r;
    }
    if (!reacted) {
      Millis t = exit;
      while (std::any_of(reactions.begin(), reactions.end(),
                         [t](const ResponseEvent& e) { return e.t == t; })) {
        t += kCollisionEpsilon;
      }
      out.events.push_back({t, false});
    }
    window_open = exit;
  }
  for (; r < reactions.size(); ++r) out.events.push_back(reactions[r]);

  std::stable_sort(out.events.begin(), out.events.end(),
                   [](const ResponseEvent& a, const ResponseEvent& b) { return a.t < b.t; });
  return out;
}

}  // namespace dgscreen
