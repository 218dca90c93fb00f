#pragma once

// Session-log wire schema (JSON, schema_version 1).
//
// Stage document:
//   { "schema_version": 1, "session_id": str, "game_stage": "game1"|"game2a"|...,
//     "events": [{"t": seconds, "correct": bool}], "target_exit_times": [seconds] }
// target_exit_times is only allowed on game2 stages. Unknown fields are rejected.
//
// Session document bundles one stage document per played stage:
//   { "schema_version": 1, "session_id": str, "records": [stage document...],
//     "actual_label"?: "normal"|"dysgraphic", "condition"?: "suitable"|"confused" }

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <vector>

#include "dgscreen/core.hpp"

namespace dgscreen {

inline constexpr int kSessionSchemaVersion = 1;

struct StageLog {
  std::string session_id;
  GameStage game_stage = GameStage::game1;
  std::vector<ResponseEvent> events;
  std::optional<std::vector<Millis>> target_exit_times;
};

StageLog parse_stage_log(const nlohmann::json& doc);

/// Applies the multi-target exit rule when exit times are present and checks
/// the record invariants.
SessionRecord to_record(const StageLog& log);

nlohmann::json to_json(const SessionRecord& record);

/// Accepts a session document, or a bare stage document (wrapped as a
/// single-record session).
LabeledSession parse_session_document(const nlohmann::json& doc);
nlohmann::json to_json(const LabeledSession& session);

/// Session ids become file names in the store, so they are restricted to
/// [A-Za-z0-9._-], 1..128 chars, and may not be "." or "..".
bool is_safe_session_id(std::string_view id);

LabeledSession read_session_file(const std::filesystem::path& path);
void write_session_file(const std::filesystem::path& path, const LabeledSession& session);

/// Each path may be a file or a directory of *.json files (sorted by name).
std::vector<LabeledSession> read_sessions(const std::vector<std::filesystem::path>& paths);

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace dgscreen
