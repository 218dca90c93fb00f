#include "dgscreen/session_log.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace dgscreen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& doc, std::initializer_list<std::string_view> allowed,
                    const std::string& where, std::vector<std::string>& bad) {
  for (const auto& [key, _] : doc.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      bad.push_back(where + "unknown field \"" + key + "\"");
    }
  }
}

void check_version(const json& doc, const std::string& where, std::vector<std::string>& bad) {
  auto it = doc.find("schema_version");
  if (it == doc.end()) {
    bad.push_back(where + "missing schema_version");
  } else if (!it->is_number_integer() || it->get<int>() != kSessionSchemaVersion) {
    bad.push_back(where + "unsupported schema_version " + it->dump());
  }
}

std::optional<std::string> read_id(const json& doc, const std::string& where,
                                   std::vector<std::string>& bad) {
  auto it = doc.find("session_id");
  if (it == doc.end() || !it->is_string()) {
    bad.push_back(where + "session_id must be a string");
    return std::nullopt;
  }
  auto id = it->get<std::string>();
  if (!is_safe_session_id(id)) {
    bad.push_back(where + "session_id has disallowed characters");
    return std::nullopt;
  }
  return id;
}

std::optional<Millis> read_time(const json& v, const std::string& what,
                                std::vector<std::string>& bad) {
  if (!v.is_number()) {
    bad.push_back(what + " must be a number");
    return std::nullopt;
  }
  double s = v.get<double>();
  if (!std::isfinite(s) || s < 0.0) {
    bad.push_back(what + " must be finite and non-negative");
    return std::nullopt;
  }
  return from_seconds(s);
}

StageLog parse_stage_into(const json& doc, const std::string& where,
                          std::vector<std::string>& bad) {
  StageLog log;
  if (!doc.is_object()) {
    bad.push_back(where + "stage document must be an object");
    return log;
  }
  reject_unknown(doc, {"schema_version", "session_id", "game_stage", "events", "target_exit_times"},
                 where, bad);
  check_version(doc, where, bad);
  if (auto id = read_id(doc, where, bad)) log.session_id = *id;

  auto st = doc.find("game_stage");
  std::optional<GameStage> stage;
  if (st != doc.end() && st->is_string()) stage = parse_game_stage(st->get<std::string>());
  if (!stage) {
    bad.push_back(where + "game_stage must be one of game1, game2a, game2b, game2c");
  } else {
    log.game_stage = *stage;
  }

  auto ev = doc.find("events");
  if (ev == doc.end() || !ev->is_array()) {
    bad.push_back(where + "events must be an array");
  } else {
    for (std::size_t i = 0; i < ev->size(); ++i) {
      const json& e = (*ev)[i];
      const std::string at = where + "events[" + std::to_string(i) + "]";
      if (!e.is_object()) {
        bad.push_back(at + " must be an object");
        continue;
      }
      reject_unknown(e, {"t", "correct"}, at + ": ", bad);
      auto t = e.find("t");
      auto c = e.find("correct");
      std::optional<Millis> time;
      if (t == e.end()) {
        bad.push_back(at + ".t missing");
      } else {
        time = read_time(*t, at + ".t", bad);
      }
      if (c == e.end() || !c->is_boolean()) {
        bad.push_back(at + ".correct must be a boolean");
        continue;
      }
      if (time) log.events.push_back({*time, c->get<bool>()});
    }
  }

  if (auto ex = doc.find("target_exit_times"); ex != doc.end()) {
    if (stage && !is_game2(*stage)) {
      bad.push_back(where + "target_exit_times is only allowed on game2 stages");
    } else if (!ex->is_array()) {
      bad.push_back(where + "target_exit_times must be an array");
    } else {
      std::vector<Millis> exits;
      for (std::size_t i = 0; i < ex->size(); ++i) {
        if (auto t = read_time((*ex)[i], where + "target_exit_times[" + std::to_string(i) + "]",
                               bad)) {
          exits.push_back(*t);
        }
      }
      log.target_exit_times = std::move(exits);
    }
  }
  return log;
}

SessionRecord to_record_into(const StageLog& log, const std::string& where,
                             std::vector<std::string>& bad) {
  SessionRecord rec;
  if (log.target_exit_times) {
    try {
      rec = normalize_multitarget(log.session_id, log.game_stage, log.events,
                                  *log.target_exit_times);
    } catch (const SchemaError& e) {
      for (const auto& v : e.violations()) bad.push_back(where + v);
      return rec;
    }
  } else {
    rec = SessionRecord{log.session_id, log.game_stage, log.events};
  }
  for (const auto& v : validate_record(rec)) bad.push_back(where + v.message);
  return rec;
}

}  // namespace

bool is_safe_session_id(std::string_view id) {
  if (id.empty() || id.size() > 128 || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '.' || c == '_' || c == '-';
  });
}

StageLog parse_stage_log(const json& doc) {
  std::vector<std::string> bad;
  StageLog log = parse_stage_into(doc, "", bad);
  if (!bad.empty()) throw SchemaError(std::move(bad));
  return log;
}

SessionRecord to_record(const StageLog& log) {
  std::vector<std::string> bad;
  SessionRecord rec = to_record_into(log, "", bad);
  if (!bad.empty()) throw SchemaError(std::move(bad));
  return rec;
}

json to_json(const SessionRecord& record) {
  json events = json::array();
  for (const auto& e : record.events) {
    events.push_back({{"t", to_seconds(e.t)}, {"correct", e.correct}});
  }
  return {{"schema_version", kSessionSchemaVersion},
          {"session_id", record.session_id},
          {"game_stage", std::string(to_string(record.game_stage))},
          {"events", std::move(events)}};
}

LabeledSession parse_session_document(const json& doc) {
  std::vector<std::string> bad;
  LabeledSession session;
  if (!doc.is_object()) throw SchemaError({"document must be a JSON object"});

  if (!doc.contains("records")) {
    StageLog log = parse_stage_into(doc, "", bad);
    if (bad.empty()) {
      SessionRecord rec = to_record_into(log, "", bad);
      session.session_id = rec.session_id;
      session.records.emplace(rec.game_stage, std::move(rec));
    }
    if (!bad.empty()) throw SchemaError(std::move(bad));
    return session;
  }

  reject_unknown(doc, {"schema_version", "session_id", "records", "actual_label", "condition"}, "",
                 bad);
  check_version(doc, "", bad);
  if (auto id = read_id(doc, "", bad)) session.session_id = *id;

  if (auto it = doc.find("actual_label"); it != doc.end()) {
    std::optional<Label> l;
    if (it->is_string()) l = parse_label(it->get<std::string>());
    if (!l) bad.push_back("actual_label must be \"normal\" or \"dysgraphic\"");
    session.actual_label = l;
  }
  if (auto it = doc.find("condition"); it != doc.end()) {
    std::optional<Condition> c;
    if (it->is_string()) c = parse_condition(it->get<std::string>());
    if (!c) bad.push_back("condition must be \"suitable\" or \"confused\"");
    session.condition = c;
  }

  const json& recs = doc["records"];
  if (!recs.is_array() || recs.empty()) {
    bad.push_back("records must be a non-empty array");
  } else {
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const std::string where = "records[" + std::to_string(i) + "]: ";
      std::size_t before = bad.size();
      StageLog log = parse_stage_into(recs[i], where, bad);
      if (bad.size() != before) continue;
      if (log.session_id != session.session_id) {
        bad.push_back(where + "session_id does not match the session");
        continue;
      }
      SessionRecord rec = to_record_into(log, where, bad);
      if (bad.size() != before) continue;
      if (!session.records.emplace(rec.game_stage, std::move(rec)).second) {
        bad.push_back(where + "duplicate game_stage " + std::string(to_string(log.game_stage)));
      }
    }
  }
  if (!bad.empty()) throw SchemaError(std::move(bad));
  return session;
}

json to_json(const LabeledSession& session) {
  json recs = json::array();
  for (const auto& [stage, rec] : session.records) {
    SessionRecord copy = rec;
    copy.session_id = session.session_id;
    recs.push_back(to_json(copy));
  }
  json doc = {{"schema_version", kSessionSchemaVersion},
              {"session_id", session.session_id},
              {"records", std::move(recs)}};
  if (session.actual_label) doc["actual_label"] = std::string(to_string(*session.actual_label));
  if (session.condition) doc["condition"] = std::string(to_string(*session.condition));
  return doc;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError({path.string() + ": " + e.what()});
  }
}

void write_json_file(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << doc.dump(2) << '\n';
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

LabeledSession read_session_file(const fs::path& path) {
  try {
    return parse_session_document(read_json_file(path));
  } catch (const SchemaError& e) {
    std::vector<std::string> v;
    for (const auto& s : e.violations()) v.push_back(path.filename().string() + ": " + s);
    throw SchemaError(std::move(v));
  }
}

void write_session_file(const fs::path& path, const LabeledSession& session) {
  write_json_file(path, to_json(session));
}

std::vector<LabeledSession> read_sessions(const std::vector<fs::path>& paths) {
  std::vector<LabeledSession> out;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
          files.push_back(entry.path());
        }
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) out.push_back(read_session_file(f));
    } else {
      out.push_back(read_session_file(p));
    }
  }
  return out;
}

}  // namespace dgscreen
