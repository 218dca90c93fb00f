#include "dgscreen/service.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "dgscreen/session_log.hpp"

namespace dgscreen {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::unsuitable_conditions:
      return "unsuitable_conditions";
    case Verdict::at_risk_dysgraphia:
      return "at_risk_dysgraphia";
    case Verdict::typical:
      return "typical";
  }
  return "unsuitable_conditions";
}

std::optional<Verdict> parse_verdict(std::string_view s) {
  for (auto v : {Verdict::unsuitable_conditions, Verdict::at_risk_dysgraphia, Verdict::typical}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

json to_json(const ScreeningResult& r) {
  json doc = {{"session_id", r.session_id},
              {"verdict", std::string(to_string(r.verdict))},
              {"model_version", r.model_version},
              {"timestamp", r.timestamp}};
  doc["detector_reason"] =
      r.detector_reason ? json(std::string(to_string(*r.detector_reason))) : json(nullptr);
  if (r.feature_vector) {
    json fv = json::object();
    const auto& names = attribute_names();
    for (std::size_t i = 0; i < r.feature_vector->values.size() && i < names.size(); ++i) {
      fv[names[i]] = r.feature_vector->values[i];
    }
    doc["feature_vector"] = std::move(fv);
  } else {
    doc["feature_vector"] = nullptr;
  }
  return doc;
}

ScreeningResult screening_result_from_json(const json& doc) {
  try {
    ScreeningResult r;
    r.session_id = doc.at("session_id").get<std::string>();
    auto v = parse_verdict(doc.at("verdict").get<std::string>());
    if (!v) throw DeserializationError("bad verdict");
    r.verdict = *v;
    r.model_version = doc.at("model_version").get<std::string>();
    r.timestamp = doc.at("timestamp").get<std::string>();
    if (const auto& d = doc.at("detector_reason"); !d.is_null()) {
      r.detector_reason = parse_condition_reason(d.get<std::string>());
      if (!r.detector_reason) throw DeserializationError("bad detector_reason");
    }
    if (const auto& f = doc.at("feature_vector"); !f.is_null()) {
      FeatureVector fv;
      for (const auto& name : attribute_names()) fv.values.push_back(f.at(name).get<double>());
      r.feature_vector = std::move(fv);
    }
    return r;
  } catch (const json::exception& e) {
    throw DeserializationError(std::string("malformed screening result: ") + e.what());
  }
}

json to_json(const HealthStatus& h) {
  return {{"status", h.ready ? "ready" : "not-ready"},
          {"model_version", h.model_version ? json(*h.model_version) : json(nullptr)},
          {"calibration_loaded", h.calibration_loaded},
          {"store_reachable", h.store_reachable}};
}

std::vector<std::string> screening_document_violations(const LabeledSession& session) {
  std::vector<std::string> bad;
  for (GameStage s : {GameStage::game1, GameStage::game2a, GameStage::game2b, GameStage::game2c}) {
    if (!session.find(s)) bad.push_back("missing " + std::string(to_string(s)) + " record");
  }
  if (const SessionRecord* g1 = session.find(GameStage::game1);
      g1 && g1->events.size() < kMinDetectionEvents) {
    bad.push_back("game1 record needs at least 3 events");
  }
  return bad;
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void append_line(const fs::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot append to " + path.string());
  out << line << '\n';
  out.flush();
  if (!out) throw Error("append failed for " + path.string());
}

}  // namespace

ScreeningService::ScreeningService(fs::path store, Clock clock)
    : store_(std::move(store)), clock_(clock ? std::move(clock) : Clock(utc_now)) {
  fs::create_directories(store_ / "sessions");
  fs::create_directories(store_ / "results");
  fs::create_directories(store_ / "active");
  if (fs::exists(store_ / "active" / "model.json")) {
    load_model(read_json_file(store_ / "active" / "model.json"));
  }
  if (fs::exists(store_ / "active" / "calibration.json")) {
    load_calibration(read_json_file(store_ / "active" / "calibration.json"));
  }
}

fs::path ScreeningService::session_path(const std::string& id) const {
  return store_ / "sessions" / (id + ".json");
}

fs::path ScreeningService::result_path(const std::string& id) const {
  return store_ / "results" / (id + ".jsonl");
}

std::shared_ptr<std::mutex> ScreeningService::session_mutex(const std::string& id) {
  std::lock_guard lock(sessions_mutex_);
  auto& m = session_locks_[id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

ScreeningService::Artifacts ScreeningService::snapshot() const {
  std::lock_guard lock(artifacts_mutex_);
  return artifacts_;
}

IngestResult ScreeningService::ingest(const json& document) {
  LabeledSession session = parse_session_document(document);
  if (auto bad = screening_document_violations(session); !bad.empty()) {
    throw SchemaError(std::move(bad));
  }
  const json canonical = to_json(session);

  auto lock_ptr = session_mutex(session.session_id);
  std::lock_guard lock(*lock_ptr);
  const fs::path path = session_path(session.session_id);
  if (fs::exists(path)) {
    if (read_json_file(path) != canonical) {
      throw Conflict("session " + session.session_id + " already exists with different content");
    }
    return {session.session_id, false};
  }
  write_json_file(path, canonical);
  return {session.session_id, true};
}

std::vector<ScreeningResult> ScreeningService::stored_results(const std::string& id) const {
  std::vector<ScreeningResult> out;
  std::ifstream in(result_path(id));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(screening_result_from_json(json::parse(line)));
  }
  return out;
}

ScreeningResult ScreeningService::screen(const std::string& session_id, bool bypass_gate) {
  if (!is_safe_session_id(session_id)) throw NotFound("no session " + session_id);
  const Artifacts active = snapshot();
  if (!active.model || !active.calibration) {
    throw NotReady("model and calibration must be loaded before screening");
  }

  auto lock_ptr = session_mutex(session_id);
  std::lock_guard lock(*lock_ptr);
  const fs::path path = session_path(session_id);
  if (!fs::exists(path)) throw NotFound("no session " + session_id);

  if (!bypass_gate) {
    for (const auto& r : stored_results(session_id)) {
      if (r.model_version == active.model_version) return r;
    }
  }

  const LabeledSession session = read_session_file(path);
  AuditLog local;
  const ScreeningOutcome o =
      screen_session(session, *active.calibration, *active.model, &local, bypass_gate);

  ScreeningResult r;
  r.session_id = session_id;
  r.model_version = active.model_version;
  r.timestamp = clock_();
  if (!o.verdict.suitable && !bypass_gate) {
    r.verdict = Verdict::unsuitable_conditions;
    r.detector_reason = o.verdict.reason;
  } else {
    r.verdict = *o.predicted == Label::dysgraphic ? Verdict::at_risk_dysgraphia : Verdict::typical;
    r.feature_vector = o.features;
  }

  {
    std::lock_guard audit_lock(audit_file_mutex_);
    for (const auto& e : local.entries()) {
      audit_.record(e.session_id, e.step);
      append_line(store_ / "audit.jsonl",
                  json{{"session_id", e.session_id}, {"step", std::string(to_string(e.step))}}
                      .dump());
    }
  }
  // Research replays are not persisted as results.
  if (!bypass_gate) append_line(result_path(session_id), to_json(r).dump());
  return r;
}

std::optional<ScreeningResult> ScreeningService::result(const std::string& session_id) const {
  if (!is_safe_session_id(session_id)) return std::nullopt;
  auto all = stored_results(session_id);
  if (all.empty()) return std::nullopt;
  return all.back();
}

std::string ScreeningService::load_model(const json& document) {
  auto tree = std::make_shared<const DecisionTree>(deserialize(document));
  if (tree->arity() != kNumAttributes) {
    throw DeserializationError("model expects " + std::to_string(tree->arity()) +
                               " attributes, screening produces " +
                               std::to_string(kNumAttributes));
  }
  std::string version = tree->fingerprint();
  std::lock_guard lock(artifacts_mutex_);
  write_json_file(store_ / "active" / "model.json", serialize(*tree));
  artifacts_.model = std::move(tree);
  artifacts_.model_version = version;
  return version;
}

void ScreeningService::load_calibration(const json& document) {
  auto stats = std::make_shared<const CohortStats>(cohort_stats_from_json(document));
  std::lock_guard lock(artifacts_mutex_);
  write_json_file(store_ / "active" / "calibration.json", to_json(*stats));
  artifacts_.calibration = std::move(stats);
}

HealthStatus ScreeningService::health() const {
  const Artifacts a = snapshot();
  HealthStatus h;
  if (a.model) h.model_version = a.model_version;
  h.calibration_loaded = a.calibration != nullptr;
  std::error_code ec;
  h.store_reachable = fs::is_directory(store_ / "sessions", ec);
  h.ready = a.model && a.calibration && h.store_reachable;
  return h;
}

}  // namespace dgscreen
