#pragma once

// Screening service: ingestion, gated screening and an append-only store of
// JSON documents keyed by session id.
//
// Store layout:
//   sessions/<id>.json     canonical session document
//   results/<id>.jsonl     one ScreeningResult per line, appended
//   active/model.json      last accepted model
//   active/calibration.json
//   audit.jsonl            pipeline steps

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "dgscreen/c45.hpp"
#include "dgscreen/condition.hpp"
#include "dgscreen/features.hpp"
#include "dgscreen/pipeline.hpp"

namespace dgscreen {

enum class Verdict { unsuitable_conditions, at_risk_dysgraphia, typical };
std::string_view to_string(Verdict v);
std::optional<Verdict> parse_verdict(std::string_view s);

struct ScreeningResult {
  std::string session_id;
  Verdict verdict = Verdict::unsuitable_conditions;
  std::optional<ConditionReason> detector_reason;  ///< when unsuitable
  std::optional<FeatureVector> feature_vector;     ///< when classified
  std::string model_version;
  std::string timestamp;

  friend bool operator==(const ScreeningResult&, const ScreeningResult&) = default;
};

nlohmann::json to_json(const ScreeningResult& r);
ScreeningResult screening_result_from_json(const nlohmann::json& doc);

struct HealthStatus {
  bool ready = false;
  std::optional<std::string> model_version;
  bool calibration_loaded = false;
  bool store_reachable = false;
};

nlohmann::json to_json(const HealthStatus& h);

struct IngestResult {
  std::string session_id;
  bool created = false;
};

class ScreeningService {
 public:
  using Clock = std::function<std::string()>;

  /// Reloads the active model and calibration from the store if present.
  explicit ScreeningService(std::filesystem::path store, Clock clock = {});

  /// Throws SchemaError (invalid or PII-bearing document) or Conflict.
  IngestResult ingest(const nlohmann::json& document);

  /// Throws NotFound, NotReady. Returns the stored result when one exists
  /// for the active model version.
  ScreeningResult screen(const std::string& session_id, bool bypass_gate = false);

  std::optional<ScreeningResult> result(const std::string& session_id) const;

  /// Malformed documents throw DeserializationError and leave the active
  /// artifact in place.
  std::string load_model(const nlohmann::json& document);
  void load_calibration(const nlohmann::json& document);

  HealthStatus health() const;
  const AuditLog& audit() const noexcept { return audit_; }
  const std::filesystem::path& store() const noexcept { return store_; }

 private:
  struct Artifacts {
    std::shared_ptr<const DecisionTree> model;
    std::string model_version;
    std::shared_ptr<const CohortStats> calibration;
  };

  Artifacts snapshot() const;
  std::shared_ptr<std::mutex> session_mutex(const std::string& id);
  std::filesystem::path session_path(const std::string& id) const;
  std::filesystem::path result_path(const std::string& id) const;
  std::vector<ScreeningResult> stored_results(const std::string& id) const;

  std::filesystem::path store_;
  Clock clock_;

  mutable std::mutex artifacts_mutex_;
  Artifacts artifacts_;

  std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> session_locks_;

  AuditLog audit_;
  std::mutex audit_file_mutex_;
};

/// Requires game1 and all three game2 stages.
std::vector<std::string> screening_document_violations(const LabeledSession& session);

}  // namespace dgscreen
