#pragma once

// Detector gate followed by feature extraction and classification.

#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "dgscreen/c45.hpp"
#include "dgscreen/condition.hpp"
#include "dgscreen/features.hpp"

namespace dgscreen {

enum class PipelineStep { detect, extract, predict };
std::string_view to_string(PipelineStep s);

struct AuditEntry {
  std::string session_id;
  PipelineStep step = PipelineStep::detect;
};

/// Append-only, thread-safe record of pipeline steps per session.
class AuditLog {
 public:
  void record(const std::string& session_id, PipelineStep step);
  std::vector<AuditEntry> entries() const;
  nlohmann::json to_json() const;

 private:
  mutable std::mutex mutex_;
  std::vector<AuditEntry> entries_;
};

struct ScreeningOutcome {
  ConditionVerdict verdict;
  std::optional<FeatureVector> features;  ///< present iff classified
  std::optional<Label> predicted;
};

/// Runs the detector on game1; only suitable sessions reach the classifier.
/// `bypass_gate` is for research replay and still records the verdict.
ScreeningOutcome screen_session(const LabeledSession& session, const CohortStats& stats,
                                const DecisionTree& model, AuditLog* audit = nullptr,
                                bool bypass_gate = false);

/// Violations of gate ordering found in an audit trail: an extract/predict
/// step with no preceding suitable detect step for that session.
std::vector<std::string> gate_violations(const std::vector<AuditEntry>& audit,
                                         const std::vector<std::string>& unsuitable_ids);

}  // namespace dgscreen
