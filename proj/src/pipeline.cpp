#include "dgscreen/pipeline.hpp"

#include <set>

namespace dgscreen {

std::string_view to_string(PipelineStep s) {
  switch (s) {
    case PipelineStep::detect:
      return "detect";
    case PipelineStep::extract:
      return "extract";
    case PipelineStep::predict:
      return "predict";
  }
  return "detect";
}

void AuditLog::record(const std::string& session_id, PipelineStep step) {
  std::lock_guard lock(mutex_);
  entries_.push_back({session_id, step});
}

std::vector<AuditEntry> AuditLog::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

nlohmann::json AuditLog::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : entries()) {
    out.push_back({{"session_id", e.session_id}, {"step", std::string(to_string(e.step))}});
  }
  return out;
}

ScreeningOutcome screen_session(const LabeledSession& session, const CohortStats& stats,
                                const DecisionTree& model, AuditLog* audit, bool bypass_gate) {
  const SessionRecord* game1 = session.find(GameStage::game1);
  if (!game1) throw IncompleteSession("session " + session.session_id + " has no game1 record");

  ScreeningOutcome out;
  out.verdict = detect_condition(*game1, stats);
  if (audit) audit->record(session.session_id, PipelineStep::detect);
  if (!out.verdict.suitable && !bypass_gate) return out;

  out.features = extract_session(session);
  if (audit) audit->record(session.session_id, PipelineStep::extract);
  out.predicted = predict(model, out.features->values);
  if (audit) audit->record(session.session_id, PipelineStep::predict);
  return out;
}

std::vector<std::string> gate_violations(const std::vector<AuditEntry>& audit,
                                         const std::vector<std::string>& unsuitable_ids) {
  const std::set<std::string> unsuitable(unsuitable_ids.begin(), unsuitable_ids.end());
  std::set<std::string> detected;
  std::vector<std::string> out;
  for (const auto& e : audit) {
    if (e.step == PipelineStep::detect) {
      detected.insert(e.session_id);
      continue;
    }
    if (unsuitable.count(e.session_id)) {
      out.push_back(e.session_id + ": " + std::string(to_string(e.step)) +
                    " after an unsuitable verdict");
    } else if (!detected.count(e.session_id)) {
      out.push_back(e.session_id + ": " + std::string(to_string(e.step)) + " before detection");
    }
  }
  return out;
}

}  // namespace dgscreen
