#pragma once

// Metrics, accuracy bookkeeping and the end-to-end synthetic study.

#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>

#include "dgscreen/c45.hpp"
#include "dgscreen/condition.hpp"
#include "dgscreen/pipeline.hpp"
#include "dgscreen/simulate.hpp"

namespace dgscreen {

/// Positive class is dysgraphic.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t flagged_unsuitable = 0;
  std::size_t flagged_confirmed = 0;

  std::size_t classified() const noexcept { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws BookkeepingError on length mismatch.
ConfusionMatrix confusion_matrix(std::span<const Label> predictions, std::span<const Label> actuals);

/// 100 * (tp + tn + flagged_confirmed) / total, rounded to two decimals.
/// Confirmed flags count as successes.
double overall_accuracy(const ConfusionMatrix& m, std::size_t total_participants);

struct HalfBalance {
  double rate_first_half = 0.0;
  double rate_second_half = 0.0;
  double z = 0.0;
  bool significant = false;
};

/// Two-sided critical value of the standard normal at alpha = 0.05.
inline constexpr double kZCritical05 = 1.959963984540054;

/// Error rates of events [0, ceil(n/2)) and [ceil(n/2), n), compared with a
/// pooled two-proportion z-test. Needs at least 4 events.
HalfBalance half_error_balance(const SessionRecord& record);

struct StudyConfig {
  std::uint64_t seed = 1;
  ProfileConfig simulator;
  TrainParams train;

  std::size_t train_normal = 45;
  std::size_t train_dysgraphic = 30;
  std::size_t augment_target = 45;

  std::size_t calib_confused = 15;
  std::size_t calib_normal = 17;

  std::size_t test_normal = 53;
  std::size_t test_dysgraphic = 21;
  /// Test children whose game1 is played in a confused state.
  std::size_t test_confused_normal = 2;
  std::size_t test_confused_dysgraphic = 1;
};

nlohmann::json to_json(const StudyConfig& c);
StudyConfig study_config_from_json(const nlohmann::json& doc);

struct SessionOutcome {
  std::string session_id;
  Label actual = Label::normal;
  Condition condition = Condition::suitable;
  ConditionVerdict verdict;
  std::optional<Label> predicted;
};

struct Evaluation {
  ConfusionMatrix matrix;
  std::vector<SessionOutcome> outcomes;
  std::vector<AuditEntry> audit;
};

/// Screens labeled sessions. A flag is confirmed when the session's
/// recorded condition is confused.
Evaluation evaluate_sessions(std::span<const LabeledSession> sessions, const CohortStats& stats,
                             const DecisionTree& model);

/// Rebuilds the matrix from stored per-session outcomes.
ConfusionMatrix matrix_from_outcomes(std::span<const SessionOutcome> outcomes);

struct StudyReport {
  StudyConfig config;
  std::size_t augmented = 0;
  CohortStats calibration;
  DecisionTree model;
  Evaluation evaluation;
  double overall_accuracy = 0.0;
  double classified_accuracy = 0.0;
};

inline constexpr int kReportVersion = 1;

StudyReport run_study(const StudyConfig& config);
nlohmann::json to_json(const StudyReport& report);
nlohmann::json to_json(const ConfusionMatrix& m);

/// Structural check of a report document; empty means valid.
std::vector<std::string> report_schema_violations(const nlohmann::json& report);

}  // namespace dgscreen
