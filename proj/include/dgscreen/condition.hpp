#pragma once

// Unsuitable-condition (confusion) detection on Game 1 records.

#include <nlohmann/json.hpp>
#include <span>

#include "dgscreen/core.hpp"

namespace dgscreen {

/// Calibration statistics, in seconds. Means and sample standard deviations
/// of per-child mean click intervals.
struct CohortStats {
  double mu_nor = 0.0;
  double sigma_nor = 0.0;
  double mu_con = 0.0;
  double sigma_con = 0.0;
  std::size_t n_confused = 0;
  std::size_t n_normal = 0;

  CohortStats scaled(double c) const;
  friend bool operator==(const CohortStats&, const CohortStats&) = default;
};

enum class ConditionReason {
  in_confused_band,
  below_confused_mean,
  in_normal_band,
  above_normal_mean,
  decreasing_fallback,
  nondecreasing_fallback,
};

std::string_view to_string(ConditionReason r);
std::optional<ConditionReason> parse_condition_reason(std::string_view s);

struct ConditionVerdict {
  bool suitable = false;
  ConditionReason reason = ConditionReason::in_confused_band;
  double mean_interval = 0.0;  ///< seconds

  friend bool operator==(const ConditionVerdict&, const ConditionVerdict&) = default;
};

/// Records need at least three events (two intervals) for detection.
inline constexpr std::size_t kMinDetectionEvents = 3;

double mean_click_interval(const SessionRecord& record);

/// Sample standard deviation (n - 1); zero for a single child.
CohortStats calibrate(std::span<const SessionRecord> confused,
                      std::span<const SessionRecord> normal);

/// True iff the least-squares slope of interval against index is negative.
bool is_decreasing(const ClickTimeSeq& seq);

/// Band rules checked strictly in order: confused band, normal band, slope.
ConditionVerdict detect_condition(const SessionRecord& record, const CohortStats& stats);

inline constexpr int kCohortStatsVersion = 1;

nlohmann::json to_json(const CohortStats& stats);
CohortStats cohort_stats_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ConditionVerdict& verdict);

}  // namespace dgscreen
