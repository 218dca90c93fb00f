#include "dgscreen/condition.hpp"

#include <cmath>
#include <numeric>

#include "dgscreen/session_log.hpp"

namespace dgscreen {

using nlohmann::json;

namespace {

struct MeanSd {
  double mean;
  double sd;
};

MeanSd sample_mean_sd(std::span<const SessionRecord> group) {
  std::vector<double> means;
  means.reserve(group.size());
  for (const auto& r : group) means.push_back(mean_click_interval(r));
  const double n = static_cast<double>(means.size());
  const double mean = std::accumulate(means.begin(), means.end(), 0.0) / n;
  if (means.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double m : means) ss += (m - mean) * (m - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace

CohortStats CohortStats::scaled(double c) const {
  CohortStats s = *this;
  s.mu_nor *= c;
  s.sigma_nor *= c;
  s.mu_con *= c;
  s.sigma_con *= c;
  return s;
}

std::string_view to_string(ConditionReason r) {
  switch (r) {
    case ConditionReason::in_confused_band:
      return "in_confused_band";
    case ConditionReason::below_confused_mean:
      return "below_confused_mean";
    case ConditionReason::in_normal_band:
      return "in_normal_band";
    case ConditionReason::above_normal_mean:
      return "above_normal_mean";
    case ConditionReason::decreasing_fallback:
      return "decreasing_fallback";
    case ConditionReason::nondecreasing_fallback:
      return "nondecreasing_fallback";
  }
  return "in_confused_band";
}

std::optional<ConditionReason> parse_condition_reason(std::string_view s) {
  for (auto r : {ConditionReason::in_confused_band, ConditionReason::below_confused_mean,
                 ConditionReason::in_normal_band, ConditionReason::above_normal_mean,
                 ConditionReason::decreasing_fallback, ConditionReason::nondecreasing_fallback}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

double mean_click_interval(const SessionRecord& record) {
  if (record.events.size() < kMinDetectionEvents) {
    throw InsufficientData("condition detection needs at least 3 events, got " +
                           std::to_string(record.events.size()));
  }
  const ClickTimeSeq seq = click_time_seq(record);
  // Sum of intervals telescopes to last - first.
  const Millis total = record.events.back().t - record.events.front().t;
  return to_seconds(total) / static_cast<double>(seq.size());
}

CohortStats calibrate(std::span<const SessionRecord> confused,
                      std::span<const SessionRecord> normal) {
  if (confused.empty() || normal.empty()) {
    throw CalibrationError("calibration needs non-empty confused and normal groups");
  }
  const MeanSd con = sample_mean_sd(confused);
  const MeanSd nor = sample_mean_sd(normal);
  return CohortStats{nor.mean, nor.sd, con.mean, con.sd, confused.size(), normal.size()};
}

bool is_decreasing(const ClickTimeSeq& seq) {
  if (seq.size() < 2) {
    throw InsufficientData("slope test needs at least 2 intervals");
  }
  // Slope numerator sum((i - mean_i) * y_i); the denominator is positive.
  const auto n = static_cast<std::int64_t>(seq.size());
  std::int64_t num = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    num += (2 * i - (n - 1)) * seq.intervals[static_cast<std::size_t>(i)].count();
  }
  return num < 0;
}

ConditionVerdict detect_condition(const SessionRecord& record, const CohortStats& stats) {
  const double mu = mean_click_interval(record);
  if (std::abs(mu - stats.mu_con) < stats.sigma_con) {
    return {false, ConditionReason::in_confused_band, mu};
  }
  if (mu < stats.mu_con) return {false, ConditionReason::below_confused_mean, mu};
  if (std::abs(mu - stats.mu_nor) < stats.sigma_nor) {
    return {true, ConditionReason::in_normal_band, mu};
  }
  if (mu > stats.mu_nor) return {true, ConditionReason::above_normal_mean, mu};
  if (is_decreasing(click_time_seq(record))) {
    return {false, ConditionReason::decreasing_fallback, mu};
  }
  return {true, ConditionReason::nondecreasing_fallback, mu};
}

json to_json(const CohortStats& s) {
  return {{"schema_version", kCohortStatsVersion},
          {"mu_nor", s.mu_nor},
          {"sigma_nor", s.sigma_nor},
          {"mu_con", s.mu_con},
          {"sigma_con", s.sigma_con},
          {"calibrated_from", {{"n_confused", s.n_confused}, {"n_normal", s.n_normal}}}};
}

CohortStats cohort_stats_from_json(const json& doc) {
  std::vector<std::string> bad;
  if (!doc.is_object()) throw DeserializationError("calibration document must be an object");
  if (doc.value("schema_version", -1) != kCohortStatsVersion) {
    throw DeserializationError("unsupported calibration schema_version");
  }
  CohortStats s;
  auto num = [&](const char* key, double& out) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_number() || !std::isfinite(it->get<double>())) {
      bad.push_back(std::string(key) + " must be a finite number");
      return;
    }
    out = it->get<double>();
  };
  num("mu_nor", s.mu_nor);
  num("sigma_nor", s.sigma_nor);
  num("mu_con", s.mu_con);
  num("sigma_con", s.sigma_con);
  if (auto it = doc.find("calibrated_from"); it != doc.end() && it->is_object()) {
    s.n_confused = it->value("n_confused", std::size_t{0});
    s.n_normal = it->value("n_normal", std::size_t{0});
  }
  if (bad.empty()) {
    if (s.sigma_nor < 0 || s.sigma_con < 0) bad.push_back("standard deviations must be >= 0");
    if (s.mu_nor <= 0 || s.mu_con <= 0) bad.push_back("means must be > 0");
  }
  if (!bad.empty()) {
    std::string msg = "invalid calibration:";
    for (const auto& b : bad) msg += " " + b + ";";
    throw DeserializationError(msg);
  }
  return s;
}

json to_json(const ConditionVerdict& v) {
  return {{"suitable", v.suitable},
          {"reason", std::string(to_string(v.reason))},
          {"mean_click_interval", v.mean_interval}};
}

}  // namespace dgscreen
