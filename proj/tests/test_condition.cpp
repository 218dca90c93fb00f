#include <doctest.h>

#include <random>

#include "dgscreen/condition.hpp"
#include "test_util.hpp"

using namespace dgscreen;
using dgscreen::testing::from_intervals;
using dgscreen::testing::rec;

namespace {

CohortStats stats(double mu_con, double sigma_con, double mu_nor, double sigma_nor) {
  CohortStats s;
  s.mu_con = mu_con;
  s.sigma_con = sigma_con;
  s.mu_nor = mu_nor;
  s.sigma_nor = sigma_nor;
  return s;
}

ClickTimeSeq seq(std::initializer_list<long> ms) {
  ClickTimeSeq s;
  for (long v : ms) s.intervals.push_back(Millis{v});
  return s;
}

}  // namespace

TEST_CASE("mean_click_interval") {
  CHECK(mean_click_interval(rec({{1.0, true}, {2.0, true}, {3.0, true}})) == doctest::Approx(1.0));
  CHECK(mean_click_interval(rec({{0.0, true}, {1.0, true}, {4.0, true}})) == doctest::Approx(2.0));
  CHECK_THROWS_AS(mean_click_interval(rec({{1.0, true}, {2.0, true}})), InsufficientData);
}

TEST_CASE("calibrate") {
  const std::vector<SessionRecord> normal{from_intervals({1000, 1000}), from_intervals({1000, 1000})};
  const std::vector<SessionRecord> confused{from_intervals({400, 400}), from_intervals({600, 600})};
  const CohortStats s = calibrate(confused, normal);
  CHECK(s.mu_nor == doctest::Approx(1.0));
  CHECK(s.sigma_nor == 0.0);
  CHECK(s.mu_con == doctest::Approx(0.5));
  CHECK(s.sigma_con == doctest::Approx(0.14142135623730948).epsilon(1e-12));
  CHECK(s.n_confused == 2);
  CHECK(s.n_normal == 2);

  CHECK_THROWS_AS(calibrate({}, normal), CalibrationError);
  CHECK_THROWS_AS(calibrate(confused, {}), CalibrationError);
}

TEST_CASE("is_decreasing") {
  CHECK(is_decreasing(seq({3000, 2000, 1000})));
  CHECK_FALSE(is_decreasing(seq({1000, 2000, 3000})));
  CHECK_FALSE(is_decreasing(seq({2000, 2000, 2000})));
  CHECK_THROWS_AS(is_decreasing(seq({1000})), InsufficientData);
}

TEST_CASE("detect_condition worked examples") {
  const CohortStats s = stats(0.5, 0.05, 1.2, 0.05);

  auto v = detect_condition(from_intervals({500, 500}), s);
  CHECK_FALSE(v.suitable);
  CHECK(v.reason == ConditionReason::in_confused_band);

  v = detect_condition(from_intervals({1200, 1200}), s);
  CHECK(v.suitable);
  CHECK(v.reason == ConditionReason::in_normal_band);

  v = detect_condition(from_intervals({900, 800, 700}), s);
  CHECK_FALSE(v.suitable);
  CHECK(v.reason == ConditionReason::decreasing_fallback);
  CHECK(v.mean_interval == doctest::Approx(0.8));

  v = detect_condition(from_intervals({700, 800, 900}), s);
  CHECK(v.suitable);
  CHECK(v.reason == ConditionReason::nondecreasing_fallback);

  CHECK(detect_condition(from_intervals({200, 200}), s).reason ==
        ConditionReason::below_confused_mean);
  CHECK(detect_condition(from_intervals({2000, 2000}), s).reason ==
        ConditionReason::above_normal_mean);
  CHECK_THROWS_AS(detect_condition(from_intervals({500}), s), InsufficientData);
}

TEST_CASE("overlapping bands resolve to the confused rule first") {
  const CohortStats s = stats(0.9, 0.5, 1.0, 0.5);
  const auto v = detect_condition(from_intervals({1000, 1000}), s);
  CHECK_FALSE(v.suitable);
  CHECK(v.reason == ConditionReason::in_confused_band);
}

TEST_CASE("rule order matches an independent evaluation") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> mu(0.2, 2.0), sd(0.0, 0.4);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto r = dgscreen::testing::random_record(rng, 3 + trial % 12);
    const CohortStats s = stats(mu(rng), sd(rng), mu(rng), sd(rng));
    const double m = mean_click_interval(r);
    ConditionReason expected;
    if (std::abs(m - s.mu_con) < s.sigma_con) expected = ConditionReason::in_confused_band;
    else if (m < s.mu_con) expected = ConditionReason::below_confused_mean;
    else if (std::abs(m - s.mu_nor) < s.sigma_nor) expected = ConditionReason::in_normal_band;
    else if (m > s.mu_nor) expected = ConditionReason::above_normal_mean;
    else expected = is_decreasing(click_time_seq(r)) ? ConditionReason::decreasing_fallback
                                                     : ConditionReason::nondecreasing_fallback;
    const auto v = detect_condition(r, s);
    CHECK(v.reason == expected);
    CHECK(v == detect_condition(r, s));
  }
}

TEST_CASE("stats document round trip") {
  CohortStats s = stats(0.5, 0.1, 1.2, 0.2);
  s.n_confused = 15;
  s.n_normal = 17;
  const auto doc = to_json(s);
  CHECK(doc["calibrated_from"]["n_confused"] == 15);
  CHECK(cohort_stats_from_json(doc) == s);

  auto bad = doc;
  bad["schema_version"] = 99;
  CHECK_THROWS_AS(cohort_stats_from_json(bad), DeserializationError);
  bad = doc;
  bad["sigma_con"] = -1.0;
  CHECK_THROWS_AS(cohort_stats_from_json(bad), DeserializationError);
  bad = doc;
  bad.erase("mu_nor");
  CHECK_THROWS_AS(cohort_stats_from_json(bad), DeserializationError);
}
