#include <doctest.h>

#include "dgscreen/evaluation.hpp"
#include "test_util.hpp"

using namespace dgscreen;
constexpr Label N = Label::normal;
constexpr Label D = Label::dysgraphic;

namespace {

SessionRecord pattern(std::size_t n, std::size_t wrong_from, std::size_t wrong_to) {
  SessionRecord r{"h", GameStage::game1, {}};
  for (std::size_t i = 0; i < n; ++i) {
    r.events.push_back({Millis{static_cast<long>(1000 * (i + 1))}, !(i >= wrong_from && i < wrong_to)});
  }
  return r;
}

StudyConfig zero_noise() {
  StudyConfig c;
  for (auto* p : {&c.simulator.normal, &c.simulator.dysgraphic, &c.simulator.confused}) {
    p->interval_spread = 0.0;
  }
  return c;
}

}  // namespace

TEST_CASE("confusion_matrix") {
  const std::vector<Label> same{N, D, N, N, D, D, N, D, N, N};
  CHECK(confusion_matrix(same, same).fp == 0);
  CHECK(confusion_matrix(same, same).fn == 0);

  std::vector<Label> pred, act;
  auto add = [&](Label p, Label a, int k) {
    for (int i = 0; i < k; ++i) pred.push_back(p), act.push_back(a);
  };
  add(N, N, 48);
  add(D, N, 3);
  add(N, D, 2);
  add(D, D, 18);
  const auto m = confusion_matrix(pred, act);
  CHECK(m == ConfusionMatrix{18, 48, 3, 2, 0, 0});

  CHECK(confusion_matrix({}, {}) == ConfusionMatrix{});
  CHECK_THROWS_AS(confusion_matrix(pred, same), BookkeepingError);
}

TEST_CASE("overall_accuracy") {
  CHECK(overall_accuracy({18, 48, 3, 2, 3, 3}, 74) == 93.24);
  CHECK(overall_accuracy({10, 20, 0, 0, 0, 0}, 30) == 100.00);
  CHECK(overall_accuracy({0, 0, 5, 5, 0, 0}, 10) == 0.00);
  CHECK_THROWS_AS(overall_accuracy({18, 48, 3, 2, 3, 3}, 75), BookkeepingError);
  CHECK_THROWS_AS(overall_accuracy({1, 0, 0, 0, 1, 2}, 2), BookkeepingError);
}

TEST_CASE("half_error_balance") {
  auto b = half_error_balance(pattern(20, 3, 4));
  auto c = half_error_balance(pattern(20, 13, 14));
  CHECK(c.rate_first_half == b.rate_second_half);
  CHECK_FALSE(c.significant);
  b = half_error_balance(pattern(10, 10, 10));
  CHECK(b.rate_first_half == 0.0);
  CHECK(b.z == 0.0);
  CHECK_FALSE(b.significant);

  b = half_error_balance(pattern(40, 20, 40));
  CHECK(b.rate_first_half == 0.0);
  CHECK(b.rate_second_half == 1.0);
  CHECK(b.z == doctest::Approx(-6.324555320336759));
  CHECK(b.significant);

  // Odd length puts the extra event in the first half.
  b = half_error_balance(pattern(5, 0, 3));
  CHECK(b.rate_first_half == 1.0);
  CHECK(b.rate_second_half == 0.0);
  CHECK_THROWS_AS(half_error_balance(pattern(3, 0, 0)), InsufficientData);
}

TEST_CASE("run_study shapes and determinism") {
  StudyConfig c;
  c.seed = 11;
  const StudyReport r = run_study(c);
  const auto doc = to_json(r);
  CHECK(doc["tables"]["participants"]["normal"] == 53);
  CHECK(doc["tables"]["participants"]["dysgraphic"] == 21);
  CHECK(doc["training"]["normal"] == 45);
  CHECK(doc["training"]["dysgraphic"] == 30);
  CHECK(doc["training"]["augmented"] == 15);
  CHECK(report_schema_violations(doc).empty());
  CHECK(to_json(run_study(c)).dump() == doc.dump());
  CHECK(matrix_from_outcomes(r.evaluation.outcomes) == r.evaluation.matrix);
  CHECK(r.evaluation.matrix.classified() + r.evaluation.matrix.flagged_unsuitable == 74);

  std::vector<std::string> flagged;
  for (const auto& o : r.evaluation.outcomes) {
    if (!o.verdict.suitable) flagged.push_back(o.session_id);
  }
  CHECK(gate_violations(r.evaluation.audit, flagged).empty());
}

TEST_CASE("zero-noise study is perfect") {
  const StudyReport r = run_study(zero_noise());
  CHECK(r.overall_accuracy == 100.0);
  CHECK(r.evaluation.matrix.flagged_unsuitable == 3);
  CHECK(r.evaluation.matrix.flagged_confirmed == 3);
}

TEST_CASE("study config document") {
  StudyConfig c;
  c.test_normal = 10;
  c.simulator.confused.interval_trend = 0.8;
  const StudyConfig back = study_config_from_json(to_json(c));
  CHECK(back.test_normal == 10);
  CHECK(back.simulator.confused.interval_trend == 0.8);
  CHECK_THROWS_AS(study_config_from_json({{"nope", 1}}), ConfigError);
}

TEST_CASE("report schema check catches damage") {
  StudyConfig c;
  c.test_normal = 10;
  c.test_dysgraphic = 5;
  auto doc = to_json(run_study(c));
  CHECK(report_schema_violations(doc).empty());
  doc.erase("overall_accuracy");
  CHECK_FALSE(report_schema_violations(doc).empty());
}
