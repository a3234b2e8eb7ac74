#include <doctest.h>

#include <cmath>
#include <limits>

#include "paris/core.hpp"
#include "paris/error.hpp"
#include "paris/json_io.hpp"
#include "test_util.hpp"

using namespace paris;

TEST_CASE("validate_day accepts a well-formed zero day") {
  CHECK(validate_day(testutil::flat_day(0.0)).empty());
}

TEST_CASE("validate_day flags a short counts vector") {
  auto d = testutil::flat_day(0.0);
  d.counts.resize(1439);
  const auto v = validate_day(d);
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "counts.length");
}

TEST_CASE("validate_day flags a negative count") {
  auto d = testutil::flat_day(0.0);
  d.counts[7] = -3;
  const auto v = validate_day(d);
  REQUIRE(v.size() == 1);
  CHECK(v[0].message == "counts[7] < 0");
}

TEST_CASE("validate_day flags NaN and bad wake") {
  auto d = testutil::flat_day(1.0);
  d.counts[3] = std::numeric_limits<double>::quiet_NaN();
  d.wake[9] = 2;
  CHECK(validate_day(d).size() == 2);
}

TEST_CASE("day of week is anchored on Monday") {
  CHECK(day_of_week_for(0) == 0);
  CHECK(day_of_week_for(5) == 5);
  CHECK(day_of_week_for(13) == 6);
  CHECK(day_of_week_for(14) == 0);
  CHECK(day_of_week_for(-1) == 6);
  CHECK(is_weekend(5));
  CHECK(is_weekend(6));
  CHECK_FALSE(is_weekend(4));
}

TEST_CASE("sleep record efficiency and quality") {
  const auto perfect = SleepRecord::from_bed_minutes("S", 0, 480, 0);
  CHECK(perfect.efficiency == 1.0);
  CHECK(perfect.minutes_asleep == 480);
  CHECK(perfect.quality == SleepQuality::Good);

  // 0.90 exactly is not good; the rule is strict.
  const auto edge = SleepRecord::from_bed_minutes("S", 0, 100, 10);
  CHECK(edge.efficiency == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(edge.quality == SleepQuality::Poor);

  const auto empty = SleepRecord::from_bed_minutes("S", 0, 0, 0);
  CHECK(empty.efficiency == 0.0);
  CHECK(empty.quality == SleepQuality::Poor);
}

TEST_CASE("enum spellings round trip") {
  for (auto t : {IntervalType::Active, IntervalType::Rest, IntervalType::RestS, IntervalType::Excluded}) {
    CHECK(parse_interval_type(to_string(t)) == t);
  }
  CHECK(to_string(IntervalType::RestS) == "REST-S");
  CHECK_FALSE(parse_interval_type("RESTX").has_value());
  for (auto m : {MetricId::L1, MetricId::L2, MetricId::DTW, MetricId::CorrelationDistance,
                 MetricId::SymmetrizedKL, MetricId::JS}) {
    CHECK(parse_metric(to_string(m)) == m);
  }
  CHECK_FALSE(parse_metric("cosine").has_value());
  CHECK(parse_domain("frequency") == ModeDomain::Frequency);
}

TEST_CASE("metadata numeric fields") {
  SubjectMetadata m;
  m.age = 70;
  m.gender = Gender::Male;
  m.extensions["vo2max"] = 31.5;
  CHECK(m.numeric_field("age") == 70.0);
  CHECK(m.numeric_field("gender") == 1.0);
  CHECK(m.numeric_field("vo2max") == 31.5);
  CHECK_FALSE(m.numeric_field("bmi").has_value());
  CHECK(m.has_field("bmi"));
  CHECK_FALSE(m.has_field("shoe_size"));
  try {
    (void)m.numeric_field("shoe_size");
    FAIL("expected UnknownMetadataField");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownMetadataField);
  }
}

TEST_CASE("JSON encodings round trip") {
  BehaviorModeModel model;
  model.subject_id = "S001";
  model.metric = MetricId::JS;
  model.k = 2;
  model.centroids = {{1, 2, 3}, {4, 5, 6}};
  model.day_assignments = {{0, 0}, {5, 1}};
  model.silhouette = 0.75;
  model.fit_config = {{"seed", 42}};
  CHECK(nlohmann::json(model).get<BehaviorModeModel>() == model);

  RecipeBook book;
  book.subject_id = "S001";
  book.modes = {{Recipe{{300, 30, 10}, 9, 1, {0, 1, 2}}}, {}};
  CHECK(nlohmann::json(book).get<RecipeBook>() == book);
  CHECK(book.recipe_count() == 1);

  SubjectMetadata meta;
  meta.subject_id = "S001";
  meta.bmi = 27.5;
  meta.gender = Gender::Female;
  meta.extensions["steps_goal"] = 8000;
  CHECK(nlohmann::json(meta).get<SubjectMetadata>() == meta);

  Recommendation rec;
  rec.subject_id = "S001";
  rec.t_m = 720;
  rec.achieved = {150, 10, 0};
  rec.ordered_items = {RecommendationItem{1, {120, 5, 0}, 0.8, 30.4, {0, 0, 0}, {}}};
  rec.mode_distances = {1.5, 9.0};
  rec.triggered_rules = {"age_65_plus"};
  CHECK(nlohmann::json(rec).get<Recommendation>() == rec);
}

TEST_CASE("render_recommendation hides the explain block unless asked") {
  Recommendation rec;
  rec.subject_id = "S";
  rec.mode_distances = {2.0};
  rec.triggered_rules = {"r"};
  rec.ordered_items = {RecommendationItem{0, {1, 2, 3}, 1.0, 4.0, {1, 2, 3}, {}}};
  const auto plain = nlohmann::json::parse(render_recommendation(rec, false));
  const auto full = nlohmann::json::parse(render_recommendation(rec, true));
  CHECK_FALSE(plain.contains("explain"));
  CHECK(full.contains("explain"));
  CHECK(render_recommendation(rec, true).back() == '\n');
  CHECK(render_recommendation(rec, true) == render_recommendation(rec, true));
}

TEST_CASE("Error carries its code in the message") {
  const Error e(ErrorCode::BadWindow, "t_m out of range");
  CHECK(e.code() == ErrorCode::BadWindow);
  CHECK(std::string(e.what()).starts_with("BadWindow"));
}
