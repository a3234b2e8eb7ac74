#include <doctest.h>

#include <random>

#include "paris/error.hpp"
#include "paris/recommend.hpp"
#include "recommend_scenarios.hpp"

using namespace paris;
using namespace paris::recommend;

namespace {

RecommendationItem item(int idx, double vig) {
  RecommendationItem it;
  it.recipe_index = idx;
  it.deficit = {0, 0, vig};
  return it;
}

std::vector<int> order(const std::vector<RecommendationItem>& items) {
  std::vector<int> out;
  for (const auto& it : items) out.push_back(it.recipe_index);
  return out;
}

// Flat one-mode model with the given recipes.
struct Fixture {
  BehaviorModeModel modes;
  RecipeBook book;
  RecommendInput in;

  explicit Fixture(std::vector<Level3> centers) {
    modes.subject_id = "S";
    modes.k = 1;
    modes.centroids = {std::vector<double>(1440, 100.0)};
    book.subject_id = "S";
    book.modes.emplace_back();
    for (const auto& c : centers) book.modes[0].push_back(Recipe{c, 5, 1, {}});
    in.modes = &modes;
    in.book = &book;
  }

  // Minutes [0, t_m): `light` light minutes, then `moderate` moderate, rest sedentary.
  void day(int t_m, int light, int moderate, int vigorous = 0) {
    in.t_m = t_m;
    in.partial.counts.assign(static_cast<std::size_t>(t_m), 0.0);
    int m = 0;
    for (int i = 0; i < light; ++i) in.partial.counts[m++] = 500;
    for (int i = 0; i < moderate; ++i) in.partial.counts[m++] = 2000;
    for (int i = 0; i < vigorous; ++i) in.partial.counts[m++] = 5000;
  }
};

}  // namespace

TEST_CASE("deficits are clamped differences") {
  CHECK(compute_deficit({300, 30, 10}, {200, 35, 0}) == Level3{100, 0, 10});
  CHECK(compute_deficit({300, 30, 10}, {300, 30, 10}) == Level3{0, 0, 0});
  CHECK(compute_deficit({300, 30, 10}, {0, 0, 0}) == Level3{300, 30, 10});
}

TEST_CASE("demotion follows the resting heart rate rule") {
  const ConstraintRule hr{"hr", "resting_hr", Comparator::GreaterEqual, 85,
                          {ActionType::DemoteIfVigorousDeficitAbove, 15}};
  SubjectMetadata meta;
  meta.resting_hr = 90;
  std::vector<RecommendationItem> items{item(0, 30), item(1, 0)};
  const auto fired = apply_constraints(items, meta, std::vector<ConstraintRule>{hr});
  CHECK(order(items) == std::vector<int>{1, 0});
  CHECK(items[1].constraint_flags == std::vector<std::string>{"hr"});
  CHECK(items[0].constraint_flags.empty());
  CHECK(fired == std::vector<std::string>{"hr"});

  meta.resting_hr = 65;
  std::vector<RecommendationItem> calm{item(0, 30), item(1, 0)};
  CHECK(apply_constraints(calm, meta, std::vector<ConstraintRule>{hr}).empty());
  CHECK(order(calm) == std::vector<int>{0, 1});
  CHECK(calm[0].constraint_flags.empty());

  std::vector<RecommendationItem> none{item(0, 30), item(1, 0)};
  const auto copy = none;
  CHECK(apply_constraints(none, meta, std::vector<ConstraintRule>{}).empty());
  CHECK(none == copy);
}

TEST_CASE("cap and exclude") {
  SubjectMetadata meta;
  meta.age = 70;
  meta.bmi = 42;
  const ConstraintRule cap{"cap", "age", Comparator::GreaterEqual, 65, {ActionType::CapVigorousDeficit, 10}};
  const ConstraintRule ex{"ex", "bmi", Comparator::Greater, 40, {ActionType::Exclude, 12}};
  std::vector<RecommendationItem> items{item(0, 30), item(1, 5), item(2, 12)};
  apply_constraints(items, meta, std::vector<ConstraintRule>{ex});
  CHECK(order(items) == std::vector<int>{1, 2});
  apply_constraints(items, meta, std::vector<ConstraintRule>{cap});
  CHECK(items[1].deficit[2] == 10);
  CHECK(items[1].constraint_flags == std::vector<std::string>{"cap"});
  CHECK(items[0].constraint_flags.empty());
}

TEST_CASE("rule predicates and parsing") {
  SubjectMetadata meta;
  meta.age = 65;
  ConstraintRule r{"r", "age", Comparator::GreaterEqual, 65, {ActionType::CapVigorousDeficit, 10}};
  CHECK(r.holds(meta));
  r.comparator = Comparator::Greater;
  CHECK_FALSE(r.holds(meta));
  r.comparator = Comparator::Equal;
  CHECK(r.holds(meta));
  r.comparator = Comparator::LessEqual;
  CHECK(r.holds(meta));
  r.comparator = Comparator::Less;
  CHECK_FALSE(r.holds(meta));
  r.field = "bmi";
  CHECK_FALSE(r.holds(meta));  // absent value never triggers
  r.field = "shoe_size";
  CHECK_THROWS_AS((void)r.holds(meta), Error);

  const auto parsed = parse_rules(nlohmann::json::parse(R"([
    {"id": "hr", "field": "resting_hr", "comparator": ">=", "threshold": 85,
     "action": {"type": "DemoteIfVigorousDeficitAbove", "minutes": 15}},
    {"id": "age", "field": "age", "comparator": "≥", "threshold": 65,
     "action": {"type": "CapVigorousDeficit", "minutes": 10}}
  ])"));
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0].comparator == Comparator::GreaterEqual);
  CHECK(parsed[1].comparator == Comparator::GreaterEqual);
  CHECK(parsed[1].action.type == ActionType::CapVigorousDeficit);
  CHECK(nlohmann::json(parsed[0]).get<ConstraintRule>() == parsed[0]);
  CHECK_THROWS_AS(parse_rules(nlohmann::json::object()), Error);
  CHECK_THROWS_AS(parse_rules(nlohmann::json::parse(R"([{"id": "x"}])")), Error);

  const auto d = default_rules();
  REQUIRE(d.size() == 3);
  CHECK(d[0].id == "resting_hr_high");
  CHECK(d[1].action.type == ActionType::CapVigorousDeficit);
  CHECK(d[2].threshold == 35);
}

TEST_CASE("mid-day scenario ranks the nearest recipe first") {
  Fixture f({{300, 30, 10}, {120, 5, 0}});
  f.day(720, 150, 10);
  const auto rec = recommend::recommend(f.in);
  CHECK(rec.achieved == Level3{150, 10, 0});
  REQUIRE(rec.ordered_items.size() == 2);
  CHECK(rec.ordered_items[0].recipe_index == 1);
  CHECK(rec.ordered_items[0].deficit == Level3{0, 0, 0});
  CHECK(rec.ordered_items[1].deficit == Level3{150, 20, 10});
  CHECK(rec.ordered_items[0].distance == doctest::Approx(std::sqrt(30.0 * 30 + 5 * 5)));
  CHECK(rec.ordered_items[1].distance == doctest::Approx(std::sqrt(150.0 * 150 + 20 * 20 + 10 * 10)));
  CHECK(target_plan(rec) == Level3{150, 10, 0});
}

TEST_CASE("exact match at the end of the day") {
  Fixture f({{60, 20, 10}, {300, 30, 0}});
  f.day(1440, 60, 20, 10);
  f.modes.centroids[0] = f.in.partial.counts;
  const auto rec = recommend::recommend(f.in);
  CHECK(rec.mode_distance == 0);
  CHECK(rec.ordered_items[0].recipe_index == 0);
  CHECK(rec.ordered_items[0].deficit == Level3{0, 0, 0});
  CHECK(rec.ordered_items[0].membership_probability > 1 - 1e-6);
}

TEST_CASE("equidistant recipes split evenly and keep recipe order") {
  Fixture f({{200, 10, 0}, {100, 10, 0}});
  f.day(720, 150, 10);
  const auto rec = recommend::recommend(f.in);
  CHECK(rec.ordered_items[0].recipe_index == 0);
  CHECK(rec.ordered_items[0].membership_probability == doctest::Approx(0.5));
  CHECK(rec.ordered_items[1].membership_probability == doctest::Approx(0.5));
}

TEST_CASE("achieved counts active minutes from wake onset") {
  Fixture f({{100, 0, 0}});
  f.day(600, 600, 0);
  f.in.partial.interval.assign(600, IntervalType::Active);
  for (int m = 0; m < 400; ++m) f.in.partial.interval[m] = IntervalType::RestS;
  auto rec = recommend::recommend(f.in);
  CHECK(rec.wake_onset == 400);
  CHECK(rec.achieved == Level3{200, 0, 0});
  f.in.wake_onset = 500;
  rec = recommend::recommend(f.in);
  CHECK(rec.achieved == Level3{100, 0, 0});
  f.in.wake_onset = 600;
  CHECK(recommend::recommend(f.in).achieved == Level3{0, 0, 0});
}

TEST_CASE("recommend input errors") {
  Fixture f({{100, 0, 0}});
  auto code_of = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  f.day(720, 10, 0);
  f.in.t_m = 0;
  f.in.partial.counts.clear();
  CHECK(code_of([&] { recommend::recommend(f.in); }) == ErrorCode::BadWindow);
  f.day(720, 10, 0);
  f.in.partial.counts.pop_back();
  CHECK(code_of([&] { recommend::recommend(f.in); }) == ErrorCode::LengthMismatch);
  f.day(720, 10, 0);
  f.in.wake_onset = 721;
  CHECK(code_of([&] { recommend::recommend(f.in); }) == ErrorCode::BadWindow);
  f.in.wake_onset.reset();
  f.book.modes[0].clear();
  CHECK(code_of([&] { recommend::recommend(f.in); }) == ErrorCode::NoRecipesForMode);
}

TEST_CASE("recommendation invariants on random scenarios") {
  std::mt19937_64 g(2024);
  for (int i = 0; i < 300; ++i) {
    const auto s = scenarios::random_scenario(g);
    const auto problem = scenarios::check_invariants(s);
    INFO("scenario " << i);
    CHECK(problem == "");
  }
}

TEST_CASE("retrospective evaluation") {
  std::vector<CohortDay> one{{"S", 0, {10, 1, 0}, SleepQuality::Good}};
  const auto e1 = retrospective_evaluate(one, {500, 50, 50}, 1);
  CHECK(e1.success_rate == 1.0);
  CHECK(e1.neighbors_used == 1);

  std::vector<CohortDay> cohort{{"B", 1, {100, 0, 0}, SleepQuality::Good},
                                {"A", 2, {100, 0, 0}, SleepQuality::Poor},
                                {"A", 1, {100, 0, 0}, SleepQuality::Good},
                                {"C", 0, {300, 0, 0}, SleepQuality::Poor}};
  const auto e2 = retrospective_evaluate(cohort, {100, 0, 0}, 2);
  REQUIRE(e2.neighbors.size() == 2);
  CHECK(e2.neighbors[0].subject_id == "A");
  CHECK(e2.neighbors[0].day_index == 1);
  CHECK(e2.neighbors[1].day_index == 2);
  CHECK(e2.success_rate == 0.5);

  const auto all = retrospective_evaluate(cohort, {0, 0, 0}, 99);
  CHECK(all.neighbors_used == 4);
  CHECK(all.success_rate == 0.5);

  CHECK_THROWS_AS(retrospective_evaluate(std::vector<CohortDay>{}, {0, 0, 0}, 3), Error);
  CHECK_THROWS_AS(retrospective_evaluate(cohort, {0, 0, 0}, 0), Error);
}

TEST_CASE("retrospective evaluation matches a sort-everything oracle") {
  std::mt19937_64 g(12);
  std::uniform_int_distribution<int> v(0, 20);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<CohortDay> cohort;
    for (int i = 0; i < 40; ++i) {
      cohort.push_back({std::string(1, static_cast<char>('A' + v(g) % 4)), i,
                        {10.0 * v(g), 1.0 * v(g), 0}, v(g) % 2 ? SleepQuality::Good : SleepQuality::Poor});
    }
    const Level3 plan{100, 10, 0};
    auto sorted = cohort;
    std::sort(sorted.begin(), sorted.end(), [&](const auto& a, const auto& b) {
      auto sq = [&](const CohortDay& d) {
        return (d.minutes[0] - plan[0]) * (d.minutes[0] - plan[0]) +
               (d.minutes[1] - plan[1]) * (d.minutes[1] - plan[1]);
      };
      const double da = sq(a);
      const double db = sq(b);
      if (da != db) return da < db;
      if (a.subject_id != b.subject_id) return a.subject_id < b.subject_id;
      return a.day_index < b.day_index;
    });
    const auto ev = retrospective_evaluate(cohort, plan, 10);
    int good = 0;
    for (int i = 0; i < 10; ++i) {
      CHECK(ev.neighbors[i].day_index == sorted[i].day_index);
      good += sorted[i].quality == SleepQuality::Good;
    }
    CHECK(ev.success_rate == good / 10.0);
  }
}
