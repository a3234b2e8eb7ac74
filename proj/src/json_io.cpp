#include "paris/json_io.hpp"

#include <string>

#include "paris/error.hpp"

namespace paris {

using nlohmann::json;

namespace {

template <typename T, typename Parse>
T parse_enum(const json& j, Parse parse, const char* what) {
  const auto s = j.get<std::string>();
  if (auto v = parse(s)) return *v;
  throw Error(ErrorCode::ParseError, std::string("unknown ") + what + " '" + s + "'");
}

std::optional<ActivityLevel> parse_level(std::string_view s) {
  for (auto l : {ActivityLevel::Sedentary, ActivityLevel::Light, ActivityLevel::Moderate,
                 ActivityLevel::Vigorous}) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

std::optional<SleepQuality> parse_quality(std::string_view s) {
  if (s == "Good") return SleepQuality::Good;
  if (s == "Poor") return SleepQuality::Poor;
  return std::nullopt;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional_number(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

void to_json(json& j, ActivityLevel v) { j = std::string(to_string(v)); }
void from_json(const json& j, ActivityLevel& v) {
  v = parse_enum<ActivityLevel>(j, parse_level, "activity level");
}
void to_json(json& j, IntervalType v) { j = std::string(to_string(v)); }
void from_json(const json& j, IntervalType& v) {
  v = parse_enum<IntervalType>(j, parse_interval_type, "interval_type");
}
void to_json(json& j, SleepQuality v) { j = std::string(to_string(v)); }
void from_json(const json& j, SleepQuality& v) {
  v = parse_enum<SleepQuality>(j, parse_quality, "quality");
}
void to_json(json& j, Gender v) { j = std::string(to_string(v)); }
void from_json(const json& j, Gender& v) { v = parse_enum<Gender>(j, parse_gender, "gender"); }
void to_json(json& j, MetricId v) { j = std::string(to_string(v)); }
void from_json(const json& j, MetricId& v) { v = parse_enum<MetricId>(j, parse_metric, "metric"); }
void to_json(json& j, ModeDomain v) { j = std::string(to_string(v)); }
void from_json(const json& j, ModeDomain& v) {
  v = parse_enum<ModeDomain>(j, parse_domain, "domain");
}

void to_json(json& j, const EpochRecord& v) {
  j = json{{"subject_id", v.subject_id},         {"day_index", v.day_index},
           {"epoch_index", v.epoch_index},       {"activity_count", v.activity_count},
           {"interval_type", v.interval},        {"wake", v.wake ? 1 : 0}};
}
void from_json(const json& j, EpochRecord& v) {
  j.at("subject_id").get_to(v.subject_id);
  j.at("day_index").get_to(v.day_index);
  j.at("epoch_index").get_to(v.epoch_index);
  j.at("activity_count").get_to(v.activity_count);
  j.at("interval_type").get_to(v.interval);
  v.wake = j.at("wake").get<int>() != 0;
}

void to_json(json& j, const ActigraphyDay& v) {
  j = json{{"subject_id", v.subject_id}, {"day_index", v.day_index},
           {"day_of_week", v.day_of_week}, {"counts", v.counts},
           {"interval", v.interval},      {"wake", v.wake}};
}
void from_json(const json& j, ActigraphyDay& v) {
  j.at("subject_id").get_to(v.subject_id);
  j.at("day_index").get_to(v.day_index);
  j.at("day_of_week").get_to(v.day_of_week);
  j.at("counts").get_to(v.counts);
  j.at("interval").get_to(v.interval);
  j.at("wake").get_to(v.wake);
}

void to_json(json& j, const Violation& v) {
  j = json{{"field", v.field}, {"message", v.message}};
}
void from_json(const json& j, Violation& v) {
  j.at("field").get_to(v.field);
  j.at("message").get_to(v.message);
}

void to_json(json& j, const LevelSummary& v) {
  j = json{{"subject_id", v.subject_id},     {"day_index", v.day_index},
           {"window_start", v.window_start}, {"window_end", v.window_end},
           {"minutes", v.minutes}};
}
void from_json(const json& j, LevelSummary& v) {
  j.at("subject_id").get_to(v.subject_id);
  j.at("day_index").get_to(v.day_index);
  j.at("window_start").get_to(v.window_start);
  j.at("window_end").get_to(v.window_end);
  j.at("minutes").get_to(v.minutes);
}

void to_json(json& j, const SleepRecord& v) {
  j = json{{"subject_id", v.subject_id},
           {"day_index", v.day_index},
           {"minutes_in_bed", v.minutes_in_bed},
           {"minutes_asleep", v.minutes_asleep},
           {"minutes_awake_in_bed", v.minutes_awake_in_bed},
           {"efficiency", v.efficiency},
           {"quality", v.quality}};
}
void from_json(const json& j, SleepRecord& v) {
  j.at("subject_id").get_to(v.subject_id);
  j.at("day_index").get_to(v.day_index);
  j.at("minutes_in_bed").get_to(v.minutes_in_bed);
  j.at("minutes_asleep").get_to(v.minutes_asleep);
  j.at("minutes_awake_in_bed").get_to(v.minutes_awake_in_bed);
  j.at("efficiency").get_to(v.efficiency);
  j.at("quality").get_to(v.quality);
}

void to_json(json& j, const SubjectMetadata& v) {
  j = json{{"subject_id", v.subject_id},
           {"age", optional_number(v.age)},
           {"gender", v.gender ? json(*v.gender) : json(nullptr)},
           {"bmi", optional_number(v.bmi)},
           {"resting_hr", optional_number(v.resting_hr)},
           {"extensions", v.extensions}};
}
void from_json(const json& j, SubjectMetadata& v) {
  j.at("subject_id").get_to(v.subject_id);
  v.age = read_optional_number(j, "age");
  v.bmi = read_optional_number(j, "bmi");
  v.resting_hr = read_optional_number(j, "resting_hr");
  if (j.contains("gender") && !j.at("gender").is_null()) {
    v.gender = j.at("gender").get<Gender>();
  } else {
    v.gender.reset();
  }
  v.extensions.clear();
  if (j.contains("extensions")) j.at("extensions").get_to(v.extensions);
}

void to_json(json& j, const BehaviorModeModel& v) {
  json assignments = json::object();
  for (const auto& [day, mode] : v.day_assignments) assignments[std::to_string(day)] = mode;
  j = json{{"subject_id", v.subject_id}, {"domain", v.domain},
           {"metric", v.metric},         {"k", v.k},
           {"centroids", v.centroids},   {"day_assignments", assignments},
           {"silhouette", v.silhouette}, {"fit_config", v.fit_config}};
}
void from_json(const json& j, BehaviorModeModel& v) {
  j.at("subject_id").get_to(v.subject_id);
  j.at("domain").get_to(v.domain);
  j.at("metric").get_to(v.metric);
  j.at("k").get_to(v.k);
  j.at("centroids").get_to(v.centroids);
  v.day_assignments.clear();
  for (const auto& [key, mode] : j.at("day_assignments").items()) {
    v.day_assignments[std::stoll(key)] = mode.get<int>();
  }
  j.at("silhouette").get_to(v.silhouette);
  v.fit_config = j.value("fit_config", json::object());
}

void to_json(json& j, const Recipe& v) {
  j = json{{"center", v.center},
           {"good", v.good_count},
           {"poor", v.poor_count},
           {"days", v.member_days}};
}
void from_json(const json& j, Recipe& v) {
  j.at("center").get_to(v.center);
  j.at("good").get_to(v.good_count);
  j.at("poor").get_to(v.poor_count);
  j.at("days").get_to(v.member_days);
}

void to_json(json& j, const RecipeBook& v) {
  j = json{{"subject_id", v.subject_id}, {"modes", v.modes}};
}
void from_json(const json& j, RecipeBook& v) {
  j.at("subject_id").get_to(v.subject_id);
  j.at("modes").get_to(v.modes);
}

void to_json(json& j, const RecommendationItem& v) {
  j = json{{"recipe_index", v.recipe_index},
           {"center", v.center},
           {"membership_probability", v.membership_probability},
           {"distance", v.distance},
           {"deficit", v.deficit},
           {"constraint_flags", v.constraint_flags}};
}
void from_json(const json& j, RecommendationItem& v) {
  j.at("recipe_index").get_to(v.recipe_index);
  j.at("center").get_to(v.center);
  j.at("membership_probability").get_to(v.membership_probability);
  v.distance = j.value("distance", 0.0);
  j.at("deficit").get_to(v.deficit);
  j.at("constraint_flags").get_to(v.constraint_flags);
}

void to_json(json& j, const Recommendation& v) {
  j = json{{"subject_id", v.subject_id},
           {"mode", v.mode},
           {"t_m", v.t_m},
           {"achieved", v.achieved},
           {"ordered_items", v.ordered_items},
           {"explain",
            {{"wake_onset", v.wake_onset},
             {"mode_distance", v.mode_distance},
             {"mode_distances", v.mode_distances},
             {"triggered_rules", v.triggered_rules}}}};
}
void from_json(const json& j, Recommendation& v) {
  j.at("subject_id").get_to(v.subject_id);
  j.at("mode").get_to(v.mode);
  j.at("t_m").get_to(v.t_m);
  j.at("achieved").get_to(v.achieved);
  j.at("ordered_items").get_to(v.ordered_items);
  if (j.contains("explain")) {
    const auto& e = j.at("explain");
    e.at("wake_onset").get_to(v.wake_onset);
    e.at("mode_distance").get_to(v.mode_distance);
    e.at("mode_distances").get_to(v.mode_distances);
    e.at("triggered_rules").get_to(v.triggered_rules);
  }
}

std::string render_recommendation(const Recommendation& rec, bool explain) {
  json j = rec;
  if (!explain) {
    j.erase("explain");
    for (auto& item : j["ordered_items"]) item.erase("distance");
  }
  return j.dump(2) + "\n";
}

}  // namespace paris
