#pragma once

// JSON encodings for the core types. Field names follow the type definitions
// in core.hpp; enumerations are encoded as their lowercase/CSV spellings.

#include <json.hpp>

#include "paris/core.hpp"

namespace paris {

void to_json(nlohmann::json& j, ActivityLevel v);
void from_json(const nlohmann::json& j, ActivityLevel& v);
void to_json(nlohmann::json& j, IntervalType v);
void from_json(const nlohmann::json& j, IntervalType& v);
void to_json(nlohmann::json& j, SleepQuality v);
void from_json(const nlohmann::json& j, SleepQuality& v);
void to_json(nlohmann::json& j, Gender v);
void from_json(const nlohmann::json& j, Gender& v);
void to_json(nlohmann::json& j, MetricId v);
void from_json(const nlohmann::json& j, MetricId& v);
void to_json(nlohmann::json& j, ModeDomain v);
void from_json(const nlohmann::json& j, ModeDomain& v);

void to_json(nlohmann::json& j, const EpochRecord& v);
void from_json(const nlohmann::json& j, EpochRecord& v);
void to_json(nlohmann::json& j, const ActigraphyDay& v);
void from_json(const nlohmann::json& j, ActigraphyDay& v);
void to_json(nlohmann::json& j, const Violation& v);
void from_json(const nlohmann::json& j, Violation& v);
void to_json(nlohmann::json& j, const LevelSummary& v);
void from_json(const nlohmann::json& j, LevelSummary& v);
void to_json(nlohmann::json& j, const SleepRecord& v);
void from_json(const nlohmann::json& j, SleepRecord& v);
void to_json(nlohmann::json& j, const SubjectMetadata& v);
void from_json(const nlohmann::json& j, SubjectMetadata& v);
void to_json(nlohmann::json& j, const BehaviorModeModel& v);
void from_json(const nlohmann::json& j, BehaviorModeModel& v);
void to_json(nlohmann::json& j, const Recipe& v);
void from_json(const nlohmann::json& j, Recipe& v);
void to_json(nlohmann::json& j, const RecipeBook& v);
void from_json(const nlohmann::json& j, RecipeBook& v);
void to_json(nlohmann::json& j, const RecommendationItem& v);
void from_json(const nlohmann::json& j, RecommendationItem& v);
void to_json(nlohmann::json& j, const Recommendation& v);
void from_json(const nlohmann::json& j, Recommendation& v);

// Canonical text form of a recommendation, shared by the CLI and the HTTP
// service so both emit identical bytes. The explain block carries the mode
// distances, per-item distances and triggered rule ids.
std::string render_recommendation(const Recommendation& rec, bool explain);

}  // namespace paris
