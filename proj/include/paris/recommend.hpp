#pragma once

// The continuous recommendation engine: assign a behavior mode from the day so
// far, rank that mode's recipes by membership probability, attach per-level
// deficits and apply metadata constraint rules.

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "paris/core.hpp"
#include "paris/ingest.hpp"

namespace paris::recommend {

enum class Comparator { Less, LessEqual, Greater, GreaterEqual, Equal };

enum class ActionType { DemoteIfVigorousDeficitAbove, CapVigorousDeficit, Exclude };

struct RuleAction {
  ActionType type = ActionType::DemoteIfVigorousDeficitAbove;
  // Demote/Exclude: vigorous-deficit threshold; Cap: the cap.
  double minutes = 0.0;

  friend bool operator==(const RuleAction&, const RuleAction&) = default;
};

struct ConstraintRule {
  std::string id;
  std::string field;
  Comparator comparator = Comparator::GreaterEqual;
  double threshold = 0.0;
  RuleAction action;

  void validate() const;
  [[nodiscard]] bool holds(const SubjectMetadata& meta) const;

  friend bool operator==(const ConstraintRule&, const ConstraintRule&) = default;
};

void to_json(nlohmann::json& j, const ConstraintRule& r);
void from_json(const nlohmann::json& j, ConstraintRule& r);

// resting_hr >= 85 demote above 15 vigorous minutes; age >= 65 cap at 10;
// bmi >= 35 demote above 20.
std::vector<ConstraintRule> default_rules();

std::vector<ConstraintRule> parse_rules(const nlohmann::json& j);

Level3 compute_deficit(const Level3& recipe_center, const Level3& achieved);

// Applies the rules in order. Returns the ids of rules whose predicate held.
// Exclude drops items whose vigorous deficit exceeds its minutes; Demote moves
// such items behind the rest (stable); Cap clamps the vigorous deficit.
std::vector<std::string> apply_constraints(std::vector<RecommendationItem>& items,
                                           const SubjectMetadata& meta,
                                           std::span<const ConstraintRule> rules);

struct PartialDay {
  std::vector<double> counts;          // minutes [0, t_m)
  std::vector<IntervalType> interval;  // empty = all ACTIVE
};

struct RecommendInput {
  const BehaviorModeModel* modes = nullptr;
  const RecipeBook* book = nullptr;
  ingest::CutPoints cut_points;
  PartialDay partial;
  int t_m = 0;
  // Start of the achieved window; defaults to the end of a bed run covering
  // minute 0 of the partial interval vector.
  std::optional<int> wake_onset;
  SubjectMetadata meta;
  std::vector<ConstraintRule> rules;
};

Recommendation recommend(const RecommendInput& in);

struct CohortDay {
  std::string subject_id;
  std::int64_t day_index = 0;
  Level3 minutes{};
  SleepQuality quality = SleepQuality::Poor;
};

struct Neighbor {
  std::string subject_id;
  std::int64_t day_index = 0;
  double distance = 0.0;
  SleepQuality quality = SleepQuality::Poor;
};

struct Evaluation {
  double success_rate = 0.0;
  std::size_t neighbors_used = 0;
  std::vector<Neighbor> neighbors;
};

// Fraction of Good nights among the n nearest (L2) full-day totals to the
// plan; ties by (subject, day). Uses the whole cohort when n exceeds it.
Evaluation retrospective_evaluate(std::span<const CohortDay> cohort, const Level3& target_plan,
                                  std::size_t n_neighbors);

// achieved + deficit of the top item.
Level3 target_plan(const Recommendation& rec);

}  // namespace paris::recommend
