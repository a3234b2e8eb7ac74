#include "paris/recommend.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "paris/cluster.hpp"
#include "paris/error.hpp"
#include "paris/modes.hpp"

namespace paris::recommend {

namespace {

constexpr std::size_t kVigorous = 2;

std::string_view comparator_name(Comparator c) {
  switch (c) {
    case Comparator::Less: return "<";
    case Comparator::LessEqual: return "<=";
    case Comparator::Greater: return ">";
    case Comparator::GreaterEqual: return ">=";
    case Comparator::Equal: return "=";
  }
  return "?";
}

Comparator parse_comparator(const std::string& s) {
  if (s == "<") return Comparator::Less;
  if (s == "<=" || s == "≤") return Comparator::LessEqual;
  if (s == ">") return Comparator::Greater;
  if (s == ">=" || s == "≥") return Comparator::GreaterEqual;
  if (s == "=" || s == "==") return Comparator::Equal;
  throw Error(ErrorCode::ParseError, fmt::format("unknown comparator '{}'", s));
}

std::string_view action_name(ActionType t) {
  switch (t) {
    case ActionType::DemoteIfVigorousDeficitAbove: return "DemoteIfVigorousDeficitAbove";
    case ActionType::CapVigorousDeficit: return "CapVigorousDeficit";
    case ActionType::Exclude: return "Exclude";
  }
  return "?";
}

ActionType parse_action(const std::string& s) {
  if (s == "DemoteIfVigorousDeficitAbove") return ActionType::DemoteIfVigorousDeficitAbove;
  if (s == "CapVigorousDeficit") return ActionType::CapVigorousDeficit;
  if (s == "Exclude") return ActionType::Exclude;
  throw Error(ErrorCode::ParseError, fmt::format("unknown action type '{}'", s));
}

}  // namespace

void ConstraintRule::validate() const {
  if (field.empty()) throw Error(ErrorCode::InvalidArgument, fmt::format("rule '{}' has no field", id));
  if (!(action.minutes >= 0)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("rule '{}' minutes must be >= 0", id));
  }
}

bool ConstraintRule::holds(const SubjectMetadata& meta) const {
  const auto v = meta.numeric_field(field);
  if (!v) return false;
  switch (comparator) {
    case Comparator::Less: return *v < threshold;
    case Comparator::LessEqual: return *v <= threshold;
    case Comparator::Greater: return *v > threshold;
    case Comparator::GreaterEqual: return *v >= threshold;
    case Comparator::Equal: return *v == threshold;
  }
  return false;
}

void to_json(nlohmann::json& j, const ConstraintRule& r) {
  j = nlohmann::json{{"id", r.id},
                     {"field", r.field},
                     {"comparator", comparator_name(r.comparator)},
                     {"threshold", r.threshold},
                     {"action", {{"type", action_name(r.action.type)}, {"minutes", r.action.minutes}}}};
}

void from_json(const nlohmann::json& j, ConstraintRule& r) {
  try {
    r.id = j.at("id").get<std::string>();
    r.field = j.at("field").get<std::string>();
    r.comparator = parse_comparator(j.at("comparator").get<std::string>());
    r.threshold = j.at("threshold").get<double>();
    const auto& a = j.at("action");
    r.action.type = parse_action(a.at("type").get<std::string>());
    r.action.minutes = a.value("minutes", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, fmt::format("bad rule: {}", e.what()));
  }
  r.validate();
}

std::vector<ConstraintRule> default_rules() {
  return {
      {"resting_hr_high", "resting_hr", Comparator::GreaterEqual, 85.0,
       {ActionType::DemoteIfVigorousDeficitAbove, 15.0}},
      {"age_65_plus", "age", Comparator::GreaterEqual, 65.0, {ActionType::CapVigorousDeficit, 10.0}},
      {"bmi_35_plus", "bmi", Comparator::GreaterEqual, 35.0,
       {ActionType::DemoteIfVigorousDeficitAbove, 20.0}},
  };
}

std::vector<ConstraintRule> parse_rules(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "rules file must hold a JSON array");
  std::vector<ConstraintRule> rules;
  for (const auto& r : j) rules.push_back(r.get<ConstraintRule>());
  return rules;
}

Level3 compute_deficit(const Level3& recipe_center, const Level3& achieved) {
  Level3 d{};
  for (std::size_t l = 0; l < 3; ++l) d[l] = std::max(0.0, recipe_center[l] - achieved[l]);
  return d;
}

std::vector<std::string> apply_constraints(std::vector<RecommendationItem>& items,
                                           const SubjectMetadata& meta,
                                           std::span<const ConstraintRule> rules) {
  std::vector<std::string> triggered;
  for (const auto& rule : rules) {
    if (!rule.holds(meta)) continue;
    triggered.push_back(rule.id);
    const double x = rule.action.minutes;
    switch (rule.action.type) {
      case ActionType::Exclude:
        std::erase_if(items, [x](const auto& it) { return it.deficit[kVigorous] > x; });
        break;
      case ActionType::DemoteIfVigorousDeficitAbove: {
        auto violates = [x](const auto& it) { return it.deficit[kVigorous] > x; };
        for (auto& it : items) {
          if (violates(it)) it.constraint_flags.push_back(rule.id);
        }
        std::stable_partition(items.begin(), items.end(),
                              [&](const auto& it) { return !violates(it); });
        break;
      }
      case ActionType::CapVigorousDeficit:
        for (auto& it : items) {
          if (it.deficit[kVigorous] > x) {
            it.deficit[kVigorous] = x;
            it.constraint_flags.push_back(rule.id);
          }
        }
        break;
    }
  }
  return triggered;
}

Recommendation recommend(const RecommendInput& in) {
  if (in.modes == nullptr || in.book == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "recommend needs a mode model and a recipe book");
  }
  if (in.t_m < 1 || in.t_m > static_cast<int>(kMinutesPerDay)) {
    throw Error(ErrorCode::BadWindow, fmt::format("t_m = {} not in 1..1440", in.t_m));
  }
  const auto t_m = static_cast<std::size_t>(in.t_m);
  if (in.partial.counts.size() != t_m) {
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("partial day has {} minutes for t_m = {}", in.partial.counts.size(), t_m));
  }
  if (!in.partial.interval.empty() && in.partial.interval.size() != t_m) {
    throw Error(ErrorCode::LengthMismatch, "partial interval vector does not match t_m");
  }
  for (const auto& rule : in.rules) rule.validate();

  const auto assignment = modes::assign_mode_partial(*in.modes, in.partial.counts, in.t_m);
  const auto mode = static_cast<std::size_t>(assignment.mode);
  if (mode >= in.book->modes.size() || in.book->modes[mode].empty()) {
    throw Error(ErrorCode::NoRecipesForMode, fmt::format("no recipes for mode {}", mode));
  }
  const auto& recipes = in.book->modes[mode];

  std::vector<IntervalType> interval = in.partial.interval;
  if (interval.empty()) interval.assign(t_m, IntervalType::Active);
  const int onset = in.wake_onset.value_or(ingest::wake_onset(interval));
  if (onset < 0 || onset > in.t_m) {
    throw Error(ErrorCode::BadWindow, fmt::format("wake onset {} outside 0..{}", onset, in.t_m));
  }
  std::vector<ActivityLevel> labels(t_m);
  for (std::size_t m = 0; m < t_m; ++m) {
    labels[m] = ingest::label_count(in.partial.counts[m], in.cut_points);
  }
  Level3 achieved{};
  if (onset < in.t_m) achieved = ingest::level_totals(labels, interval, onset, in.t_m, true);

  std::vector<double> distances;
  for (const auto& r : recipes) {
    distances.push_back(metrics::dist_elementwise(MetricId::L2, r.center, achieved));
  }
  const auto probs = cluster::membership_from_distances(distances);

  Recommendation rec;
  rec.subject_id = in.modes->subject_id;
  rec.mode = assignment.mode;
  rec.t_m = in.t_m;
  rec.wake_onset = onset;
  rec.achieved = achieved;
  rec.mode_distance = assignment.distance;
  rec.mode_distances = assignment.distances;
  for (std::size_t i = 0; i < recipes.size(); ++i) {
    RecommendationItem item;
    item.recipe_index = static_cast<int>(i);
    item.center = recipes[i].center;
    item.membership_probability = probs[i];
    item.distance = distances[i];
    item.deficit = compute_deficit(recipes[i].center, achieved);
    rec.ordered_items.push_back(std::move(item));
  }
  std::stable_sort(rec.ordered_items.begin(), rec.ordered_items.end(),
                   [](const auto& a, const auto& b) {
                     return a.membership_probability > b.membership_probability;
                   });
  rec.triggered_rules = apply_constraints(rec.ordered_items, in.meta, in.rules);
  return rec;
}

Evaluation retrospective_evaluate(std::span<const CohortDay> cohort, const Level3& target_plan,
                                  std::size_t n_neighbors) {
  if (cohort.empty()) throw Error(ErrorCode::EmptyCohort, "no cohort days to compare against");
  if (n_neighbors < 1) throw Error(ErrorCode::InvalidArgument, "n_neighbors must be >= 1");
  std::vector<Neighbor> all;
  all.reserve(cohort.size());
  for (const auto& d : cohort) {
    all.push_back({d.subject_id, d.day_index,
                   metrics::dist_elementwise(MetricId::L2, d.minutes, target_plan), d.quality});
  }
  const auto n = std::min(n_neighbors, all.size());
  auto by_distance = [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.subject_id != b.subject_id) return a.subject_id < b.subject_id;
    return a.day_index < b.day_index;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(),
                    by_distance);
  all.resize(n);
  Evaluation ev;
  ev.neighbors_used = n;
  const auto good = std::count_if(all.begin(), all.end(),
                                  [](const auto& nb) { return nb.quality == SleepQuality::Good; });
  ev.success_rate = static_cast<double>(good) / static_cast<double>(n);
  ev.neighbors = std::move(all);
  return ev;
}

Level3 target_plan(const Recommendation& rec) {
  if (rec.ordered_items.empty()) {
    throw Error(ErrorCode::NoRecipesForMode, "recommendation has no items");
  }
  Level3 plan = rec.achieved;
  for (std::size_t l = 0; l < 3; ++l) plan[l] += rec.ordered_items.front().deficit[l];
  return plan;
}

}  // namespace paris::recommend
