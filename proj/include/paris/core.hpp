#pragma once

// Domain types shared by every stage of the recommender: minute-level days,
// level summaries, sleep records, fitted behavior-mode models, recipe books
// and recommendations. All types are plain values; JSON encodings live in
// json_io.hpp.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace paris {

inline constexpr std::size_t kMinutesPerDay = 1440;
inline constexpr std::size_t kEpochsPerDay = 2880;

enum class ActivityLevel : std::uint8_t { Sedentary, Light, Moderate, Vigorous };

std::string_view to_string(ActivityLevel level) noexcept;

// Minutes per level in the fixed order [Light, Moderate, Vigorous].
using Level3 = std::array<double, 3>;

enum class IntervalType : std::uint8_t { Active, Rest, RestS, Excluded };

// CSV spelling: ACTIVE, REST, REST-S, EXCLUDED.
std::string_view to_string(IntervalType t) noexcept;
std::optional<IntervalType> parse_interval_type(std::string_view s) noexcept;

struct EpochRecord {
  std::string subject_id;
  std::int64_t day_index = 0;
  std::int32_t epoch_index = 0;  // 0..2879, 30 s each
  std::int64_t activity_count = 0;
  IntervalType interval = IntervalType::Active;
  bool wake = false;

  // Minutes since the cohort epoch, 0.5 min resolution.
  [[nodiscard]] double timestamp() const noexcept {
    return static_cast<double>(day_index) * 1440.0 + 0.5 * epoch_index;
  }

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct ActigraphyDay {
  std::string subject_id;
  std::int64_t day_index = 0;
  int day_of_week = 0;  // 0 = Monday .. 6 = Sunday
  std::vector<double> counts;
  std::vector<IntervalType> interval;
  std::vector<std::uint8_t> wake;

  friend bool operator==(const ActigraphyDay&, const ActigraphyDay&) = default;
};

// day_index 0 of the cohort is a Monday.
[[nodiscard]] inline int day_of_week_for(std::int64_t day_index) noexcept {
  const auto r = day_index % 7;
  return static_cast<int>(r < 0 ? r + 7 : r);
}

[[nodiscard]] inline bool is_weekend(int day_of_week) noexcept { return day_of_week >= 5; }

struct Violation {
  std::string field;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

// Empty iff every ActigraphyDay invariant holds.
std::vector<Violation> validate_day(const ActigraphyDay& day);

struct LevelSummary {
  std::string subject_id;
  std::int64_t day_index = 0;
  int window_start = 0;
  int window_end = 1440;
  Level3 minutes{};

  friend bool operator==(const LevelSummary&, const LevelSummary&) = default;
};

enum class SleepQuality : std::uint8_t { Good, Poor };

std::string_view to_string(SleepQuality q) noexcept;

inline constexpr double kGoodSleepEfficiency = 0.90;

struct SleepRecord {
  std::string subject_id;
  std::int64_t day_index = 0;
  double minutes_in_bed = 0.0;
  double minutes_asleep = 0.0;
  double minutes_awake_in_bed = 0.0;
  double efficiency = 0.0;
  SleepQuality quality = SleepQuality::Poor;

  // asleep = in_bed - awake_in_bed; efficiency = 1 - awake/in_bed, or 0 for an
  // empty bed interval. Good iff efficiency > good_threshold.
  static SleepRecord from_bed_minutes(std::string subject_id, std::int64_t day_index, double in_bed,
                                      double awake_in_bed,
                                      double good_threshold = kGoodSleepEfficiency);

  friend bool operator==(const SleepRecord&, const SleepRecord&) = default;
};

enum class Gender : std::uint8_t { Female, Male, Other };

std::string_view to_string(Gender g) noexcept;
std::optional<Gender> parse_gender(std::string_view s) noexcept;

struct SubjectMetadata {
  std::string subject_id;
  std::optional<double> age;
  std::optional<Gender> gender;
  std::optional<double> bmi;
  std::optional<double> resting_hr;
  std::map<std::string, double> extensions;

  // Numeric view of a named field used by constraint rules. Gender maps to
  // 0 = female, 1 = male, 2 = other. Returns nullopt for a known field whose
  // value is absent; throws UnknownMetadataField otherwise.
  [[nodiscard]] std::optional<double> numeric_field(std::string_view name) const;
  [[nodiscard]] bool has_field(std::string_view name) const;

  friend bool operator==(const SubjectMetadata&, const SubjectMetadata&) = default;
};

enum class MetricId : std::uint8_t { L1, L2, DTW, CorrelationDistance, SymmetrizedKL, JS };

// Config/CLI spelling: l1, l2, dtw, corr, kl, js.
std::string_view to_string(MetricId m) noexcept;
std::optional<MetricId> parse_metric(std::string_view s) noexcept;

enum class ModeDomain : std::uint8_t { Time, Frequency };

std::string_view to_string(ModeDomain d) noexcept;
std::optional<ModeDomain> parse_domain(std::string_view s) noexcept;

struct BehaviorModeModel {
  std::string subject_id;
  ModeDomain domain = ModeDomain::Time;
  MetricId metric = MetricId::L2;
  int k = 1;
  std::vector<std::vector<double>> centroids;
  std::map<std::int64_t, int> day_assignments;
  double silhouette = 0.0;
  nlohmann::json fit_config = nlohmann::json::object();

  friend bool operator==(const BehaviorModeModel&, const BehaviorModeModel&) = default;
};

struct Recipe {
  Level3 center{};
  int good_count = 0;
  int poor_count = 0;
  std::vector<std::int64_t> member_days;

  friend bool operator==(const Recipe&, const Recipe&) = default;
};

struct RecipeBook {
  std::string subject_id;
  // modes[b] = recipes learned for behavior mode b.
  std::vector<std::vector<Recipe>> modes;

  [[nodiscard]] std::size_t recipe_count() const noexcept;

  friend bool operator==(const RecipeBook&, const RecipeBook&) = default;
};

struct RecommendationItem {
  int recipe_index = 0;
  Level3 center{};
  double membership_probability = 0.0;
  double distance = 0.0;
  Level3 deficit{};
  std::vector<std::string> constraint_flags;

  friend bool operator==(const RecommendationItem&, const RecommendationItem&) = default;
};

struct Recommendation {
  std::string subject_id;
  int mode = 0;
  int t_m = 0;
  int wake_onset = 0;
  Level3 achieved{};
  std::vector<RecommendationItem> ordered_items;
  // Explain block: distance from the cropped series to every mode centroid.
  double mode_distance = 0.0;
  std::vector<double> mode_distances;
  std::vector<std::string> triggered_rules;

  friend bool operator==(const Recommendation&, const Recommendation&) = default;
};

}  // namespace paris
