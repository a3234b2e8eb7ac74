#include "paris/core.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "paris/error.hpp"

namespace paris {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::WindowInverted: return "WindowInverted";
    case ErrorCode::NoBedInterval: return "NoBedInterval";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::BandInfeasible: return "BandInfeasible";
    case ErrorCode::NotADistribution: return "NotADistribution";
    case ErrorCode::BadComponentCount: return "BadComponentCount";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::SingleCluster: return "SingleCluster";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::MissingAssignments: return "MissingAssignments";
    case ErrorCode::FrequencyDomainUnsupported: return "FrequencyDomainUnsupported";
    case ErrorCode::BadWindow: return "BadWindow";
    case ErrorCode::TooFewDays: return "TooFewDays";
    case ErrorCode::NoRecipesForMode: return "NoRecipesForMode";
    case ErrorCode::UnknownMetadataField: return "UnknownMetadataField";
    case ErrorCode::EmptyCohort: return "EmptyCohort";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::UnknownSubject: return "UnknownSubject";
    case ErrorCode::EmptyBundle: return "EmptyBundle";
  }
  return "Unknown";
}

std::string_view to_string(ActivityLevel level) noexcept {
  switch (level) {
    case ActivityLevel::Sedentary: return "sedentary";
    case ActivityLevel::Light: return "light";
    case ActivityLevel::Moderate: return "moderate";
    case ActivityLevel::Vigorous: return "vigorous";
  }
  return "?";
}

std::string_view to_string(IntervalType t) noexcept {
  switch (t) {
    case IntervalType::Active: return "ACTIVE";
    case IntervalType::Rest: return "REST";
    case IntervalType::RestS: return "REST-S";
    case IntervalType::Excluded: return "EXCLUDED";
  }
  return "?";
}

std::optional<IntervalType> parse_interval_type(std::string_view s) noexcept {
  if (s == "ACTIVE") return IntervalType::Active;
  if (s == "REST") return IntervalType::Rest;
  if (s == "REST-S") return IntervalType::RestS;
  if (s == "EXCLUDED") return IntervalType::Excluded;
  return std::nullopt;
}

std::string_view to_string(SleepQuality q) noexcept {
  return q == SleepQuality::Good ? "Good" : "Poor";
}

std::string_view to_string(Gender g) noexcept {
  switch (g) {
    case Gender::Female: return "female";
    case Gender::Male: return "male";
    case Gender::Other: return "other";
  }
  return "?";
}

std::optional<Gender> parse_gender(std::string_view s) noexcept {
  if (s == "female" || s == "F" || s == "f") return Gender::Female;
  if (s == "male" || s == "M" || s == "m") return Gender::Male;
  if (s == "other" || s == "O" || s == "o") return Gender::Other;
  return std::nullopt;
}

std::string_view to_string(MetricId m) noexcept {
  switch (m) {
    case MetricId::L1: return "l1";
    case MetricId::L2: return "l2";
    case MetricId::DTW: return "dtw";
    case MetricId::CorrelationDistance: return "corr";
    case MetricId::SymmetrizedKL: return "kl";
    case MetricId::JS: return "js";
  }
  return "?";
}

std::optional<MetricId> parse_metric(std::string_view s) noexcept {
  if (s == "l1") return MetricId::L1;
  if (s == "l2") return MetricId::L2;
  if (s == "dtw") return MetricId::DTW;
  if (s == "corr") return MetricId::CorrelationDistance;
  if (s == "kl") return MetricId::SymmetrizedKL;
  if (s == "js") return MetricId::JS;
  return std::nullopt;
}

std::string_view to_string(ModeDomain d) noexcept {
  return d == ModeDomain::Time ? "time" : "frequency";
}

std::optional<ModeDomain> parse_domain(std::string_view s) noexcept {
  if (s == "time") return ModeDomain::Time;
  if (s == "frequency") return ModeDomain::Frequency;
  return std::nullopt;
}

std::vector<Violation> validate_day(const ActigraphyDay& day) {
  std::vector<Violation> out;
  auto check_length = [&](std::string_view field, std::size_t n) {
    if (n != kMinutesPerDay) {
      out.push_back({std::string(field) + ".length",
                     fmt::format("{}.length = {}, expected {}", field, n, kMinutesPerDay)});
    }
  };
  check_length("counts", day.counts.size());
  check_length("interval", day.interval.size());
  check_length("wake", day.wake.size());
  for (std::size_t i = 0; i < day.counts.size(); ++i) {
    const double c = day.counts[i];
    if (!std::isfinite(c)) {
      out.push_back({fmt::format("counts[{}]", i), fmt::format("counts[{}] is not finite", i)});
    } else if (c < 0) {
      out.push_back({fmt::format("counts[{}]", i), fmt::format("counts[{}] < 0", i)});
    }
  }
  for (std::size_t i = 0; i < day.wake.size(); ++i) {
    if (day.wake[i] > 1) {
      out.push_back({fmt::format("wake[{}]", i), fmt::format("wake[{}] not in {{0,1}}", i)});
    }
  }
  if (day.day_index < 0) out.push_back({"day_index", "day_index < 0"});
  if (day.day_of_week < 0 || day.day_of_week > 6) {
    out.push_back({"day_of_week", "day_of_week not in 0..6"});
  }
  return out;
}

SleepRecord SleepRecord::from_bed_minutes(std::string subject_id, std::int64_t day_index,
                                          double in_bed, double awake_in_bed,
                                          double good_threshold) {
  if (in_bed < 0 || awake_in_bed < 0 || awake_in_bed > in_bed) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("bad bed minutes: in_bed={} awake={}", in_bed, awake_in_bed));
  }
  SleepRecord r;
  r.subject_id = std::move(subject_id);
  r.day_index = day_index;
  r.minutes_in_bed = in_bed;
  r.minutes_awake_in_bed = awake_in_bed;
  r.minutes_asleep = in_bed - awake_in_bed;
  r.efficiency = in_bed > 0 ? 1.0 - awake_in_bed / in_bed : 0.0;
  r.quality = r.efficiency > good_threshold ? SleepQuality::Good : SleepQuality::Poor;
  return r;
}

namespace {
constexpr std::array<std::string_view, 4> kKnownMetadataFields = {"age", "gender", "bmi",
                                                                   "resting_hr"};
}

bool SubjectMetadata::has_field(std::string_view name) const {
  for (auto f : kKnownMetadataFields) {
    if (f == name) return true;
  }
  return extensions.find(std::string(name)) != extensions.end();
}

std::optional<double> SubjectMetadata::numeric_field(std::string_view name) const {
  if (name == "age") return age;
  if (name == "bmi") return bmi;
  if (name == "resting_hr") return resting_hr;
  if (name == "gender") {
    if (!gender) return std::nullopt;
    return static_cast<double>(static_cast<int>(*gender));
  }
  if (auto it = extensions.find(std::string(name)); it != extensions.end()) return it->second;
  throw Error(ErrorCode::UnknownMetadataField, std::string(name));
}

std::size_t RecipeBook::recipe_count() const noexcept {
  return std::accumulate(modes.begin(), modes.end(), std::size_t{0},
                         [](std::size_t acc, const auto& m) { return acc + m.size(); });
}

}  // namespace paris
