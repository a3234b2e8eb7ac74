#pragma once

// Epoch CSV parsing and everything derived from raw epochs: minute-level
// days, cut-point labels, level summaries and nightly sleep records.

#include <cstdint>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "paris/core.hpp"

namespace paris::ingest {

// Count thresholds (counts/min) for the half-open level bands
// [0,light) sedentary, [light,moderate) light, [moderate,vigorous) moderate,
// [vigorous,inf) vigorous. Defaults follow published Actical cut-points.
struct CutPoints {
  double light_min = 100.0;
  double moderate_min = 1535.0;
  double vigorous_min = 3962.0;

  void validate() const;

  friend bool operator==(const CutPoints&, const CutPoints&) = default;
};

void to_json(nlohmann::json& j, const CutPoints& c);
void from_json(const nlohmann::json& j, CutPoints& c);

struct RowError {
  std::size_t line = 0;
  std::string message;
};

struct ParsedEpochs {
  std::vector<EpochRecord> records;  // sorted by (subject_id, timestamp)
  std::vector<RowError> row_errors;
};

inline constexpr std::string_view kEpochCsvHeader =
    "subject_id,day_index,epoch_index,activity_count,interval_type,wake";

// Throws MalformedHeader, or NonMonotonicTimestamp when a subject's rows are
// not strictly increasing in time. Bad rows are skipped and reported.
ParsedEpochs parse_epochs(std::istream& source);

struct IncompleteDay {
  std::string subject_id;
  std::int64_t day_index = 0;
  std::size_t epochs_present = 0;
};

struct DaysResult {
  std::vector<ActigraphyDay> days;
  std::vector<IncompleteDay> incomplete;
};

// Pairs epochs (2m, 2m+1) into minute m. Minute interval takes the stronger of
// the two epochs (EXCLUDED > REST-S > REST > ACTIVE); wake is their max.
// Days without all 2880 epochs are dropped and reported.
DaysResult epochs_to_days(std::span<const EpochRecord> epochs);

struct FilterResult {
  std::vector<ActigraphyDay> kept;
  std::vector<std::string> dropped_subjects;
};

inline constexpr std::size_t kRequiredDays = 7;

// Drops subjects with fewer than `required` days; keeps the first `required`
// days (by day_index) of everyone else.
FilterResult filter_subjects(std::span<const ActigraphyDay> days,
                             std::size_t required = kRequiredDays);

[[nodiscard]] ActivityLevel label_count(double count, const CutPoints& cp) noexcept;

std::vector<ActivityLevel> label_minutes(const ActigraphyDay& day, const CutPoints& cp);

// Minutes per level over [t1, t2). With active_only, minutes whose interval is
// not ACTIVE are ignored.
LevelSummary summarize_levels(const ActigraphyDay& day, std::span<const ActivityLevel> labels,
                              int t1, int t2, bool active_only);

// Level totals over [t1, t2) for raw label and interval vectors; the vectors
// may be shorter than a day (partial days at recommendation time).
Level3 level_totals(std::span<const ActivityLevel> labels, std::span<const IntervalType> interval,
                    int t1, int t2, bool active_only);

inline constexpr int kWasoMinEpochs = 10;

// Sleep record of one bed interval. in_bed counts REST and REST-S epochs; awake
// counts REST epochs plus wake runs of >= 10 epochs inside REST-S.
SleepRecord compute_sleep_record(std::span<const EpochRecord> night,
                                 double good_threshold = kGoodSleepEfficiency);

// Epochs of the bed interval attributed to `day_index`: the longest contiguous
// REST/REST-S run starting in the day's second half, followed into the next
// day. `subject_epochs` must be one subject's epochs sorted by time. Empty if
// there is no such run.
std::vector<EpochRecord> locate_night(std::span<const EpochRecord> subject_epochs,
                                      std::int64_t day_index);

// Minute at which the day's activity window opens: the end of a bed run that
// covers minute 0, or 0 when the day does not start in bed.
int wake_onset(std::span<const IntervalType> minute_interval);

struct SubjectNights {
  std::map<std::int64_t, SleepRecord> records;
  std::vector<std::int64_t> days_without_bed;
};

// Sleep records for every listed day of one subject.
SubjectNights sleep_records_for_subject(std::span<const EpochRecord> subject_epochs,
                                        std::span<const std::int64_t> day_indices,
                                        double good_threshold = kGoodSleepEfficiency);

struct MetadataParse {
  std::map<std::string, SubjectMetadata> subjects;
  std::vector<RowError> row_errors;
};

// `subject_id,age,gender,bmi,resting_hr[,extra...]`; empty cells are absent.
MetadataParse parse_metadata(std::istream& source);

}  // namespace paris::ingest
