#pragma once

// Synthetic cohort generator with planted behavior modes, activity recipes and
// sleep outcomes. Emits the epoch and metadata CSV formats read by ingest.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "paris/core.hpp"
#include "paris/ingest.hpp"

namespace paris::synthdata {

struct ModeTemplate {
  std::string name;
  std::vector<double> base_curve;  // 1440 minute counts
  std::vector<int> weekday_set;    // days of week (0 = Monday) drawn from this template
};

// Built-in shapes: "commute" (peaks around 420-480 and 1020-1080) and
// "late-rise" (one broad peak over 600-840). Integer valued.
std::vector<double> builtin_curve(const std::string& name);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct GoodSleepRule {
  double tolerance = 10.0;  // L-infinity minutes from a planted target
  Range good{0.92, 0.99};
  Range poor{0.70, 0.89};
};

struct CohortSpec {
  int n_subjects = 30;
  int days_per_subject = 7;
  std::vector<ModeTemplate> mode_templates;
  // Per mode; a mode without targets gets the bare template plus noise.
  std::vector<std::vector<Level3>> recipe_targets;
  double noise_sd = 150.0;
  // Share of days that follow one of their mode's targets.
  double on_target_probability = 0.8;
  // Per-level uniform integer jitter on followed targets; must stay below tolerance.
  int plan_jitter = 3;
  // Days off target scale a target by a per-level factor from this range.
  Range off_target_scale{0.1, 0.3};
  GoodSleepRule good_sleep_rule;
  ingest::CutPoints cut_points;
  int wake_minute = 420;   // bed runs from bed_minute to wake_minute next day
  int bed_minute = 1380;
  std::uint64_t seed = 1;

  // Throws SpecInvalid.
  void validate() const;
};

// commute on weekdays, late-rise on weekends, no recipe targets.
CohortSpec default_spec();

void to_json(nlohmann::json& j, const CohortSpec& s);
// Templates may give "base_curve" or name a built-in shape instead.
void from_json(const nlohmann::json& j, CohortSpec& s);

struct PlantedDay {
  std::int64_t day_index = 0;
  int day_of_week = 0;
  int mode = 0;
  Level3 plan{};      // active minutes per level actually written
  int target = -1;    // followed target, -1 when off target or none
  bool on_target = false;
  double planted_efficiency = 0.0;
  SleepQuality quality = SleepQuality::Poor;
};

struct PlantedSubject {
  std::string subject_id;
  SubjectMetadata meta;
  std::vector<PlantedDay> days;
  std::vector<std::vector<double>> counts;  // minute counts per day
};

struct Cohort {
  std::string epoch_csv;
  std::string metadata_csv;
  std::vector<PlantedSubject> subjects;
  nlohmann::json ground_truth;
};

Cohort generate_cohort(const CohortSpec& spec, unsigned threads = 1);

}  // namespace paris::synthdata
