#pragma once

// Batch entry point shared by the CLI and the service: epochs and metadata in,
// per-subject behavior modes and recipe books out, bundled as one JSON file.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "paris/core.hpp"
#include "paris/ingest.hpp"
#include "paris/modes.hpp"
#include "paris/recipes.hpp"
#include "paris/recommend.hpp"

namespace paris::pipeline {

inline constexpr int kBundleFormatVersion = 1;

struct PipelineConfig {
  ingest::CutPoints cut_points;
  modes::ModeFitConfig modes;
  recipes::RecipeConfig recipes;
  std::size_t required_days = ingest::kRequiredDays;
  // Fit one set of modes over every subject's days instead of one per subject.
  bool cohort_modes = false;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

struct DayRecord {
  std::int64_t day_index = 0;
  int day_of_week = 0;
  Level3 minutes{};  // full-day active-only level totals
  std::optional<double> efficiency;
  std::optional<SleepQuality> quality;  // absent when the night has no bed interval

  friend bool operator==(const DayRecord&, const DayRecord&) = default;
};

struct SubjectModel {
  SubjectMetadata metadata;
  BehaviorModeModel modes;
  RecipeBook recipes;
  std::vector<DayRecord> days;
  modes::PurityReport purity;

  friend bool operator==(const SubjectModel&, const SubjectModel&) = default;
};

struct ModelBundle {
  int format_version = kBundleFormatVersion;
  PipelineConfig config;
  std::map<std::string, SubjectModel> subjects;

  [[nodiscard]] const SubjectModel* find(const std::string& id) const;

  friend bool operator==(const ModelBundle&, const ModelBundle&) = default;
};

void to_json(nlohmann::json& j, const ModelBundle& b);
void from_json(const nlohmann::json& j, ModelBundle& b);

std::string save_bundle(const ModelBundle& b);
// Throws ParseError on malformed JSON or an unsupported format_version.
ModelBundle load_bundle(const std::string& text);

enum class SubjectStatus { Fitted, Skipped, Failed };

struct SubjectReport {
  std::string subject_id;
  SubjectStatus status = SubjectStatus::Fitted;
  std::string reason;
  std::size_t days = 0;
  int k = 0;
  MetricId metric = MetricId::L2;
  double silhouette = 0.0;
  std::vector<std::size_t> recipe_counts;  // per mode
  std::vector<double> purity;              // per mode
  std::size_t nights_without_bed = 0;
};

struct RunReport {
  std::size_t epoch_rows = 0;
  std::size_t row_errors = 0;
  std::size_t incomplete_days = 0;
  std::vector<SubjectReport> subjects;  // sorted by subject_id

  [[nodiscard]] std::size_t fitted() const;
  [[nodiscard]] std::string to_text() const;
  // subject_id,status,days,k,metric,silhouette,recipes,purity,reason
  [[nodiscard]] std::string to_csv() const;
};

struct PipelineResult {
  ModelBundle bundle;
  RunReport report;
};

// Subjects failing the day requirement are skipped; a subject whose fit throws
// is reported as failed. Neither stops the rest of the cohort.
PipelineResult run_pipeline(std::istream& epochs, std::istream* metadata,
                            const PipelineConfig& cfg, unsigned threads = 1);

// Every tagged day in the bundle, for retrospective evaluation.
std::vector<recommend::CohortDay> cohort_days(const ModelBundle& b);

}  // namespace paris::pipeline
