#pragma once

// Plot-ready CSV projections of a model bundle: mode centroids, day-of-week
// composition of each mode, and recipe bars.

#include <span>
#include <string>
#include <vector>

#include "paris/pipeline.hpp"

namespace paris::evalreport {

// minute,mode0,mode1,... with one row per centroid sample. UnknownSubject.
std::string export_mode_centers(const pipeline::ModelBundle& b, const std::string& subject);

// subject,mode,mon,tue,wed,thu,fri,sat,sun,purity. EmptyBundle.
std::string export_composition(const pipeline::ModelBundle& b);

// mode,recipe_idx,light,moderate,vigorous,good,poor. UnknownSubject.
std::string export_recipes(const pipeline::ModelBundle& b, const std::string& subject);

struct EvaluationRow {
  std::string subject_id;
  std::int64_t day_index = 0;
  int t_m = 0;
  std::string status;  // "ok" or the error code that stopped the recommendation
  int mode = -1;
  int top_recipe = -1;
  double success_rate = 0.0;
  std::size_t neighbors = 0;
};

struct EvaluationSummary {
  std::vector<EvaluationRow> rows;
  std::size_t evaluated = 0;
  double mean_success_rate = 0.0;
};

// For every day of every bundled subject present in `days` and every t_m,
// recommends from the day's first t_m minutes and scores the top item's plan
// against the bundle's tagged days. Throws UnknownSubject when a day's subject
// is not in the bundle, EmptyBundle when the bundle is empty.
EvaluationSummary evaluate_days(const pipeline::ModelBundle& b,
                                std::span<const ActigraphyDay> days, std::span<const int> t_ms,
                                std::size_t n_neighbors,
                                std::span<const recommend::ConstraintRule> rules);

// subject,day_index,t_m,status,mode,top_recipe,success_rate,neighbors and a
// final "cohort" row with the mean over evaluated rows.
std::string evaluation_csv(const EvaluationSummary& s);

}  // namespace paris::evalreport
