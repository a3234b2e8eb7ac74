#include "paris/evalreport.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "paris/error.hpp"

namespace paris::evalreport {

namespace {

const pipeline::SubjectModel& subject_or_throw(const pipeline::ModelBundle& b,
                                               const std::string& subject) {
  const auto* s = b.find(subject);
  if (s == nullptr) throw Error(ErrorCode::UnknownSubject, fmt::format("no subject '{}'", subject));
  return *s;
}

}  // namespace

std::string export_mode_centers(const pipeline::ModelBundle& b, const std::string& subject) {
  const auto& centroids = subject_or_throw(b, subject).modes.centroids;
  std::string out = "minute";
  for (std::size_t c = 0; c < centroids.size(); ++c) out += fmt::format(",mode{}", c);
  out += "\n";
  const std::size_t n = centroids.empty() ? 0 : centroids.front().size();
  for (std::size_t m = 0; m < n; ++m) {
    out += fmt::format("{}", m);
    for (const auto& c : centroids) out += fmt::format(",{}", c[m]);
    out += "\n";
  }
  return out;
}

std::string export_composition(const pipeline::ModelBundle& b) {
  if (b.subjects.empty()) throw Error(ErrorCode::EmptyBundle, "bundle has no subjects");
  std::string out = "subject,mode,mon,tue,wed,thu,fri,sat,sun,purity\n";
  for (const auto& [id, s] : b.subjects) {
    for (std::size_t mode = 0; mode < s.purity.modes.size(); ++mode) {
      const auto& p = s.purity.modes[mode];
      out += fmt::format("{},{}", id, mode);
      for (int c : p.day_of_week_counts) out += fmt::format(",{}", c);
      out += fmt::format(",{}\n", p.purity);
    }
  }
  return out;
}

std::string export_recipes(const pipeline::ModelBundle& b, const std::string& subject) {
  const auto& book = subject_or_throw(b, subject).recipes;
  std::string out = "mode,recipe_idx,light,moderate,vigorous,good,poor\n";
  for (std::size_t mode = 0; mode < book.modes.size(); ++mode) {
    for (std::size_t i = 0; i < book.modes[mode].size(); ++i) {
      const auto& r = book.modes[mode][i];
      out += fmt::format("{},{},{},{},{},{},{}\n", mode, i, r.center[0], r.center[1], r.center[2],
                         r.good_count, r.poor_count);
    }
  }
  return out;
}

EvaluationSummary evaluate_days(const pipeline::ModelBundle& b,
                                std::span<const ActigraphyDay> days, std::span<const int> t_ms,
                                std::size_t n_neighbors,
                                std::span<const recommend::ConstraintRule> rules) {
  if (b.subjects.empty()) throw Error(ErrorCode::EmptyBundle, "bundle has no subjects");
  const auto cohort = pipeline::cohort_days(b);
  EvaluationSummary out;
  double total = 0;
  for (const auto& day : days) {
    const auto& subject = subject_or_throw(b, day.subject_id);
    for (int t_m : t_ms) {
      EvaluationRow row;
      row.subject_id = day.subject_id;
      row.day_index = day.day_index;
      row.t_m = t_m;
      recommend::RecommendInput in;
      in.modes = &subject.modes;
      in.book = &subject.recipes;
      in.cut_points = b.config.cut_points;
      const auto n = static_cast<std::size_t>(std::clamp(t_m, 0, static_cast<int>(day.counts.size())));
      in.partial.counts.assign(day.counts.begin(), day.counts.begin() + static_cast<std::ptrdiff_t>(n));
      in.partial.interval.assign(day.interval.begin(), day.interval.begin() + static_cast<std::ptrdiff_t>(n));
      in.t_m = t_m;
      in.meta = subject.metadata;
      in.rules.assign(rules.begin(), rules.end());
      try {
        const auto rec = recommend::recommend(in);
        const auto ev = recommend::retrospective_evaluate(cohort, recommend::target_plan(rec),
                                                          n_neighbors);
        row.status = "ok";
        row.mode = rec.mode;
        row.top_recipe = rec.ordered_items.front().recipe_index;
        row.success_rate = ev.success_rate;
        row.neighbors = ev.neighbors_used;
        total += ev.success_rate;
        ++out.evaluated;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::EmptyCohort) throw;
        row.status = std::string(to_string(e.code()));
      }
      out.rows.push_back(std::move(row));
    }
  }
  out.mean_success_rate = out.evaluated > 0 ? total / static_cast<double>(out.evaluated) : 0.0;
  return out;
}

std::string evaluation_csv(const EvaluationSummary& s) {
  std::string out = "subject,day_index,t_m,status,mode,top_recipe,success_rate,neighbors\n";
  for (const auto& r : s.rows) {
    if (r.status == "ok") {
      out += fmt::format("{},{},{},ok,{},{},{:.6f},{}\n", r.subject_id, r.day_index, r.t_m, r.mode,
                         r.top_recipe, r.success_rate, r.neighbors);
    } else {
      out += fmt::format("{},{},{},{},,,,\n", r.subject_id, r.day_index, r.t_m, r.status);
    }
  }
  out += fmt::format("cohort,,,evaluated={},,,{:.6f},\n", s.evaluated, s.mean_success_rate);
  return out;
}

}  // namespace paris::evalreport
