#include "paris/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <istream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "paris/error.hpp"
#include "paris/json_io.hpp"

namespace paris::pipeline {

using nlohmann::json;

void to_json(json& j, const PipelineConfig& c) {
  j = json{{"cut_points", c.cut_points},
           {"modes", c.modes},
           {"recipes", c.recipes},
           {"required_days", c.required_days},
           {"cohort_modes", c.cohort_modes}};
}

void from_json(const json& j, PipelineConfig& c) {
  PipelineConfig d;
  c.cut_points = j.contains("cut_points") ? j.at("cut_points").get<ingest::CutPoints>() : d.cut_points;
  c.modes = j.contains("modes") ? j.at("modes").get<modes::ModeFitConfig>() : d.modes;
  c.recipes = j.contains("recipes") ? j.at("recipes").get<recipes::RecipeConfig>() : d.recipes;
  c.required_days = j.value("required_days", d.required_days);
  c.cohort_modes = j.value("cohort_modes", d.cohort_modes);
}

namespace {

json day_json(const DayRecord& d) {
  return {{"day_index", d.day_index},
          {"day_of_week", d.day_of_week},
          {"minutes", d.minutes},
          {"efficiency", d.efficiency ? json(*d.efficiency) : json()},
          {"quality", d.quality ? json(*d.quality) : json()}};
}

DayRecord day_from(const json& j) {
  DayRecord d;
  d.day_index = j.at("day_index").get<std::int64_t>();
  d.day_of_week = j.at("day_of_week").get<int>();
  d.minutes = j.at("minutes").get<Level3>();
  if (!j.at("efficiency").is_null()) d.efficiency = j.at("efficiency").get<double>();
  if (!j.at("quality").is_null()) d.quality = j.at("quality").get<SleepQuality>();
  return d;
}

json purity_json(const modes::PurityReport& p) {
  auto out = json::array();
  for (const auto& m : p.modes) {
    out.push_back({{"day_of_week_counts", m.day_of_week_counts},
                   {"weekday_fraction", m.weekday_fraction},
                   {"weekday_majority", m.weekday_majority},
                   {"purity", m.purity}});
  }
  return out;
}

modes::PurityReport purity_from(const json& j) {
  modes::PurityReport p;
  for (const auto& m : j) {
    modes::ModePurity mp;
    mp.day_of_week_counts = m.at("day_of_week_counts").get<std::array<int, 7>>();
    mp.weekday_fraction = m.at("weekday_fraction").get<double>();
    mp.weekday_majority = m.at("weekday_majority").get<bool>();
    mp.purity = m.at("purity").get<double>();
    p.modes.push_back(mp);
  }
  return p;
}

}  // namespace

const SubjectModel* ModelBundle::find(const std::string& id) const {
  const auto it = subjects.find(id);
  return it == subjects.end() ? nullptr : &it->second;
}

void to_json(json& j, const ModelBundle& b) {
  auto subjects = json::array();
  for (const auto& [id, s] : b.subjects) {
    auto days = json::array();
    for (const auto& d : s.days) days.push_back(day_json(d));
    subjects.push_back({{"subject_id", id},
                        {"metadata", s.metadata},
                        {"modes", s.modes},
                        {"recipes", s.recipes},
                        {"days", days},
                        {"purity", purity_json(s.purity)}});
  }
  j = json{{"format_version", b.format_version}, {"config", b.config}, {"subjects", subjects}};
}

void from_json(const json& j, ModelBundle& b) {
  b.format_version = j.at("format_version").get<int>();
  if (b.format_version != kBundleFormatVersion) {
    throw Error(ErrorCode::ParseError,
                fmt::format("unsupported bundle format_version {}", b.format_version));
  }
  b.config = j.at("config").get<PipelineConfig>();
  b.subjects.clear();
  for (const auto& s : j.at("subjects")) {
    SubjectModel m;
    m.metadata = s.at("metadata").get<SubjectMetadata>();
    m.modes = s.at("modes").get<BehaviorModeModel>();
    m.recipes = s.at("recipes").get<RecipeBook>();
    for (const auto& d : s.at("days")) m.days.push_back(day_from(d));
    m.purity = purity_from(s.at("purity"));
    b.subjects.emplace(s.at("subject_id").get<std::string>(), std::move(m));
  }
}

std::string save_bundle(const ModelBundle& b) { return json(b).dump(1) + "\n"; }

ModelBundle load_bundle(const std::string& text) {
  try {
    return json::parse(text).get<ModelBundle>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, fmt::format("bad bundle: {}", e.what()));
  }
}

std::size_t RunReport::fitted() const {
  return static_cast<std::size_t>(std::count_if(subjects.begin(), subjects.end(), [](const auto& s) {
    return s.status == SubjectStatus::Fitted;
  }));
}

namespace {

std::string_view status_name(SubjectStatus s) {
  switch (s) {
    case SubjectStatus::Fitted: return "fitted";
    case SubjectStatus::Skipped: return "skipped";
    case SubjectStatus::Failed: return "failed";
  }
  return "?";
}

}  // namespace

std::string RunReport::to_text() const {
  std::string out = fmt::format("{} epoch rows, {} bad rows, {} incomplete days\n", epoch_rows,
                                row_errors, incomplete_days);
  out += fmt::format("{} subjects: {} fitted, {} not fitted\n", subjects.size(), fitted(),
                     subjects.size() - fitted());
  for (const auto& s : subjects) {
    if (s.status != SubjectStatus::Fitted) {
      out += fmt::format("  {} {}: {}\n", s.subject_id, status_name(s.status), s.reason);
      continue;
    }
    out += fmt::format("  {} k={} metric={} silhouette={:.4f} recipes=[{}] purity=[{:.2f}]",
                       s.subject_id, s.k, to_string(s.metric), s.silhouette,
                       fmt::join(s.recipe_counts, ","), fmt::join(s.purity, ","));
    if (s.nights_without_bed > 0) out += fmt::format(" nights_without_bed={}", s.nights_without_bed);
    out += "\n";
  }
  return out;
}

std::string RunReport::to_csv() const {
  std::string out = "subject_id,status,days,k,metric,silhouette,recipes,purity,reason\n";
  for (const auto& s : subjects) {
    if (s.status != SubjectStatus::Fitted) {
      out += fmt::format("{},{},{},,,,,,\"{}\"\n", s.subject_id, status_name(s.status), s.days,
                         s.reason);
      continue;
    }
    out += fmt::format("{},{},{},{},{},{:.6f},{},{:.4f},\n", s.subject_id, status_name(s.status),
                       s.days, s.k, to_string(s.metric), s.silhouette,
                       fmt::join(s.recipe_counts, ";"), fmt::join(s.purity, ";"));
  }
  return out;
}

namespace {

struct SubjectInput {
  std::string subject_id;
  std::vector<ActigraphyDay> days;
  std::span<const EpochRecord> epochs;
  SubjectMetadata metadata;
};

struct SubjectOutput {
  std::optional<SubjectModel> model;
  SubjectReport report;
};

// The cohort model with this subject's days assigned to their nearest centroid.
BehaviorModeModel subject_view(const BehaviorModeModel& cohort, const SubjectInput& in,
                               const PipelineConfig& cfg) {
  auto m = cohort;
  m.subject_id = in.subject_id;
  m.day_assignments.clear();
  const auto opts = modes::model_distance_options(cohort);
  for (const auto& d : in.days) {
    const auto x = modes::day_features(d, cohort.domain, cfg.modes.fft_components);
    m.day_assignments[d.day_index] = cluster::assign(cohort.centroids, x, cohort.metric, opts).index;
  }
  return m;
}

SubjectOutput fit_subject(const SubjectInput& in, const PipelineConfig& cfg,
                          const BehaviorModeModel* cohort) {
  SubjectOutput out;
  auto& rep = out.report;
  rep.subject_id = in.subject_id;
  rep.days = in.days.size();

  SubjectModel m;
  m.metadata = in.metadata;
  m.modes = cohort != nullptr ? subject_view(*cohort, in, cfg)
                              : modes::fit_behavior_modes(in.days, cfg.modes).model;

  std::vector<std::int64_t> day_indices;
  std::map<std::int64_t, int> dow;
  for (const auto& d : in.days) {
    day_indices.push_back(d.day_index);
    dow[d.day_index] = d.day_of_week;
  }
  const auto nights = ingest::sleep_records_for_subject(in.epochs, day_indices,
                                                        cfg.recipes.good_efficiency_threshold);
  rep.nights_without_bed = nights.days_without_bed.size();

  std::vector<std::vector<recipes::TaggedDay>> per_mode(static_cast<std::size_t>(m.modes.k));
  for (const auto& d : in.days) {
    DayRecord rec;
    rec.day_index = d.day_index;
    rec.day_of_week = d.day_of_week;
    const auto labels = ingest::label_minutes(d, cfg.cut_points);
    rec.minutes = ingest::summarize_levels(d, labels, 0, static_cast<int>(kMinutesPerDay), true).minutes;
    if (const auto it = nights.records.find(d.day_index); it != nights.records.end()) {
      rec.efficiency = it->second.efficiency;
      rec.quality = recipes::tag_sleep_quality(it->second, cfg.recipes);
      const auto mode = static_cast<std::size_t>(m.modes.day_assignments.at(d.day_index));
      per_mode[mode].push_back({d.day_index, rec.minutes, *rec.quality});
    }
    m.days.push_back(rec);
  }

  m.recipes.subject_id = in.subject_id;
  for (const auto& tagged : per_mode) {
    m.recipes.modes.push_back(tagged.size() >= 2 ? recipes::extract_recipes(tagged, cfg.recipes)
                                                 : std::vector<Recipe>{});
    rep.recipe_counts.push_back(m.recipes.modes.back().size());
  }
  m.purity = modes::day_of_week_purity(m.modes, dow);
  for (const auto& p : m.purity.modes) rep.purity.push_back(p.purity);

  rep.k = m.modes.k;
  rep.metric = m.modes.metric;
  rep.silhouette = m.modes.silhouette;
  out.model = std::move(m);
  return out;
}

}  // namespace

PipelineResult run_pipeline(std::istream& epochs, std::istream* metadata,
                            const PipelineConfig& cfg, unsigned threads) {
  cfg.cut_points.validate();
  cfg.recipes.validate();

  PipelineResult result;
  result.bundle.config = cfg;
  auto& report = result.report;

  auto parsed = ingest::parse_epochs(epochs);
  report.epoch_rows = parsed.records.size();
  report.row_errors = parsed.row_errors.size();
  for (const auto& e : parsed.row_errors) spdlog::debug("epoch line {}: {}", e.line, e.message);

  std::map<std::string, SubjectMetadata> meta;
  if (metadata != nullptr) {
    auto mp = ingest::parse_metadata(*metadata);
    for (const auto& e : mp.row_errors) spdlog::warn("metadata line {}: {}", e.line, e.message);
    meta = std::move(mp.subjects);
  }

  auto days = ingest::epochs_to_days(parsed.records);
  report.incomplete_days = days.incomplete.size();
  auto filtered = ingest::filter_subjects(days.days, cfg.required_days);

  std::map<std::string, std::size_t> day_counts;
  for (const auto& d : days.days) ++day_counts[d.subject_id];
  for (const auto& id : filtered.dropped_subjects) {
    SubjectReport r;
    r.subject_id = id;
    r.status = SubjectStatus::Skipped;
    r.days = day_counts[id];
    r.reason = fmt::format("{} complete day(s), need {}", r.days, cfg.required_days);
    report.subjects.push_back(std::move(r));
  }

  std::vector<SubjectInput> inputs;
  for (auto& d : filtered.kept) {
    if (inputs.empty() || inputs.back().subject_id != d.subject_id) {
      inputs.push_back({d.subject_id, {}, {}, {}});
    }
    inputs.back().days.push_back(std::move(d));
  }
  const std::span<const EpochRecord> all(parsed.records);
  for (auto& in : inputs) {
    auto lo = std::lower_bound(all.begin(), all.end(), in.subject_id,
                               [](const EpochRecord& e, const std::string& id) { return e.subject_id < id; });
    auto hi = std::upper_bound(lo, all.end(), in.subject_id,
                               [](const std::string& id, const EpochRecord& e) { return id < e.subject_id; });
    in.epochs = {lo, hi};
    if (const auto it = meta.find(in.subject_id); it != meta.end()) {
      in.metadata = it->second;
    } else {
      in.metadata.subject_id = in.subject_id;
    }
  }

  std::optional<BehaviorModeModel> cohort;
  if (cfg.cohort_modes && !inputs.empty()) {
    std::vector<ActigraphyDay> all_days;
    for (const auto& in : inputs) all_days.insert(all_days.end(), in.days.begin(), in.days.end());
    cohort = modes::fit_behavior_modes(all_days, cfg.modes).model;
    cohort->fit_config["cohort_modes"] = true;
  }

  std::vector<SubjectOutput> outputs(inputs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next++; i < inputs.size(); i = next++) {
      try {
        outputs[i] = fit_subject(inputs[i], cfg, cohort ? &*cohort : nullptr);
      } catch (const std::exception& e) {
        outputs[i].report.subject_id = inputs[i].subject_id;
        outputs[i].report.status = SubjectStatus::Failed;
        outputs[i].report.days = inputs[i].days.size();
        outputs[i].report.reason = e.what();
        spdlog::warn("subject {} failed: {}", inputs[i].subject_id, e.what());
      }
    }
  };
  const auto n_threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(inputs.size(), 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }

  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (outputs[i].model) result.bundle.subjects.emplace(inputs[i].subject_id, std::move(*outputs[i].model));
    report.subjects.push_back(std::move(outputs[i].report));
  }
  std::sort(report.subjects.begin(), report.subjects.end(),
            [](const auto& a, const auto& b) { return a.subject_id < b.subject_id; });
  return result;
}

std::vector<recommend::CohortDay> cohort_days(const ModelBundle& b) {
  std::vector<recommend::CohortDay> out;
  for (const auto& [id, s] : b.subjects) {
    for (const auto& d : s.days) {
      if (d.quality) out.push_back({id, d.day_index, d.minutes, *d.quality});
    }
  }
  return out;
}

}  // namespace paris::pipeline
