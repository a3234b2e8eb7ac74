#include "paris/synthdata.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "paris/error.hpp"
#include "paris/json_io.hpp"
#include "paris/rng.hpp"

namespace paris::synthdata {

namespace {

double bump(double m, double center, double sd) {
  const double z = (m - center) / sd;
  return std::exp(-0.5 * z * z);
}

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::SpecInvalid, msg); }

struct Band {
  double lo;
  double hi;
};

// Integer count range of each level under the cut-points.
std::array<Band, 4> level_bands(const ingest::CutPoints& cp) {
  const double l = std::ceil(cp.light_min);
  const double m = std::ceil(cp.moderate_min);
  const double v = std::ceil(cp.vigorous_min);
  return {{{0, l - 1}, {l, m - 1}, {m, v - 1}, {v, 1e9}}};
}

int mode_of_weekday(const CohortSpec& spec, int dow) {
  for (std::size_t t = 0; t < spec.mode_templates.size(); ++t) {
    const auto& set = spec.mode_templates[t].weekday_set;
    if (std::find(set.begin(), set.end(), dow) != set.end()) return static_cast<int>(t);
  }
  return -1;
}

double linf(const Level3& a, const Level3& b) {
  double d = 0;
  for (std::size_t l = 0; l < 3; ++l) d = std::max(d, std::abs(a[l] - b[l]));
  return d;
}

struct SubjectOutput {
  PlantedSubject subject;
  std::string epochs;
  std::string metadata_row;
};

SubjectOutput generate_subject(const CohortSpec& spec, int index) {
  SubjectOutput out;
  auto& subj = out.subject;
  subj.subject_id = fmt::format("S{:03d}", index + 1);
  const auto bands = level_bands(spec.cut_points);
  const int awake = spec.bed_minute - spec.wake_minute;
  const int bed_epochs = 2 * (static_cast<int>(kMinutesPerDay) - awake);

  // Awake minutes of each template ranked by template value, highest first.
  std::vector<std::vector<int>> slots(spec.mode_templates.size());
  for (std::size_t t = 0; t < slots.size(); ++t) {
    auto& s = slots[t];
    s.resize(static_cast<std::size_t>(awake));
    std::iota(s.begin(), s.end(), spec.wake_minute);
    const auto& curve = spec.mode_templates[t].base_curve;
    std::stable_sort(s.begin(), s.end(), [&](int a, int b) {
      return curve[static_cast<std::size_t>(a)] > curve[static_cast<std::size_t>(b)];
    });
  }

  std::vector<int> rest_epochs;  // REST epochs at the start of each day's night
  for (int d = 0; d < spec.days_per_subject; ++d) {
    std::mt19937_64 g(rng::derive(spec.seed, static_cast<std::uint64_t>(index),
                                  static_cast<std::uint64_t>(d) + 1));
    PlantedDay day;
    day.day_index = d;
    day.day_of_week = day_of_week_for(d);
    day.mode = mode_of_weekday(spec, day.day_of_week);
    const auto& curve = spec.mode_templates[static_cast<std::size_t>(day.mode)].base_curve;
    const auto mode = static_cast<std::size_t>(day.mode);
    const std::vector<Level3> no_targets;
    const auto& targets = mode < spec.recipe_targets.size() ? spec.recipe_targets[mode] : no_targets;

    std::vector<double> counts(kMinutesPerDay);
    if (targets.empty()) {
      for (std::size_t m = 0; m < kMinutesPerDay; ++m) {
        const double noise = spec.noise_sd > 0 ? rng::normal(g, 0.0, spec.noise_sd) : 0.0;
        counts[m] = std::max(0.0, std::round(curve[m] + noise));
      }
    } else {
      const auto t = static_cast<std::size_t>(rng::uniform01(g) * static_cast<double>(targets.size()));
      const bool follow = rng::uniform01(g) < spec.on_target_probability;
      for (std::size_t l = 0; l < 3; ++l) {
        const double base = std::round(targets[t][l]);
        if (follow) {
          const auto span = static_cast<double>(2 * spec.plan_jitter + 1);
          const double jitter =
              std::floor(rng::uniform01(g) * span) - static_cast<double>(spec.plan_jitter);
          day.plan[l] = std::max(0.0, base + jitter);
        } else {
          day.plan[l] = std::round(
              base * rng::uniform(g, spec.off_target_scale.lo, spec.off_target_scale.hi));
        }
      }
      // Level of each awake minute: vigorous on the highest template minutes,
      // then moderate, then light; everything else sedentary.
      std::vector<int> level(kMinutesPerDay, 0);
      std::size_t next = 0;
      for (int l = 3; l >= 1; --l) {
        for (int i = 0; i < static_cast<int>(day.plan[static_cast<std::size_t>(l - 1)]); ++i) {
          level[static_cast<std::size_t>(slots[mode][next++])] = l;
        }
      }
      for (std::size_t m = 0; m < kMinutesPerDay; ++m) {
        const auto& band = bands[static_cast<std::size_t>(level[m])];
        const double noise = spec.noise_sd > 0 ? rng::normal(g, 0.0, spec.noise_sd) : 0.0;
        counts[m] = std::clamp(std::round(curve[m] + noise), band.lo, band.hi);
      }
    }
    if (targets.empty()) {
      Level3 totals{};
      for (int m = spec.wake_minute; m < spec.bed_minute; ++m) {
        const auto lvl = ingest::label_count(counts[static_cast<std::size_t>(m)], spec.cut_points);
        if (lvl != ActivityLevel::Sedentary) totals[static_cast<std::size_t>(lvl) - 1] += 1;
      }
      day.plan = totals;
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (linf(day.plan, targets[i]) <= spec.good_sleep_rule.tolerance) {
        day.on_target = true;
        day.target = static_cast<int>(i);
        break;
      }
    }
    const auto& range = day.on_target ? spec.good_sleep_rule.good : spec.good_sleep_rule.poor;
    day.planted_efficiency = rng::uniform(g, range.lo, range.hi);
    const int rest = static_cast<int>(std::lround((1.0 - day.planted_efficiency) * bed_epochs));
    rest_epochs.push_back(rest);
    day.quality = SleepRecord::from_bed_minutes(subj.subject_id, d, 0.5 * bed_epochs, 0.5 * rest)
                      .quality;
    subj.days.push_back(day);
    subj.counts.push_back(std::move(counts));
  }

  // Epoch rows. Night n starts at bed_minute on day n and ends at wake_minute
  // on day n + 1; the trailing morning after the last day is emitted as a
  // partial day so the last night is complete.
  const int evening_epochs = 2 * (static_cast<int>(kMinutesPerDay) - spec.bed_minute);
  auto& csv = out.epochs;
  csv.reserve(static_cast<std::size_t>(spec.days_per_subject + 1) * kEpochsPerDay * 24);
  const auto& bed_band = bands[0];
  for (int d = 0; d <= spec.days_per_subject; ++d) {
    const bool trailing = d == spec.days_per_subject;
    const int n_epochs = trailing ? 2 * spec.wake_minute : static_cast<int>(kEpochsPerDay);
    for (int e = 0; e < n_epochs; ++e) {
      const int m = e / 2;
      double minute_value;
      if (trailing) {
        const auto& curve = spec.mode_templates[static_cast<std::size_t>(
            mode_of_weekday(spec, day_of_week_for(d)))].base_curve;
        minute_value = std::clamp(curve[static_cast<std::size_t>(m)], bed_band.lo, bed_band.hi);
      } else {
        minute_value = subj.counts[static_cast<std::size_t>(d)][static_cast<std::size_t>(m)];
      }
      const auto v = static_cast<std::int64_t>(minute_value);
      const std::int64_t count = e % 2 == 0 ? v / 2 : v - v / 2;

      std::string_view interval = "ACTIVE";
      bool wake = true;
      int night_pos = -1;
      int rest = 0;
      if (m < spec.wake_minute) {
        night_pos = evening_epochs + e;
        rest = d > 0 ? rest_epochs[static_cast<std::size_t>(d - 1)] : 0;
      } else if (m >= spec.bed_minute && !trailing) {
        night_pos = e - 2 * spec.bed_minute;
        rest = rest_epochs[static_cast<std::size_t>(d)];
      }
      if (night_pos >= 0) {
        const bool lying_awake = night_pos < rest;
        interval = lying_awake ? "REST" : "REST-S";
        wake = lying_awake;
      }
      csv += fmt::format("{},{},{},{},{},{}\n", subj.subject_id, d, e, count, interval,
                         wake ? 1 : 0);
    }
  }

  std::mt19937_64 g(rng::derive(spec.seed, static_cast<std::uint64_t>(index), 0));
  auto& meta = subj.meta;
  meta.subject_id = subj.subject_id;
  meta.age = std::round(rng::uniform(g, 18.0, 80.0));
  meta.gender = rng::uniform01(g) < 0.5 ? Gender::Female : Gender::Male;
  meta.bmi = std::round(std::clamp(rng::normal(g, 27.0, 5.0), 16.0, 45.0) * 10.0) / 10.0;
  meta.resting_hr = std::round(std::clamp(rng::normal(g, 70.0, 10.0), 45.0, 110.0));
  out.metadata_row = fmt::format("{},{},{},{:.1f},{}\n", meta.subject_id, *meta.age,
                                 to_string(*meta.gender), *meta.bmi, *meta.resting_hr);
  return out;
}

}  // namespace

std::vector<double> builtin_curve(const std::string& name) {
  std::vector<double> c(kMinutesPerDay, 5.0);
  for (std::size_t i = 420; i < 1380; ++i) {
    const auto m = static_cast<double>(i);
    double v = 40.0;
    if (name == "commute") {
      v += 4400.0 * (bump(m, 450, 25) + bump(m, 1050, 25)) +
           900.0 * (bump(m, 450, 90) + bump(m, 1050, 90));
    } else if (name == "late-rise") {
      v += 4400.0 * bump(m, 720, 60) + 900.0 * bump(m, 720, 150);
    } else {
      invalid(fmt::format("unknown built-in template '{}'", name));
    }
    c[i] = std::round(v);
  }
  return c;
}

void CohortSpec::validate() const {
  if (n_subjects < 1) invalid("n_subjects must be >= 1");
  if (days_per_subject < 1) invalid("days_per_subject must be >= 1");
  if (mode_templates.empty()) invalid("at least one mode template is required");
  std::array<int, 7> owners{};
  for (const auto& t : mode_templates) {
    if (t.base_curve.size() != kMinutesPerDay) {
      invalid(fmt::format("template '{}' has {} values, expected 1440", t.name, t.base_curve.size()));
    }
    for (double v : t.base_curve) {
      if (!(v >= 0) || !std::isfinite(v)) invalid(fmt::format("template '{}' has a negative value", t.name));
    }
    for (int d : t.weekday_set) {
      if (d < 0 || d > 6) invalid(fmt::format("template '{}': day of week {} not in 0..6", t.name, d));
      ++owners[static_cast<std::size_t>(d)];
    }
  }
  for (std::size_t d = 0; d < 7; ++d) {
    if (owners[d] != 1) invalid(fmt::format("day of week {} must belong to exactly one template", d));
  }
  if (recipe_targets.size() > mode_templates.size()) invalid("more recipe target lists than modes");
  if (!(wake_minute > 0 && wake_minute < bed_minute && bed_minute < static_cast<int>(kMinutesPerDay))) {
    invalid("need 0 < wake_minute < bed_minute < 1440");
  }
  const int awake = bed_minute - wake_minute;
  for (const auto& list : recipe_targets) {
    for (const auto& t : list) {
      double total = 0;
      for (double v : t) {
        if (!(v >= 0)) invalid("recipe targets must be >= 0");
        total += std::round(v) + plan_jitter;
      }
      if (total > awake) invalid(fmt::format("recipe target needs more than {} awake minutes", awake));
    }
  }
  if (!(noise_sd >= 0)) invalid("noise_sd must be >= 0");
  if (!(on_target_probability >= 0 && on_target_probability <= 1)) {
    invalid("on_target_probability must be in [0, 1]");
  }
  const auto& rule = good_sleep_rule;
  if (!(rule.tolerance > 0)) invalid("tolerance must be > 0");
  if (plan_jitter < 0 || plan_jitter >= rule.tolerance) invalid("plan_jitter must be in [0, tolerance)");
  for (const auto* r : {&rule.good, &rule.poor}) {
    if (!(r->lo > 0 && r->lo <= r->hi && r->hi <= 1)) invalid("efficiency ranges must lie in (0, 1]");
  }
  if (!(off_target_scale.lo >= 0 && off_target_scale.lo <= off_target_scale.hi)) {
    invalid("off_target_scale must satisfy 0 <= lo <= hi");
  }
  try {
    cut_points.validate();
  } catch (const Error& e) {
    invalid(e.what());
  }
}

CohortSpec default_spec() {
  CohortSpec s;
  s.mode_templates = {{"commute", builtin_curve("commute"), {0, 1, 2, 3, 4}},
                      {"late-rise", builtin_curve("late-rise"), {5, 6}}};
  return s;
}

namespace {

nlohmann::json range_json(const Range& r) { return nlohmann::json::array({r.lo, r.hi}); }

Range range_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

void to_json(nlohmann::json& j, const CohortSpec& s) {
  auto templates = nlohmann::json::array();
  for (const auto& t : s.mode_templates) {
    templates.push_back({{"name", t.name}, {"weekday_set", t.weekday_set}, {"base_curve", t.base_curve}});
  }
  j = nlohmann::json{{"n_subjects", s.n_subjects},
                     {"days_per_subject", s.days_per_subject},
                     {"mode_templates", templates},
                     {"recipe_targets", s.recipe_targets},
                     {"noise_sd", s.noise_sd},
                     {"on_target_probability", s.on_target_probability},
                     {"plan_jitter", s.plan_jitter},
                     {"off_target_scale", range_json(s.off_target_scale)},
                     {"good_sleep_rule",
                      {{"tolerance", s.good_sleep_rule.tolerance},
                       {"good", range_json(s.good_sleep_rule.good)},
                       {"poor", range_json(s.good_sleep_rule.poor)}}},
                     {"cut_points", s.cut_points},
                     {"wake_minute", s.wake_minute},
                     {"bed_minute", s.bed_minute},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, CohortSpec& s) {
  try {
    s = default_spec();
    s.n_subjects = j.value("n_subjects", s.n_subjects);
    s.days_per_subject = j.value("days_per_subject", s.days_per_subject);
    if (j.contains("mode_templates")) {
      s.mode_templates.clear();
      for (const auto& t : j.at("mode_templates")) {
        ModeTemplate mt;
        mt.name = t.at("name").get<std::string>();
        mt.weekday_set = t.at("weekday_set").get<std::vector<int>>();
        mt.base_curve = t.contains("base_curve") ? t.at("base_curve").get<std::vector<double>>()
                                                 : builtin_curve(mt.name);
        s.mode_templates.push_back(std::move(mt));
      }
    }
    if (j.contains("recipe_targets")) {
      s.recipe_targets = j.at("recipe_targets").get<std::vector<std::vector<Level3>>>();
    }
    s.noise_sd = j.value("noise_sd", s.noise_sd);
    s.on_target_probability = j.value("on_target_probability", s.on_target_probability);
    s.plan_jitter = j.value("plan_jitter", s.plan_jitter);
    if (j.contains("off_target_scale")) s.off_target_scale = range_from(j.at("off_target_scale"));
    if (j.contains("good_sleep_rule")) {
      const auto& r = j.at("good_sleep_rule");
      s.good_sleep_rule.tolerance = r.value("tolerance", s.good_sleep_rule.tolerance);
      if (r.contains("good")) s.good_sleep_rule.good = range_from(r.at("good"));
      if (r.contains("poor")) s.good_sleep_rule.poor = range_from(r.at("poor"));
    }
    if (j.contains("cut_points")) s.cut_points = j.at("cut_points").get<ingest::CutPoints>();
    s.wake_minute = j.value("wake_minute", s.wake_minute);
    s.bed_minute = j.value("bed_minute", s.bed_minute);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    invalid(fmt::format("bad cohort spec: {}", e.what()));
  }
}

Cohort generate_cohort(const CohortSpec& spec, unsigned threads) {
  spec.validate();
  const auto n = static_cast<std::size_t>(spec.n_subjects);
  std::vector<SubjectOutput> outputs(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next++; i < n; i = next++) outputs[i] = generate_subject(spec, static_cast<int>(i));
  };
  const auto n_threads = std::clamp<std::size_t>(threads, 1, n);
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();

  Cohort cohort;
  cohort.epoch_csv = std::string(ingest::kEpochCsvHeader) + "\n";
  cohort.metadata_csv = "subject_id,age,gender,bmi,resting_hr\n";
  auto subjects = nlohmann::json::array();
  for (auto& o : outputs) {
    cohort.epoch_csv += o.epochs;
    cohort.metadata_csv += o.metadata_row;
    auto days = nlohmann::json::array();
    for (const auto& d : o.subject.days) {
      days.push_back({{"day_index", d.day_index},
                      {"day_of_week", d.day_of_week},
                      {"mode", d.mode},
                      {"plan", d.plan},
                      {"target", d.target >= 0 ? nlohmann::json(d.target) : nlohmann::json()},
                      {"on_target", d.on_target},
                      {"planted_efficiency", d.planted_efficiency},
                      {"quality", d.quality}});
    }
    subjects.push_back({{"subject_id", o.subject.subject_id}, {"days", days}});
    cohort.subjects.push_back(std::move(o.subject));
  }
  auto modes = nlohmann::json::array();
  for (std::size_t t = 0; t < spec.mode_templates.size(); ++t) {
    modes.push_back({{"name", spec.mode_templates[t].name},
                     {"weekday_set", spec.mode_templates[t].weekday_set},
                     {"recipe_targets", t < spec.recipe_targets.size()
                                            ? nlohmann::json(spec.recipe_targets[t])
                                            : nlohmann::json::array()}});
  }
  cohort.ground_truth = {{"seed", spec.seed},
                         {"n_subjects", spec.n_subjects},
                         {"days_per_subject", spec.days_per_subject},
                         {"modes", modes},
                         {"subjects", subjects}};
  return cohort;
}

}  // namespace paris::synthdata
