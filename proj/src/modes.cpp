#include "paris/modes.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

#include "paris/error.hpp"
#include "paris/json_io.hpp"

namespace paris::modes {

void to_json(nlohmann::json& j, const ModeFitConfig& c) {
  j = nlohmann::json{{"domain", c.domain},
                     {"k_range", c.k_range},
                     {"metrics", c.metrics},
                     {"kmeans", c.kmeans},
                     {"fft_components", c.fft_components}};
}

void from_json(const nlohmann::json& j, ModeFitConfig& c) {
  ModeFitConfig d;
  c.domain = j.contains("domain") ? j.at("domain").get<ModeDomain>() : d.domain;
  c.k_range = j.value("k_range", d.k_range);
  c.metrics = j.contains("metrics") ? j.at("metrics").get<std::vector<MetricId>>() : d.metrics;
  c.kmeans = j.contains("kmeans") ? j.at("kmeans").get<cluster::KMeansConfig>() : d.kmeans;
  c.fft_components = j.value("fft_components", d.fft_components);
}

namespace {

bool is_divergence(MetricId m) { return m == MetricId::SymmetrizedKL || m == MetricId::JS; }

}  // namespace

std::vector<double> day_features(const ActigraphyDay& day, ModeDomain domain,
                                 std::size_t fft_components) {
  if (domain == ModeDomain::Time) return day.counts;
  return metrics::fft_features(day.counts, fft_components);
}

ModeFit fit_behavior_modes(std::span<const ActigraphyDay> days, const ModeFitConfig& cfg) {
  if (days.size() < 2) {
    throw Error(ErrorCode::TooFewDays, fmt::format("{} day(s), need at least 2", days.size()));
  }
  ModeFit fit;
  std::vector<int> ks;
  for (int k : cfg.k_range) {
    if (static_cast<std::size_t>(k) <= days.size()) ks.push_back(k);
  }
  std::vector<MetricId> ms;
  for (auto m : cfg.metrics) {
    if (cfg.domain == ModeDomain::Frequency && is_divergence(m)) {
      fit.skipped_metrics.push_back(m);
    } else {
      ms.push_back(m);
    }
  }
  if (ks.empty() || ms.empty()) {
    throw Error(ErrorCode::EmptyGrid, fmt::format("no usable (k, metric) pairs for {} days",
                                                  days.size()));
  }

  cluster::Matrix data;
  data.reserve(days.size());
  for (const auto& d : days) data.push_back(day_features(d, cfg.domain, cfg.fft_components));

  auto grid = cluster::grid_search(data, ks, ms, cfg.kmeans);

  auto& model = fit.model;
  model.subject_id = days.front().subject_id;
  model.domain = cfg.domain;
  model.metric = grid.best_metric;
  model.k = grid.best_k;
  model.centroids = std::move(grid.best.centroids);
  for (std::size_t i = 0; i < days.size(); ++i) {
    model.day_assignments[days[i].day_index] = grid.best.labels[i];
  }
  model.silhouette = grid.best_silhouette;
  model.fit_config = cfg;
  fit.scenarios = std::move(grid.scenarios);
  return fit;
}

PurityReport day_of_week_purity(const BehaviorModeModel& model,
                                const std::map<std::int64_t, int>& day_of_week) {
  if (model.day_assignments.empty()) {
    throw Error(ErrorCode::MissingAssignments, "model has no day assignments");
  }
  PurityReport report;
  report.modes.resize(static_cast<std::size_t>(std::max(model.k, 1)));
  for (const auto& [day, mode] : model.day_assignments) {
    const auto it = day_of_week.find(day);
    if (it == day_of_week.end()) {
      throw Error(ErrorCode::MissingAssignments, fmt::format("no day_of_week for day {}", day));
    }
    if (mode < 0 || mode >= static_cast<int>(report.modes.size())) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("mode {} out of range", mode));
    }
    ++report.modes[static_cast<std::size_t>(mode)].day_of_week_counts.at(
        static_cast<std::size_t>(it->second));
  }
  for (auto& m : report.modes) {
    int weekday = 0;
    int total = 0;
    for (std::size_t d = 0; d < 7; ++d) {
      total += m.day_of_week_counts[d];
      if (!is_weekend(static_cast<int>(d))) weekday += m.day_of_week_counts[d];
    }
    m.weekday_fraction = total > 0 ? static_cast<double>(weekday) / total : 0.0;
    m.weekday_majority = m.weekday_fraction >= 0.5;
    m.purity = std::max(m.weekday_fraction, 1.0 - m.weekday_fraction);
  }
  return report;
}

metrics::DistanceOptions model_distance_options(const BehaviorModeModel& model) {
  if (model.fit_config.contains("kmeans") && model.fit_config["kmeans"].contains("distance")) {
    return model.fit_config["kmeans"]["distance"].get<metrics::DistanceOptions>();
  }
  return {};
}

PartialAssignment assign_mode_partial(const BehaviorModeModel& model,
                                      std::span<const double> x_partial, int t_m) {
  if (model.domain != ModeDomain::Time) {
    throw Error(ErrorCode::FrequencyDomainUnsupported,
                "partial-day assignment needs a time-domain model");
  }
  if (model.centroids.empty()) throw Error(ErrorCode::InvalidArgument, "model has no centroids");
  const auto length = model.centroids.front().size();
  if (t_m < 1 || static_cast<std::size_t>(t_m) > length) {
    throw Error(ErrorCode::BadWindow, fmt::format("t_m = {} not in 1..{}", t_m, length));
  }
  if (x_partial.size() != static_cast<std::size_t>(t_m)) {
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("partial series has {} values for t_m = {}", x_partial.size(), t_m));
  }
  const auto opts = model_distance_options(model);
  PartialAssignment out;
  out.distance = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < model.centroids.size(); ++c) {
    const std::span<const double> cropped(model.centroids[c].data(), static_cast<std::size_t>(t_m));
    const double d = metrics::distance(model.metric, cropped, x_partial, opts);
    out.distances.push_back(d);
    if (d < out.distance) {
      out.distance = d;
      out.mode = static_cast<int>(c);
    }
  }
  return out;
}

}  // namespace paris::modes
