#pragma once

// Behavior modes: per-subject clusters of whole-day activity series, either on
// the raw minute counts or on their leading Fourier coefficients.

#include <array>
#include <map>
#include <span>
#include <vector>

#include <json.hpp>

#include "paris/cluster.hpp"
#include "paris/core.hpp"

namespace paris::modes {

struct ModeFitConfig {
  ModeDomain domain = ModeDomain::Time;
  std::vector<int> k_range{2, 3, 4, 5, 6};
  std::vector<MetricId> metrics{MetricId::L2, MetricId::JS};
  cluster::KMeansConfig kmeans;  // k and metric are overridden by the grid
  std::size_t fft_components = 25;

  friend bool operator==(const ModeFitConfig&, const ModeFitConfig&) = default;
};

void to_json(nlohmann::json& j, const ModeFitConfig& c);
void from_json(const nlohmann::json& j, ModeFitConfig& c);

struct ModeFit {
  BehaviorModeModel model;
  std::vector<cluster::Scenario> scenarios;
  std::vector<MetricId> skipped_metrics;  // divergences dropped in the frequency domain
};

// Feature row of one day for the given domain.
std::vector<double> day_features(const ActigraphyDay& day, ModeDomain domain,
                                 std::size_t fft_components);

// Grid-searched k-means over one subject's days. Ks above the day count are
// dropped from the grid; the frequency domain skips KL/JS because Fourier
// coefficients are signed.
ModeFit fit_behavior_modes(std::span<const ActigraphyDay> days, const ModeFitConfig& cfg);

struct ModePurity {
  std::array<int, 7> day_of_week_counts{};
  double weekday_fraction = 0.0;
  bool weekday_majority = true;
  double purity = 0.0;

  friend bool operator==(const ModePurity&, const ModePurity&) = default;
};

struct PurityReport {
  std::vector<ModePurity> modes;

  friend bool operator==(const PurityReport&, const PurityReport&) = default;
};

// Weekend = Saturday/Sunday. Throws MissingAssignments when the model has no
// assignments or a day lacks a day-of-week entry.
PurityReport day_of_week_purity(const BehaviorModeModel& model,
                                const std::map<std::int64_t, int>& day_of_week);

struct PartialAssignment {
  int mode = 0;
  double distance = 0.0;
  std::vector<double> distances;
};

// Compares the first t_m minutes against every centroid cropped to t_m.
PartialAssignment assign_mode_partial(const BehaviorModeModel& model,
                                      std::span<const double> x_partial, int t_m);

// Distance options stored in a model's fit_config.
metrics::DistanceOptions model_distance_options(const BehaviorModeModel& model);

}  // namespace paris::modes
