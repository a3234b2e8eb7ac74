#pragma once

// Good-sleep activity recipes: sub-clusters of daily [light, moderate,
// vigorous] totals within one behavior mode whose good/poor night ratio
// passes the good-cluster test.

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "paris/cluster.hpp"
#include "paris/core.hpp"

namespace paris::recipes {

struct RecipeConfig {
  double good_efficiency_threshold = 0.90;
  double good_ratio_threshold = 2.0;
  int min_cluster_days = 3;
  std::vector<int> subcluster_k_range{2, 3, 4, 5};
  int n_restarts = 10;
  int max_iters = 300;
  double rel_tol = 1e-4;
  std::uint64_t seed = 42;

  void validate() const;

  friend bool operator==(const RecipeConfig&, const RecipeConfig&) = default;
};

void to_json(nlohmann::json& j, const RecipeConfig& c);
void from_json(const nlohmann::json& j, RecipeConfig& c);

// Good iff efficiency > threshold (strict).
SleepQuality tag_sleep_quality(const SleepRecord& rec, const RecipeConfig& cfg);

// Enough days, and good/poor >= ratio (no poor nights: at least one good).
bool good_cluster_test(int good_count, int poor_count, const RecipeConfig& cfg);

struct TaggedDay {
  std::int64_t day_index = 0;
  Level3 minutes{};
  SleepQuality quality = SleepQuality::Poor;
};

struct SubCluster {
  Level3 center{};
  int good_count = 0;
  int poor_count = 0;
  std::vector<std::int64_t> member_days;
  bool passed = false;
};

struct Extraction {
  int k = 1;
  double silhouette = 0.0;  // 0 when k fell back to 1
  std::vector<SubCluster> clusters;
  std::vector<Recipe> recipes;  // clusters that passed, in cluster order
};

// Sub-clusters the mode's days with L2 k-means (k by max silhouette over the
// usable part of subcluster_k_range, else k = 1) and keeps passing clusters.
Extraction extract_recipes_detailed(std::span<const TaggedDay> mode_days, const RecipeConfig& cfg);

std::vector<Recipe> extract_recipes(std::span<const TaggedDay> mode_days, const RecipeConfig& cfg);

}  // namespace paris::recipes
