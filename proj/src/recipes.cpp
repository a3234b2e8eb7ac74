#include "paris/recipes.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "paris/error.hpp"

namespace paris::recipes {

void RecipeConfig::validate() const {
  if (!(good_efficiency_threshold > 0 && good_efficiency_threshold < 1)) {
    throw Error(ErrorCode::InvalidArgument, "good_efficiency_threshold must be in (0, 1)");
  }
  if (!(good_ratio_threshold > 0)) {
    throw Error(ErrorCode::InvalidArgument, "good_ratio_threshold must be > 0");
  }
  if (min_cluster_days < 1) throw Error(ErrorCode::InvalidArgument, "min_cluster_days must be >= 1");
}

void to_json(nlohmann::json& j, const RecipeConfig& c) {
  j = nlohmann::json{{"good_efficiency_threshold", c.good_efficiency_threshold},
                     {"good_ratio_threshold", c.good_ratio_threshold},
                     {"min_cluster_days", c.min_cluster_days},
                     {"subcluster_k_range", c.subcluster_k_range},
                     {"n_restarts", c.n_restarts},
                     {"max_iters", c.max_iters},
                     {"rel_tol", c.rel_tol},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, RecipeConfig& c) {
  RecipeConfig d;
  c.good_efficiency_threshold = j.value("good_efficiency_threshold", d.good_efficiency_threshold);
  c.good_ratio_threshold = j.value("good_ratio_threshold", d.good_ratio_threshold);
  c.min_cluster_days = j.value("min_cluster_days", d.min_cluster_days);
  c.subcluster_k_range = j.value("subcluster_k_range", d.subcluster_k_range);
  c.n_restarts = j.value("n_restarts", d.n_restarts);
  c.max_iters = j.value("max_iters", d.max_iters);
  c.rel_tol = j.value("rel_tol", d.rel_tol);
  c.seed = j.value("seed", d.seed);
}

SleepQuality tag_sleep_quality(const SleepRecord& rec, const RecipeConfig& cfg) {
  return rec.efficiency > cfg.good_efficiency_threshold ? SleepQuality::Good : SleepQuality::Poor;
}

bool good_cluster_test(int good_count, int poor_count, const RecipeConfig& cfg) {
  if (good_count < 0 || poor_count < 0) {
    throw Error(ErrorCode::InvalidArgument, "negative day counts");
  }
  if (good_count + poor_count < cfg.min_cluster_days) return false;
  if (poor_count == 0) return good_count >= 1;
  return static_cast<double>(good_count) / static_cast<double>(poor_count) >=
         cfg.good_ratio_threshold;
}

Extraction extract_recipes_detailed(std::span<const TaggedDay> mode_days, const RecipeConfig& cfg) {
  cfg.validate();
  if (mode_days.size() < 2) {
    throw Error(ErrorCode::TooFewDays,
                fmt::format("{} tagged day(s) in mode, need at least 2", mode_days.size()));
  }
  cluster::Matrix data;
  std::set<std::vector<double>> distinct;
  for (const auto& d : mode_days) {
    data.emplace_back(d.minutes.begin(), d.minutes.end());
    distinct.insert(data.back());
  }

  // k must leave at least one cluster with two members and cannot exceed the
  // number of distinct points.
  const auto k_cap = std::min(mode_days.size() - 1, distinct.size());
  std::vector<int> ks;
  for (int k : cfg.subcluster_k_range) {
    if (k >= 2 && static_cast<std::size_t>(k) <= k_cap) ks.push_back(k);
  }

  cluster::KMeansConfig kcfg;
  kcfg.metric = MetricId::L2;
  kcfg.n_restarts = cfg.n_restarts;
  kcfg.max_iters = cfg.max_iters;
  kcfg.rel_tol = cfg.rel_tol;
  kcfg.seed = cfg.seed;

  Extraction out;
  std::vector<int> labels(mode_days.size(), 0);
  if (!ks.empty()) {
    const MetricId l2[] = {MetricId::L2};
    auto grid = cluster::grid_search(data, ks, l2, kcfg);
    out.k = grid.best_k;
    out.silhouette = grid.best_silhouette;
    labels = grid.best.labels;
  }

  out.clusters.resize(static_cast<std::size_t>(out.k));
  std::vector<int> sizes(out.clusters.size(), 0);
  for (std::size_t i = 0; i < mode_days.size(); ++i) {
    auto& c = out.clusters[static_cast<std::size_t>(labels[i])];
    ++sizes[static_cast<std::size_t>(labels[i])];
    for (std::size_t l = 0; l < 3; ++l) c.center[l] += mode_days[i].minutes[l];
    (mode_days[i].quality == SleepQuality::Good ? c.good_count : c.poor_count) += 1;
    c.member_days.push_back(mode_days[i].day_index);
  }
  for (std::size_t c = 0; c < out.clusters.size(); ++c) {
    auto& sc = out.clusters[c];
    for (auto& v : sc.center) v /= static_cast<double>(sizes[c]);
    std::sort(sc.member_days.begin(), sc.member_days.end());
    sc.passed = good_cluster_test(sc.good_count, sc.poor_count, cfg);
    if (sc.passed) out.recipes.push_back({sc.center, sc.good_count, sc.poor_count, sc.member_days});
  }
  return out;
}

std::vector<Recipe> extract_recipes(std::span<const TaggedDay> mode_days, const RecipeConfig& cfg) {
  return extract_recipes_detailed(mode_days, cfg).recipes;
}

}  // namespace paris::recipes
