#pragma once

// K-means with a pluggable distance, silhouette scoring and grid search over
// (k, metric) scenarios.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "paris/core.hpp"
#include "paris/metrics.hpp"

namespace paris::cluster {

using Matrix = std::vector<std::vector<double>>;

enum class EmptyClusterPolicy { ReseedFarthest };

struct KMeansConfig {
  int k = 2;
  MetricId metric = MetricId::L2;
  int n_restarts = 10;
  int max_iters = 300;
  double rel_tol = 1e-4;
  std::uint64_t seed = 42;
  EmptyClusterPolicy empty_cluster_policy = EmptyClusterPolicy::ReseedFarthest;
  metrics::DistanceOptions distance;

  void validate() const;

  friend bool operator==(const KMeansConfig&, const KMeansConfig&) = default;
};

void to_json(nlohmann::json& j, const KMeansConfig& c);
void from_json(const nlohmann::json& j, KMeansConfig& c);

struct ClusterModel {
  Matrix centroids;
  std::vector<int> labels;
  // Objective of the fit: squared distance for L2 (the classical k-means
  // objective), plain distance for every other metric.
  double inertia = 0.0;
  int iterations_run = 0;
  bool converged = false;
  // Objective after each update step of the winning restart.
  std::vector<double> inertia_trace;
};

// Per-point cost used for inertia under `metric`.
double objective_term(MetricId metric, double distance) noexcept;

// Best of n_restarts by inertia. Seeding is k-means++; centroids are member
// means; clusters are renumbered by descending centroid mass afterwards.
ClusterModel kmeans_fit(const Matrix& data, const KMeansConfig& cfg);

struct Assignment {
  int index = 0;
  double distance = 0.0;
};

// Nearest centroid, ties to the lowest index.
Assignment assign(const Matrix& centroids, std::span<const double> x, MetricId metric,
                  const metrics::DistanceOptions& opts = {});

Matrix pairwise_distances(const Matrix& data, MetricId metric,
                          const metrics::DistanceOptions& opts = {});

// Mean silhouette from a precomputed distance matrix. Points in singleton
// clusters score 0.
double silhouette_from_distances(const Matrix& dist, std::span<const int> labels);

double silhouette(const Matrix& data, std::span<const int> labels, MetricId metric,
                  const metrics::DistanceOptions& opts = {});

struct Scenario {
  int k = 0;
  MetricId metric = MetricId::L2;
  double silhouette = 0.0;
  double inertia = 0.0;
  double seconds = 0.0;
};

struct GridResult {
  ClusterModel best;
  int best_k = 0;
  MetricId best_metric = MetricId::L2;
  double best_silhouette = 0.0;
  std::vector<Scenario> scenarios;
};

// Fits every (k, metric) pair and keeps the highest silhouette; ties go to the
// smaller k, then to the earlier metric in MetricId order.
GridResult grid_search(const Matrix& data, std::span<const int> k_range,
                       std::span<const MetricId> metric_set, const KMeansConfig& tmpl);

// Report CSV: k,metric,silhouette,inertia,seconds
std::string scenarios_csv(std::span<const Scenario> scenarios);

// p_j = (1/(d_j+eps)) / sum_k 1/(d_k+eps); zero distances split the mass evenly.
std::vector<double> membership_probabilities(const Matrix& centroids, std::span<const double> x,
                                             MetricId metric,
                                             const metrics::DistanceOptions& opts = {});

std::vector<double> membership_from_distances(std::span<const double> distances,
                                              double epsilon = 1e-9);

}  // namespace paris::cluster
