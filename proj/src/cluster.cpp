#include "paris/cluster.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>

#include "paris/error.hpp"
#include "paris/json_io.hpp"
#include "paris/rng.hpp"

namespace paris::cluster {

void KMeansConfig::validate() const {
  if (k < 1 || n_restarts < 1 || max_iters < 1 || !(rel_tol > 0)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("bad k-means config: k={} restarts={} max_iters={} rel_tol={}", k,
                            n_restarts, max_iters, rel_tol));
  }
}

void to_json(nlohmann::json& j, const KMeansConfig& c) {
  j = nlohmann::json{{"k", c.k},
                     {"metric", c.metric},
                     {"n_restarts", c.n_restarts},
                     {"max_iters", c.max_iters},
                     {"rel_tol", c.rel_tol},
                     {"seed", c.seed},
                     {"empty_cluster_policy", "reseed_farthest"},
                     {"distance", c.distance}};
}

void from_json(const nlohmann::json& j, KMeansConfig& c) {
  KMeansConfig d;
  c.k = j.value("k", d.k);
  c.metric = j.contains("metric") ? j.at("metric").get<MetricId>() : d.metric;
  c.n_restarts = j.value("n_restarts", d.n_restarts);
  c.max_iters = j.value("max_iters", d.max_iters);
  c.rel_tol = j.value("rel_tol", d.rel_tol);
  c.seed = j.value("seed", d.seed);
  if (j.value("empty_cluster_policy", std::string("reseed_farthest")) != "reseed_farthest") {
    throw Error(ErrorCode::ParseError, "empty_cluster_policy must be reseed_farthest");
  }
  c.empty_cluster_policy = EmptyClusterPolicy::ReseedFarthest;
  c.distance = j.contains("distance") ? j.at("distance").get<metrics::DistanceOptions>()
                                      : metrics::DistanceOptions{};
}

double objective_term(MetricId metric, double distance) noexcept {
  return metric == MetricId::L2 ? distance * distance : distance;
}

namespace {

using rng::splitmix64;
using rng::uniform01;

void validate_data(const Matrix& data) {
  if (data.empty()) return;
  const auto dim = data.front().size();
  for (const auto& row : data) {
    if (row.size() != dim) throw Error(ErrorCode::LengthMismatch, "rows differ in length");
    for (double v : row) {
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite input");
    }
  }
}

struct RunResult {
  Matrix centroids;
  std::vector<int> labels;
  double inertia = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

class Runner {
 public:
  Runner(const Matrix& data, const KMeansConfig& cfg) : data_(data), cfg_(cfg) {}

  RunResult run(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    RunResult r;
    r.centroids = seed_plus_plus(rng);
    std::vector<double> dist;
    std::vector<int> previous;
    for (int iter = 1; iter <= cfg_.max_iters; ++iter) {
      r.iterations = iter;
      assign_all(r.centroids, r.labels, dist);
      r.trace.push_back(objective(dist));
      const bool stable = r.labels == previous;
      previous = r.labels;
      const Matrix old = r.centroids;
      update_means(r.centroids, r.labels);
      if (stable || relative_shift(old, r.centroids) < cfg_.rel_tol) {
        r.converged = true;
        break;
      }
    }
    assign_all(r.centroids, r.labels, dist);
    r.inertia = objective(dist);
    r.trace.push_back(r.inertia);
    return r;
  }

 private:
  double dist(std::span<const double> a, std::span<const double> b) const {
    return metrics::distance(cfg_.metric, a, b, cfg_.distance);
  }

  double objective(const std::vector<double>& dist) const {
    double s = 0;
    for (double d : dist) s += objective_term(cfg_.metric, d);
    return s;
  }

  Matrix seed_plus_plus(std::mt19937_64& rng) const {
    const std::size_t n = data_.size();
    const auto k = static_cast<std::size_t>(cfg_.k);
    std::vector<std::size_t> chosen;
    chosen.push_back(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n);
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    while (chosen.size() < k) {
      const auto& last = data_[chosen.back()];
      double total = 0;
      for (std::size_t i = 0; i < n; ++i) {
        nearest[i] = std::min(nearest[i], dist(data_[i], last));
        total += nearest[i] * nearest[i];
      }
      std::size_t pick = n;
      if (total > 0) {
        const double target = uniform01(rng) * total;
        double acc = 0;
        for (std::size_t i = 0; i < n; ++i) {
          acc += nearest[i] * nearest[i];
          if (nearest[i] > 0 && acc >= target) {
            pick = i;
            break;
          }
        }
        if (pick == n) {
          for (std::size_t i = n; i-- > 0;) {
            if (nearest[i] > 0) {
              pick = i;
              break;
            }
          }
        }
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) {
            pick = i;
            break;
          }
        }
      }
      chosen.push_back(pick);
    }
    Matrix centroids;
    for (auto idx : chosen) centroids.push_back(data_[idx]);
    return centroids;
  }

  void assign_all(Matrix& centroids, std::vector<int>& labels, std::vector<double>& d) const {
    const std::size_t n = data_.size();
    labels.assign(n, 0);
    d.assign(n, 0.0);
    std::vector<std::size_t> sizes(centroids.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = assign(centroids, data_[i], cfg_.metric, cfg_.distance);
      labels[i] = a.index;
      d[i] = a.distance;
      ++sizes[static_cast<std::size_t>(a.index)];
    }
    // ReseedFarthest: an empty cluster takes the point farthest from its
    // centroid among clusters that can spare one.
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (sizes[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[static_cast<std::size_t>(labels[i])] < 2) continue;
        if (far == n || d[i] > d[far]) far = i;
      }
      if (far == n) break;  // only possible when n < k, rejected earlier
      --sizes[static_cast<std::size_t>(labels[far])];
      labels[far] = static_cast<int>(c);
      d[far] = 0.0;
      sizes[c] = 1;
      centroids[c] = data_[far];
    }
  }

  void update_means(Matrix& centroids, const std::vector<int>& labels) const {
    const std::size_t dim = data_.front().size();
    Matrix sums(centroids.size(), std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(centroids.size(), 0);
    for (std::size_t i = 0; i < data_.size(); ++i) {
      const auto c = static_cast<std::size_t>(labels[i]);
      ++counts[c];
      for (std::size_t t = 0; t < dim; ++t) sums[c][t] += data_[i][t];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t t = 0; t < dim; ++t) {
        centroids[c][t] = sums[c][t] / static_cast<double>(counts[c]);
      }
    }
  }

  static double relative_shift(const Matrix& before, const Matrix& after) {
    double moved = 0;
    double norm = 0;
    for (std::size_t c = 0; c < before.size(); ++c) {
      for (std::size_t t = 0; t < before[c].size(); ++t) {
        const double d = after[c][t] - before[c][t];
        moved += d * d;
        norm += before[c][t] * before[c][t];
      }
    }
    if (moved == 0) return 0;
    return std::sqrt(moved) / std::max(std::sqrt(norm), 1e-300);
  }

  const Matrix& data_;
  const KMeansConfig& cfg_;
};

void canonicalize(RunResult& r) {
  const std::size_t k = r.centroids.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> mass(k);
  for (std::size_t c = 0; c < k; ++c) {
    mass[c] = std::accumulate(r.centroids[c].begin(), r.centroids[c].end(), 0.0);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (mass[a] != mass[b]) return mass[a] > mass[b];
    return r.centroids[a] > r.centroids[b];
  });
  std::vector<int> new_index(k);
  Matrix sorted;
  for (std::size_t pos = 0; pos < k; ++pos) {
    new_index[order[pos]] = static_cast<int>(pos);
    sorted.push_back(std::move(r.centroids[order[pos]]));
  }
  r.centroids = std::move(sorted);
  for (auto& l : r.labels) l = new_index[static_cast<std::size_t>(l)];
}

}  // namespace

ClusterModel kmeans_fit(const Matrix& data, const KMeansConfig& cfg) {
  cfg.validate();
  if (data.size() < static_cast<std::size_t>(cfg.k)) {
    throw Error(ErrorCode::TooFewPoints,
                fmt::format("{} points for k = {}", data.size(), cfg.k));
  }
  validate_data(data);

  const Runner runner(data, cfg);
  std::optional<RunResult> best;
  for (int restart = 0; restart < cfg.n_restarts; ++restart) {
    auto r = runner.run(splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(restart))));
    if (!best || r.inertia < best->inertia) best = std::move(r);
  }
  canonicalize(*best);

  ClusterModel model;
  model.centroids = std::move(best->centroids);
  model.labels = std::move(best->labels);
  model.inertia = best->inertia;
  model.iterations_run = best->iterations;
  model.converged = best->converged;
  model.inertia_trace = std::move(best->trace);
  return model;
}

Assignment assign(const Matrix& centroids, std::span<const double> x, MetricId metric,
                  const metrics::DistanceOptions& opts) {
  if (centroids.empty()) throw Error(ErrorCode::InvalidArgument, "no centroids");
  Assignment best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (centroids[c].size() != x.size()) {
      throw Error(ErrorCode::LengthMismatch,
                  fmt::format("centroid length {} vs input {}", centroids[c].size(), x.size()));
    }
    const double d = metrics::distance(metric, centroids[c], x, opts);
    if (d < best.distance) best = {static_cast<int>(c), d};
  }
  return best;
}

Matrix pairwise_distances(const Matrix& data, MetricId metric,
                          const metrics::DistanceOptions& opts) {
  const std::size_t n = data.size();
  Matrix d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      d[i][j] = d[j][i] = metrics::distance(metric, data[i], data[j], opts);
    }
  }
  return d;
}

double silhouette_from_distances(const Matrix& dist, std::span<const int> labels) {
  const std::size_t n = labels.size();
  if (dist.size() != n) throw Error(ErrorCode::LengthMismatch, "labels vs distance matrix");
  std::set<int> clusters;
  for (int l : labels) {
    if (l < 0) throw Error(ErrorCode::InvalidArgument, "negative label");
    clusters.insert(l);
  }
  if (clusters.size() < 2) throw Error(ErrorCode::SingleCluster, "need at least two clusters");
  const int max_label = *clusters.rbegin();
  std::vector<std::size_t> sizes(static_cast<std::size_t>(max_label) + 1, 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];

  double total = 0;
  std::vector<double> sums(sizes.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(labels[i]);
    if (sizes[own] < 2) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sums[static_cast<std::size_t>(labels[j])] += dist[i][j];
    }
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      if (c == own || sizes[c] == 0) continue;
      b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    }
    const double denom = std::max(a, b);
    total += denom > 0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

double silhouette(const Matrix& data, std::span<const int> labels, MetricId metric,
                  const metrics::DistanceOptions& opts) {
  if (data.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "data vs labels");
  return silhouette_from_distances(pairwise_distances(data, metric, opts), labels);
}

GridResult grid_search(const Matrix& data, std::span<const int> k_range,
                       std::span<const MetricId> metric_set, const KMeansConfig& tmpl) {
  const std::set<int> ks(k_range.begin(), k_range.end());
  const std::set<MetricId> ms(metric_set.begin(), metric_set.end());
  if (ks.empty() || ms.empty()) throw Error(ErrorCode::EmptyGrid, "no scenarios to fit");
  for (int k : ks) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, fmt::format("grid k = {} < 1", k));
    if (static_cast<std::size_t>(k) > data.size()) {
      throw Error(ErrorCode::TooFewPoints, fmt::format("grid k = {} > N = {}", k, data.size()));
    }
  }

  std::map<MetricId, Matrix> dist_cache;
  GridResult out;
  bool have_best = false;
  for (int k : ks) {
    for (MetricId m : ms) {
      const auto t0 = std::chrono::steady_clock::now();
      KMeansConfig cfg = tmpl;
      cfg.k = k;
      cfg.metric = m;
      auto model = kmeans_fit(data, cfg);
      auto [it, fresh] = dist_cache.try_emplace(m);
      if (fresh) it->second = pairwise_distances(data, m, tmpl.distance);
      const double s = silhouette_from_distances(it->second, model.labels);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      out.scenarios.push_back({k, m, s, model.inertia, secs});
      if (!have_best || s > out.best_silhouette) {
        have_best = true;
        out.best_silhouette = s;
        out.best_k = k;
        out.best_metric = m;
        out.best = std::move(model);
      }
    }
  }
  return out;
}

std::string scenarios_csv(std::span<const Scenario> scenarios) {
  std::string out = "k,metric,silhouette,inertia,seconds\n";
  for (const auto& s : scenarios) {
    out += fmt::format("{},{},{},{},{}\n", s.k, to_string(s.metric), s.silhouette, s.inertia,
                       s.seconds);
  }
  return out;
}

std::vector<double> membership_from_distances(std::span<const double> distances, double epsilon) {
  if (distances.empty()) throw Error(ErrorCode::InvalidArgument, "no distances");
  std::vector<double> p(distances.size(), 0.0);
  const auto zeros = std::count(distances.begin(), distances.end(), 0.0);
  if (zeros > 0) {
    for (std::size_t i = 0; i < distances.size(); ++i) {
      if (distances[i] == 0.0) p[i] = 1.0 / static_cast<double>(zeros);
    }
    return p;
  }
  double total = 0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    p[i] = 1.0 / (distances[i] + epsilon);
    total += p[i];
  }
  for (auto& v : p) v /= total;
  return p;
}

std::vector<double> membership_probabilities(const Matrix& centroids, std::span<const double> x,
                                             MetricId metric,
                                             const metrics::DistanceOptions& opts) {
  std::vector<double> d;
  d.reserve(centroids.size());
  for (const auto& c : centroids) {
    if (c.size() != x.size()) throw Error(ErrorCode::LengthMismatch, "centroid vs input length");
    d.push_back(metrics::distance(metric, c, x, opts));
  }
  return membership_from_distances(d);
}

}  // namespace paris::cluster
