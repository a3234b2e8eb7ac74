#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "paris/core.hpp"

namespace paris::metrics {

// JS in the textbook symmetric form 1/2 KL(p||M) + 1/2 KL(q||M), or the
// alternative 1/2 KL(p||M) + 1/2 KL(M||q) (not symmetric).
enum class JsForm { Symmetric, Literal };

struct DistanceOptions {
  std::optional<std::size_t> dtw_band;  // Sakoe-Chiba radius, none = full DP
  double divergence_epsilon = 1e-9;
  JsForm js_form = JsForm::Symmetric;

  friend bool operator==(const DistanceOptions&, const DistanceOptions&) = default;
};

void to_json(nlohmann::json& j, const DistanceOptions& o);
void from_json(const nlohmann::json& j, DistanceOptions& o);

// L1, L2 or 1 - Pearson r. Zero-variance rule for correlation: both flat -> 0,
// exactly one flat -> 1.
double dist_elementwise(MetricId metric, std::span<const double> x, std::span<const double> y);

// Exact DTW with |a-b| ground cost and steps (1,0), (0,1), (1,1), anchored at
// both ends. `band` limits |i-j|.
double dist_dtw(std::span<const double> x, std::span<const double> y,
                std::optional<std::size_t> band = std::nullopt);

// (x + eps) / sum(x + eps). All-zero input with eps = 0 yields the uniform vector.
std::vector<double> normalize_to_distribution(std::span<const double> x, double epsilon);

double kl_divergence(std::span<const double> p, std::span<const double> q);

// SymmetrizedKL or JS over strictly positive distributions (natural log).
double dist_divergence(MetricId metric, std::span<const double> p, std::span<const double> q,
                       JsForm form = JsForm::Symmetric);

// Dispatch on any metric. KL/JS normalize both inputs first.
double distance(MetricId metric, std::span<const double> x, std::span<const double> y,
                const DistanceOptions& opts = {});

// Full forward DFT (unnormalized, e^{-2 pi i k t / N}).
std::vector<std::complex<double>> dft(std::span<const double> x);
// Inverse of dft(): returns real samples, 1/N normalization.
std::vector<double> inverse_dft(std::span<const std::complex<double>> spectrum);

// [Re c0, Im c0, ..., Re c_{n-1}, Im c_{n-1}] of the DFT of x.
std::vector<double> fft_features(std::span<const double> x, std::size_t n_components);

inline constexpr std::size_t kDefaultFftComponents = 25;

}  // namespace paris::metrics
