#include "paris/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>

#include <fftw3.h>
#include <fmt/format.h>

#include "paris/error.hpp"

namespace paris::metrics {

void to_json(nlohmann::json& j, const DistanceOptions& o) {
  j = nlohmann::json{{"dtw_band", o.dtw_band ? nlohmann::json(*o.dtw_band) : nlohmann::json()},
                     {"divergence_epsilon", o.divergence_epsilon},
                     {"js_form", o.js_form == JsForm::Symmetric ? "symmetric" : "literal"}};
}

void from_json(const nlohmann::json& j, DistanceOptions& o) {
  DistanceOptions d;
  o.dtw_band = d.dtw_band;
  if (j.contains("dtw_band") && !j.at("dtw_band").is_null()) {
    o.dtw_band = j.at("dtw_band").get<std::size_t>();
  }
  o.divergence_epsilon = j.value("divergence_epsilon", d.divergence_epsilon);
  const auto form = j.value("js_form", std::string("symmetric"));
  if (form == "symmetric") {
    o.js_form = JsForm::Symmetric;
  } else if (form == "literal") {
    o.js_form = JsForm::Literal;
  } else {
    throw Error(ErrorCode::ParseError, "js_form must be 'symmetric' or 'literal'");
  }
}

namespace {

void require_same_length(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch, fmt::format("lengths {} vs {}", x.size(), y.size()));
  }
}

double correlation_distance(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0;
  double sxx = 0;
  double syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const bool flat_x = sxx == 0.0;
  const bool flat_y = syy == 0.0;
  if (flat_x && flat_y) return 0.0;
  if (flat_x || flat_y) return 1.0;
  const double r = std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
  return 1.0 - r;
}

void check_distribution(std::span<const double> p) {
  double sum = 0;
  for (double v : p) {
    if (!(v > 0)) throw Error(ErrorCode::NotADistribution, "component <= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::NotADistribution, fmt::format("sums to {}", sum));
  }
}

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

template <typename T>
std::unique_ptr<T[], FftwFree> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
  if (p == nullptr) throw std::bad_alloc();
  return std::unique_ptr<T[], FftwFree>(p);
}

class Plan {
 public:
  explicit Plan(fftw_plan p) : plan_(p) {}
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

}  // namespace

double dist_elementwise(MetricId metric, std::span<const double> x, std::span<const double> y) {
  require_same_length(x, y);
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "empty vectors");
  switch (metric) {
    case MetricId::L1: {
      double s = 0;
      for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
      return s;
    }
    case MetricId::L2: {
      double s = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
      }
      return std::sqrt(s);
    }
    case MetricId::CorrelationDistance:
      return correlation_distance(x, y);
    default:
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("{} is not an elementwise metric", to_string(metric)));
  }
}

double dist_dtw(std::span<const double> x, std::span<const double> y,
                std::optional<std::size_t> band) {
  if (x.empty() || y.empty()) throw Error(ErrorCode::EmptyInput, "dtw of an empty series");
  const std::size_t n = x.size();
  const std::size_t m = y.size();
  const std::size_t gap = n > m ? n - m : m - n;
  if (band && *band < gap) {
    throw Error(ErrorCode::BandInfeasible,
                fmt::format("band {} < length difference {}", *band, gap));
  }
  const std::size_t radius = band.value_or(std::max(n, m));
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> prev(m, kInf);
  std::vector<double> curr(m, kInf);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i > radius ? i - radius : 0;
    const std::size_t hi = std::min(m - 1, i + radius);
    std::fill(curr.begin(), curr.end(), kInf);
    for (std::size_t j = lo; j <= hi; ++j) {
      const double cost = std::abs(x[i] - y[j]);
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = kInf;
        if (i > 0) best = std::min(best, prev[j]);
        if (j > 0) best = std::min(best, curr[j - 1]);
        if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
      }
      curr[j] = cost + best;
    }
    std::swap(prev, curr);
  }
  return prev[m - 1];
}

std::vector<double> normalize_to_distribution(std::span<const double> x, double epsilon) {
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "cannot normalize an empty vector");
  double total = 0;
  for (double v : x) {
    if (!(v >= 0) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, "distribution input must be finite and >= 0");
    }
    total += v + epsilon;
  }
  std::vector<double> out(x.size());
  if (total == 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(x.size()));
    return out;
  }
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] + epsilon) / total;
  return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  require_same_length(p, q);
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * std::log(p[i] / q[i]);
  return s;
}

double dist_divergence(MetricId metric, std::span<const double> p, std::span<const double> q,
                       JsForm form) {
  require_same_length(p, q);
  check_distribution(p);
  check_distribution(q);
  switch (metric) {
    case MetricId::SymmetrizedKL:
      return std::max(0.0, 0.5 * (kl_divergence(p, q) + kl_divergence(q, p)));
    case MetricId::JS: {
      std::vector<double> mid(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) mid[i] = 0.5 * (p[i] + q[i]);
      const double second = form == JsForm::Symmetric ? kl_divergence(q, mid)
                                                      : kl_divergence(mid, q);
      return std::max(0.0, 0.5 * kl_divergence(p, mid) + 0.5 * second);
    }
    default:
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("{} is not a divergence", to_string(metric)));
  }
}

double distance(MetricId metric, std::span<const double> x, std::span<const double> y,
                const DistanceOptions& opts) {
  switch (metric) {
    case MetricId::L1:
    case MetricId::L2:
    case MetricId::CorrelationDistance:
      return dist_elementwise(metric, x, y);
    case MetricId::DTW:
      return dist_dtw(x, y, opts.dtw_band);
    case MetricId::SymmetrizedKL:
    case MetricId::JS: {
      require_same_length(x, y);
      const auto p = normalize_to_distribution(x, opts.divergence_epsilon);
      const auto q = normalize_to_distribution(y, opts.divergence_epsilon);
      return dist_divergence(metric, p, q, opts.js_form);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown metric");
}

std::vector<std::complex<double>> dft(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "dft of an empty series");
  const std::size_t n = x.size();
  const std::size_t half = n / 2 + 1;
  auto in = fftw_buffer<double>(n);
  auto out = fftw_buffer<fftw_complex>(half);
  std::unique_ptr<Plan> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = std::make_unique<Plan>(
        fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  }
  std::copy(x.begin(), x.end(), in.get());
  plan->execute();

  std::vector<std::complex<double>> spectrum(n);
  for (std::size_t k = 0; k < half; ++k) spectrum[k] = {out[k][0], out[k][1]};
  for (std::size_t k = half; k < n; ++k) spectrum[k] = std::conj(spectrum[n - k]);
  return spectrum;
}

std::vector<double> inverse_dft(std::span<const std::complex<double>> spectrum) {
  if (spectrum.empty()) throw Error(ErrorCode::EmptyInput, "inverse dft of an empty spectrum");
  const std::size_t n = spectrum.size();
  const std::size_t half = n / 2 + 1;
  auto in = fftw_buffer<fftw_complex>(half);
  auto out = fftw_buffer<double>(n);
  std::unique_ptr<Plan> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = std::make_unique<Plan>(
        fftw_plan_dft_c2r_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  }
  for (std::size_t k = 0; k < half; ++k) {
    in[k][0] = spectrum[k].real();
    in[k][1] = spectrum[k].imag();
  }
  plan->execute();
  std::vector<double> x(n);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = out[t] * scale;
  return x;
}

std::vector<double> fft_features(std::span<const double> x, std::size_t n_components) {
  if (n_components < 1 || n_components > x.size() / 2) {
    throw Error(ErrorCode::BadComponentCount,
                fmt::format("n_components {} not in 1..{}", n_components, x.size() / 2));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite sample");
  }
  const auto spectrum = dft(x);
  std::vector<double> features;
  features.reserve(2 * n_components);
  for (std::size_t k = 0; k < n_components; ++k) {
    features.push_back(spectrum[k].real());
    features.push_back(spectrum[k].imag());
  }
  return features;
}

}  // namespace paris::metrics
