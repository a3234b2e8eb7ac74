#pragma once

// Small helpers shared by the unit suites.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "paris/core.hpp"

namespace testutil {

inline std::vector<double> random_series(std::mt19937_64& g, std::size_t n, double lo = 0.0,
                                         double hi = 10.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> x(n);
  for (auto& v : x) v = u(g);
  return x;
}

inline paris::ActigraphyDay flat_day(double value, std::int64_t day_index = 0) {
  paris::ActigraphyDay d;
  d.subject_id = "S";
  d.day_index = day_index;
  d.day_of_week = paris::day_of_week_for(day_index);
  d.counts.assign(paris::kMinutesPerDay, value);
  d.interval.assign(paris::kMinutesPerDay, paris::IntervalType::Active);
  d.wake.assign(paris::kMinutesPerDay, 0);
  return d;
}

// Epoch CSV rows for one subject-day; counts/intervals given per epoch.
inline std::string epoch_rows(const std::string& subject, std::int64_t day,
                              const std::vector<std::int64_t>& counts,
                              const std::vector<std::string>& interval,
                              const std::vector<int>& wake) {
  std::string out;
  for (std::size_t e = 0; e < counts.size(); ++e) {
    out += subject + "," + std::to_string(day) + "," + std::to_string(e) + "," +
           std::to_string(counts[e]) + "," + interval[e] + "," + std::to_string(wake[e]) + "\n";
  }
  return out;
}

}  // namespace testutil
