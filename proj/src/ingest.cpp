#include "paris/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <optional>
#include <tuple>

#include <fmt/format.h>

#include "paris/error.hpp"

namespace paris::ingest {

void CutPoints::validate() const {
  if (!(0 < light_min && light_min < moderate_min && moderate_min < vigorous_min)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("cut-points must satisfy 0 < light < moderate < vigorous, got {}/{}/{}",
                            light_min, moderate_min, vigorous_min));
  }
}

void to_json(nlohmann::json& j, const CutPoints& c) {
  j = nlohmann::json{{"light_min", c.light_min},
                     {"moderate_min", c.moderate_min},
                     {"vigorous_min", c.vigorous_min}};
}

void from_json(const nlohmann::json& j, CutPoints& c) {
  CutPoints d;
  c.light_min = j.value("light_min", d.light_min);
  c.moderate_min = j.value("moderate_min", d.moderate_min);
  c.vigorous_min = j.value("vigorous_min", d.vigorous_min);
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim_line(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return value;
}

std::optional<double> parse_double(std::string_view s) { return parse_number<double>(s); }

bool read_header(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
  line = std::string(trim_line(line));
  return true;
}

int interval_rank(IntervalType t) {
  switch (t) {
    case IntervalType::Active: return 0;
    case IntervalType::Rest: return 1;
    case IntervalType::RestS: return 2;
    case IntervalType::Excluded: return 3;
  }
  return 0;
}

bool in_bed(IntervalType t) { return t == IntervalType::Rest || t == IntervalType::RestS; }

}  // namespace

ParsedEpochs parse_epochs(std::istream& source) {
  std::string line;
  if (!read_header(source, line) || line != kEpochCsvHeader) {
    throw Error(ErrorCode::MalformedHeader,
                fmt::format("expected header '{}', got '{}'", kEpochCsvHeader, line));
  }
  ParsedEpochs out;
  std::map<std::string, std::pair<std::int64_t, std::int32_t>, std::less<>> last_seen;
  std::size_t line_no = 1;
  while (std::getline(source, line)) {
    ++line_no;
    const auto row = trim_line(line);
    if (row.empty()) continue;
    const auto fields = split_csv(row);
    auto reject = [&](std::string msg) { out.row_errors.push_back({line_no, std::move(msg)}); };
    if (fields.size() != 6) {
      reject(fmt::format("expected 6 fields, got {}", fields.size()));
      continue;
    }
    EpochRecord rec;
    rec.subject_id = std::string(fields[0]);
    if (rec.subject_id.empty()) {
      reject("empty subject_id");
      continue;
    }
    const auto day = parse_number<std::int64_t>(fields[1]);
    if (!day || *day < 0) {
      reject("bad day_index");
      continue;
    }
    const auto epoch = parse_number<std::int32_t>(fields[2]);
    if (!epoch || *epoch < 0 || *epoch >= static_cast<std::int32_t>(kEpochsPerDay)) {
      reject("epoch_index out of range");
      continue;
    }
    const auto count = parse_number<std::int64_t>(fields[3]);
    if (!count || *count < 0) {
      reject("bad activity_count");
      continue;
    }
    const auto interval = parse_interval_type(fields[4]);
    if (!interval) {
      reject("unknown interval_type");
      continue;
    }
    if (fields[5] != "0" && fields[5] != "1") {
      reject("wake must be 0 or 1");
      continue;
    }
    rec.day_index = *day;
    rec.epoch_index = *epoch;
    rec.activity_count = *count;
    rec.interval = *interval;
    rec.wake = fields[5] == "1";

    const auto stamp = std::make_pair(rec.day_index, rec.epoch_index);
    auto [it, inserted] = last_seen.try_emplace(rec.subject_id, stamp);
    if (!inserted) {
      if (stamp <= it->second) {
        throw Error(ErrorCode::NonMonotonicTimestamp,
                    fmt::format("subject {} at line {}", rec.subject_id, line_no));
      }
      it->second = stamp;
    }
    out.records.push_back(std::move(rec));
  }
  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const EpochRecord& a, const EpochRecord& b) {
                     return a.subject_id < b.subject_id;
                   });
  return out;
}

DaysResult epochs_to_days(std::span<const EpochRecord> epochs) {
  using Key = std::pair<std::string, std::int64_t>;
  std::map<Key, std::vector<const EpochRecord*>> groups;
  for (const auto& e : epochs) groups[{e.subject_id, e.day_index}].push_back(&e);

  DaysResult out;
  for (const auto& [key, group] : groups) {
    std::array<const EpochRecord*, kEpochsPerDay> slots{};
    std::size_t present = 0;
    for (const auto* e : group) {
      auto& slot = slots[static_cast<std::size_t>(e->epoch_index)];
      if (slot == nullptr) {
        slot = e;
        ++present;
      }
    }
    if (present != kEpochsPerDay) {
      out.incomplete.push_back({key.first, key.second, present});
      continue;
    }
    ActigraphyDay day;
    day.subject_id = key.first;
    day.day_index = key.second;
    day.day_of_week = day_of_week_for(key.second);
    day.counts.resize(kMinutesPerDay);
    day.interval.resize(kMinutesPerDay);
    day.wake.resize(kMinutesPerDay);
    for (std::size_t m = 0; m < kMinutesPerDay; ++m) {
      const auto* a = slots[2 * m];
      const auto* b = slots[2 * m + 1];
      day.counts[m] = static_cast<double>(a->activity_count + b->activity_count);
      day.interval[m] =
          interval_rank(a->interval) >= interval_rank(b->interval) ? a->interval : b->interval;
      day.wake[m] = (a->wake || b->wake) ? 1 : 0;
    }
    out.days.push_back(std::move(day));
  }
  return out;
}

FilterResult filter_subjects(std::span<const ActigraphyDay> days, std::size_t required) {
  std::map<std::string, std::vector<const ActigraphyDay*>> by_subject;
  for (const auto& d : days) by_subject[d.subject_id].push_back(&d);

  FilterResult out;
  for (auto& [subject, list] : by_subject) {
    if (list.size() < required) {
      out.dropped_subjects.push_back(subject);
      continue;
    }
    std::stable_sort(list.begin(), list.end(), [](const auto* a, const auto* b) {
      return a->day_index < b->day_index;
    });
    for (std::size_t i = 0; i < required; ++i) out.kept.push_back(*list[i]);
  }
  return out;
}

ActivityLevel label_count(double count, const CutPoints& cp) noexcept {
  if (count < cp.light_min) return ActivityLevel::Sedentary;
  if (count < cp.moderate_min) return ActivityLevel::Light;
  if (count < cp.vigorous_min) return ActivityLevel::Moderate;
  return ActivityLevel::Vigorous;
}

std::vector<ActivityLevel> label_minutes(const ActigraphyDay& day, const CutPoints& cp) {
  cp.validate();
  std::vector<ActivityLevel> out;
  out.reserve(day.counts.size());
  for (double c : day.counts) out.push_back(label_count(c, cp));
  return out;
}

Level3 level_totals(std::span<const ActivityLevel> labels, std::span<const IntervalType> interval,
                    int t1, int t2, bool active_only) {
  if (t1 >= t2) {
    throw Error(ErrorCode::WindowInverted, fmt::format("window [{}, {})", t1, t2));
  }
  if (t1 < 0 || static_cast<std::size_t>(t2) > labels.size()) {
    throw Error(ErrorCode::BadWindow,
                fmt::format("window [{}, {}) outside 0..{}", t1, t2, labels.size()));
  }
  if (active_only && interval.size() < static_cast<std::size_t>(t2)) {
    throw Error(ErrorCode::LengthMismatch, "interval vector shorter than window");
  }
  Level3 minutes{};
  for (int m = t1; m < t2; ++m) {
    const auto level = labels[static_cast<std::size_t>(m)];
    if (level == ActivityLevel::Sedentary) continue;
    if (active_only && interval[static_cast<std::size_t>(m)] != IntervalType::Active) continue;
    minutes[static_cast<std::size_t>(level) - 1] += 1.0;
  }
  return minutes;
}

LevelSummary summarize_levels(const ActigraphyDay& day, std::span<const ActivityLevel> labels,
                              int t1, int t2, bool active_only) {
  if (labels.size() != day.counts.size()) {
    throw Error(ErrorCode::LengthMismatch, "labels do not match day length");
  }
  LevelSummary s;
  s.subject_id = day.subject_id;
  s.day_index = day.day_index;
  s.window_start = t1;
  s.window_end = t2;
  s.minutes = level_totals(labels, day.interval, t1, t2, active_only);
  return s;
}

SleepRecord compute_sleep_record(std::span<const EpochRecord> night, double good_threshold) {
  std::size_t rest = 0;
  std::size_t rest_s = 0;
  std::size_t waso_epochs = 0;
  std::size_t run = 0;
  const EpochRecord* first_bed = nullptr;
  auto close_run = [&] {
    if (run >= static_cast<std::size_t>(kWasoMinEpochs)) waso_epochs += run;
    run = 0;
  };
  for (const auto& e : night) {
    if (in_bed(e.interval) && first_bed == nullptr) first_bed = &e;
    if (e.interval == IntervalType::Rest) ++rest;
    if (e.interval == IntervalType::RestS) {
      ++rest_s;
      if (e.wake) {
        ++run;
        continue;
      }
    }
    close_run();
  }
  close_run();
  if (first_bed == nullptr) throw Error(ErrorCode::NoBedInterval, "no REST/REST-S epochs");
  const double in_bed_min = 0.5 * static_cast<double>(rest + rest_s);
  const double awake_min = 0.5 * static_cast<double>(rest) + 0.5 * static_cast<double>(waso_epochs);
  return SleepRecord::from_bed_minutes(first_bed->subject_id, first_bed->day_index, in_bed_min,
                                       awake_min, good_threshold);
}

std::vector<EpochRecord> locate_night(std::span<const EpochRecord> subject_epochs,
                                      std::int64_t day_index) {
  constexpr std::int32_t kSecondHalf = static_cast<std::int32_t>(kEpochsPerDay / 2);
  const auto start = std::lower_bound(
      subject_epochs.begin(), subject_epochs.end(), std::make_pair(day_index, kSecondHalf),
      [](const EpochRecord& e, const std::pair<std::int64_t, std::int32_t>& key) {
        return std::make_pair(e.day_index, e.epoch_index) < key;
      });
  auto contiguous = [](const EpochRecord& a, const EpochRecord& b) {
    return b.timestamp() - a.timestamp() == 0.5;
  };

  auto best_begin = subject_epochs.end();
  std::size_t best_len = 0;
  auto it = start;
  while (it != subject_epochs.end() && it->day_index == day_index) {
    if (!in_bed(it->interval)) {
      ++it;
      continue;
    }
    auto run_end = it + 1;
    while (run_end != subject_epochs.end() && in_bed(run_end->interval) &&
           contiguous(*(run_end - 1), *run_end)) {
      ++run_end;
    }
    const auto len = static_cast<std::size_t>(run_end - it);
    if (len > best_len) {
      best_len = len;
      best_begin = it;
    }
    it = run_end;
  }
  if (best_len == 0) return {};
  return {best_begin, best_begin + static_cast<std::ptrdiff_t>(best_len)};
}

int wake_onset(std::span<const IntervalType> minute_interval) {
  std::size_t m = 0;
  while (m < minute_interval.size() && in_bed(minute_interval[m])) ++m;
  return static_cast<int>(m);
}

SubjectNights sleep_records_for_subject(std::span<const EpochRecord> subject_epochs,
                                        std::span<const std::int64_t> day_indices,
                                        double good_threshold) {
  SubjectNights out;
  for (auto day : day_indices) {
    const auto night = locate_night(subject_epochs, day);
    if (night.empty()) {
      out.days_without_bed.push_back(day);
      continue;
    }
    out.records.emplace(day, compute_sleep_record(night, good_threshold));
  }
  return out;
}

MetadataParse parse_metadata(std::istream& source) {
  std::string line;
  constexpr std::string_view kPrefix = "subject_id,age,gender,bmi,resting_hr";
  if (!read_header(source, line) || line.rfind(kPrefix, 0) != 0 ||
      (line.size() > kPrefix.size() && line[kPrefix.size()] != ',')) {
    throw Error(ErrorCode::MalformedHeader,
                fmt::format("metadata header must start with '{}', got '{}'", kPrefix, line));
  }
  const auto header = split_csv(line);
  std::vector<std::string> extra_names;
  for (std::size_t i = 5; i < header.size(); ++i) extra_names.emplace_back(header[i]);

  MetadataParse out;
  std::size_t line_no = 1;
  while (std::getline(source, line)) {
    ++line_no;
    const auto row = trim_line(line);
    if (row.empty()) continue;
    const auto fields = split_csv(row);
    if (fields.size() != header.size()) {
      out.row_errors.push_back(
          {line_no, fmt::format("expected {} fields, got {}", header.size(), fields.size())});
      continue;
    }
    SubjectMetadata meta;
    meta.subject_id = std::string(fields[0]);
    bool ok = !meta.subject_id.empty();
    auto positive = [&](std::string_view cell, const char* name) -> std::optional<double> {
      if (cell.empty()) return std::nullopt;
      const auto v = parse_double(cell);
      if (!v || !(*v > 0)) {
        out.row_errors.push_back({line_no, fmt::format("bad {}", name)});
        ok = false;
        return std::nullopt;
      }
      return v;
    };
    meta.age = positive(fields[1], "age");
    if (!fields[2].empty()) {
      meta.gender = parse_gender(fields[2]);
      if (!meta.gender) {
        out.row_errors.push_back({line_no, "unknown gender"});
        ok = false;
      }
    }
    meta.bmi = positive(fields[3], "bmi");
    meta.resting_hr = positive(fields[4], "resting_hr");
    for (std::size_t i = 0; i < extra_names.size(); ++i) {
      const auto cell = fields[5 + i];
      if (cell.empty()) continue;
      const auto v = parse_double(cell);
      if (!v) {
        out.row_errors.push_back({line_no, fmt::format("bad {}", extra_names[i])});
        ok = false;
        continue;
      }
      meta.extensions[extra_names[i]] = *v;
    }
    if (ok) out.subjects[meta.subject_id] = std::move(meta);
  }
  return out;
}

}  // namespace paris::ingest
