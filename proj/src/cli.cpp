#include "paris/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "paris/evalreport.hpp"
#include "paris/json_io.hpp"
#include "paris/pipeline.hpp"
#include "paris/service.hpp"
#include "paris/synthdata.hpp"

namespace paris::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownSubject: return kUnknownEntity;
    case ErrorCode::MalformedHeader:
    case ErrorCode::NonMonotonicTimestamp:
    case ErrorCode::ParseError:
    case ErrorCode::SpecInvalid:
    case ErrorCode::EmptyBundle:
    case ErrorCode::EmptyInput:
    case ErrorCode::InvalidArgument: return kInputError;
    default: return kDomainError;
  }
}

namespace {

void init_logging() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_logger_mt("paris");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("PARIS_LOG")) {
      spdlog::set_level(spdlog::level::from_str(env));
    }
  });
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, fmt::format("cannot read {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ParseError, fmt::format("cannot write {}", path.string()));
  out << text;
}

std::vector<recommend::ConstraintRule> load_rules(const std::string& path) {
  if (path.empty()) return recommend::default_rules();
  return recommend::parse_rules(read_json(path));
}

// `minute,count[,interval_type]`, minutes 0, 1, 2, ... in order.
recommend::PartialDay read_partial_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const bool with_interval = line == "minute,count,interval_type";
  if (line != "minute,count" && !with_interval) {
    throw Error(ErrorCode::MalformedHeader,
                fmt::format("{}: header must be minute,count[,interval_type]", path.string()));
  }
  recommend::PartialDay day;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (cells.size() != (with_interval ? 3U : 2U)) {
      throw Error(ErrorCode::ParseError, fmt::format("{}:{}: wrong field count", path.string(), line_no));
    }
    try {
      if (std::stoul(cells[0]) != day.counts.size()) {
        throw Error(ErrorCode::ParseError,
                    fmt::format("{}:{}: minutes must run 0, 1, 2, ...", path.string(), line_no));
      }
      day.counts.push_back(std::stod(cells[1]));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ParseError, fmt::format("{}:{}: bad number", path.string(), line_no));
    }
    if (with_interval) {
      const auto t = parse_interval_type(cells[2]);
      if (!t) throw Error(ErrorCode::ParseError, fmt::format("{}:{}: bad interval_type", path.string(), line_no));
      day.interval.push_back(*t);
    }
  }
  return day;
}

pipeline::ModelBundle load_bundle_file(const fs::path& path) {
  return pipeline::load_bundle(read_file(path));
}

unsigned default_threads() { return std::max(1U, std::thread::hardware_concurrency()); }

struct SynthArgs {
  std::string spec;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> n_subjects;
  unsigned threads = default_threads();
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  auto spec = synthdata::default_spec();
  if (!a.spec.empty()) {
    if (!fs::exists(a.spec)) throw Error(ErrorCode::SpecInvalid, fmt::format("spec file {} not found", a.spec));
    spec = read_json(a.spec).get<synthdata::CohortSpec>();
  }
  if (a.seed) spec.seed = *a.seed;
  if (a.n_subjects) spec.n_subjects = *a.n_subjects;
  const auto cohort = synthdata::generate_cohort(spec, a.threads);
  const fs::path dir(a.out_dir);
  write_file(dir / "epochs.csv", cohort.epoch_csv);
  write_file(dir / "metadata.csv", cohort.metadata_csv);
  write_file(dir / "ground_truth.json", cohort.ground_truth.dump(2) + "\n");
  std::size_t days = 0;
  for (const auto& s : cohort.subjects) days += s.days.size();
  out << fmt::format("seed {}: {} subjects, {} days -> {}\n", spec.seed, cohort.subjects.size(), days,
                     dir.string());
  return kOk;
}

struct FitArgs {
  std::string epochs;
  std::string metadata;
  std::string config;
  std::string out = "bundle.json";
  std::string report;
  std::string report_csv;
  std::optional<std::uint64_t> seed;
  std::vector<int> k_range;
  std::vector<std::string> metrics;
  std::string domain;
  std::optional<int> min_cluster_days;
  std::optional<int> restarts;
  std::optional<std::size_t> dtw_band;
  std::optional<std::size_t> required_days;
  bool cohort_modes = false;
  unsigned threads = default_threads();
};

pipeline::PipelineConfig effective_config(const FitArgs& a) {
  pipeline::PipelineConfig cfg;
  if (!a.config.empty()) {
    try {
      cfg = read_json(a.config).get<pipeline::PipelineConfig>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, fmt::format("{}: {}", a.config, e.what()));
    }
  }
  if (a.seed) {
    cfg.modes.kmeans.seed = *a.seed;
    cfg.recipes.seed = *a.seed;
  }
  if (!a.k_range.empty()) cfg.modes.k_range = a.k_range;
  if (!a.metrics.empty()) {
    cfg.modes.metrics.clear();
    for (const auto& m : a.metrics) {
      const auto id = parse_metric(m);
      if (!id) throw Error(ErrorCode::InvalidArgument, fmt::format("unknown metric '{}'", m));
      cfg.modes.metrics.push_back(*id);
    }
  }
  if (!a.domain.empty()) {
    const auto d = parse_domain(a.domain);
    if (!d) throw Error(ErrorCode::InvalidArgument, fmt::format("unknown domain '{}'", a.domain));
    cfg.modes.domain = *d;
  }
  if (a.min_cluster_days) cfg.recipes.min_cluster_days = *a.min_cluster_days;
  if (a.restarts) {
    cfg.modes.kmeans.n_restarts = *a.restarts;
    cfg.recipes.n_restarts = *a.restarts;
  }
  if (a.dtw_band) cfg.modes.kmeans.distance.dtw_band = *a.dtw_band;
  if (a.required_days) cfg.required_days = *a.required_days;
  if (a.cohort_modes) cfg.cohort_modes = true;
  return cfg;
}

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const auto cfg = effective_config(a);
  std::ifstream epochs(a.epochs, std::ios::binary);
  if (!epochs) throw Error(ErrorCode::ParseError, fmt::format("cannot read {}", a.epochs));
  std::ifstream metadata;
  if (!a.metadata.empty()) {
    metadata.open(a.metadata, std::ios::binary);
    if (!metadata) throw Error(ErrorCode::ParseError, fmt::format("cannot read {}", a.metadata));
  }
  const auto result =
      pipeline::run_pipeline(epochs, a.metadata.empty() ? nullptr : &metadata, cfg, a.threads);
  write_file(a.out, pipeline::save_bundle(result.bundle));
  const auto text = fmt::format("config: {}\n{}", json(cfg).dump(), result.report.to_text());
  if (!a.report.empty()) write_file(a.report, text);
  if (!a.report_csv.empty()) write_file(a.report_csv, result.report.to_csv());
  out << text;
  return result.report.fitted() == 0 ? kEmpty : kOk;
}

struct RecommendArgs {
  std::string bundle;
  std::string subject;
  std::string partial;
  int t_m = 0;
  std::string rules;
  std::optional<int> wake_onset;
  std::vector<std::string> overrides;
  bool explain = false;
};

json parse_overrides(const std::vector<std::string>& items) {
  json j = json::object();
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("override '{}' is not key=value", item));
    }
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    if (value.empty()) {
      j[key] = nullptr;
    } else if (key == "gender") {
      j[key] = value;
    } else {
      try {
        std::size_t used = 0;
        j[key] = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::InvalidArgument, fmt::format("override '{}' is not numeric", item));
      }
    }
  }
  return j;
}

int cmd_recommend(const RecommendArgs& a, std::ostream& out) {
  const auto bundle = load_bundle_file(a.bundle);
  auto partial = read_partial_csv(a.partial);
  service::RecommendRequest req;
  req.subject_id = a.subject;
  req.t_m = a.t_m;
  // The CSV may hold more of the day than t_m; only the first t_m minutes count.
  const auto n = static_cast<std::size_t>(std::max(a.t_m, 0));
  if (partial.counts.size() > n) partial.counts.resize(n);
  if (partial.interval.size() > n) partial.interval.resize(n);
  req.partial_counts = std::move(partial.counts);
  req.partial_interval = std::move(partial.interval);
  req.wake_onset = a.wake_onset;
  req.metadata_overrides = parse_overrides(a.overrides);
  const auto rec = service::recommend_for_subject(bundle, req, load_rules(a.rules));
  out << render_recommendation(rec, a.explain);
  return kOk;
}

struct EvaluateArgs {
  std::string bundle;
  std::string epochs;
  std::vector<int> t_m{720};
  std::size_t n_neighbors = 10;
  std::string rules;
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto bundle = load_bundle_file(a.bundle);
  if (bundle.subjects.empty()) throw Error(ErrorCode::EmptyBundle, "bundle has no subjects");
  std::ifstream in(a.epochs, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, fmt::format("cannot read {}", a.epochs));
  const auto parsed = ingest::parse_epochs(in);
  const auto days = ingest::epochs_to_days(parsed.records);
  const auto kept = ingest::filter_subjects(days.days, bundle.config.required_days).kept;
  if (kept.empty()) throw Error(ErrorCode::EmptyInput, "no complete subjects in the data");
  for (const auto& d : kept) {
    if (bundle.find(d.subject_id) == nullptr) {
      throw Error(ErrorCode::ParseError,
                  fmt::format("subject '{}' is in the data but not in the bundle", d.subject_id));
    }
  }
  const auto rules = load_rules(a.rules);
  const auto summary = evalreport::evaluate_days(bundle, kept, a.t_m, a.n_neighbors, rules);
  const auto csv = evalreport::evaluation_csv(summary);
  if (a.out.empty()) {
    out << csv;
  } else {
    write_file(a.out, csv);
    out << fmt::format("{} rows evaluated, mean success_rate {:.4f}\n", summary.evaluated,
                       summary.mean_success_rate);
  }
  return summary.evaluated == 0 ? kEmpty : kOk;
}

struct ExportArgs {
  std::string bundle;
  std::string kind;
  std::string subject;
  std::string out;
};

int cmd_export(const ExportArgs& a, std::ostream& out) {
  const auto bundle = load_bundle_file(a.bundle);
  std::string csv;
  if (a.kind == "centers") {
    csv = evalreport::export_mode_centers(bundle, a.subject);
  } else if (a.kind == "composition") {
    csv = evalreport::export_composition(bundle);
  } else {
    csv = evalreport::export_recipes(bundle, a.subject);
  }
  if (a.out.empty()) {
    out << csv;
  } else {
    write_file(a.out, csv);
  }
  return kOk;
}

struct ServeArgs {
  std::string bundle;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string rules;
  std::string ui_dir;
  std::string admin_token;
  std::string cors_origin = "*";
};

int cmd_serve(const ServeArgs& a) {
  service::Options opts;
  opts.bundle_path = a.bundle;
  opts.rules = load_rules(a.rules);
  opts.admin_token = a.admin_token;
  opts.cors_origin = a.cors_origin;
  service::Service svc(opts);
  svc.reload();
  service::ServeOptions so;
  so.host = a.host;
  so.port = a.port;
  if (!a.ui_dir.empty()) so.ui_dir = a.ui_dir;
  if (!service::serve(svc, so)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("cannot listen on {}:{}", a.host, a.port));
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  init_logging();
  CLI::App app{"Personalized activity recommendations for better sleep, from actigraphy."};
  app.name("paris");
  app.require_subcommand(1);
  app.set_version_flag("--version", "paris 1.0");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic cohort with planted modes and recipes");
  s->add_option("--spec", synth.spec, "Cohort spec JSON (default: built-in two-mode cohort)");
  s->add_option("--out", synth.out_dir, "Output directory")->capture_default_str();
  s->add_option("--seed", synth.seed, "Override the spec seed");
  s->add_option("--n-subjects", synth.n_subjects, "Override the number of subjects");
  s->add_option("--threads", synth.threads, "Worker threads")->capture_default_str();

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit behavior modes and recipes; write a model bundle");
  f->add_option("--epochs", fit.epochs, "Epoch CSV")->required();
  f->add_option("--metadata", fit.metadata, "Metadata CSV");
  f->add_option("--config", fit.config, "Pipeline config JSON; flags override it");
  f->add_option("--out", fit.out, "Bundle path")->capture_default_str();
  f->add_option("--report", fit.report, "Write the text run report here");
  f->add_option("--report-csv", fit.report_csv, "Write the CSV run report here");
  f->add_option("--seed", fit.seed, "k-means seed for modes and recipes");
  f->add_option("--k-range", fit.k_range, "Candidate k values, e.g. 2,3,4")->delimiter(',');
  f->add_option("--metrics", fit.metrics, "Candidate metrics: l1,l2,dtw,corr,kl,js")->delimiter(',');
  f->add_option("--domain", fit.domain, "time or frequency");
  f->add_option("--min-cluster-days", fit.min_cluster_days, "Minimum days in a recipe cluster");
  f->add_option("--restarts", fit.restarts, "k-means restarts");
  f->add_option("--dtw-band", fit.dtw_band, "Sakoe-Chiba radius for dtw");
  f->add_option("--required-days", fit.required_days, "Days a subject needs to be fitted");
  f->add_flag("--cohort-modes", fit.cohort_modes, "Fit one set of modes over the whole cohort");
  f->add_option("--threads", fit.threads, "Worker threads")->capture_default_str();

  RecommendArgs rec;
  auto* r = app.add_subcommand("recommend", "Recommend activity for the rest of a day");
  r->add_option("--bundle", rec.bundle, "Model bundle")->required();
  r->add_option("--subject", rec.subject, "Subject id")->required();
  r->add_option("--partial", rec.partial, "Partial-day CSV: minute,count[,interval_type]")->required();
  r->add_option("--t-m", rec.t_m, "Current minute of the day (1..1440)")->required();
  r->add_option("--rules", rec.rules, "Constraint rules JSON (default: built-in rules)");
  r->add_option("--wake-onset", rec.wake_onset, "Start of the achieved window");
  r->add_option("--set", rec.overrides, "Metadata override key=value (repeatable)");
  r->add_flag("--explain", rec.explain, "Include distances and triggered rules");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Retrospective evaluation of top recommendations");
  e->add_option("--bundle", ev.bundle, "Model bundle")->required();
  e->add_option("--epochs", ev.epochs, "Epoch CSV of the days to evaluate")->required();
  e->add_option("--t-m", ev.t_m, "Minutes of the day to evaluate at")->delimiter(',')->capture_default_str();
  e->add_option("--n-neighbors", ev.n_neighbors, "Neighbors per evaluation")->capture_default_str();
  e->add_option("--rules", ev.rules, "Constraint rules JSON");
  e->add_option("--out", ev.out, "Write the CSV here instead of standard output");

  ExportArgs ex;
  auto* x = app.add_subcommand("export", "Export plot data from a bundle as CSV");
  x->add_option("--bundle", ex.bundle, "Model bundle")->required();
  x->add_option("--kind", ex.kind, "centers, composition or recipes")
      ->required()
      ->check(CLI::IsMember({"centers", "composition", "recipes"}));
  x->add_option("--subject", ex.subject, "Subject id (centers, recipes)");
  x->add_option("--out", ex.out, "Write the CSV here instead of standard output");

  ServeArgs sv;
  auto* v = app.add_subcommand("serve", "Serve the HTTP API over a bundle");
  v->add_option("--bundle", sv.bundle, "Model bundle")->required();
  v->add_option("--host", sv.host, "Bind address")->capture_default_str();
  v->add_option("--port", sv.port, "Port")->capture_default_str();
  v->add_option("--rules", sv.rules, "Constraint rules JSON");
  v->add_option("--ui-dir", sv.ui_dir, "Static UI files to serve at /");
  v->add_option("--admin-token", sv.admin_token, "Token for POST /api/v1/admin/reload");
  v->add_option("--cors-origin", sv.cors_origin, "Access-Control-Allow-Origin value")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (f->parsed()) return cmd_fit(fit, out);
    if (r->parsed()) return cmd_recommend(rec, out);
    if (e->parsed()) return cmd_evaluate(ev, out);
    if (x->parsed()) return cmd_export(ex, out);
    if (v->parsed()) return cmd_serve(sv);
  } catch (const Error& ex_err) {
    err << fmt::format("error: {}\n", ex_err.what());
    return exit_code_for(ex_err.code());
  } catch (const std::exception& ex_err) {
    err << fmt::format("error: {}\n", ex_err.what());
    return kInputError;
  }
  return kInputError;
}

}  // namespace paris::cli
