#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "paris/cli.hpp"
#include "paris/json_io.hpp"
#include "paris/pipeline.hpp"
#include "paris/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run paris_cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = paris::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  [[nodiscard]] std::string operator/(const std::string& f) const { return (path / f).string(); }
};

// Hand-built bundle: one flat mode with recipes [300,30,10] and [120,5,0].
std::string fixture_bundle() {
  paris::pipeline::ModelBundle b;
  auto& s = b.subjects["S001"];
  s.metadata.subject_id = "S001";
  s.modes.subject_id = "S001";
  s.modes.k = 1;
  s.modes.centroids = {std::vector<double>(1440, 0.0)};
  s.recipes.subject_id = "S001";
  s.recipes.modes = {{paris::Recipe{{300, 30, 10}, 8, 1, {0}}, paris::Recipe{{120, 5, 0}, 6, 2, {1}}}};
  s.days = {{0, 0, {150, 10, 0}, 0.95, paris::SleepQuality::Good}};
  b.config.required_days = 1;
  return paris::pipeline::save_bundle(b);
}

std::string midday_csv() {
  std::string csv = "minute,count\n";
  for (int m = 0; m < 800; ++m) {
    const int c = m < 150 ? 500 : m < 160 ? 2000 : 0;
    csv += std::to_string(m) + "," + std::to_string(c) + "\n";
  }
  return csv;
}

}  // namespace

TEST_CASE("synth writes three files and is repeatable") {
  TempDir dir("paris_cli_synth");
  const auto a = paris_cli({"synth", "--out", dir / "a", "--n-subjects", "2"});
  CHECK(a.code == 0);
  for (const auto* f : {"epochs.csv", "metadata.csv", "ground_truth.json"}) {
    CHECK(fs::exists(dir.path / "a" / f));
  }
  CHECK(paris_cli({"synth", "--out", dir / "b", "--n-subjects", "2", "--threads", "2"}).code == 0);
  for (const auto* f : {"epochs.csv", "metadata.csv", "ground_truth.json"}) {
    CHECK(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f));
  }
}

TEST_CASE("synth with a missing spec file") {
  const auto r = paris_cli({"synth", "--spec", "/nonexistent/spec.json"});
  CHECK(r.code == 2);
  CHECK(r.err.find("/nonexistent/spec.json") != std::string::npos);
}

TEST_CASE("fit, export and evaluate on a synthetic cohort") {
  TempDir dir("paris_cli_fit");
  spit(dir / "spec.json", R"({"n_subjects": 2, "days_per_subject": 7, "seed": 3})");
  REQUIRE(paris_cli({"synth", "--spec", dir / "spec.json", "--out", dir.path.string()}).code == 0);
  const auto fit = paris_cli({"fit", "--epochs", dir / "epochs.csv", "--metadata", dir / "metadata.csv",
                              "--out", dir / "bundle.json", "--report-csv", dir / "report.csv"});
  CHECK(fit.code == 0);
  CHECK(fit.out.starts_with("config: {"));
  CHECK(fit.out.find("2 subjects: 2 fitted") != std::string::npos);
  const auto bundle = paris::pipeline::load_bundle(slurp(dir / "bundle.json"));
  CHECK(bundle.subjects.size() == 2);
  CHECK(slurp(dir / "report.csv").starts_with("subject_id,status"));

  // Same inputs, same bytes.
  CHECK(paris_cli({"fit", "--epochs", dir / "epochs.csv", "--metadata", dir / "metadata.csv",
                   "--out", dir / "bundle2.json"}).code == 0);
  CHECK(slurp(dir / "bundle.json") == slurp(dir / "bundle2.json"));

  const auto centers = paris_cli({"export", "--bundle", dir / "bundle.json", "--kind", "centers",
                                  "--subject", "S001"});
  CHECK(centers.code == 0);
  CHECK(centers.out.starts_with("minute,mode0,mode1\n"));
  CHECK(paris_cli({"export", "--bundle", dir / "bundle.json", "--kind", "composition"}).code == 0);
  CHECK(paris_cli({"export", "--bundle", dir / "bundle.json", "--kind", "recipes", "--subject", "S9"}).code == 3);
  CHECK(paris_cli({"export", "--bundle", dir / "bundle.json", "--kind", "pie"}).code == 2);

  const auto ev = paris_cli({"evaluate", "--bundle", dir / "bundle.json", "--epochs", dir / "epochs.csv",
                             "--t-m", "600,720"});
  CHECK(ev.out.starts_with("subject,day_index,t_m,status"));
  CHECK(ev.out.find("cohort,,,evaluated=") != std::string::npos);
}

TEST_CASE("fit exit codes") {
  TempDir dir("paris_cli_fit_codes");
  spit(dir / "spec.json", R"({"n_subjects": 2, "days_per_subject": 5})");
  REQUIRE(paris_cli({"synth", "--spec", dir / "spec.json", "--out", dir.path.string()}).code == 0);
  CHECK(paris_cli({"fit", "--epochs", dir / "epochs.csv", "--out", dir / "b.json"}).code == 1);
  spit(dir / "bad.csv", "who,what\n1,2\n");
  CHECK(paris_cli({"fit", "--epochs", dir / "bad.csv", "--out", dir / "b.json"}).code == 2);
  CHECK(paris_cli({"fit", "--epochs", dir / "epochs.csv", "--metrics", "cosine"}).code == 2);
  CHECK(paris_cli({"fit"}).code == 2);
  CHECK(paris_cli({"nonsense"}).code == 2);
}

TEST_CASE("recommend from the command line") {
  TempDir dir("paris_cli_rec");
  spit(dir / "bundle.json", fixture_bundle());
  spit(dir / "partial.csv", midday_csv());
  const auto r = paris_cli({"recommend", "--bundle", dir / "bundle.json", "--subject", "S001", "--partial",
                            dir / "partial.csv", "--t-m", "720"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j.at("ordered_items")[0].at("center") == json::array({120.0, 5.0, 0.0}));
  CHECK(j.at("ordered_items")[1].at("deficit") == json::array({150.0, 20.0, 10.0}));
  CHECK_FALSE(j.contains("explain"));

  CHECK(paris_cli({"recommend", "--bundle", dir / "bundle.json", "--subject", "NOPE", "--partial",
                   dir / "partial.csv", "--t-m", "720"}).code == 3);
  CHECK(paris_cli({"recommend", "--bundle", dir / "bundle.json", "--subject", "S001", "--partial",
                   dir / "partial.csv", "--t-m", "0"}).code == 4);
  CHECK(paris_cli({"recommend", "--bundle", dir / "bundle.json", "--subject", "S001", "--partial",
                   dir / "partial.csv", "--t-m", "900"}).code == 4);
  spit(dir / "bad.csv", "m,c\n0,1\n");
  CHECK(paris_cli({"recommend", "--bundle", dir / "bundle.json", "--subject", "S001", "--partial",
                   dir / "bad.csv", "--t-m", "1"}).code == 2);

  const auto set = paris_cli({"recommend", "--bundle", dir / "bundle.json", "--subject", "S001", "--partial",
                              dir / "partial.csv", "--t-m", "720", "--set", "age=70", "--explain"});
  REQUIRE(set.code == 0);
  const auto sj = json::parse(set.out);
  CHECK(sj.at("explain").at("triggered_rules") == json::array({"age_65_plus"}));
}

TEST_CASE("CLI and service agree byte for byte") {
  TempDir dir("paris_cli_same");
  spit(dir / "bundle.json", fixture_bundle());
  spit(dir / "partial.csv", midday_csv());
  const auto cli = paris_cli({"recommend", "--bundle", dir / "bundle.json", "--subject", "S001", "--partial",
                              dir / "partial.csv", "--t-m", "720", "--explain"});
  REQUIRE(cli.code == 0);

  paris::service::Options opts;
  opts.bundle_path = dir / "bundle.json";
  paris::service::Service svc(opts);
  svc.reload();
  std::vector<double> counts(720, 0.0);
  for (int m = 0; m < 150; ++m) counts[m] = 500;
  for (int m = 150; m < 160; ++m) counts[m] = 2000;
  paris::service::Request req;
  req.method = "POST";
  req.path = "/api/v1/recommend";
  req.body = json{{"subject_id", "S001"}, {"t_m", 720}, {"partial_counts", counts}}.dump();
  const auto res = svc.handle(req);
  CHECK(res.status == 200);
  CHECK(res.body == cli.out);
}

TEST_CASE("evaluate exit codes") {
  TempDir dir("paris_cli_eval");
  paris::pipeline::ModelBundle empty;
  spit(dir / "empty.json", paris::pipeline::save_bundle(empty));
  spit(dir / "epochs.csv", "subject_id,day_index,epoch_index,activity_count,interval_type,wake\n");
  CHECK(paris_cli({"evaluate", "--bundle", dir / "empty.json", "--epochs", dir / "epochs.csv"}).code == 2);

  // One day of one subject, one neighbor.
  spit(dir / "bundle.json", fixture_bundle());
  std::string csv = "subject_id,day_index,epoch_index,activity_count,interval_type,wake\n";
  for (int e = 0; e < 2880; ++e) csv += "S001,0," + std::to_string(e) + ",0,ACTIVE,0\n";
  spit(dir / "one.csv", csv);
  const auto r = paris_cli({"evaluate", "--bundle", dir / "bundle.json", "--epochs", dir / "one.csv",
                            "--n-neighbors", "1"});
  CHECK(r.code == 0);
  std::istringstream lines(r.out);
  int n = 0;
  for (std::string line; std::getline(lines, line);) ++n;
  CHECK(n == 3);  // header, one row, cohort summary
}

TEST_CASE("exit code mapping") {
  using paris::ErrorCode;
  CHECK(paris::cli::exit_code_for(ErrorCode::UnknownSubject) == 3);
  CHECK(paris::cli::exit_code_for(ErrorCode::MalformedHeader) == 2);
  CHECK(paris::cli::exit_code_for(ErrorCode::EmptyBundle) == 2);
  CHECK(paris::cli::exit_code_for(ErrorCode::BadWindow) == 4);
  CHECK(paris::cli::exit_code_for(ErrorCode::NoRecipesForMode) == 4);
}
