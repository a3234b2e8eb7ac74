#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "paris/json_io.hpp"
#include "paris/service.hpp"

using namespace paris;
using namespace paris::service;
using nlohmann::json;

namespace {

// Two flat modes; mode 0 has two recipes, mode 1 none.
pipeline::ModelBundle fixture_bundle() {
  pipeline::ModelBundle b;
  auto& s = b.subjects["S001"];
  s.metadata.subject_id = "S001";
  s.metadata.age = 40;
  s.metadata.resting_hr = 60;
  s.modes.subject_id = "S001";
  s.modes.k = 2;
  std::vector<double> ramp(1440);
  for (std::size_t m = 0; m < 1440; ++m) ramp[m] = static_cast<double>(m % 37);
  s.modes.centroids = {ramp, std::vector<double>(1440, 5000.0)};
  s.modes.day_assignments = {{0, 0}, {1, 1}};
  s.recipes.subject_id = "S001";
  s.recipes.modes = {{Recipe{{300, 30, 10}, 8, 1, {0}}, Recipe{{120, 5, 0}, 6, 2, {0}}}, {}};
  s.days = {{0, 0, {150, 10, 0}, 0.95, SleepQuality::Good}, {1, 1, {10, 0, 400}, 0.8, SleepQuality::Poor}};
  b.subjects["S002"] = s;
  b.subjects["S002"].metadata.subject_id = "S002";
  return b;
}

// 150 light and 10 moderate minutes in the first 720.
json midday_body() {
  std::vector<double> counts(720, 0.0);
  for (int m = 0; m < 150; ++m) counts[m] = 500;
  for (int m = 150; m < 160; ++m) counts[m] = 2000;
  return {{"subject_id", "S001"}, {"t_m", 720}, {"partial_counts", counts}};
}

Response call(Service& svc, std::string method, std::string path, std::string body = {},
              std::map<std::string, std::string> query = {}, std::map<std::string, std::string> headers = {}) {
  Request r;
  r.method = std::move(method);
  r.path = std::move(path);
  r.body = std::move(body);
  r.query = std::move(query);
  r.headers = std::move(headers);
  return svc.handle(r);
}

void load_fixture(Service& svc) {
  svc.set_bundle(std::make_shared<const pipeline::ModelBundle>(fixture_bundle()));
}

std::string code_of(const Response& r) { return json::parse(r.body).at("code").get<std::string>(); }

}  // namespace

TEST_CASE("health and not-yet-loaded state") {
  Service svc(Options{});
  const auto h = call(svc, "GET", "/api/v1/health");
  CHECK(h.status == 200);
  CHECK(json::parse(h.body).at("bundle_loaded") == false);
  const auto r = call(svc, "GET", "/api/v1/subjects");
  CHECK(r.status == 503);
  CHECK(code_of(r) == "BundleNotLoaded");
  CHECK(json::parse(r.body).contains("message"));
}

TEST_CASE("subject listing") {
  Service svc(Options{});
  svc.set_bundle(std::make_shared<const pipeline::ModelBundle>());
  const auto empty = call(svc, "GET", "/api/v1/subjects");
  CHECK(empty.status == 200);
  CHECK(json::parse(empty.body) == json::array());

  Service full(Options{});
  load_fixture(full);
  const auto list = json::parse(call(full, "GET", "/api/v1/subjects").body);
  REQUIRE(list.size() == 2);
  CHECK(list[0].at("subject_id") == "S001");
  CHECK(list[0].at("recipe_counts") == json::array({2, 0}));
}

TEST_CASE("subject detail, modes and recipes") {
  Service svc(Options{});
  load_fixture(svc);
  const auto d = call(svc, "GET", "/api/v1/subjects/S001");
  CHECK(d.status == 200);
  const auto dj = json::parse(d.body);
  CHECK(dj.at("k") == 2);
  CHECK(dj.at("days").size() == 2);
  CHECK(dj.at("metadata").at("age") == 40.0);

  const auto missing = call(svc, "GET", "/api/v1/subjects/NOPE");
  CHECK(missing.status == 404);
  CHECK(code_of(missing) == "UnknownSubject");
  CHECK(call(svc, "GET", "/api/v1/subjects/NOPE/modes").status == 404);

  const auto modes = json::parse(call(svc, "GET", "/api/v1/subjects/S001/modes").body);
  CHECK(modes.at("centroids")[0].size() == 1440);

  const auto ds = call(svc, "GET", "/api/v1/subjects/S001/modes", {}, {{"downsample", "10"}});
  CHECK(ds.status == 200);
  const auto c0 = json::parse(ds.body).at("centroids")[0].get<std::vector<double>>();
  REQUIRE(c0.size() == 144);
  const auto fixture = fixture_bundle();
  const auto& full = fixture.subjects.at("S001").modes.centroids[0];
  for (std::size_t b = 0; b < 144; ++b) {
    double s = 0;
    for (std::size_t m = 10 * b; m < 10 * b + 10; ++m) s += full[m];
    CHECK(c0[b] == doctest::Approx(s / 10));
  }
  CHECK(call(svc, "GET", "/api/v1/subjects/S001/modes", {}, {{"downsample", "0"}}).status == 400);
  CHECK(call(svc, "GET", "/api/v1/subjects/S001/modes", {}, {{"downsample", "x"}}).status == 400);

  const auto recipes = json::parse(call(svc, "GET", "/api/v1/subjects/S001/recipes").body);
  CHECK(recipes.get<RecipeBook>() == fixture_bundle().subjects.at("S001").recipes);
}

TEST_CASE("downsample keeps a short final block") {
  CHECK(downsample({1, 2, 3, 4, 5}, 2) == std::vector<double>{1.5, 3.5, 5});
  CHECK(downsample({1, 2, 3}, 1) == std::vector<double>{1, 2, 3});
  CHECK_THROWS(downsample({1}, 0));
}

TEST_CASE("recommend endpoint") {
  Service svc(Options{});
  load_fixture(svc);
  const auto r = call(svc, "POST", "/api/v1/recommend", midday_body().dump());
  REQUIRE(r.status == 200);
  const auto j = json::parse(r.body);
  CHECK(j.at("ordered_items")[0].at("center") == json::array({120.0, 5.0, 0.0}));
  CHECK(j.at("ordered_items")[1].at("deficit") == json::array({150.0, 20.0, 10.0}));

  // Same bytes as rendering the library result directly.
  const auto req = parse_recommend_request(midday_body());
  const auto rec = recommend_for_subject(fixture_bundle(), req, recommend::default_rules());
  CHECK(r.body == render_recommendation(rec, true));

  auto shortb = midday_body();
  shortb["t_m"] = 721;
  const auto mismatch = call(svc, "POST", "/api/v1/recommend", shortb.dump());
  CHECK(mismatch.status == 422);
  CHECK(code_of(mismatch) == "LengthMismatch");

  auto late = midday_body();
  late["t_m"] = 0;
  late["partial_counts"] = json::array();
  CHECK(call(svc, "POST", "/api/v1/recommend", late.dump()).status == 422);

  auto busy = midday_body();
  busy["partial_counts"] = std::vector<double>(720, 5000.0);
  const auto no_recipes = call(svc, "POST", "/api/v1/recommend", busy.dump());
  CHECK(no_recipes.status == 409);
  CHECK(code_of(no_recipes) == "NoRecipesForMode");

  auto stranger = midday_body();
  stranger["subject_id"] = "S999";
  CHECK(call(svc, "POST", "/api/v1/recommend", stranger.dump()).status == 404);

  const auto garbage = call(svc, "POST", "/api/v1/recommend", "{not json");
  CHECK(garbage.status == 400);
  CHECK(code_of(garbage) == "ParseError");
  CHECK(call(svc, "POST", "/api/v1/recommend", R"({"subject_id": "S001"})").status == 400);
}

TEST_CASE("metadata override surfaces the demotion flag") {
  Service svc(Options{});
  load_fixture(svc);
  auto body = midday_body();
  const auto calm = json::parse(call(svc, "POST", "/api/v1/recommend", body.dump()).body);
  for (const auto& it : calm.at("ordered_items")) CHECK(it.at("constraint_flags").empty());

  body["metadata"] = {{"resting_hr", 90}};
  // Recipe [300,30,10] leaves a vigorous deficit of 10, under the default 15,
  // so use a stricter rule set.
  body["rules"] = json::parse(R"([{"id": "hr", "field": "resting_hr", "comparator": ">=",
      "threshold": 85, "action": {"type": "DemoteIfVigorousDeficitAbove", "minutes": 5}}])");
  const auto flagged = json::parse(call(svc, "POST", "/api/v1/recommend", body.dump()).body);
  const auto& items = flagged.at("ordered_items");
  CHECK(items[0].at("center") == json::array({120.0, 5.0, 0.0}));
  CHECK(items[1].at("constraint_flags") == json::array({"hr"}));
  CHECK(flagged.at("explain").at("triggered_rules") == json::array({"hr"}));

  SubjectMetadata meta;
  meta.age = 50;
  meta.bmi = 30;
  const auto changed = apply_overrides(meta, json{{"age", nullptr}, {"gender", "F"}, {"vo2", 40}});
  CHECK_FALSE(changed.age.has_value());
  CHECK(changed.gender == Gender::Female);
  CHECK(changed.extensions.at("vo2") == 40);
  CHECK(changed.bmi == 30.0);
  CHECK_THROWS(apply_overrides(meta, json{{"age", "old"}}));
}

TEST_CASE("routing errors and CORS") {
  Service svc(Options{});
  load_fixture(svc);
  CHECK(call(svc, "GET", "/api/v1/nowhere").status == 404);
  CHECK(call(svc, "POST", "/api/v1/subjects").status == 405);
  CHECK(call(svc, "GET", "/api/v1/recommend").status == 405);
  const auto pre = call(svc, "OPTIONS", "/api/v1/recommend");
  CHECK(pre.status == 204);
  CHECK(pre.headers.at("Access-Control-Allow-Origin") == "*");
  CHECK(call(svc, "GET", "/api/v1/health").headers.count("Access-Control-Allow-Origin") == 1);
}

TEST_CASE("admin reload swaps the bundle") {
  const auto dir = std::filesystem::temp_directory_path() / "paris_service_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "bundle.json";
  {
    std::ofstream out(path);
    out << pipeline::save_bundle(fixture_bundle());
  }
  Options closed;
  closed.bundle_path = path;
  Service no_token(closed);
  CHECK(call(no_token, "POST", "/api/v1/admin/reload").status == 403);

  Options opts;
  opts.bundle_path = path;
  opts.admin_token = "secret";
  Service svc(opts);
  CHECK(call(svc, "POST", "/api/v1/admin/reload").status == 401);
  CHECK(call(svc, "POST", "/api/v1/admin/reload", {}, {}, {{"x-admin-token", "wrong"}}).status == 401);
  CHECK(call(svc, "GET", "/api/v1/admin/reload").status == 405);
  const auto ok = call(svc, "POST", "/api/v1/admin/reload", {}, {}, {{"x-admin-token", "secret"}});
  CHECK(ok.status == 200);
  CHECK(json::parse(ok.body).at("subjects") == 2);
  CHECK(call(svc, "GET", "/api/v1/subjects").status == 200);

  // A broken file leaves the loaded bundle in place.
  {
    std::ofstream out(path);
    out << "{";
  }
  CHECK(call(svc, "POST", "/api/v1/admin/reload", {}, {}, {{"x-admin-token", "secret"}}).status == 500);
  CHECK(json::parse(call(svc, "GET", "/api/v1/subjects").body).size() == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("served over HTTP") {
  Service svc(Options{});
  load_fixture(svc);
  httplib::Server server;
  bind_routes(server, svc, std::nullopt);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const auto list = client.Get("/api/v1/subjects");
  REQUIRE(list);
  CHECK(list->status == 200);
  CHECK(json::parse(list->body).size() == 2);
  CHECK(list->get_header_value("Access-Control-Allow-Origin") == "*");

  const auto rec = client.Post("/api/v1/recommend", midday_body().dump(), "application/json");
  REQUIRE(rec);
  CHECK(rec->status == 200);
  CHECK(rec->body == call(svc, "POST", "/api/v1/recommend", midday_body().dump()).body);

  const auto missing = client.Get("/api/v1/subjects/NOPE");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  server.stop();
  t.join();
}
