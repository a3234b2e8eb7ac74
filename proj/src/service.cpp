#include "paris/service.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "paris/error.hpp"
#include "paris/json_io.hpp"

namespace paris::service {

using nlohmann::json;

RecommendRequest parse_recommend_request(const json& body) {
  if (!body.is_object()) throw Error(ErrorCode::ParseError, "request body must be a JSON object");
  RecommendRequest r;
  try {
    r.subject_id = body.at("subject_id").get<std::string>();
    r.t_m = body.at("t_m").get<int>();
    r.partial_counts = body.at("partial_counts").get<std::vector<double>>();
    if (body.contains("partial_interval")) {
      for (const auto& v : body.at("partial_interval")) {
        const auto t = parse_interval_type(v.get<std::string>());
        if (!t) throw Error(ErrorCode::ParseError, "unknown interval type in partial_interval");
        r.partial_interval.push_back(*t);
      }
    }
    if (body.contains("wake_onset") && !body.at("wake_onset").is_null()) {
      r.wake_onset = body.at("wake_onset").get<int>();
    }
    if (body.contains("metadata")) {
      r.metadata_overrides = body.at("metadata");
      if (!r.metadata_overrides.is_object()) {
        throw Error(ErrorCode::ParseError, "metadata overrides must be an object");
      }
    }
    if (body.contains("rules") && !body.at("rules").is_null()) {
      r.rules = recommend::parse_rules(body.at("rules"));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, fmt::format("bad recommend request: {}", e.what()));
  }
  return r;
}

SubjectMetadata apply_overrides(SubjectMetadata meta, const json& overrides) {
  for (const auto& [key, value] : overrides.items()) {
    if (key == "gender") {
      if (value.is_null()) {
        meta.gender.reset();
      } else {
        const auto g = parse_gender(value.get<std::string>());
        if (!g) throw Error(ErrorCode::ParseError, "unknown gender override");
        meta.gender = g;
      }
      continue;
    }
    if (!value.is_null() && !value.is_number()) {
      throw Error(ErrorCode::ParseError, fmt::format("override '{}' must be a number or null", key));
    }
    std::optional<double> v;
    if (!value.is_null()) v = value.get<double>();
    if (key == "age") {
      meta.age = v;
    } else if (key == "bmi") {
      meta.bmi = v;
    } else if (key == "resting_hr") {
      meta.resting_hr = v;
    } else if (v) {
      meta.extensions[key] = *v;
    } else {
      meta.extensions.erase(key);
    }
  }
  return meta;
}

Recommendation recommend_for_subject(const pipeline::ModelBundle& bundle,
                                     const RecommendRequest& req,
                                     const std::vector<recommend::ConstraintRule>& default_rules) {
  const auto* subject = bundle.find(req.subject_id);
  if (subject == nullptr) {
    throw Error(ErrorCode::UnknownSubject, fmt::format("no subject '{}'", req.subject_id));
  }
  recommend::RecommendInput in;
  in.modes = &subject->modes;
  in.book = &subject->recipes;
  in.cut_points = bundle.config.cut_points;
  in.partial = {req.partial_counts, req.partial_interval};
  in.t_m = req.t_m;
  in.wake_onset = req.wake_onset;
  in.meta = apply_overrides(subject->metadata, req.metadata_overrides);
  in.rules = req.rules.value_or(default_rules);
  return recommend::recommend(in);
}

std::vector<double> downsample(const std::vector<double>& x, std::size_t factor) {
  if (factor < 1) throw Error(ErrorCode::InvalidArgument, "downsample factor must be >= 1");
  std::vector<double> out;
  for (std::size_t i = 0; i < x.size(); i += factor) {
    const auto end = std::min(x.size(), i + factor);
    double s = 0;
    for (std::size_t j = i; j < end; ++j) s += x[j];
    out.push_back(s / static_cast<double>(end - i));
  }
  return out;
}

Response error_response(int status, std::string_view code, std::string_view message) {
  Response r;
  r.status = status;
  r.body = json{{"code", code}, {"message", message}}.dump() + "\n";
  return r;
}

namespace {

int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnknownSubject: return 404;
    case ErrorCode::NoRecipesForMode: return 409;
    case ErrorCode::ParseError:
    case ErrorCode::InvalidArgument: return 400;
    case ErrorCode::BadWindow:
    case ErrorCode::WindowInverted:
    case ErrorCode::LengthMismatch:
    case ErrorCode::EmptyInput:
    case ErrorCode::UnknownMetadataField:
    case ErrorCode::FrequencyDomainUnsupported: return 422;
    default: return 500;
  }
}

Response json_response(const json& j) {
  Response r;
  r.body = j.dump(2) + "\n";
  return r;
}

json subject_summary(const std::string& id, const pipeline::SubjectModel& s) {
  std::vector<std::size_t> counts;
  for (const auto& m : s.recipes.modes) counts.push_back(m.size());
  return {{"subject_id", id},
          {"k", s.modes.k},
          {"metric", s.modes.metric},
          {"domain", s.modes.domain},
          {"silhouette", s.modes.silhouette},
          {"recipe_counts", counts}};
}

}  // namespace

Service::Service(Options opts) : opts_(std::move(opts)) {}

void Service::set_bundle(std::shared_ptr<const pipeline::ModelBundle> bundle) {
  std::lock_guard lock(mu_);
  bundle_ = std::move(bundle);
}

std::shared_ptr<const pipeline::ModelBundle> Service::bundle() const {
  std::lock_guard lock(mu_);
  return bundle_;
}

std::size_t Service::reload() {
  if (!opts_.bundle_path) throw Error(ErrorCode::InvalidArgument, "no bundle path configured");
  std::ifstream in(*opts_.bundle_path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::ParseError, fmt::format("cannot read {}", opts_.bundle_path->string()));
  }
  std::stringstream ss;
  ss << in.rdbuf();
  auto b = std::make_shared<const pipeline::ModelBundle>(pipeline::load_bundle(ss.str()));
  const auto n = b->subjects.size();
  set_bundle(std::move(b));
  return n;
}

Response Service::handle(const Request& req) {
  Response r;
  try {
    r = route(req);
  } catch (const Error& e) {
    r = error_response(http_status(e.code()), to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    r = error_response(500, "Internal", e.what());
  }
  r.headers["Access-Control-Allow-Origin"] = opts_.cors_origin;
  r.headers["Access-Control-Allow-Methods"] = "GET, POST, OPTIONS";
  r.headers["Access-Control-Allow-Headers"] = "Content-Type, X-Admin-Token";
  return r;
}

Response Service::route(const Request& req) {
  if (req.method == "OPTIONS") {
    Response r;
    r.status = 204;
    r.content_type.clear();
    return r;
  }
  static const std::regex subject_re(R"(^/api/v1/subjects/([^/]+)(/modes|/recipes)?$)");
  std::smatch m;

  if (req.path == "/api/v1/health") {
    if (req.method != "GET") return error_response(405, "MethodNotAllowed", "use GET");
    return json_response({{"status", "ok"}, {"bundle_loaded", bundle() != nullptr}});
  }
  if (req.path == "/api/v1/admin/reload") {
    if (req.method != "POST") return error_response(405, "MethodNotAllowed", "use POST");
    if (opts_.admin_token.empty()) return error_response(403, "Forbidden", "reload is disabled");
    const auto it = req.headers.find(std::string(kAdminTokenHeader));
    if (it == req.headers.end() || it->second != opts_.admin_token) {
      return error_response(401, "Unauthorized", "missing or wrong admin token");
    }
    try {
      const auto n = reload();
      spdlog::info("bundle reloaded: {} subjects", n);
      return json_response({{"status", "reloaded"}, {"subjects", n}});
    } catch (const std::exception& e) {
      return error_response(500, "ReloadFailed", e.what());
    }
  }

  const bool is_subjects = req.path == "/api/v1/subjects";
  const bool is_subject = std::regex_match(req.path, m, subject_re);
  const bool is_recommend = req.path == "/api/v1/recommend";
  if (!is_subjects && !is_subject && !is_recommend) {
    return error_response(404, "NotFound", fmt::format("no route for {}", req.path));
  }
  if (req.method != (is_recommend ? "POST" : "GET")) {
    return error_response(405, "MethodNotAllowed", fmt::format("{} not allowed here", req.method));
  }
  const auto b = bundle();
  if (b == nullptr) return error_response(503, "BundleNotLoaded", "no model bundle is loaded");

  if (is_subjects) {
    auto out = json::array();
    for (const auto& [id, s] : b->subjects) out.push_back(subject_summary(id, s));
    return json_response(out);
  }
  if (is_recommend) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      return error_response(400, to_string(ErrorCode::ParseError), e.what());
    }
    const auto rec = recommend_for_subject(*b, parse_recommend_request(body), opts_.rules);
    Response r;
    r.body = render_recommendation(rec, true);
    return r;
  }

  const std::string id = m[1];
  const auto* s = b->find(id);
  if (s == nullptr) throw Error(ErrorCode::UnknownSubject, fmt::format("no subject '{}'", id));
  const std::string part = m[2];
  if (part.empty()) {
    json out = subject_summary(id, *s);
    out["metadata"] = s->metadata;
    auto days = json::array();
    for (const auto& d : s->days) {
      days.push_back({{"day_index", d.day_index},
                      {"day_of_week", d.day_of_week},
                      {"minutes", d.minutes},
                      {"quality", d.quality ? json(*d.quality) : json()}});
    }
    out["days"] = days;
    return json_response(out);
  }
  if (part == "/recipes") return json_response(s->recipes);

  auto model = s->modes;
  if (const auto it = req.query.find("downsample"); it != req.query.end()) {
    std::size_t factor = 0;
    try {
      factor = std::stoul(it->second);
    } catch (const std::exception&) {
      factor = 0;
    }
    if (factor < 1) return error_response(400, "InvalidArgument", "downsample must be a positive integer");
    for (auto& c : model.centroids) c = downsample(c, factor);
  }
  return json_response(model);
}

void bind_routes(httplib::Server& server, Service& service,
                 const std::optional<std::filesystem::path>& ui_dir) {
  auto handler = [&service](const httplib::Request& hreq, httplib::Response& hres) {
    Request req;
    req.method = hreq.method;
    req.path = hreq.path;
    for (const auto& [k, v] : hreq.params) req.query.emplace(k, v);
    for (const auto& [k, v] : hreq.headers) {
      std::string key = k;
      std::transform(key.begin(), key.end(), key.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      req.headers.emplace(key, v);
    }
    req.body = hreq.body;
    const auto res = service.handle(req);
    hres.status = res.status;
    for (const auto& [k, v] : res.headers) hres.set_header(k, v);
    if (!res.content_type.empty()) hres.set_content(res.body, res.content_type);
  };
  const std::string pattern = R"(/api/.*)";
  server.Get(pattern, handler);
  server.Post(pattern, handler);
  server.Options(pattern, handler);
  if (ui_dir) {
    if (!server.set_mount_point("/", ui_dir->string())) {
      spdlog::warn("ui directory {} not found", ui_dir->string());
    }
  }
}

bool serve(Service& service, const ServeOptions& opts) {
  httplib::Server server;
  bind_routes(server, service, opts.ui_dir);
  spdlog::info("listening on {}:{}", opts.host, opts.port);
  return server.listen(opts.host, opts.port);
}

}  // namespace paris::service
