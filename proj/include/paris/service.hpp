#pragma once

// HTTP API over a loaded model bundle. Routing and error mapping live in
// Service::handle so they can be exercised without a socket; serve() binds it
// to cpp-httplib.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "paris/pipeline.hpp"
#include "paris/recommend.hpp"

namespace httplib {
class Server;
}

namespace paris::service {

// Inputs of one recommendation, shared by the CLI and POST /api/v1/recommend.
struct RecommendRequest {
  std::string subject_id;
  int t_m = 0;
  std::vector<double> partial_counts;
  std::vector<IntervalType> partial_interval;  // empty = all ACTIVE
  std::optional<int> wake_onset;
  nlohmann::json metadata_overrides = nlohmann::json::object();
  std::optional<std::vector<recommend::ConstraintRule>> rules;
};

// Parses the request body; throws ParseError on a malformed body.
RecommendRequest parse_recommend_request(const nlohmann::json& body);

// Null removes a field; gender takes its CSV spelling; other names go to extensions.
SubjectMetadata apply_overrides(SubjectMetadata meta, const nlohmann::json& overrides);

// Throws UnknownSubject, NoRecipesForMode, BadWindow, LengthMismatch, ...
Recommendation recommend_for_subject(const pipeline::ModelBundle& bundle,
                                     const RecommendRequest& req,
                                     const std::vector<recommend::ConstraintRule>& default_rules);

// Block means of `factor` consecutive samples; a short final block is averaged
// over what it has.
std::vector<double> downsample(const std::vector<double>& x, std::size_t factor);

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
  std::map<std::string, std::string> headers;
};

struct Options {
  std::optional<std::filesystem::path> bundle_path;
  std::vector<recommend::ConstraintRule> rules = recommend::default_rules();
  std::string admin_token;  // empty disables reload
  std::string cors_origin = "*";
};

inline constexpr std::string_view kAdminTokenHeader = "x-admin-token";

class Service {
 public:
  explicit Service(Options opts);

  // Atomic swap; requests already holding the old bundle finish on it.
  void set_bundle(std::shared_ptr<const pipeline::ModelBundle> bundle);
  [[nodiscard]] std::shared_ptr<const pipeline::ModelBundle> bundle() const;

  // Reads bundle_path and swaps it in. Throws on failure, leaving the old bundle.
  std::size_t reload();

  [[nodiscard]] Response handle(const Request& req);

 private:
  Response route(const Request& req);

  Options opts_;
  mutable std::mutex mu_;
  std::shared_ptr<const pipeline::ModelBundle> bundle_;
};

// API error body {code, message}.
Response error_response(int status, std::string_view code, std::string_view message);

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> ui_dir;
};

// Registers the API routes (and the UI directory, if any) on `server`.
void bind_routes(httplib::Server& server, Service& service,
                 const std::optional<std::filesystem::path>& ui_dir);

// Blocks until the server stops. Returns false if the port could not be bound.
bool serve(Service& service, const ServeOptions& opts);

}  // namespace paris::service
