#pragma once

// JSON-over-HTTP front end for an AnnotationSession:
//   GET  /queue/next?n=INT
//   POST /labels            {id, label, annotator}
//   GET  /status
//   POST /filter?threshold=REAL&limit=INT   [tweet records]
//   GET  /curve
// Errors come back as {"error": message} with a 4xx/5xx status.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "relfilter/ingest.hpp"
#include "relfilter/service.hpp"

namespace relfilter {

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

struct ApiOptions {
  // Incoming /filter records are cleaned with this before scoring.
  NormalizationConfig normalization;
  // Served verbatim by GET /curve when set.
  std::optional<std::filesystem::path> curve_file;
};

// Routes one request. Transport-free so it can be tested directly.
ApiResponse handle_request(AnnotationSession& session, const ApiOptions& options, const ApiRequest& request);

class ApiServer {
 public:
  ApiServer(AnnotationSession& session, ApiOptions options);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws on failure.
  int bind(const std::string& host, int port);
  // Serves until stop(). Call after bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace relfilter
