#include "relfilter/http_api.hpp"

#include <charconv>
#include <fstream>

#include "httplib.h"
#include "json.hpp"
#include "relfilter/error.hpp"
#include "relfilter/text_io.hpp"

namespace relfilter {

using json = nlohmann::json;

namespace {

ApiResponse json_response(int status, const json& body) {
  return {status, "application/json", body.dump(-1, ' ', false, json::error_handler_t::replace)};
}

ApiResponse error_response(int status, const std::string& message) {
  return json_response(status, {{"error", message}});
}

template <typename T>
std::optional<T> query_number(const ApiRequest& req, const std::string& key) {
  auto it = req.query.find(key);
  if (it == req.query.end()) return std::nullopt;
  const std::string& s = it->second;
  if constexpr (std::is_floating_point_v<T>) {
    try {
      return parse_double(s);
    } catch (const std::exception&) {
      throw RequestError(400, "bad " + key + " '" + s + "'");
    }
  } else {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw RequestError(400, "bad " + key + " '" + s + "'");
    return v;
  }
}

json tweet_json(const Tweet& t) { return {{"id", t.id}, {"ts", t.timestamp}, {"text", t.text}}; }

json scored_json(const ScoredTweet& s) {
  return {{"id", s.tweet.id}, {"text", s.tweet.text}, {"score", s.score}};
}

ApiResponse queue_next(AnnotationSession& session, const ApiRequest& req) {
  const long long n = query_number<long long>(req, "n").value_or(10);
  if (n < 1) throw RequestError(400, "n must be >= 1");
  const auto batch = session.next_batch(static_cast<std::size_t>(n));
  json out = json::array();
  for (const auto& t : batch.tweets) out.push_back(tweet_json(t));
  return json_response(200, out);
}

ApiResponse post_label(AnnotationSession& session, const ApiRequest& req) {
  json body;
  try {
    body = json::parse(req.body);
  } catch (const json::exception&) {
    throw RequestError(400, "body is not valid JSON");
  }
  if (!body.is_object()) throw RequestError(400, "body must be an object");
  LabelRecord rec;
  if (!body.contains("id") || !body["id"].is_string()) throw RequestError(400, "id must be a string");
  rec.id = body["id"].get<std::string>();
  if (!body.contains("label") || !body["label"].is_number_integer()) {
    throw RequestError(400, "label must be 0 or 1");
  }
  const auto label = body["label"].get<long long>();
  if (label != 0 && label != 1) throw RequestError(400, "label must be 0 or 1");
  rec.label = static_cast<int>(label);
  if (body.contains("annotator")) {
    if (!body["annotator"].is_string()) throw RequestError(400, "annotator must be a string");
    rec.annotator = body["annotator"].get<std::string>();
  }
  const auto r = session.submit_label(std::move(rec));
  return json_response(200, {{"ack", true},
                             {"labeled_count", r.labeled_count},
                             {"retrain_scheduled", r.retrain_scheduled},
                             {"superseded", r.superseded}});
}

ApiResponse get_status(AnnotationSession& session) {
  const auto s = session.status();
  json out = {{"labeled", s.labeled},
              {"remaining", s.remaining},
              {"kappas", s.kappas},
              {"recent_kappas", s.recent_kappas},
              {"stop_recommended", s.stop_recommended},
              {"model_version", s.model_version},
              {"retraining", s.retraining}};
  out["stop_fired_at"] = s.stop_fired_at ? json(*s.stop_fired_at) : json(nullptr);
  out["last_error"] = s.last_error.empty() ? json(nullptr) : json(s.last_error);
  if (s.heldout) {
    out["heldout"] = {{"precision", s.heldout->precision},
                      {"recall", s.heldout->recall},
                      {"f1", s.heldout->f1},
                      {"accuracy", s.heldout->accuracy}};
  } else {
    out["heldout"] = nullptr;
  }
  return json_response(200, out);
}

ApiResponse post_filter(AnnotationSession& session, const ApiOptions& options, const ApiRequest& req) {
  const double threshold = query_number<double>(req, "threshold").value_or(0.0);
  std::optional<std::size_t> limit;
  if (auto l = query_number<long long>(req, "limit")) {
    if (*l < 0) throw RequestError(400, "limit must be >= 0");
    limit = static_cast<std::size_t>(*l);
  }
  json body;
  try {
    body = json::parse(req.body);
  } catch (const json::exception&) {
    throw RequestError(400, "body is not valid JSON");
  }
  if (!body.is_array()) throw RequestError(400, "body must be an array of tweet records");
  std::vector<AnalyzedTweet> tweets;
  tweets.reserve(body.size());
  ParseOptions lenient;
  lenient.require_timestamp = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    try {
      tweets.push_back(clean_record(record_from_json_text(body[i].dump(), lenient), options.normalization));
    } catch (const std::exception& e) {
      throw RequestError(400, "record " + std::to_string(i) + ": " + e.what());
    }
  }
  const auto r = session.filter(tweets, threshold, limit);
  json relevant = json::array();
  json irrelevant = json::array();
  for (const auto& s : r.relevant) relevant.push_back(scored_json(s));
  for (const auto& s : r.irrelevant) irrelevant.push_back(scored_json(s));
  return json_response(200, {{"relevant", relevant}, {"irrelevant", irrelevant}, {"uncertain_count", r.uncertain.size()}});
}

ApiResponse get_curve(const ApiOptions& options) {
  if (!options.curve_file || !std::filesystem::exists(*options.curve_file)) {
    return error_response(404, "no curve data; run the curve command and pass its output to serve");
  }
  return {200, "text/tab-separated-values; charset=utf-8", read_file(*options.curve_file)};
}

}  // namespace

ApiResponse handle_request(AnnotationSession& session, const ApiOptions& options, const ApiRequest& req) {
  try {
    if (req.path == "/queue/next") {
      if (req.method != "GET") return error_response(405, "use GET");
      return queue_next(session, req);
    }
    if (req.path == "/labels") {
      if (req.method != "POST") return error_response(405, "use POST");
      return post_label(session, req);
    }
    if (req.path == "/status") {
      if (req.method != "GET") return error_response(405, "use GET");
      return get_status(session);
    }
    if (req.path == "/filter") {
      if (req.method != "POST") return error_response(405, "use POST");
      return post_filter(session, options, req);
    }
    if (req.path == "/curve") {
      if (req.method != "GET") return error_response(405, "use GET");
      return get_curve(options);
    }
    return error_response(404, "no such endpoint: " + req.path);
  } catch (const RequestError& e) {
    return error_response(e.status(), e.what());
  } catch (const UsageError& e) {
    return error_response(400, e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

struct ApiServer::Impl {
  AnnotationSession& session;
  ApiOptions options;
  httplib::Server server;
};

ApiServer::ApiServer(AnnotationSession& session, ApiOptions options)
    : impl_(new Impl{session, std::move(options), {}}) {
  auto handler = [this](const httplib::Request& hreq, httplib::Response& hres) {
    ApiRequest req;
    req.method = hreq.method;
    req.path = hreq.path;
    for (const auto& [k, v] : hreq.params) req.query.emplace(k, v);
    req.body = hreq.body;
    const ApiResponse res = handle_request(impl_->session, impl_->options, req);
    hres.status = res.status;
    hres.set_content(res.body, res.content_type);
  };
  for (const char* path : {"/queue/next", "/labels", "/status", "/filter", "/curve"}) {
    impl_->server.Get(path, handler);
    impl_->server.Post(path, handler);
  }
  impl_->server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 404 && res.body.empty()) {
      res.set_content(json({{"error", "no such endpoint: " + req.path}}).dump(), "application/json");
    }
  });
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw DataError("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void ApiServer::listen() { impl_->server.listen_after_bind(); }

void ApiServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace relfilter
