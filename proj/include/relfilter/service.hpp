#pragma once

// Annotation session: an uncertainty-ranked labeling queue over an unlabeled
// pool, a durable label log, retraining every `retrain_batch` labels, and a
// kappa history over a frozen stop set that drives the stop recommendation.
//
// On-disk layout of a session directory:
//   session.json            configuration and seed
//   pool.jsonl              cleaned pool records
//   heldout.jsonl           optional labeled slice for status metrics
//   stop_set.txt            pool ids of the stop set
//   labels.log              one JSON label record per line, append-only
//   kappas.log              "version TAB kappa", append-only
//   models/vocab-NNNNNN.tsv, model-NNNNNN.tsv, snapshot-NNNNNN.json
// A snapshot counts only once its .json file exists; files are written via
// rename so a crash never leaves a half-written model behind.

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "relfilter/features.hpp"
#include "relfilter/harness.hpp"
#include "relfilter/ingest.hpp"
#include "relfilter/metrics.hpp"
#include "relfilter/svm.hpp"

namespace relfilter {

// A client request the session refuses. `status` is the HTTP status to use.
class RequestError : public std::runtime_error {
 public:
  RequestError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct SessionConfig {
  FeatureConfig features = feature_preset("lex1");
  TrainConfig train;
  int retrain_batch = 50;
  std::size_t stop_set_size = 2000;
  std::uint64_t seed = 1;
  double stop_threshold = 0.99;
  int stop_window = 3;
  // false: retrain inline before acknowledging the label that triggers it.
  bool background_retrain = true;
};

struct LabelRecord {
  std::string id;
  int label = 0;
  std::string annotator;
  std::int64_t timestamp_ms = 0;  // wall clock; 0 means "stamp on submit"
};

struct SubmitResult {
  std::size_t labeled_count = 0;  // distinct labeled ids
  bool retrain_scheduled = false;
  bool superseded = false;  // an earlier label for this id exists
};

struct QueueResult {
  std::vector<Tweet> tweets;
  bool exhausted = false;
  bool cold_start = false;  // no model yet; seeded random order
};

struct StatusReport {
  std::size_t labeled = 0;
  std::size_t remaining = 0;
  std::vector<double> kappas;
  std::vector<double> recent_kappas;
  bool stop_recommended = false;
  std::optional<std::size_t> stop_fired_at;
  int model_version = 0;
  bool retraining = false;
  std::string last_error;
  std::optional<Prf> heldout;
};

struct ScoredTweet {
  Tweet tweet;
  double score = 0.0;
};

struct FilterResult {
  std::vector<ScoredTweet> relevant;    // score >= T, descending score
  std::vector<ScoredTweet> irrelevant;  // score <= -T (and < 0), input order
  std::vector<ScoredTweet> uncertain;   // |score| < T, input order
};

class AnnotationSession {
 public:
  // Creates a new session directory. Throws if it already holds a session.
  static std::unique_ptr<AnnotationSession> create(const std::filesystem::path& dir,
                                                   std::vector<AnalyzedTweet> pool,
                                                   const SessionConfig& config,
                                                   std::vector<AnalyzedTweet> heldout = {});
  // Reopens a session and restores labels, the latest model and kappas.
  static std::unique_ptr<AnnotationSession> open(const std::filesystem::path& dir,
                                                 std::optional<bool> background_retrain = std::nullopt);
  static bool exists(const std::filesystem::path& dir);

  ~AnnotationSession();
  AnnotationSession(const AnnotationSession&) = delete;
  AnnotationSession& operator=(const AnnotationSession&) = delete;

  QueueResult next_batch(std::size_t n) const;
  // Appends durably, then acknowledges. Throws RequestError for an unknown
  // id (404) or a label other than 0/1 (400).
  SubmitResult submit_label(LabelRecord record);
  StatusReport status() const;
  // Throws RequestError(409) before the first model exists.
  FilterResult filter(std::span<const AnalyzedTweet> tweets, double threshold,
                      std::optional<std::size_t> limit = std::nullopt) const;

  // Blocks until no retrain is pending or running.
  void wait_idle();

  const SessionConfig& config() const { return config_; }
  const std::filesystem::path& directory() const { return dir_; }
  std::size_t pool_size() const { return pool_.size(); }
  std::vector<LabelRecord> label_log() const;
  // Current model and vocabulary; empty before the first retrain.
  std::optional<FittedModel> current_model() const;
  int model_version() const;
  // Model trained from the first `prefix` label log entries (latest label
  // per id wins), exactly as a retrain would build it.
  std::optional<FittedModel> train_from_log_prefix(std::size_t prefix) const;
  // Label log prefix the current model was trained on.
  std::size_t current_model_prefix() const;

 private:
  struct Snapshot;
  class AppendLog;

  AnnotationSession(std::filesystem::path dir, SessionConfig config, std::vector<AnalyzedTweet> pool,
                    std::vector<AnalyzedTweet> heldout, std::vector<std::size_t> stop_set);

  void start_worker();
  void worker_loop();
  void retrain(std::size_t prefix);
  std::shared_ptr<const Snapshot> make_snapshot(FittedModel fitted, int version, std::size_t prefix) const;
  void install(std::shared_ptr<const Snapshot> snap, bool log_kappa);
  void persist_snapshot(const Snapshot& snap) const;
  std::shared_ptr<const Snapshot> load_snapshot(int version) const;
  std::shared_ptr<const Snapshot> snapshot() const;
  void restore();

  std::filesystem::path dir_;
  SessionConfig config_;
  std::vector<AnalyzedTweet> pool_;
  std::vector<AnalyzedTweet> heldout_;
  std::vector<std::size_t> stop_set_;
  std::vector<std::size_t> cold_order_;
  std::unordered_map<std::string, std::size_t> index_of_;

  mutable std::mutex log_mutex_;
  std::unique_ptr<AppendLog> label_file_;
  std::unique_ptr<AppendLog> kappa_file_;
  std::vector<LabelRecord> labels_;
  std::vector<char> labeled_;
  std::size_t labeled_count_ = 0;
  std::size_t scheduled_prefix_ = 0;
  bool pending_ = false;
  bool running_ = false;
  bool shutting_down_ = false;
  std::string last_error_;
  std::condition_variable work_cv_;
  std::condition_variable idle_cv_;

  mutable std::mutex model_mutex_;
  std::shared_ptr<const Snapshot> current_;
  StoppingState stopping_;

  std::thread worker_;
};

// Pool-index sample of min(size, pool_size) items, in pool order.
std::vector<std::size_t> sample_stop_set(std::size_t pool_size, std::size_t size, std::uint64_t seed);

}  // namespace relfilter
