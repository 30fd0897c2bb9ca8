#include "relfilter/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "relfilter/error.hpp"
#include "relfilter/rng.hpp"
#include "relfilter/text_io.hpp"

namespace relfilter {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct AnnotationSession::Snapshot {
  int version = 0;
  std::size_t prefix = 0;  // label log entries the model was trained on
  FittedModel fitted;
  std::vector<double> pool_scores;
  std::vector<int> stop_predictions;
  std::optional<Prf> heldout;
};

// Append-only file; every append reaches the disk before returning.
class AnnotationSession::AppendLog {
 public:
  explicit AppendLog(const fs::path& path) : path_(path) {
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw DataError("cannot open " + path.string() + ": " + std::strerror(errno));
  }
  ~AppendLog() {
    if (fd_ >= 0) ::close(fd_);
  }
  AppendLog(const AppendLog&) = delete;
  AppendLog& operator=(const AppendLog&) = delete;

  void append(std::string_view line) {
    std::string buf(line);
    buf.push_back('\n');
    const char* p = buf.data();
    std::size_t left = buf.size();
    while (left > 0) {
      const ssize_t n = ::write(fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw DataError("write to " + path_.string() + " failed: " + std::strerror(errno));
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
    if (::fdatasync(fd_) != 0) {
      throw DataError("fdatasync on " + path_.string() + " failed: " + std::strerror(errno));
    }
  }

 private:
  fs::path path_;
  int fd_ = -1;
};

namespace {

constexpr const char* kSessionFile = "session.json";

std::string version_name(const char* stem, int version, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-%06d.%s", stem, version, ext);
  return buf;
}

json feature_config_json(const FeatureConfig& c) {
  const char* source = c.source == FeatureSource::lemma ? "lemma" : c.source == FeatureSource::pos ? "pos" : "both";
  return {{"source", source},
          {"lemma_orders", c.lemma_orders},
          {"pos_orders", c.pos_orders},
          {"min_count", c.min_count},
          {"count_mode", c.count_mode == CountMode::documents ? "documents" : "occurrences"}};
}

FeatureConfig feature_config_from(const json& j) {
  FeatureConfig c;
  const auto source = j.at("source").get<std::string>();
  c.source = source == "lemma" ? FeatureSource::lemma : source == "pos" ? FeatureSource::pos : FeatureSource::both;
  c.lemma_orders = j.at("lemma_orders").get<std::set<int>>();
  c.pos_orders = j.at("pos_orders").get<std::set<int>>();
  c.min_count = j.at("min_count").get<int>();
  c.count_mode = j.at("count_mode").get<std::string>() == "documents" ? CountMode::documents : CountMode::occurrences;
  return c;
}

json session_json(const SessionConfig& c) {
  json train = {{"tolerance", c.train.tolerance}, {"max_epochs", c.train.max_epochs}, {"seed", c.train.seed}};
  train["C"] = c.train.C ? json(*c.train.C) : json(nullptr);
  return {{"features", feature_config_json(c.features)},
          {"train", train},
          {"retrain_batch", c.retrain_batch},
          {"stop_set_size", c.stop_set_size},
          {"seed", c.seed},
          {"stop_threshold", c.stop_threshold},
          {"stop_window", c.stop_window},
          {"background_retrain", c.background_retrain}};
}

SessionConfig session_config_from(const json& j) {
  SessionConfig c;
  c.features = feature_config_from(j.at("features"));
  const auto& t = j.at("train");
  if (!t.at("C").is_null()) c.train.C = t.at("C").get<double>();
  c.train.tolerance = t.at("tolerance").get<double>();
  c.train.max_epochs = t.at("max_epochs").get<int>();
  c.train.seed = t.at("seed").get<std::uint64_t>();
  c.retrain_batch = j.at("retrain_batch").get<int>();
  c.stop_set_size = j.at("stop_set_size").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.stop_threshold = j.at("stop_threshold").get<double>();
  c.stop_window = j.at("stop_window").get<int>();
  c.background_retrain = j.at("background_retrain").get<bool>();
  return c;
}

std::string label_json(const LabelRecord& r) {
  json j = {{"id", r.id}, {"label", r.label}, {"annotator", r.annotator}, {"ts", r.timestamp_ms}};
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

LabelRecord label_from_json(const std::string& line) {
  const auto j = json::parse(line);
  LabelRecord r;
  r.id = j.at("id").get<std::string>();
  r.label = j.at("label").get<int>();
  r.annotator = j.at("annotator").get<std::string>();
  r.timestamp_ms = j.at("ts").get<std::int64_t>();
  return r;
}

std::vector<AnalyzedTweet> read_records(const fs::path& path) {
  if (!fs::exists(path)) return {};
  std::ifstream in(path, std::ios::binary);
  auto parsed = parse_records(in);
  if (!parsed.errors.empty()) {
    throw DataError(path.string() + ":" + std::to_string(parsed.errors.front().line) + ": " +
                    parsed.errors.front().message);
  }
  return std::move(parsed.records);
}

void write_records(const fs::path& path, std::span<const AnalyzedTweet> records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json_line(r);
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::vector<std::size_t> sample_stop_set(std::size_t pool_size, std::size_t size, std::uint64_t seed) {
  std::vector<std::size_t> idx(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) idx[i] = i;
  const std::size_t take = std::min(size, pool_size);
  Rng rng(seed);
  for (std::size_t k = 0; k < take; ++k) {
    std::swap(idx[k], idx[k + rng.uniform(pool_size - k)]);
  }
  idx.resize(take);
  std::sort(idx.begin(), idx.end());
  return idx;
}

AnnotationSession::AnnotationSession(fs::path dir, SessionConfig config, std::vector<AnalyzedTweet> pool,
                                     std::vector<AnalyzedTweet> heldout, std::vector<std::size_t> stop_set)
    : dir_(std::move(dir)),
      config_(std::move(config)),
      pool_(std::move(pool)),
      heldout_(std::move(heldout)),
      stop_set_(std::move(stop_set)),
      stopping_(config_.stop_threshold, config_.stop_window) {
  for (std::size_t i = 0; i < pool_.size(); ++i) {
    if (!index_of_.emplace(pool_[i].tweet.id, i).second) {
      throw DataError("duplicate pool id '" + pool_[i].tweet.id + "'");
    }
  }
  cold_order_.resize(pool_.size());
  for (std::size_t i = 0; i < pool_.size(); ++i) cold_order_[i] = i;
  Rng rng(derive_seed(config_.seed, 3));
  rng.shuffle(cold_order_);
  labeled_.assign(pool_.size(), 0);
}

bool AnnotationSession::exists(const fs::path& dir) { return fs::exists(dir / kSessionFile); }

std::unique_ptr<AnnotationSession> AnnotationSession::create(const fs::path& dir, std::vector<AnalyzedTweet> pool,
                                                             const SessionConfig& config,
                                                             std::vector<AnalyzedTweet> heldout) {
  config.features.validate();
  config.train.validate();
  if (config.retrain_batch < 1) throw UsageError("retrain batch must be >= 1");
  if (exists(dir)) throw UsageError(dir.string() + " already holds a session");
  if (pool.empty()) throw DataError("annotation pool is empty");
  fs::create_directories(dir / "models");

  auto stop_set = sample_stop_set(pool.size(), config.stop_set_size, derive_seed(config.seed, 5));
  // Pool text is stored without labels: the session learns labels only from
  // the label log.
  for (auto& r : pool) r.tweet.label.reset();
  std::unique_ptr<AnnotationSession> session(
      new AnnotationSession(dir, config, std::move(pool), std::move(heldout), std::move(stop_set)));

  write_records(dir / "pool.jsonl", session->pool_);
  if (!session->heldout_.empty()) write_records(dir / "heldout.jsonl", session->heldout_);
  std::string ids;
  for (auto i : session->stop_set_) ids += session->pool_[i].tweet.id + "\n";
  write_file_atomic(dir / "stop_set.txt", ids);
  write_file_atomic(dir / kSessionFile, session_json(config).dump(2) + "\n");

  session->label_file_ = std::make_unique<AppendLog>(dir / "labels.log");
  session->kappa_file_ = std::make_unique<AppendLog>(dir / "kappas.log");
  session->start_worker();
  return session;
}

std::unique_ptr<AnnotationSession> AnnotationSession::open(const fs::path& dir,
                                                           std::optional<bool> background_retrain) {
  if (!exists(dir)) throw DataError(dir.string() + " does not hold a session");
  SessionConfig config;
  try {
    config = session_config_from(json::parse(read_file(dir / kSessionFile)));
  } catch (const json::exception& e) {
    throw DataError("bad " + (dir / kSessionFile).string() + ": " + e.what());
  }
  if (background_retrain) config.background_retrain = *background_retrain;
  auto pool = read_records(dir / "pool.jsonl");
  auto heldout = read_records(dir / "heldout.jsonl");

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < pool.size(); ++i) index.emplace(pool[i].tweet.id, i);
  std::vector<std::size_t> stop_set;
  for (const auto& id : read_lines(dir / "stop_set.txt")) {
    if (id.empty()) continue;
    auto it = index.find(id);
    if (it == index.end()) throw DataError("stop set id '" + id + "' is not in the pool");
    stop_set.push_back(it->second);
  }

  std::unique_ptr<AnnotationSession> session(
      new AnnotationSession(dir, config, std::move(pool), std::move(heldout), std::move(stop_set)));
  session->restore();
  session->start_worker();
  return session;
}

void AnnotationSession::restore() {
  // Labels. A torn final line can only come from an append that was never
  // acknowledged; drop it.
  const fs::path label_path = dir_ / "labels.log";
  if (fs::exists(label_path)) {
    const std::string content = read_file(label_path);
    std::size_t good_bytes = 0;
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < content.size()) {
      const auto end = content.find('\n', start);
      ++line_no;
      if (end == std::string::npos) break;  // no newline: torn write
      const std::string line = content.substr(start, end - start);
      try {
        LabelRecord r = label_from_json(line);
        auto it = index_of_.find(r.id);
        if (it == index_of_.end()) throw DataError("unknown id");
        if (!labeled_[it->second]) {
          labeled_[it->second] = 1;
          ++labeled_count_;
        }
        labels_.push_back(std::move(r));
      } catch (const std::exception& e) {
        throw DataError(label_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
      start = end + 1;
      good_bytes = start;
    }
    if (good_bytes < content.size()) fs::resize_file(label_path, good_bytes);
  }

  // Latest complete snapshot.
  int latest = 0;
  if (fs::exists(dir_ / "models")) {
    for (const auto& entry : fs::directory_iterator(dir_ / "models")) {
      const std::string name = entry.path().filename().string();
      int v = 0;
      if (std::sscanf(name.c_str(), "snapshot-%d.json", &v) == 1 && name.ends_with(".json")) {
        latest = std::max(latest, v);
      }
    }
  }
  std::shared_ptr<const Snapshot> snap;
  if (latest > 0) snap = load_snapshot(latest);

  // Kappa history up to the latest snapshot.
  std::vector<std::pair<int, double>> kappas;
  const fs::path kappa_path = dir_ / "kappas.log";
  if (fs::exists(kappa_path)) {
    std::string kept;
    for (const auto& line : read_lines(kappa_path)) {
      const auto cols = split(line, '\t');
      if (cols.size() != 2) break;
      const int v = std::stoi(cols[0]);
      if (v > latest) break;
      kappas.emplace_back(v, parse_double(cols[1]));
      kept += line + "\n";
    }
    write_file_atomic(kappa_path, kept);
  }
  label_file_ = std::make_unique<AppendLog>(label_path);
  kappa_file_ = std::make_unique<AppendLog>(kappa_path);

  for (const auto& [v, k] : kappas) stopping_.push(k);
  if (snap) {
    const bool missing_kappa = latest >= 2 && (kappas.empty() || kappas.back().first < latest);
    if (missing_kappa) {
      // Crash between the snapshot rename and the kappa append.
      current_ = load_snapshot(latest - 1);
      install(snap, true);
    } else {
      current_ = snap;
    }
    scheduled_prefix_ = snap->prefix;
  }
  if (labels_.size() - scheduled_prefix_ >= static_cast<std::size_t>(config_.retrain_batch)) {
    scheduled_prefix_ = labels_.size();
    pending_ = true;
  }
}

AnnotationSession::~AnnotationSession() {
  {
    std::lock_guard lk(log_mutex_);
    shutting_down_ = true;
  }
  work_cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void AnnotationSession::start_worker() {
  if (config_.background_retrain) {
    worker_ = std::thread([this] { worker_loop(); });
  } else if (pending_) {
    pending_ = false;
    retrain(labels_.size());
  }
}

void AnnotationSession::worker_loop() {
  std::unique_lock lk(log_mutex_);
  while (true) {
    work_cv_.wait(lk, [this] { return pending_ || shutting_down_; });
    if (shutting_down_) break;
    pending_ = false;
    running_ = true;
    const std::size_t prefix = labels_.size();
    lk.unlock();
    try {
      retrain(prefix);
    } catch (const std::exception& e) {
      std::lock_guard elk(log_mutex_);
      last_error_ = std::string("retrain failed: ") + e.what();
    }
    lk.lock();
    running_ = false;
    idle_cv_.notify_all();
  }
  running_ = false;
  idle_cv_.notify_all();
}

void AnnotationSession::wait_idle() {
  std::unique_lock lk(log_mutex_);
  idle_cv_.wait(lk, [this] { return (!pending_ && !running_) || shutting_down_; });
}

std::optional<FittedModel> AnnotationSession::train_from_log_prefix(std::size_t prefix) const {
  std::vector<int> label_of(pool_.size(), -1);
  {
    std::lock_guard lk(log_mutex_);
    prefix = std::min(prefix, labels_.size());
    for (std::size_t k = 0; k < prefix; ++k) label_of[index_of_.at(labels_[k].id)] = labels_[k].label;
  }
  std::vector<AnalyzedTweet> training;
  bool pos = false;
  bool neg = false;
  for (std::size_t i = 0; i < pool_.size(); ++i) {
    if (label_of[i] < 0) continue;
    AnalyzedTweet t = pool_[i];
    t.tweet.label = label_of[i];
    (label_of[i] == 1 ? pos : neg) = true;
    training.push_back(std::move(t));
  }
  if (!(pos && neg)) return std::nullopt;
  return fit(training, config_.features, config_.train);
}

void AnnotationSession::retrain(std::size_t prefix) {
  static std::mutex retrain_mutex;  // at most one retrain at a time
  std::lock_guard serial(retrain_mutex);
  auto fitted = train_from_log_prefix(prefix);
  if (!fitted) {
    std::lock_guard lk(log_mutex_);
    last_error_ = "retrain skipped: labels so far cover a single class";
    return;
  }
  auto snap = make_snapshot(std::move(*fitted), model_version() + 1, prefix);
  persist_snapshot(*snap);
  install(std::move(snap), true);
  std::lock_guard lk(log_mutex_);
  last_error_.clear();
}

std::shared_ptr<const AnnotationSession::Snapshot> AnnotationSession::make_snapshot(FittedModel fitted, int version,
                                                                                   std::size_t prefix) const {
  auto snap = std::make_shared<Snapshot>();
  snap->version = version;
  snap->prefix = prefix;
  snap->pool_scores.reserve(pool_.size());
  for (const auto& t : pool_) snap->pool_scores.push_back(fitted.score(t));
  snap->stop_predictions.reserve(stop_set_.size());
  for (auto i : stop_set_) snap->stop_predictions.push_back(classify_score(snap->pool_scores[i]) > 0 ? 1 : 0);
  if (!heldout_.empty()) {
    ConfusionCounts c;
    for (const auto& t : heldout_) {
      if (t.tweet.label) c.add(*t.tweet.label, classify_score(fitted.score(t)) > 0 ? 1 : 0);
    }
    if (c.total() > 0) snap->heldout = prf(c);
  }
  snap->fitted = std::move(fitted);
  return snap;
}

void AnnotationSession::persist_snapshot(const Snapshot& snap) const {
  const fs::path models = dir_ / "models";
  write_file_atomic(models / version_name("vocab", snap.version, "tsv"), snap.fitted.vocabulary.serialize());
  write_file_atomic(models / version_name("model", snap.version, "tsv"), snap.fitted.model.serialize());
  json meta = {{"version", snap.version},
               {"trained_on_labels", snap.prefix},
               {"vocab_size", snap.fitted.vocabulary.size()},
               {"features", feature_config_json(config_.features)}};
  write_file_atomic(models / version_name("snapshot", snap.version, "json"), meta.dump(2) + "\n");
}

std::shared_ptr<const AnnotationSession::Snapshot> AnnotationSession::load_snapshot(int version) const {
  const fs::path models = dir_ / "models";
  const auto meta = json::parse(read_file(models / version_name("snapshot", version, "json")));
  FittedModel fitted;
  fitted.vocabulary = Vocabulary::load(models / version_name("vocab", version, "tsv"));
  fitted.model = LinearModel::load(models / version_name("model", version, "tsv"), fitted.vocabulary.size());
  return make_snapshot(std::move(fitted), version, meta.at("trained_on_labels").get<std::size_t>());
}

void AnnotationSession::install(std::shared_ptr<const Snapshot> snap, bool log_kappa) {
  std::lock_guard lk(model_mutex_);
  if (current_ && log_kappa) {
    const double kappa = cohen_kappa(current_->stop_predictions, snap->stop_predictions);
    kappa_file_->append(std::to_string(snap->version) + "\t" + format_exact(kappa));
    stopping_.push(kappa);
  }
  current_ = std::move(snap);
}

std::shared_ptr<const AnnotationSession::Snapshot> AnnotationSession::snapshot() const {
  std::lock_guard lk(model_mutex_);
  return current_;
}

int AnnotationSession::model_version() const {
  auto s = snapshot();
  return s ? s->version : 0;
}

std::size_t AnnotationSession::current_model_prefix() const {
  auto s = snapshot();
  return s ? s->prefix : 0;
}

std::optional<FittedModel> AnnotationSession::current_model() const {
  auto s = snapshot();
  if (!s) return std::nullopt;
  return s->fitted;
}

std::vector<LabelRecord> AnnotationSession::label_log() const {
  std::lock_guard lk(log_mutex_);
  return labels_;
}

QueueResult AnnotationSession::next_batch(std::size_t n) const {
  std::vector<char> labeled;
  {
    std::lock_guard lk(log_mutex_);
    labeled = labeled_;
  }
  QueueResult result;
  std::vector<std::size_t> unlabeled;
  for (std::size_t i = 0; i < pool_.size(); ++i) {
    if (!labeled[i]) unlabeled.push_back(i);
  }
  if (unlabeled.empty()) {
    result.exhausted = true;
    return result;
  }
  n = std::min(n, unlabeled.size());
  if (n == 0) return result;
  const auto snap = snapshot();
  if (!snap) {
    result.cold_start = true;
    for (auto i : cold_order_) {
      if (result.tweets.size() == n) break;
      if (!labeled[i]) result.tweets.push_back(pool_[i].tweet);
    }
    return result;
  }
  std::vector<double> scores;
  scores.reserve(unlabeled.size());
  for (auto i : unlabeled) scores.push_back(snap->pool_scores[i]);
  for (auto k : select_uncertain(scores, n)) result.tweets.push_back(pool_[unlabeled[k]].tweet);
  return result;
}

SubmitResult AnnotationSession::submit_label(LabelRecord record) {
  if (record.label != 0 && record.label != 1) throw RequestError(400, "label must be 0 or 1");
  auto it = index_of_.find(record.id);
  if (it == index_of_.end()) throw RequestError(404, "unknown tweet id '" + record.id + "'");
  if (record.timestamp_ms == 0) record.timestamp_ms = now_ms();

  SubmitResult result;
  std::optional<std::size_t> inline_prefix;
  {
    std::lock_guard lk(log_mutex_);
    label_file_->append(label_json(record));
    const std::size_t idx = it->second;
    result.superseded = labeled_[idx] != 0;
    if (!labeled_[idx]) {
      labeled_[idx] = 1;
      ++labeled_count_;
    }
    labels_.push_back(std::move(record));
    result.labeled_count = labeled_count_;
    if (labels_.size() - scheduled_prefix_ >= static_cast<std::size_t>(config_.retrain_batch)) {
      scheduled_prefix_ = labels_.size();
      result.retrain_scheduled = true;
      if (config_.background_retrain) {
        pending_ = true;
        work_cv_.notify_one();
      } else {
        inline_prefix = labels_.size();
      }
    }
  }
  if (inline_prefix) retrain(*inline_prefix);
  return result;
}

StatusReport AnnotationSession::status() const {
  StatusReport r;
  {
    std::lock_guard lk(log_mutex_);
    r.labeled = labeled_count_;
    r.remaining = pool_.size() - labeled_count_;
    r.retraining = pending_ || running_;
    r.last_error = last_error_;
  }
  std::lock_guard lk(model_mutex_);
  r.kappas = stopping_.history();
  r.recent_kappas = stopping_.recent();
  r.stop_recommended = stopping_.stop_recommended();
  r.stop_fired_at = stopping_.fired_at();
  r.model_version = current_ ? current_->version : 0;
  if (current_) r.heldout = current_->heldout;
  return r;
}

FilterResult AnnotationSession::filter(std::span<const AnalyzedTweet> tweets, double threshold,
                                       std::optional<std::size_t> limit) const {
  if (!(threshold >= 0.0)) throw RequestError(400, "threshold must be non-negative");
  const auto snap = snapshot();
  if (!snap) throw RequestError(409, "untrained session");
  FilterResult out;
  for (const auto& t : tweets) {
    const double s = snap->fitted.score(t);
    ScoredTweet st{t.tweet, s};
    if (s >= threshold) {
      out.relevant.push_back(std::move(st));
    } else if (s <= -threshold) {
      out.irrelevant.push_back(std::move(st));
    } else {
      out.uncertain.push_back(std::move(st));
    }
  }
  std::stable_sort(out.relevant.begin(), out.relevant.end(),
                   [](const ScoredTweet& a, const ScoredTweet& b) { return a.score > b.score; });
  if (limit && out.relevant.size() > *limit) out.relevant.resize(*limit);
  return out;
}

}  // namespace relfilter
