#include "relfilter/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <thread>

#include "CLI11.hpp"
#include "relfilter/confidence.hpp"
#include "relfilter/error.hpp"
#include "relfilter/features.hpp"
#include "relfilter/harness.hpp"
#include "relfilter/http_api.hpp"
#include "relfilter/ingest.hpp"
#include "relfilter/kernels.hpp"
#include "relfilter/manifest.hpp"
#include "relfilter/metrics.hpp"
#include "relfilter/rng.hpp"
#include "relfilter/service.hpp"
#include "relfilter/svm.hpp"
#include "relfilter/text_io.hpp"

namespace relfilter {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string input;
  std::string emoji_table;
  std::string stopwords;
  std::string keywords;
  std::string pos_map;
  std::string blocked;
  std::string out_dir;
  std::string features = "lex1";
  int min_count = 3;
  std::optional<double> C;
  double tolerance = 1e-3;
  int folds = 10;
  int points = 100;
  std::size_t start_size = 0;
  std::string strategy = "both";
  double stop_threshold = 0.99;
  int stop_window = 3;
  std::string grid = "default";
  std::uint64_t seed = 1;
  int jobs = 1;
  std::int64_t sample = 0;
  bool no_script_filter = false;
  bool no_dedup = false;
  std::string scores;
  std::string session;
  std::string heldout;
  std::string curve;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string port_file;
  int retrain_batch = 50;
  std::size_t stop_set_size = 2000;
  bool sync = false;
};

// Seed streams; every random choice in a run derives from --seed.
constexpr std::uint64_t kFoldStream = 1;
constexpr std::uint64_t kSampleStream = 2;
constexpr std::uint64_t kTrainStream = 1000;
constexpr std::uint64_t kCurveStream = 2000;

NormalizationConfig load_normalization(const Options& o) {
  NormalizationConfig config;
  if (!o.emoji_table.empty()) config.emoji_table = load_emoji_table(o.emoji_table);
  if (!o.stopwords.empty()) config.stopwords = load_word_list(o.stopwords);
  if (!o.pos_map.empty()) config.pos_collapse_map = load_pos_map(o.pos_map);
  if (!o.blocked.empty()) config.blocked_keywords = load_word_list(o.blocked);
  return config;
}

std::vector<AnalyzedTweet> load_records(const std::string& path) {
  if (path.empty()) throw UsageError("--input is required");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  auto parsed = parse_records(in);
  for (const auto& issue : parsed.errors) {
    std::cerr << path << ":" << issue.line << ": skipped: " << issue.message << "\n";
  }
  if (parsed.records.empty()) throw DataError(path + ": no usable records");
  return std::move(parsed.records);
}

// Records for modeling: cleaning is idempotent, so already preprocessed
// input passes through unchanged.
std::vector<AnalyzedTweet> load_corpus(const std::string& path, const NormalizationConfig& config) {
  auto records = load_records(path);
  for (auto& r : records) r = clean_record(r, config);
  return records;
}

FeatureConfig feature_config(const Options& o) {
  FeatureConfig f = feature_preset(o.features);
  f.min_count = o.min_count;
  f.validate();
  return f;
}

TrainConfig train_config(const Options& o, std::uint64_t seed) {
  TrainConfig t;
  t.C = o.C;
  t.tolerance = o.tolerance;
  t.seed = seed;
  t.validate();
  return t;
}

fs::path out_dir(const Options& o) {
  if (o.out_dir.empty()) throw UsageError("--out-dir is required");
  fs::create_directories(o.out_dir);
  return o.out_dir;
}

void write_manifest(const Options& o, const CLI::App& sub, const fs::path& dir) {
  RunManifest m;
  m.command = sub.get_name();
  m.seed = o.seed;
  m.simd_backend = std::string(kernels::backend_name(kernels::active_backend()));
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "out-dir") continue;
    m.flags[name] = opt->count() > 0 ? join(opt->results(), ",") : opt->get_default_str();
  }
  for (const std::string* path : {&o.input, &o.emoji_table, &o.stopwords, &o.keywords, &o.pos_map, &o.blocked,
                                  &o.scores, &o.heldout}) {
    if (!path->empty()) m.input_digests[*path] = file_sha256(*path);
  }
  write_file_atomic(dir / "manifest.json", m.to_json());
}

// Runs task(0..n-1) on up to `jobs` threads. Results must be stored by index
// so that output order never depends on scheduling.
template <typename F>
void parallel_for(int n, int jobs, F&& task) {
  if (jobs < 1) throw UsageError("--jobs must be >= 1");
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto work = [&] {
    for (int k = next++; k < n; k = next++) {
      try {
        task(k);
      } catch (...) {
        std::lock_guard lk(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int t = 1; t < std::min(jobs, n); ++t) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

struct FoldData {
  std::vector<AnalyzedTweet> train;
  std::vector<AnalyzedTweet> test;
  std::vector<std::size_t> test_index;  // corpus positions of test items
};

std::vector<FoldData> make_folds(const std::vector<AnalyzedTweet>& corpus, const Options& o) {
  const auto folds = kfold_split(corpus.size(), o.folds, derive_seed(o.seed, kFoldStream));
  std::vector<FoldData> out(folds.size());
  std::vector<int> fold_of(corpus.size(), -1);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    for (auto i : folds[f]) fold_of[i] = static_cast<int>(f);
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (std::size_t f = 0; f < folds.size(); ++f) {
      if (fold_of[i] == static_cast<int>(f)) {
        out[f].test.push_back(corpus[i]);
        out[f].test_index.push_back(i);
      } else {
        out[f].train.push_back(corpus[i]);
      }
    }
  }
  return out;
}

std::vector<int> gold_of(const std::vector<AnalyzedTweet>& items) {
  std::vector<int> gold;
  gold.reserve(items.size());
  for (const auto& t : items) {
    if (!t.tweet.label) throw DataError("tweet '" + t.tweet.id + "' has no label");
    gold.push_back(*t.tweet.label);
  }
  return gold;
}

struct CvScores {
  std::vector<double> scores;  // corpus order
  std::vector<int> fold;
};

CvScores cross_validated_scores(const std::vector<AnalyzedTweet>& corpus, const Options& o) {
  const auto features = feature_config(o);
  const auto folds = make_folds(corpus, o);
  CvScores cv;
  cv.scores.assign(corpus.size(), 0.0);
  cv.fold.assign(corpus.size(), 0);
  parallel_for(static_cast<int>(folds.size()), o.jobs, [&](int f) {
    const auto& fd = folds[static_cast<std::size_t>(f)];
    const auto fitted = fit(fd.train, features, train_config(o, derive_seed(o.seed, kTrainStream + f)));
    for (std::size_t k = 0; k < fd.test.size(); ++k) {
      cv.scores[fd.test_index[k]] = fitted.score(fd.test[k]);
      cv.fold[fd.test_index[k]] = f + 1;
    }
  });
  return cv;
}

std::vector<double> parse_grid(const std::string& text) {
  if (text == "default") return default_grid();
  std::vector<double> grid;
  for (const auto& part : split(text, ',')) {
    try {
      grid.push_back(parse_double(part));
    } catch (const std::exception&) {
      throw UsageError("bad --grid value '" + part + "'");
    }
  }
  if (grid.empty()) throw UsageError("--grid is empty");
  return grid;
}

std::vector<ScoredItem> load_scores(const std::string& path) {
  std::vector<double> scores;
  std::vector<int> gold;
  const auto lines = read_lines(path);
  for (std::size_t i = 1; i < lines.size(); ++i) {  // header first
    if (lines[i].empty()) continue;
    const auto cols = split(lines[i], '\t');
    if (cols.size() != 4) throw DataError(path + ":" + std::to_string(i + 1) + ": expected 4 columns");
    try {
      gold.push_back(std::stoi(cols[2]));
      scores.push_back(parse_double(cols[3]));
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(i + 1) + ": bad number");
    }
  }
  return make_scored_items(scores, gold);
}

int cmd_preprocess(const Options& o, const CLI::App& sub) {
  const auto config = load_normalization(o);
  const auto records = load_records(o.input);
  PipelineOptions p;
  if (!o.keywords.empty()) p.keywords = load_word_list(o.keywords);
  p.script_filter = !o.no_script_filter;
  p.deduplicate = !o.no_dedup;
  if (o.sample > 0) p.sample_size = o.sample;
  p.seed = derive_seed(o.seed, kSampleStream);
  const auto report = preprocess_corpus(records, config, p);

  const auto dir = out_dir(o);
  std::string out;
  for (const auto& r : report.records) out += to_json_line(r) + "\n";
  write_file_atomic(dir / "records.jsonl", out);
  const std::string counts = "stage\tcount\ninput\t" + std::to_string(report.input) + "\nafter_dedup\t" +
                             std::to_string(report.after_dedup) + "\nafter_keywords\t" +
                             std::to_string(report.after_keywords) + "\nafter_script\t" +
                             std::to_string(report.after_script) + "\nafter_blocked\t" +
                             std::to_string(report.after_blocked) + "\noutput\t" +
                             std::to_string(report.records.size()) + "\n";
  write_file_atomic(dir / "preprocess.tsv", counts);
  write_manifest(o, sub, dir);
  std::cout << counts;
  return 0;
}

int cmd_vocab(const Options& o, const CLI::App& sub) {
  const auto corpus = load_corpus(o.input, load_normalization(o));
  const auto vocab = Vocabulary::build(corpus, feature_config(o));
  const auto dir = out_dir(o);
  std::string vectors;
  for (const auto& t : corpus) {
    const int label = t.tweet.label ? (*t.tweet.label == 1 ? 1 : -1) : 0;
    vectors += sparse_line(vocab.vectorize(t), label) + "\n";
  }
  write_file_atomic(dir / "vocab.tsv", vocab.serialize());
  write_file_atomic(dir / "vectors.txt", vectors);
  write_manifest(o, sub, dir);
  std::cout << "vocabulary\t" << vocab.size() << "\n";
  return 0;
}

int cmd_train(const Options& o, const CLI::App& sub) {
  const auto corpus = load_corpus(o.input, load_normalization(o));
  const auto features = feature_config(o);
  const auto vocab = Vocabulary::build(corpus, features);
  std::vector<LabeledVector> examples;
  examples.reserve(corpus.size());
  const auto gold = gold_of(corpus);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    examples.push_back({vocab.vectorize(corpus[i]), gold[i] == 1 ? 1 : -1});
  }
  const auto result = train(examples, vocab.size(), train_config(o, derive_seed(o.seed, kTrainStream)));
  ConfusionCounts c;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    c.add(gold[i], result.model.classify(examples[i].x) > 0 ? 1 : 0);
  }
  const auto dir = out_dir(o);
  write_file_atomic(dir / "vocab.tsv", vocab.serialize());
  write_file_atomic(dir / "model.tsv", result.model.serialize());
  const std::string report = metric_lines({{"C", result.C},
                                           {"epochs", result.epochs},
                                           {"converged", result.converged ? 1.0 : 0.0},
                                           {"dual_objective", result.dual_objective.empty() ? 0.0 : result.dual_objective.back()},
                                           {"primal_objective", objective(result.model, examples, result.C)},
                                           {"training_accuracy", prf(c).accuracy}});
  write_file_atomic(dir / "train.tsv", report);
  write_manifest(o, sub, dir);
  std::cout << report;
  if (!result.converged) std::cerr << "warning: epoch cap reached before the tolerance was met\n";
  return 0;
}

int cmd_eval(const Options& o, const CLI::App& sub) {
  const auto corpus = load_corpus(o.input, load_normalization(o));
  const auto features = feature_config(o);
  const auto folds = make_folds(corpus, o);
  std::vector<Prf> results(folds.size());
  parallel_for(static_cast<int>(folds.size()), o.jobs, [&](int f) {
    const auto& fd = folds[static_cast<std::size_t>(f)];
    const auto fitted = fit(fd.train, features, train_config(o, derive_seed(o.seed, kTrainStream + f)));
    results[static_cast<std::size_t>(f)] = prf(confusion(gold_of(fd.test), predict(fitted, fd.test)));
  });
  std::string out = "fold\tprecision\trecall\tf1\taccuracy\n";
  Prf mean;
  for (std::size_t f = 0; f < results.size(); ++f) {
    const auto& r = results[f];
    out += std::to_string(f + 1) + '\t' + format_fixed(r.precision) + '\t' + format_fixed(r.recall) + '\t' +
           format_fixed(r.f1) + '\t' + format_fixed(r.accuracy) + '\n';
    mean.precision += r.precision / static_cast<double>(results.size());
    mean.recall += r.recall / static_cast<double>(results.size());
    mean.f1 += r.f1 / static_cast<double>(results.size());
    mean.accuracy += r.accuracy / static_cast<double>(results.size());
  }
  out += "mean\t" + format_fixed(mean.precision) + '\t' + format_fixed(mean.recall) + '\t' + format_fixed(mean.f1) +
         '\t' + format_fixed(mean.accuracy) + '\n';
  const auto dir = out_dir(o);
  write_file_atomic(dir / "eval.tsv", out);
  write_manifest(o, sub, dir);
  std::cout << out;
  return 0;
}

int cmd_curve(const Options& o, const CLI::App& sub) {
  std::vector<Strategy> strategies;
  if (o.strategy == "both") {
    strategies = {Strategy::random, Strategy::active};
  } else {
    strategies = {parse_strategy(o.strategy)};
  }
  const auto corpus = load_corpus(o.input, load_normalization(o));
  const auto features = feature_config(o);
  const auto folds = make_folds(corpus, o);
  CurveOptions options;
  options.stop_threshold = o.stop_threshold;
  options.stop_window = o.stop_window;

  const int tasks = static_cast<int>(folds.size() * strategies.size());
  std::vector<std::string> curve(static_cast<std::size_t>(tasks));
  std::vector<std::string> membership(static_cast<std::size_t>(tasks));
  parallel_for(tasks, o.jobs, [&](int t) {
    const auto f = static_cast<std::size_t>(t) / strategies.size();
    const Strategy strategy = strategies[static_cast<std::size_t>(t) % strategies.size()];
    const auto& fd = folds[f];
    const std::size_t start =
        o.start_size ? o.start_size : std::max<std::size_t>(1, fd.train.size() / static_cast<std::size_t>(o.points));
    CurveSchedule schedule;
    schedule.sizes = make_sizes(fd.train.size(), o.points, start);
    schedule.strategy = strategy;
    // Same seed for both strategies: they share the initial set.
    schedule.seed = derive_seed(o.seed, kCurveStream + f);
    const auto result = run_curve(fd.train, fd.test, schedule,
                                  train_config(o, derive_seed(o.seed, kTrainStream + f)), features, options);
    curve[static_cast<std::size_t>(t)] = curve_lines(result, strategy, static_cast<int>(f) + 1);
    membership[static_cast<std::size_t>(t)] = membership_lines(result, fd.train, strategy, static_cast<int>(f) + 1);
    std::cerr << "curve: fold " << f + 1 << " " << strategy_name(strategy) << " done\n";
  });
  const auto dir = out_dir(o);
  write_file_atomic(dir / "curve.tsv", std::accumulate(curve.begin(), curve.end(), std::string()));
  write_file_atomic(dir / "membership.tsv", std::accumulate(membership.begin(), membership.end(), std::string()));
  write_manifest(o, sub, dir);
  return 0;
}

std::string scores_file(const std::vector<AnalyzedTweet>& corpus, const CvScores& cv) {
  std::string out = "id\tfold\tgold\tscore\n";
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out += corpus[i].tweet.id + '\t' + std::to_string(cv.fold[i]) + '\t' + std::to_string(*corpus[i].tweet.label) +
           '\t' + format_exact(cv.scores[i]) + '\n';
  }
  return out;
}

std::vector<ScoredItem> scored_items(const Options& o, const fs::path& dir) {
  if (!o.scores.empty()) return load_scores(o.scores);
  const auto corpus = load_corpus(o.input, load_normalization(o));
  const auto gold = gold_of(corpus);
  const auto cv = cross_validated_scores(corpus, o);
  write_file_atomic(dir / "scores.tsv", scores_file(corpus, cv));
  return make_scored_items(cv.scores, gold);
}

int cmd_sweep(const Options& o, const CLI::App& sub) {
  const auto grid = parse_grid(o.grid);
  const auto dir = out_dir(o);
  const auto items = scored_items(o, dir);
  const std::string out = "threshold\tretained\tprecision\trecall\tf1\taccuracy\tglobal_recall\n" +
                          sweep_lines(sweep_thresholds(items, grid));
  write_file_atomic(dir / "sweep.tsv", out);
  write_manifest(o, sub, dir);
  std::cout << out;
  return 0;
}

int cmd_regress(const Options& o, const CLI::App& sub) {
  const auto dir = out_dir(o);
  const auto items = scored_items(o, dir);
  const std::string out = regression_report(items);
  write_file_atomic(dir / "regress.tsv", out);
  write_manifest(o, sub, dir);
  std::cout << out;
  return 0;
}

int cmd_serve(const Options& o) {
  if (o.session.empty()) throw UsageError("--session is required");
  // Signals are taken synchronously by one thread; block them before any
  // other thread starts so that none inherits the default handlers.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGUSR1);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  const auto normalization = load_normalization(o);
  std::unique_ptr<AnnotationSession> session;
  if (AnnotationSession::exists(o.session)) {
    if (!o.input.empty()) std::cerr << "serve: resuming " << o.session << "; --input ignored\n";
    session = AnnotationSession::open(o.session, !o.sync);
  } else {
    SessionConfig config;
    config.features = feature_config(o);
    config.train = train_config(o, derive_seed(o.seed, kTrainStream));
    config.retrain_batch = o.retrain_batch;
    config.stop_set_size = o.stop_set_size;
    config.seed = o.seed;
    config.stop_threshold = o.stop_threshold;
    config.stop_window = o.stop_window;
    config.background_retrain = !o.sync;
    auto pool = load_corpus(o.input, normalization);
    std::vector<AnalyzedTweet> heldout;
    if (!o.heldout.empty()) heldout = load_corpus(o.heldout, normalization);
    session = AnnotationSession::create(o.session, std::move(pool), config, std::move(heldout));
  }

  ApiOptions api;
  api.normalization = normalization;
  if (!o.curve.empty()) api.curve_file = fs::path(o.curve);
  ApiServer server(*session, api);
  const int port = server.bind(o.host, o.port);
  if (!o.port_file.empty()) write_file_atomic(o.port_file, std::to_string(port) + "\n");
  std::cout << "listening on http://" << o.host << ":" << port << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.listen();
  server.stop();
  pthread_kill(waiter.native_handle(), SIGUSR1);
  waiter.join();
  session->wait_idle();
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Relevance filtering for short texts: preprocessing, linear SVMs, learning curves, "
               "confidence analysis and an annotation service."};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  Options o;

  auto add_inputs = [&](CLI::App* s, bool with_keywords) {
    s->add_option("--input", o.input, "Records, one JSON object per line");
    s->add_option("--emoji-table", o.emoji_table, "Emoji table (codepoints TAB index)");
    s->add_option("--stopwords", o.stopwords, "Stopword list, one per line");
    s->add_option("--pos-map", o.pos_map, "POS collapse map (tag TAB collapsed)");
    s->add_option("--blocked", o.blocked, "Blocked terms; tweets containing one are dropped");
    if (with_keywords) s->add_option("--keywords", o.keywords, "Keyword list for the pre-filter");
  };
  auto add_model = [&](CLI::App* s) {
    s->add_option("--features", o.features, "pos1|pos1-2|pos1-3|lex1|lex1-2|lex1-2_pos1-3");
    s->add_option("--min-count", o.min_count, "Minimum ngram count for the vocabulary");
    s->add_option("--C", o.C, "SVM cost; default 1/mean(|x|^2)");
    s->add_option("--tolerance", o.tolerance, "SVM stopping tolerance");
    s->add_option("--seed", o.seed, "Seed for every random choice");
  };
  auto add_cv = [&](CLI::App* s) {
    s->add_option("--folds", o.folds, "Cross-validation folds");
    s->add_option("--jobs", o.jobs, "Folds run in parallel");
  };
  auto add_out = [&](CLI::App* s) { s->add_option("--out-dir", o.out_dir, "Directory for artifacts")->required(); };

  auto* preprocess = app.add_subcommand("preprocess", "Normalize, filter and deduplicate records");
  add_inputs(preprocess, true);
  preprocess->add_option("--sample", o.sample, "Time-stratified sample size (0 keeps all)");
  preprocess->add_option("--seed", o.seed, "Seed for sampling");
  preprocess->add_flag("--no-script-filter", o.no_script_filter, "Keep tweets with foreign-script tokens");
  preprocess->add_flag("--no-dedup", o.no_dedup, "Keep duplicates");
  add_out(preprocess);

  auto* vocab = app.add_subcommand("vocab", "Build a vocabulary and sparse vectors");
  add_inputs(vocab, false);
  vocab->add_option("--features", o.features, "Feature preset");
  vocab->add_option("--min-count", o.min_count, "Minimum ngram count");
  add_out(vocab);

  auto* train_cmd = app.add_subcommand("train", "Train a linear SVM on labeled records");
  add_inputs(train_cmd, false);
  add_model(train_cmd);
  add_out(train_cmd);

  auto* eval = app.add_subcommand("eval", "K-fold cross-validated precision, recall and F1");
  add_inputs(eval, false);
  add_model(eval);
  add_cv(eval);
  add_out(eval);

  auto* curve = app.add_subcommand("curve", "Random and active learning curves");
  add_inputs(curve, false);
  add_model(curve);
  add_cv(curve);
  curve->add_option("--points", o.points, "Points per curve");
  curve->add_option("--start-size", o.start_size, "Initial training-set size; default pool/points");
  curve->add_option("--strategy", o.strategy, "random|active|both");
  curve->add_option("--stop-threshold", o.stop_threshold, "Kappa threshold of the stopping rule");
  curve->add_option("--stop-window", o.stop_window, "Successive kappas required");
  add_out(curve);

  auto* sweep = app.add_subcommand("sweep", "Metrics over items with |score| >= T");
  add_inputs(sweep, false);
  add_model(sweep);
  add_cv(sweep);
  sweep->add_option("--grid", o.grid, "'default' or comma-separated thresholds");
  sweep->add_option("--scores", o.scores, "Reuse a scores.tsv instead of cross-validating");
  add_out(sweep);

  auto* regress = app.add_subcommand("regress", "Logistic regression of correctness on |score|");
  add_inputs(regress, false);
  add_model(regress);
  add_cv(regress);
  regress->add_option("--scores", o.scores, "Reuse a scores.tsv instead of cross-validating");
  add_out(regress);

  auto* serve = app.add_subcommand("serve", "Run the annotation service");
  add_inputs(serve, false);
  add_model(serve);
  serve->add_option("--session", o.session, "Session directory (created on first use)")->required();
  serve->add_option("--heldout", o.heldout, "Labeled records for status metrics");
  serve->add_option("--curve", o.curve, "Curve file served by GET /curve");
  serve->add_option("--host", o.host, "Listen address");
  serve->add_option("--port", o.port, "Listen port; 0 picks a free one");
  serve->add_option("--port-file", o.port_file, "Write the bound port here");
  serve->add_option("--retrain-batch", o.retrain_batch, "Labels per retrain");
  serve->add_option("--stop-set-size", o.stop_set_size, "Stop set size");
  serve->add_option("--stop-threshold", o.stop_threshold, "Kappa threshold of the stopping rule");
  serve->add_option("--stop-window", o.stop_window, "Successive kappas required");
  serve->add_flag("--sync", o.sync, "Retrain before acknowledging the triggering label");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const std::string& name = sub->get_name();
    if (name == "preprocess") return cmd_preprocess(o, *sub);
    if (name == "vocab") return cmd_vocab(o, *sub);
    if (name == "train") return cmd_train(o, *sub);
    if (name == "eval") return cmd_eval(o, *sub);
    if (name == "curve") return cmd_curve(o, *sub);
    if (name == "sweep") return cmd_sweep(o, *sub);
    if (name == "regress") return cmd_regress(o, *sub);
    if (name == "serve") return cmd_serve(o);
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace relfilter
