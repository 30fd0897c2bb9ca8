#pragma once

// Learning-curve experiments: k-fold splits, training-size schedules,
// uncertainty sampling, and detection of the point where successive models'
// predictions stop changing.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relfilter/features.hpp"
#include "relfilter/ingest.hpp"
#include "relfilter/metrics.hpp"
#include "relfilter/svm.hpp"

namespace relfilter {

// Item indices for each fold. Folds partition [0, n) and differ in size by
// at most one.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, int k, std::uint64_t seed);

// n_points sizes evenly spaced from start_size to pool_size, rounded to the
// nearest integer. Throws UsageError when they cannot be strictly increasing.
std::vector<std::size_t> make_sizes(std::size_t pool_size, int n_points, std::size_t start_size);

// Indices of the n smallest |scores|, ties broken by lower index, returned in
// that order.
std::vector<std::size_t> select_uncertain(std::span<const double> scores, std::size_t n);

// Smallest s such that history[s-window+1 .. s] are all >= threshold.
std::optional<std::size_t> stopping_check(std::span<const double> kappa_history, double threshold,
                                          int window);

// Sticky stopping detector fed one kappa at a time.
class StoppingState {
 public:
  StoppingState(double threshold = 0.99, int window = 3);

  // Appends a kappa; returns true if this value fired the rule.
  bool push(double kappa);
  const std::vector<double>& history() const { return history_; }
  // Index into history() of the value that completed the first qualifying run.
  std::optional<std::size_t> fired_at() const { return fired_at_; }
  bool stop_recommended() const { return fired_at_.has_value(); }
  double threshold() const { return threshold_; }
  int window() const { return window_; }
  // Last `window` values (fewer at the start).
  std::vector<double> recent() const;

 private:
  double threshold_;
  int window_;
  std::vector<double> history_;
  std::optional<std::size_t> fired_at_;
};

enum class Strategy { random, active };
std::string strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

struct CurveSchedule {
  std::vector<std::size_t> sizes;
  Strategy strategy = Strategy::active;
  std::uint64_t seed = 1;
};

struct CurvePoint {
  std::size_t size = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::optional<double> kappa_vs_prev;
  bool stop_here = false;
  // Training set held a single class; a constant model was used.
  bool degenerate = false;
};

struct CurveResult {
  std::vector<CurvePoint> points;
  // Pool indices added at each point (the whole initial set at point 0).
  std::vector<std::vector<std::size_t>> added;
  std::optional<std::size_t> stop_index;
};

struct CurveOptions {
  double stop_threshold = 0.99;
  int stop_window = 3;
  // Items whose successive predictions are compared for the stopping rule.
  // Empty means the test fold.
  std::vector<AnalyzedTweet> stop_set;
};

// Model + vocabulary pair as trained on one labeled set.
struct FittedModel {
  Vocabulary vocabulary;
  LinearModel model;
  bool degenerate = false;  // single-class training set; constant score

  double score(const AnalyzedTweet& tweet) const;
};

// Builds the vocabulary from `training` and trains on it. Labels are read
// from tweet.label. A single-class set yields a constant model scoring +1 or
// -1 for every input.
FittedModel fit(std::span<const AnalyzedTweet> training, const FeatureConfig& features,
                const TrainConfig& train_config);

// Predicted 0/1 labels.
std::vector<int> predict(const FittedModel& model, std::span<const AnalyzedTweet> items);

// Runs one learning curve. The training set at each point is the previous
// set plus sizes[j] - sizes[j-1] items chosen by the strategy; the initial
// set is a seeded random sample shared by both strategies. Training always
// sees the set in pool order, so equal sets give equal models.
CurveResult run_curve(std::span<const AnalyzedTweet> pool, std::span<const AnalyzedTweet> test,
                      const CurveSchedule& schedule, const TrainConfig& train_config,
                      const FeatureConfig& features, const CurveOptions& options = {});

// "strategy TAB fold TAB size TAB precision TAB recall TAB f1 TAB kappa TAB stop_flag"
std::string curve_lines(const CurveResult& result, Strategy strategy, int fold);
// "strategy TAB fold TAB size TAB id id ..." listing ids added at each point.
std::string membership_lines(const CurveResult& result, std::span<const AnalyzedTweet> pool,
                             Strategy strategy, int fold);

}  // namespace relfilter
