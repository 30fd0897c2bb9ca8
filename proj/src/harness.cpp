#include "relfilter/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relfilter/error.hpp"
#include "relfilter/rng.hpp"
#include "relfilter/text_io.hpp"

namespace relfilter {

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw UsageError("k must be at least 2");
  if (static_cast<std::size_t>(k) > n) {
    throw UsageError("cannot split " + std::to_string(n) + " items into " + std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  const auto kk = static_cast<std::size_t>(k);
  for (std::size_t f = 0; f < kk; ++f) {
    const std::size_t lo = f * n / kk;
    const std::size_t hi = (f + 1) * n / kk;
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(lo),
                    order.begin() + static_cast<std::ptrdiff_t>(hi));
    std::sort(folds[f].begin(), folds[f].end());
  }
  return folds;
}

std::vector<std::size_t> make_sizes(std::size_t pool_size, int n_points, std::size_t start_size) {
  if (n_points < 2) throw UsageError("a curve needs at least 2 points");
  if (start_size < 1) throw UsageError("start size must be at least 1");
  if (start_size > pool_size) throw UsageError("start size exceeds the pool");
  const auto steps = static_cast<std::size_t>(n_points - 1);
  if (pool_size - start_size < steps) {
    throw UsageError("cannot place " + std::to_string(n_points) + " distinct sizes between " +
                     std::to_string(start_size) + " and " + std::to_string(pool_size));
  }
  std::vector<std::size_t> sizes;
  sizes.reserve(static_cast<std::size_t>(n_points));
  const double span = static_cast<double>(pool_size - start_size);
  for (std::size_t i = 0; i <= steps; ++i) {
    const double exact = static_cast<double>(start_size) + span * static_cast<double>(i) / static_cast<double>(steps);
    sizes.push_back(static_cast<std::size_t>(std::llround(exact)));
  }
  sizes.back() = pool_size;
  return sizes;
}

std::vector<std::size_t> select_uncertain(std::span<const double> scores, std::size_t n) {
  if (n == 0) throw UsageError("must select at least one item");
  if (n > scores.size()) throw UsageError("cannot select more items than the pool holds");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  auto closer = [&](std::size_t a, std::size_t b) {
    const double da = std::fabs(scores[a]);
    const double db = std::fabs(scores[b]);
    return da != db ? da < db : a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(), closer);
  order.resize(n);
  return order;
}

std::optional<std::size_t> stopping_check(std::span<const double> history, double threshold, int window) {
  if (window < 1) throw UsageError("stopping window must be >= 1");
  int run = 0;
  for (std::size_t s = 0; s < history.size(); ++s) {
    run = history[s] >= threshold ? run + 1 : 0;
    if (run >= window) return s;
  }
  return std::nullopt;
}

StoppingState::StoppingState(double threshold, int window) : threshold_(threshold), window_(window) {
  if (window < 1) throw UsageError("stopping window must be >= 1");
}

bool StoppingState::push(double kappa) {
  history_.push_back(kappa);
  if (fired_at_) return false;
  fired_at_ = stopping_check(history_, threshold_, window_);
  return fired_at_.has_value();
}

std::vector<double> StoppingState::recent() const {
  const std::size_t w = std::min(history_.size(), static_cast<std::size_t>(window_));
  return {history_.end() - static_cast<std::ptrdiff_t>(w), history_.end()};
}

std::string strategy_name(Strategy s) { return s == Strategy::active ? "active" : "random"; }

Strategy parse_strategy(std::string_view name) {
  if (name == "active") return Strategy::active;
  if (name == "random") return Strategy::random;
  throw UsageError("unknown strategy '" + std::string(name) + "'");
}

double FittedModel::score(const AnalyzedTweet& tweet) const {
  return model.score(vocabulary.vectorize(tweet));
}

FittedModel fit(std::span<const AnalyzedTweet> training, const FeatureConfig& features,
                const TrainConfig& train_config) {
  FittedModel fitted;
  fitted.vocabulary = Vocabulary::build(training, features);
  std::vector<LabeledVector> examples;
  examples.reserve(training.size());
  bool pos = false;
  bool neg = false;
  for (const auto& t : training) {
    if (!t.tweet.label) throw DataError("training tweet '" + t.tweet.id + "' has no label");
    const int y = *t.tweet.label == 1 ? 1 : -1;
    (y > 0 ? pos : neg) = true;
    examples.push_back({fitted.vocabulary.vectorize(t), y});
  }
  if (!(pos && neg)) {
    fitted.degenerate = true;
    fitted.model = LinearModel(std::vector<double>(fitted.vocabulary.size(), 0.0), pos ? 1.0 : -1.0);
    return fitted;
  }
  fitted.model = train(examples, fitted.vocabulary.size(), train_config).model;
  return fitted;
}

std::vector<int> predict(const FittedModel& model, std::span<const AnalyzedTweet> items) {
  std::vector<int> out;
  out.reserve(items.size());
  for (const auto& t : items) out.push_back(classify_score(model.score(t)) > 0 ? 1 : 0);
  return out;
}

namespace {

std::vector<int> gold_labels(std::span<const AnalyzedTweet> items, const char* what) {
  std::vector<int> gold;
  gold.reserve(items.size());
  for (const auto& t : items) {
    if (!t.tweet.label) throw DataError(std::string(what) + " tweet '" + t.tweet.id + "' has no label");
    gold.push_back(*t.tweet.label);
  }
  return gold;
}

}  // namespace

CurveResult run_curve(std::span<const AnalyzedTweet> pool, std::span<const AnalyzedTweet> test,
                      const CurveSchedule& schedule, const TrainConfig& train_config,
                      const FeatureConfig& features, const CurveOptions& options) {
  const auto& sizes = schedule.sizes;
  if (sizes.empty()) throw UsageError("empty curve schedule");
  if (sizes.front() < 1) throw UsageError("first schedule size must be >= 1");
  for (std::size_t j = 1; j < sizes.size(); ++j) {
    if (sizes[j] <= sizes[j - 1]) throw UsageError("schedule sizes must be strictly increasing");
  }
  if (sizes.back() > pool.size()) {
    throw DataError("schedule size " + std::to_string(sizes.back()) + " exceeds pool of " +
                    std::to_string(pool.size()));
  }
  if (test.empty()) throw DataError("empty test fold");
  gold_labels(pool, "pool");
  const std::vector<int> test_gold = gold_labels(test, "test");
  const std::span<const AnalyzedTweet> stop_items =
      options.stop_set.empty() ? test : std::span<const AnalyzedTweet>(options.stop_set);

  // Shared initial sample: the first sizes[0] entries of a seeded permutation.
  std::vector<std::size_t> perm(pool.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng init_rng(derive_seed(schedule.seed, 0));
  init_rng.shuffle(perm);
  Rng grow_rng(derive_seed(schedule.seed, 1));

  std::vector<char> in_set(pool.size(), 0);
  std::vector<std::size_t> initial(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(sizes[0]));
  std::sort(initial.begin(), initial.end());
  for (auto i : initial) in_set[i] = 1;

  CurveResult result;
  result.added.push_back(initial);
  StoppingState stopping(options.stop_threshold, options.stop_window);
  std::vector<int> prev_stop_predictions;

  for (std::size_t j = 0; j < sizes.size(); ++j) {
    std::vector<AnalyzedTweet> training;
    training.reserve(sizes[j]);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (in_set[i]) training.push_back(pool[i]);
    }
    const FittedModel fitted = fit(training, features, train_config);

    CurvePoint point;
    point.size = training.size();
    point.degenerate = fitted.degenerate;
    const auto metrics = prf(confusion(test_gold, predict(fitted, test)));
    point.precision = metrics.precision;
    point.recall = metrics.recall;
    point.f1 = metrics.f1;
    point.accuracy = metrics.accuracy;

    auto stop_predictions = predict(fitted, stop_items);
    if (j > 0) {
      const double kappa = cohen_kappa(prev_stop_predictions, stop_predictions);
      point.kappa_vs_prev = kappa;
      if (stopping.push(kappa)) {
        point.stop_here = true;
        result.stop_index = j;
      }
    }
    prev_stop_predictions = std::move(stop_predictions);
    result.points.push_back(point);

    if (j + 1 == sizes.size()) break;
    const std::size_t grow = sizes[j + 1] - sizes[j];
    std::vector<std::size_t> remaining;
    remaining.reserve(pool.size() - training.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!in_set[i]) remaining.push_back(i);
    }
    std::vector<std::size_t> chosen;
    if (schedule.strategy == Strategy::active) {
      std::vector<double> scores;
      scores.reserve(remaining.size());
      for (auto i : remaining) scores.push_back(fitted.score(pool[i]));
      for (auto r : select_uncertain(scores, grow)) chosen.push_back(remaining[r]);
    } else {
      // Partial Fisher-Yates: the first `grow` slots become a uniform sample.
      for (std::size_t k = 0; k < grow; ++k) {
        const std::size_t pick = k + grow_rng.uniform(remaining.size() - k);
        std::swap(remaining[k], remaining[pick]);
        chosen.push_back(remaining[k]);
      }
    }
    std::sort(chosen.begin(), chosen.end());
    for (auto i : chosen) in_set[i] = 1;
    result.added.push_back(std::move(chosen));
  }
  return result;
}

std::string curve_lines(const CurveResult& result, Strategy strategy, int fold) {
  std::string out;
  const std::string name = strategy_name(strategy);
  for (const auto& p : result.points) {
    out += name + '\t' + std::to_string(fold) + '\t' + std::to_string(p.size) + '\t' +
           format_fixed(p.precision) + '\t' + format_fixed(p.recall) + '\t' + format_fixed(p.f1) + '\t' +
           (p.kappa_vs_prev ? format_fixed(*p.kappa_vs_prev) : std::string("NA")) + '\t' +
           (p.stop_here ? "1" : "0") + '\n';
  }
  return out;
}

std::string membership_lines(const CurveResult& result, std::span<const AnalyzedTweet> pool,
                             Strategy strategy, int fold) {
  std::string out;
  const std::string name = strategy_name(strategy);
  for (std::size_t j = 0; j < result.added.size() && j < result.points.size(); ++j) {
    out += name + '\t' + std::to_string(fold) + '\t' + std::to_string(result.points[j].size) + '\t';
    for (std::size_t k = 0; k < result.added[j].size(); ++k) {
      if (k) out += ' ';
      out += pool[result.added[j][k]].tweet.id;
    }
    out += '\n';
  }
  return out;
}

}  // namespace relfilter
