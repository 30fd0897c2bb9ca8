#include <algorithm>
#include <set>

#include "doctest.h"
#include "relfilter/error.hpp"
#include "relfilter/harness.hpp"
#include "relfilter/rng.hpp"
#include "synthetic.hpp"

using namespace relfilter;

namespace {

using Sizes = std::vector<std::size_t>;

std::vector<AnalyzedTweet> small_corpus(std::size_t n, std::uint64_t seed) {
  testing::CorpusOptions options;
  options.size = n;
  options.with_pos = false;
  return testing::two_cluster_corpus(options, seed);
}

TrainConfig quick() {
  TrainConfig c;
  c.tolerance = 1e-3;
  return c;
}

}  // namespace

TEST_CASE("kfold_split partitions the items") {
  for (std::size_t n : {10u, 11u, 57u}) {
    for (int k : {2, 3, 10}) {
      const auto folds = kfold_split(n, k, 9);
      REQUIRE(folds.size() == static_cast<std::size_t>(k));
      std::set<std::size_t> seen;
      std::size_t smallest = n, largest = 0;
      for (const auto& f : folds) {
        CHECK(std::is_sorted(f.begin(), f.end()));
        seen.insert(f.begin(), f.end());
        smallest = std::min(smallest, f.size());
        largest = std::max(largest, f.size());
      }
      CHECK(seen.size() == n);
      CHECK(*seen.rbegin() == n - 1);
      CHECK(largest - smallest <= 1);
    }
  }
  CHECK(kfold_split(20, 4, 1) == kfold_split(20, 4, 1));
  CHECK(kfold_split(20, 4, 1) != kfold_split(20, 4, 2));
  CHECK_THROWS_AS(kfold_split(3, 4, 1), UsageError);
  CHECK_THROWS_AS(kfold_split(10, 1, 1), UsageError);
}

TEST_CASE("make_sizes examples") {
  CHECK(make_sizes(100, 5, 20) == Sizes{20, 40, 60, 80, 100});
  CHECK(make_sizes(10, 4, 1) == Sizes{1, 4, 7, 10});
  CHECK(make_sizes(5, 5, 1) == Sizes{1, 2, 3, 4, 5});
  CHECK(make_sizes(10, 2, 10 - 1) == Sizes{9, 10});
  const auto big = make_sizes(19540, 20, 977);
  CHECK(big.front() == 977);
  CHECK(big.back() == 19540);
  CHECK(big[1] == 1954);  // 977 + 18563 / 19 = 1954.0
  for (std::size_t i = 1; i < big.size(); ++i) CHECK(big[i] > big[i - 1]);
  CHECK_THROWS_AS(make_sizes(4, 5, 1), UsageError);
  CHECK_THROWS_AS(make_sizes(10, 1, 1), UsageError);
  CHECK_THROWS_AS(make_sizes(10, 3, 0), UsageError);
  CHECK_THROWS_AS(make_sizes(10, 3, 11), UsageError);
}

TEST_CASE("select_uncertain examples") {
  const std::vector<double> scores = {0.9, -0.1, 0.3, 0.1, -2.0, 0.0};
  CHECK(select_uncertain(scores, 1) == Sizes{5});
  CHECK(select_uncertain(scores, 3) == Sizes{5, 1, 3});  // tie on |0.1|: lower index first
  CHECK(select_uncertain(scores, 6) == Sizes{5, 1, 3, 2, 0, 4});
  CHECK_THROWS_AS(select_uncertain(scores, 0), UsageError);
  CHECK_THROWS_AS(select_uncertain(scores, 7), UsageError);
}

TEST_CASE("stopping_check examples") {
  using H = std::vector<double>;
  CHECK(stopping_check(H{0.5, 0.995, 0.99, 0.999}, 0.99, 3) == 3u);
  CHECK_FALSE(stopping_check(H{0.995, 0.99, 0.5, 0.999, 0.999}, 0.99, 3).has_value());
  CHECK(stopping_check(H{0.995, 0.99, 0.5, 0.999, 0.999, 1.0}, 0.99, 3) == 5u);
  CHECK(stopping_check(H{0.2, 0.995}, 0.99, 1) == 1u);
  CHECK_FALSE(stopping_check(H{}, 0.99, 3).has_value());
  CHECK_THROWS_AS(stopping_check(H{1.0}, 0.99, 0), UsageError);
}

TEST_CASE("stopping fires no later when kappas rise") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> h(12);
    for (auto& v : h) v = 0.97 + 0.03 * rng.uniform01();
    const auto before = stopping_check(h, 0.99, 3);
    auto raised = h;
    raised[rng.uniform(h.size())] = 1.0;
    const auto after = stopping_check(raised, 0.99, 3);
    if (before) {
      REQUIRE(after.has_value());
      CHECK(*after <= *before);
    }
  }
}

TEST_CASE("StoppingState is sticky") {
  StoppingState s(0.9, 2);
  CHECK_FALSE(s.push(0.95));
  CHECK(s.recent() == std::vector<double>{0.95});
  CHECK(s.push(0.92));
  CHECK(s.fired_at() == 1u);
  CHECK_FALSE(s.push(0.1));
  CHECK(s.stop_recommended());
  CHECK(s.recent() == std::vector<double>{0.92, 0.1});
  CHECK_THROWS_AS(StoppingState(0.9, 0), UsageError);
}

TEST_CASE("strategy names") {
  CHECK(parse_strategy("active") == Strategy::active);
  CHECK(strategy_name(parse_strategy("random")) == "random");
  CHECK_THROWS_AS(parse_strategy("greedy"), UsageError);
}

TEST_CASE("fit on one class gives a constant model") {
  auto corpus = small_corpus(20, 1);
  for (auto& t : corpus) t.tweet.label = 0;
  const auto fitted = fit(corpus, feature_preset("lex1"), quick());
  CHECK(fitted.degenerate);
  for (const auto& t : corpus) CHECK(fitted.score(t) == -1.0);
  for (auto& t : corpus) t.tweet.label = 1;
  CHECK(fit(corpus, feature_preset("lex1"), quick()).score(corpus[0]) == 1.0);
}

TEST_CASE("curves grow nested training sets") {
  const auto corpus = small_corpus(400, 3);
  const auto folds = kfold_split(corpus.size(), 4, 3);
  std::vector<AnalyzedTweet> pool, test;
  std::vector<char> is_test(corpus.size(), 0);
  for (auto i : folds[0]) is_test[i] = 1;
  for (std::size_t i = 0; i < corpus.size(); ++i) (is_test[i] ? test : pool).push_back(corpus[i]);

  for (Strategy strategy : {Strategy::random, Strategy::active}) {
    CurveSchedule schedule{make_sizes(pool.size(), 6, 30), strategy, 11};
    const auto r = run_curve(pool, test, schedule, quick(), feature_preset("lex1"));
    REQUIRE(r.points.size() == schedule.sizes.size());
    REQUIRE(r.added.size() == schedule.sizes.size());
    std::set<std::size_t> so_far;
    for (std::size_t j = 0; j < r.points.size(); ++j) {
      for (auto i : r.added[j]) CHECK(so_far.insert(i).second);
      CHECK(so_far.size() == schedule.sizes[j]);
      CHECK(r.points[j].size == schedule.sizes[j]);
      CHECK(r.points[j].kappa_vs_prev.has_value() == (j > 0));
    }
    // The last point trains on the whole pool for either strategy.
    CHECK(so_far.size() == pool.size());
    CHECK(curve_lines(r, strategy, 1) ==
          curve_lines(run_curve(pool, test, schedule, quick(), feature_preset("lex1")), strategy, 1));
  }
}

TEST_CASE("active selections replay from the recorded membership") {
  const auto corpus = small_corpus(300, 4);
  std::vector<AnalyzedTweet> pool(corpus.begin(), corpus.begin() + 240);
  std::vector<AnalyzedTweet> test(corpus.begin() + 240, corpus.end());
  CurveSchedule schedule{{20, 40, 70, 110}, Strategy::active, 5};
  const auto r = run_curve(pool, test, schedule, quick(), feature_preset("lex1"));

  const auto random = run_curve(pool, test, {schedule.sizes, Strategy::random, 5}, quick(), feature_preset("lex1"));
  CHECK(random.added[0] == r.added[0]);

  std::vector<char> in_set(pool.size(), 0);
  for (std::size_t j = 0; j + 1 < r.added.size(); ++j) {
    for (auto i : r.added[j]) in_set[i] = 1;
    std::vector<AnalyzedTweet> training;
    std::vector<std::size_t> remaining;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (in_set[i]) {
        training.push_back(pool[i]);
      } else {
        remaining.push_back(i);
      }
    }
    const auto fitted = fit(training, feature_preset("lex1"), quick());
    std::vector<double> scores;
    for (auto i : remaining) scores.push_back(fitted.score(pool[i]));
    Sizes expected;
    for (auto k : select_uncertain(scores, schedule.sizes[j + 1] - schedule.sizes[j])) {
      expected.push_back(remaining[k]);
    }
    std::sort(expected.begin(), expected.end());
    CHECK(expected == r.added[j + 1]);
  }

  const auto lines = membership_lines(r, pool, Strategy::active, 2);
  CHECK(lines.rfind("active\t2\t20\t", 0) == 0);
  CHECK(std::count(lines.begin(), lines.end(), '\n') == 4);
}

TEST_CASE("run_curve input errors") {
  const auto corpus = small_corpus(60, 1);
  std::vector<AnalyzedTweet> pool(corpus.begin(), corpus.begin() + 50);
  std::vector<AnalyzedTweet> test(corpus.begin() + 50, corpus.end());
  const auto lex = feature_preset("lex1");
  CHECK_THROWS_AS(run_curve(pool, test, {{10, 10}, Strategy::random, 1}, quick(), lex), UsageError);
  CHECK_THROWS_AS(run_curve(pool, test, {{10, 51}, Strategy::random, 1}, quick(), lex), DataError);
  CHECK_THROWS_AS(run_curve(pool, {}, {{10, 20}, Strategy::random, 1}, quick(), lex), DataError);
  auto unlabeled = pool;
  unlabeled[3].tweet.label.reset();
  CHECK_THROWS_AS(run_curve(unlabeled, test, {{10, 20}, Strategy::random, 1}, quick(), lex), DataError);
}
