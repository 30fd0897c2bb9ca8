#pragma once

// How classifier quality depends on |score|: threshold sweeps over the
// retained set, and a logistic regression of per-item correctness on |score|
// with Wald tests.

#include <span>
#include <string>
#include <vector>

#include "relfilter/metrics.hpp"

namespace relfilter {

struct ScoredItem {
  double score = 0.0;
  int gold = 0;       // 0/1
  int predicted = 0;  // 0/1, from classify_score(score)
};

std::vector<ScoredItem> make_scored_items(std::span<const double> scores, std::span<const int> gold);

struct SweepRow {
  double threshold = 0.0;
  std::size_t retained_count = 0;
  double precision = 0.0;
  double recall = 0.0;  // over gold positives among the retained items
  double f1 = 0.0;
  double accuracy = 0.0;
  // Retained true positives over all gold positives, discarded ones included.
  double global_recall = 0.0;
  bool undefined = false;  // nothing retained
};

// One row per threshold T; metrics over items with |score| >= T. The grid
// must be ascending and non-negative.
std::vector<SweepRow> sweep_thresholds(std::span<const ScoredItem> items, std::span<const double> grid);

// 0, 0.1, ..., 1.0, then 1.25, 1.5, 2.0: dense where most scores fall.
std::vector<double> default_grid();

// "threshold TAB retained TAB precision TAB recall TAB f1 TAB accuracy TAB global_recall"
std::string sweep_lines(std::span<const SweepRow> rows);

struct LogisticFit {
  double intercept = 0.0;
  double slope = 0.0;
  double se_intercept = 0.0;
  double se_slope = 0.0;
  bool converged = false;
  int iterations = 0;
  bool separation = false;    // complete or quasi-complete separation
  bool ridge_used = false;    // information matrix was boosted to be invertible
  std::string diagnostics;
};

// Maximum-likelihood fit of P(y = 1) = sigmoid(intercept + slope * x) by
// iteratively reweighted least squares. Standard errors come from the
// inverse information at the estimate.
LogisticFit fit_logistic(std::span<const double> xs, std::span<const int> ys, int max_iterations = 100);

struct WaldResult {
  double z = 0.0;
  double p_two_sided = 1.0;
};

// Throws UsageError unless se > 0.
WaldResult wald_test(double estimate, double se);

// Standard normal CDF and upper tail, from std::erfc.
double normal_cdf(double z);
double normal_upper_tail(double z);

// Correctness regressions on all items, negative scores only, positive
// scores only: a coefficient table per subset.
std::string regression_report(std::span<const ScoredItem> items);

}  // namespace relfilter
