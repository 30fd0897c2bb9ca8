#include "relfilter/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "relfilter/error.hpp"
#include "relfilter/kernels.hpp"
#include "relfilter/svm.hpp"
#include "relfilter/text_io.hpp"

namespace relfilter {

std::vector<ScoredItem> make_scored_items(std::span<const double> scores, std::span<const int> gold) {
  if (scores.size() != gold.size()) throw DataError("scores and gold labels differ in length");
  std::vector<ScoredItem> items;
  items.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    items.push_back({scores[i], gold[i], classify_score(scores[i]) > 0 ? 1 : 0});
  }
  return items;
}

std::vector<SweepRow> sweep_thresholds(std::span<const ScoredItem> items, std::span<const double> grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0)) throw UsageError("thresholds must be non-negative");
    if (i && grid[i] < grid[i - 1]) throw UsageError("threshold grid must be ascending");
  }
  std::int64_t global_positives = 0;
  for (const auto& it : items) global_positives += it.gold == 1;

  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (double t : grid) {
    ConfusionCounts c;
    for (const auto& it : items) {
      if (std::fabs(it.score) >= t) c.add(it.gold, it.predicted);
    }
    SweepRow row;
    row.threshold = t;
    row.retained_count = static_cast<std::size_t>(c.total());
    if (c.total() == 0) {
      row.undefined = true;
      row.precision = row.recall = row.f1 = row.accuracy = std::nan("");
      row.global_recall = global_positives ? 0.0 : std::nan("");
    } else {
      const Prf m = prf(c);
      row.precision = m.precision;
      row.recall = m.recall;
      row.f1 = m.f1;
      row.accuracy = m.accuracy;
      row.global_recall = global_positives
                              ? static_cast<double>(c.tp) / static_cast<double>(global_positives)
                              : std::nan("");
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> default_grid() {
  return {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.25, 1.5, 2.0};
}

std::string sweep_lines(std::span<const SweepRow> rows) {
  std::string out;
  for (const auto& r : rows) {
    out += format_fixed(r.threshold, 2) + '\t' + std::to_string(r.retained_count) + '\t' +
           format_fixed(r.precision) + '\t' + format_fixed(r.recall) + '\t' + format_fixed(r.f1) + '\t' +
           format_fixed(r.accuracy) + '\t' + format_fixed(r.global_recall) + '\n';
  }
  return out;
}

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

WaldResult wald_test(double estimate, double se) {
  if (!(se > 0.0)) throw UsageError("standard error must be positive");
  WaldResult r;
  r.z = estimate / se;
  // 2 * (1 - Phi(|z|)) without cancellation in the tail.
  r.p_two_sided = std::min(1.0, std::erfc(std::fabs(r.z) / std::numbers::sqrt2));
  return r;
}

namespace {

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// Sorting by x, the classes are (quasi-)completely separated when one class
// never lies above the other.
bool separated(std::span<const double> xs, std::span<const int> ys, bool* quasi) {
  double max0 = -INFINITY, min0 = INFINITY, max1 = -INFINITY, min1 = INFINITY;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (ys[i]) {
      max1 = std::max(max1, xs[i]);
      min1 = std::min(min1, xs[i]);
    } else {
      max0 = std::max(max0, xs[i]);
      min0 = std::min(min0, xs[i]);
    }
  }
  if (max0 < min1 || max1 < min0) {
    *quasi = false;
    return true;
  }
  if (max0 == min1 || max1 == min0) {
    // Touching at one x value separates the classes only if x is not
    // constant (a constant x leaves the slope unidentified instead).
    *quasi = !(min0 == max0 && min1 == max1 && min0 == min1);
    return *quasi;
  }
  return false;
}

}  // namespace

LogisticFit fit_logistic(std::span<const double> xs, std::span<const int> ys, int max_iterations) {
  if (xs.size() != ys.size()) throw UsageError("xs and ys differ in length");
  if (xs.size() < 2) throw UsageError("logistic regression needs at least 2 points");
  for (int y : ys) {
    if (y != 0 && y != 1) throw UsageError("responses must be 0 or 1");
  }
  LogisticFit fit;
  const auto n = xs.size();
  std::int64_t ones = 0;
  for (int y : ys) ones += y;
  if (ones == 0 || ones == static_cast<std::int64_t>(n)) {
    fit.separation = true;
    fit.diagnostics = "constant response: no finite maximum-likelihood estimate";
    return fit;
  }
  bool quasi = false;
  if (separated(xs, ys, &quasi)) {
    fit.separation = true;
    fit.diagnostics = quasi ? "quasi-complete separation: estimates diverge"
                            : "complete separation: estimates diverge";
    return fit;
  }

  std::vector<double> x(xs.begin(), xs.end());
  std::vector<double> w(n), wx(n), resid(n);
  double a = 0.0;
  double b = 0.0;
  double info[3] = {0, 0, 0};  // [sum w, sum w x, sum w x^2]

  auto information = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(a + b * x[i]);
      w[i] = p * (1.0 - p);
      wx[i] = w[i] * x[i];
      resid[i] = ys[i] - p;
    }
    double sw = 0.0;
    for (double v : w) sw += v;
    info[0] = sw;
    info[1] = kernels::dense_dot(w, x);
    info[2] = kernels::dense_dot(wx, x);
  };

  auto solve = [&](double g0, double g1, double* d0, double* d1) {
    double i00 = info[0], i01 = info[1], i11 = info[2];
    double det = i00 * i11 - i01 * i01;
    const double scale = std::max(i00, i11);
    if (!(det > 1e-12 * scale * scale)) {
      const double ridge = 1e-8 * std::max(scale, 1.0);
      i00 += ridge;
      i11 += ridge;
      det = i00 * i11 - i01 * i01;
      fit.ridge_used = true;
    }
    *d0 = (i11 * g0 - i01 * g1) / det;
    *d1 = (-i01 * g0 + i00 * g1) / det;
  };

  for (int it = 0; it < max_iterations; ++it) {
    information();
    double g0 = 0.0;
    for (double r : resid) g0 += r;
    const double g1 = kernels::dense_dot(resid, x);
    double d0 = 0.0, d1 = 0.0;
    solve(g0, g1, &d0, &d1);
    a += d0;
    b += d1;
    fit.iterations = it + 1;
    if (!std::isfinite(a) || !std::isfinite(b)) {
      fit.diagnostics = "non-finite estimate during IRLS";
      return fit;
    }
    if (std::fabs(d0) <= 1e-10 * (1.0 + std::fabs(a)) && std::fabs(d1) <= 1e-10 * (1.0 + std::fabs(b))) {
      fit.converged = true;
      break;
    }
  }
  information();
  double d0 = 0.0, d1 = 0.0;
  // Inverse information diagonal: solve against unit vectors.
  double inv00 = 0.0, inv11 = 0.0;
  solve(1.0, 0.0, &inv00, &d1);
  solve(0.0, 1.0, &d0, &inv11);
  fit.intercept = a;
  fit.slope = b;
  fit.se_intercept = std::sqrt(inv00);
  fit.se_slope = std::sqrt(inv11);
  if (!fit.converged) {
    fit.diagnostics = "iteration cap reached";
  } else if (fit.ridge_used) {
    fit.diagnostics = "information matrix near singular; ridge boost applied";
  }
  return fit;
}

std::string regression_report(std::span<const ScoredItem> items) {
  std::ostringstream out;
  out << "subset\tcoefficient\testimate\tse\tz\tp\tn\tconverged\tdiagnostics\n";
  auto section = [&](const char* name, auto keep) {
    std::vector<double> xs;
    std::vector<int> ys;
    for (const auto& it : items) {
      if (!keep(it)) continue;
      xs.push_back(std::fabs(it.score));
      ys.push_back(it.gold == it.predicted ? 1 : 0);
    }
    if (xs.size() < 2) {
      out << name << "\t-\tNA\tNA\tNA\tNA\t" << xs.size() << "\t0\ttoo few items\n";
      return;
    }
    const LogisticFit fit = fit_logistic(xs, ys);
    const bool usable = fit.converged && !fit.separation;
    auto row = [&](const char* coef, double est, double se) {
      out << name << '\t' << coef << '\t';
      if (usable && se > 0.0) {
        const auto w = wald_test(est, se);
        char p[32];
        std::snprintf(p, sizeof p, "%.3e", w.p_two_sided);
        out << format_fixed(est) << '\t' << format_fixed(se) << '\t' << format_fixed(w.z, 3) << '\t' << p;
      } else {
        out << "NA\tNA\tNA\tNA";
      }
      out << '\t' << xs.size() << '\t' << (fit.converged ? 1 : 0) << '\t'
          << (fit.diagnostics.empty() ? "-" : fit.diagnostics) << '\n';
    };
    row("intercept", fit.intercept, fit.se_intercept);
    row("slope", fit.slope, fit.se_slope);
  };
  section("all", [](const ScoredItem&) { return true; });
  section("negative", [](const ScoredItem& it) { return it.score < 0.0; });
  section("positive", [](const ScoredItem& it) { return it.score >= 0.0; });
  return out.str();
}

}  // namespace relfilter
