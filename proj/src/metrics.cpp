#include "relfilter/metrics.hpp"

#include <algorithm>
#include <map>

#include "relfilter/error.hpp"
#include "relfilter/kernels.hpp"
#include "relfilter/text_io.hpp"

namespace relfilter {

void ConfusionCounts::add(int gold, int predicted) {
  if (gold == 1) {
    predicted == 1 ? ++tp : ++fn;
  } else {
    predicted == 1 ? ++fp : ++tn;
  }
}

ConfusionCounts confusion(std::span<const int> gold, std::span<const int> predicted) {
  if (gold.size() != predicted.size()) throw DataError("gold and predicted lengths differ");
  ConfusionCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) c.add(gold[i], predicted[i]);
  return c;
}

Prf prf(const ConfusionCounts& c) {
  if (c.total() == 0) throw DataError("empty evaluation");
  Prf r;
  const auto ratio = [](std::int64_t num, std::int64_t den, bool* undefined) {
    if (den == 0) {
      *undefined = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.precision = ratio(c.tp, c.tp + c.fp, &r.precision_undefined);
  r.recall = ratio(c.tp, c.tp + c.fn, &r.recall_undefined);
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  } else {
    r.f1_undefined = r.precision_undefined || r.recall_undefined;
  }
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  return r;
}

namespace {

void check_pair(std::span<const int> a, std::span<const int> b) {
  if (a.empty()) throw DataError("agreement needs at least one rating");
  if (a.size() != b.size()) throw DataError("rating sequences have different lengths");
}

bool binary(std::span<const int> v) {
  return std::all_of(v.begin(), v.end(), [](int x) { return x == 0 || x == 1; });
}

double kappa_from(double observed, double expected) {
  if (observed == 1.0) return 1.0;
  return (observed - expected) / (1.0 - expected);
}

}  // namespace

double cohen_kappa(std::span<const int> a, std::span<const int> b) {
  check_pair(a, b);
  const double n = static_cast<double>(a.size());
  if (binary(a) && binary(b)) {
    std::vector<std::int8_t> va(a.begin(), a.end());
    std::vector<std::int8_t> vb(b.begin(), b.end());
    const auto c = kernels::count_labels(va, vb);
    const double pa = static_cast<double>(c.a_positive) / n;
    const double pb = static_cast<double>(c.b_positive) / n;
    const double expected = pa * pb + (1.0 - pa) * (1.0 - pb);
    return kappa_from(static_cast<double>(c.agree) / n, expected);
  }
  std::map<int, std::pair<std::int64_t, std::int64_t>> marginals;
  std::int64_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++marginals[a[i]].first;
    ++marginals[b[i]].second;
    agree += a[i] == b[i];
  }
  double expected = 0.0;
  for (const auto& [label, m] : marginals) {
    expected += (static_cast<double>(m.first) / n) * (static_cast<double>(m.second) / n);
  }
  return kappa_from(static_cast<double>(agree) / n, expected);
}

double percent_agreement(std::span<const int> a, std::span<const int> b) {
  check_pair(a, b);
  std::int64_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) agree += a[i] == b[i];
  return static_cast<double>(agree) / static_cast<double>(a.size());
}

RatingsMatrix::RatingsMatrix(std::size_t items, std::size_t raters, std::vector<double> values)
    : items_(items), raters_(raters), values_(std::move(values)) {
  if (items < 2 || raters < 2) throw DataError("ratings matrix needs at least 2 items and 2 raters");
  if (values_.size() != items * raters) throw DataError("ratings matrix has missing cells");
}

RatingsMatrix RatingsMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t k = rows.empty() ? 0 : rows.front().size();
  std::vector<double> values;
  for (const auto& r : rows) {
    if (r.size() != k) throw DataError("ratings matrix has missing cells");
    values.insert(values.end(), r.begin(), r.end());
  }
  return RatingsMatrix(rows.size(), k, std::move(values));
}

AnovaTable two_way_anova(const RatingsMatrix& m) {
  const std::size_t n = m.items();
  const std::size_t k = m.raters();
  std::vector<double> row_mean(n, 0.0);
  std::vector<double> col_mean(k, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      row_mean[i] += m.at(i, j);
      col_mean[j] += m.at(i, j);
      grand += m.at(i, j);
    }
  }
  for (auto& v : row_mean) v /= static_cast<double>(k);
  for (auto& v : col_mean) v /= static_cast<double>(n);
  grand /= static_cast<double>(n * k);

  double ss_rows = 0.0;
  double ss_cols = 0.0;
  double ss_error = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss_rows += (row_mean[i] - grand) * (row_mean[i] - grand);
  for (std::size_t j = 0; j < k; ++j) ss_cols += (col_mean[j] - grand) * (col_mean[j] - grand);
  ss_rows *= static_cast<double>(k);
  ss_cols *= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double r = m.at(i, j) - row_mean[i] - col_mean[j] + grand;
      ss_error += r * r;
    }
  }
  AnovaTable t;
  t.ms_rows = ss_rows / static_cast<double>(n - 1);
  t.ms_columns = ss_cols / static_cast<double>(k - 1);
  t.ms_error = ss_error / static_cast<double>((n - 1) * (k - 1));
  return t;
}

double icc_absolute(const RatingsMatrix& ratings) {
  const auto t = two_way_anova(ratings);
  if (t.ms_rows == 0.0) throw DataError("undefined ICC: items show no variance");
  const double n = static_cast<double>(ratings.items());
  const double k = static_cast<double>(ratings.raters());
  const double den = t.ms_rows + (k - 1.0) * t.ms_error + (k / n) * (t.ms_columns - t.ms_error);
  if (den == 0.0) throw DataError("undefined ICC: zero denominator");
  return (t.ms_rows - t.ms_error) / den;
}

std::string metric_lines(const std::vector<std::pair<std::string, double>>& metrics) {
  std::string out;
  for (const auto& [name, value] : metrics) {
    out += name;
    out += '\t';
    out += format_fixed(value, 6);
    out += '\n';
  }
  return out;
}

}  // namespace relfilter
