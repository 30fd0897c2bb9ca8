#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace relfilter {

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
  // gold/predicted are 0/1 with 1 the positive (relevant) class.
  void add(int gold, int predicted);
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(std::span<const int> gold, std::span<const int> predicted);

// Undefined ratios are reported as 0 with the matching flag set, so that
// curve points stay totally ordered.
struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

// Throws DataError("empty evaluation") when every count is zero.
Prf prf(const ConfusionCounts& counts);

// Chance-corrected agreement; 1.0 whenever the sequences agree everywhere.
// Labels may be any integers. Throws DataError on empty or unequal input.
double cohen_kappa(std::span<const int> a, std::span<const int> b);
double percent_agreement(std::span<const int> a, std::span<const int> b);

// n items (rows) x k raters (columns), row-major.
class RatingsMatrix {
 public:
  RatingsMatrix(std::size_t items, std::size_t raters, std::vector<double> values);
  static RatingsMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t items() const { return items_; }
  std::size_t raters() const { return raters_; }
  double at(std::size_t item, std::size_t rater) const { return values_[item * raters_ + rater]; }

 private:
  std::size_t items_;
  std::size_t raters_;
  std::vector<double> values_;
};

struct AnovaTable {
  double ms_rows = 0.0;     // between items
  double ms_columns = 0.0;  // between raters
  double ms_error = 0.0;    // residual
};

AnovaTable two_way_anova(const RatingsMatrix& ratings);

// Single-rater, absolute-agreement intraclass correlation:
//   (MSR - MSE) / (MSR + (k - 1) MSE + (k / n)(MSC - MSE))
// Throws DataError("undefined ICC") when items show no variance.
double icc_absolute(const RatingsMatrix& ratings);
inline constexpr const char* kIccFormula = "ICC = (MSR - MSE) / (MSR + (k-1)*MSE + (k/n)*(MSC - MSE))";

// "metric TAB value" lines, in the order given.
std::string metric_lines(const std::vector<std::pair<std::string, double>>& metrics);

}  // namespace relfilter
