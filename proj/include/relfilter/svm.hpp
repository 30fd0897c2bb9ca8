#pragma once

// Linear soft-margin classifier trained with hinge loss.
//
// The bias is learned as the weight of a constant feature with value 1, so
// the problem solved is
//
//   min  1/2 (|w|^2 + b^2) + C * sum_i max(0, 1 - y_i (w . x_i + b))
//
// by dual coordinate descent. score() returns the raw decision value
// w . x + b; it is not divided by |w|. Ranking by |score| is the same either
// way for a fixed model, which is all uncertainty sampling and threshold
// filtering need.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relfilter/features.hpp"

namespace relfilter {

struct LabeledVector {
  FeatureVector x;
  int y = 1;  // -1 or +1
};

struct TrainConfig {
  // Unset means 1 / mean(|x|^2) over the training set.
  std::optional<double> C;
  // Bound on the spread of projected dual gradients at termination.
  double tolerance = 1e-3;
  int max_epochs = 1000;
  std::uint64_t seed = 1;

  void validate() const;
};

// Ties (score == 0) go to the relevant class so that borderline items are
// surfaced, not hidden.
constexpr int classify_score(double score) { return score >= 0.0 ? 1 : -1; }

class LinearModel {
 public:
  LinearModel() : weights_(1, 0.0) {}
  LinearModel(std::vector<double> weights, double bias);  // weights[i] for feature i + 1

  static LinearModel zeros(std::size_t vocab_size);

  std::size_t vocab_size() const { return weights_.size() - 1; }
  double bias() const { return weights_[0]; }
  // Weight of feature index (1-based).
  double weight(std::int32_t index) const { return weights_.at(static_cast<std::size_t>(index)); }
  // Augmented vector: element 0 is the bias, element i the weight of feature i.
  std::span<const double> augmented() const { return weights_; }

  // w . x + b. Throws UsageError for an index outside 1..vocab_size().
  double score(const FeatureVector& x) const;
  int classify(const FeatureVector& x) const { return classify_score(score(x)); }
  bool is_finite() const;

  // "bias <real>" then "index TAB real" for each nonzero weight, ascending.
  std::string serialize() const;
  static LinearModel parse(std::string_view text, std::size_t vocab_size);
  static LinearModel load(const std::filesystem::path& path, std::size_t vocab_size);

  friend bool operator==(const LinearModel&, const LinearModel&) = default;

 private:
  std::vector<double> weights_;
};

struct TrainResult {
  LinearModel model;
  double C = 0.0;
  int epochs = 0;
  bool converged = false;
  // Dual objective after each epoch; non-increasing.
  std::vector<double> dual_objective;
};

double default_C(std::span<const LabeledVector> examples);

// Throws DataError on single-class input, out-of-range or unsorted indices,
// or non-finite weights.
TrainResult train(std::span<const LabeledVector> examples, std::size_t vocab_size,
                  const TrainConfig& config);

// Primal objective of the problem above.
double objective(const LinearModel& model, std::span<const LabeledVector> examples, double C);

}  // namespace relfilter
