#pragma once

// Independent reference solver for the bias-augmented L1-loss SVM, used only
// by tests. It works on the dense dual box QP
//   min_a 0.5 a'Qa - sum(a),  0 <= a_i <= C,  Q_ij = y_i y_j (x_i.x_j + 1)
// with accelerated projected gradient steps, and stops on a certified
// primal-dual gap.

#include <span>
#include <vector>

#include "relfilter/svm.hpp"

namespace relfilter::testing {

struct OracleResult {
  std::vector<double> weights;  // dense, weights[0] is the bias
  double primal = 0.0;
  double dual = 0.0;
  int iterations = 0;
  bool certified = false;  // relative gap reached
};

OracleResult svm_oracle(std::span<const LabeledVector> examples, std::size_t vocab_size, double C,
                        double relative_gap = 1e-6, int max_iterations = 2000000);

// Primal objective 0.5 |w|^2 + C sum hinge with w dense (bias included).
double dense_primal(std::span<const double> w, std::span<const LabeledVector> examples, double C);

}  // namespace relfilter::testing
