#include "relfilter/kernels.hpp"

namespace relfilter::kernels::scalar {

double sparse_dot(std::span<const double> weights, std::span<const std::int32_t> indices) {
  double sum = 0.0;
  for (std::int32_t idx : indices) sum += weights[static_cast<std::size_t>(idx)];
  return sum;
}

double sparse_dot(std::span<const double> weights, std::span<const std::int32_t> indices,
                  std::span<const double> values) {
  double sum = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) sum += weights[static_cast<std::size_t>(indices[k])] * values[k];
  return sum;
}

void sparse_axpy(std::span<double> weights, std::span<const std::int32_t> indices, double delta) {
  for (std::int32_t idx : indices) weights[static_cast<std::size_t>(idx)] += delta;
}

void sparse_axpy(std::span<double> weights, std::span<const std::int32_t> indices,
                 std::span<const double> values, double delta) {
  for (std::size_t k = 0; k < indices.size(); ++k) weights[static_cast<std::size_t>(indices[k])] += delta * values[k];
}

double dense_dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

LabelCounts count_labels(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
  LabelCounts c;
  c.n = static_cast<std::int64_t>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    c.agree += a[i] == b[i];
    c.a_positive += a[i];
    c.b_positive += b[i];
  }
  return c;
}

}  // namespace relfilter::kernels::scalar
