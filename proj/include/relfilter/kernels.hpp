#pragma once

// Numeric inner loops shared by training, scoring and the metrics code.
//
// Every kernel has a scalar reference implementation and, on x86-64 builds,
// an AVX2 variant. The variant is chosen once at first use from the CPU's
// feature bits; RELFILTER_SIMD=scalar in the environment, or set_backend(),
// forces the reference path. Integer kernels are bit-identical across
// backends. Floating-point reductions differ only in summation order.

#include <cstdint>
#include <span>
#include <string_view>

namespace relfilter::kernels {

enum class Backend { scalar, avx2 };

// Agreement counts between two binary (0/1) label sequences.
struct LabelCounts {
  std::int64_t n = 0;
  std::int64_t agree = 0;
  std::int64_t a_positive = 0;
  std::int64_t b_positive = 0;

  friend bool operator==(const LabelCounts&, const LabelCounts&) = default;
};

// sum_k weights[indices[k]]: dot product of a dense weight vector with a
// sparse binary vector.
double sparse_dot(std::span<const double> weights, std::span<const std::int32_t> indices);

// sum_k weights[indices[k]] * values[k]: the same for a real-valued sparse
// vector.
double sparse_dot(std::span<const double> weights, std::span<const std::int32_t> indices,
                  std::span<const double> values);

// weights[indices[k]] += delta (times values[k] in the valued form) for every
// k. Indices must be distinct.
void sparse_axpy(std::span<double> weights, std::span<const std::int32_t> indices, double delta);
void sparse_axpy(std::span<double> weights, std::span<const std::int32_t> indices,
                 std::span<const double> values, double delta);

double dense_dot(std::span<const double> a, std::span<const double> b);

// a and b must be equal length and hold only 0 or 1.
LabelCounts count_labels(std::span<const std::int8_t> a, std::span<const std::int8_t> b);

Backend active_backend();
void set_backend(Backend backend);
bool backend_available(Backend backend);
std::string_view backend_name(Backend backend);

namespace scalar {
double sparse_dot(std::span<const double> weights, std::span<const std::int32_t> indices);
double sparse_dot(std::span<const double> weights, std::span<const std::int32_t> indices,
                  std::span<const double> values);
void sparse_axpy(std::span<double> weights, std::span<const std::int32_t> indices, double delta);
void sparse_axpy(std::span<double> weights, std::span<const std::int32_t> indices,
                 std::span<const double> values, double delta);
double dense_dot(std::span<const double> a, std::span<const double> b);
LabelCounts count_labels(std::span<const std::int8_t> a, std::span<const std::int8_t> b);
}  // namespace scalar

#if defined(RELFILTER_HAVE_AVX2)
namespace avx2 {
double sparse_dot(std::span<const double> weights, std::span<const std::int32_t> indices);
double sparse_dot(std::span<const double> weights, std::span<const std::int32_t> indices,
                  std::span<const double> values);
double dense_dot(std::span<const double> a, std::span<const double> b);
LabelCounts count_labels(std::span<const std::int8_t> a, std::span<const std::int8_t> b);
}  // namespace avx2
#endif

}  // namespace relfilter::kernels
