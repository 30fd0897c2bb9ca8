#include <atomic>
#include <cstdlib>
#include <string>

#include "relfilter/kernels.hpp"

namespace relfilter::kernels {

namespace {

Backend detect() {
  if (const char* forced = std::getenv("RELFILTER_SIMD")) {
    if (std::string(forced) == "scalar") return Backend::scalar;
  }
  return backend_available(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

}  // namespace

bool backend_available(Backend backend) {
  switch (backend) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(RELFILTER_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  current().store(backend_available(backend) ? backend : Backend::scalar,
                  std::memory_order_relaxed);
}

std::string_view backend_name(Backend backend) {
  return backend == Backend::avx2 ? "avx2" : "scalar";
}

double sparse_dot(std::span<const double> weights, std::span<const std::int32_t> indices) {
#if defined(RELFILTER_HAVE_AVX2)
  if (active_backend() == Backend::avx2) return avx2::sparse_dot(weights, indices);
#endif
  return scalar::sparse_dot(weights, indices);
}

double sparse_dot(std::span<const double> weights, std::span<const std::int32_t> indices,
                  std::span<const double> values) {
#if defined(RELFILTER_HAVE_AVX2)
  if (active_backend() == Backend::avx2) return avx2::sparse_dot(weights, indices, values);
#endif
  return scalar::sparse_dot(weights, indices, values);
}

// No scatter instruction in AVX2; one implementation serves both backends.
void sparse_axpy(std::span<double> weights, std::span<const std::int32_t> indices, double delta) {
  scalar::sparse_axpy(weights, indices, delta);
}

void sparse_axpy(std::span<double> weights, std::span<const std::int32_t> indices,
                 std::span<const double> values, double delta) {
  scalar::sparse_axpy(weights, indices, values, delta);
}

double dense_dot(std::span<const double> a, std::span<const double> b) {
#if defined(RELFILTER_HAVE_AVX2)
  if (active_backend() == Backend::avx2) return avx2::dense_dot(a, b);
#endif
  return scalar::dense_dot(a, b);
}

LabelCounts count_labels(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
#if defined(RELFILTER_HAVE_AVX2)
  if (active_backend() == Backend::avx2) return avx2::count_labels(a, b);
#endif
  return scalar::count_labels(a, b);
}

}  // namespace relfilter::kernels
