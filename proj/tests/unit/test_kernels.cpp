#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "relfilter/kernels.hpp"
#include "relfilter/rng.hpp"

using namespace relfilter;

namespace {

struct SparseCase {
  std::vector<double> weights;
  std::vector<std::int32_t> indices;
  std::vector<double> values;
};

SparseCase random_case(Rng& rng, std::size_t dim, std::size_t nnz) {
  SparseCase c;
  c.weights.resize(dim);
  for (double& w : c.weights) w = rng.normal();
  for (std::size_t k = 0; k < dim && c.indices.size() < nnz; ++k) {
    if (rng.bernoulli(static_cast<double>(nnz) / static_cast<double>(dim))) {
      c.indices.push_back(static_cast<std::int32_t>(k));
      c.values.push_back(rng.normal());
    }
  }
  return c;
}

}  // namespace

TEST_CASE("scalar kernels on small inputs") {
  const std::vector<double> w = {0.5, 1.0, 2.0, 4.0};
  const std::vector<std::int32_t> idx = {1, 3};
  CHECK(kernels::scalar::sparse_dot(w, idx) == 5.0);
  const std::vector<double> vals = {2.0, -1.0};
  CHECK(kernels::scalar::sparse_dot(w, idx, vals) == -2.0);
  std::vector<double> acc(4, 0.0);
  kernels::scalar::sparse_axpy(acc, idx, 1.5);
  CHECK(acc == std::vector<double>{0.0, 1.5, 0.0, 1.5});
  kernels::scalar::sparse_axpy(acc, idx, vals, 2.0);
  CHECK(acc == std::vector<double>{0.0, 5.5, 0.0, -0.5});
  CHECK(kernels::scalar::dense_dot(w, w) == 0.25 + 1.0 + 4.0 + 16.0);
  const std::vector<std::int8_t> a = {1, 1, 0, 0, 1, 0};
  const std::vector<std::int8_t> b = {1, 1, 0, 0, 0, 1};
  const auto c = kernels::scalar::count_labels(a, b);
  CHECK(c.n == 6);
  CHECK(c.agree == 4);
  CHECK(c.a_positive == 3);
  CHECK(c.b_positive == 3);
}

TEST_CASE("backend selection") {
  CHECK(kernels::backend_available(kernels::Backend::scalar));
  const auto before = kernels::active_backend();
  kernels::set_backend(kernels::Backend::scalar);
  CHECK(kernels::active_backend() == kernels::Backend::scalar);
  kernels::set_backend(before);
  CHECK(kernels::backend_name(kernels::Backend::avx2) == "avx2");
}

#if defined(RELFILTER_HAVE_AVX2)
TEST_CASE("avx2 kernels match the scalar reference") {
  if (!kernels::backend_available(kernels::Backend::avx2)) {
    MESSAGE("CPU lacks AVX2/FMA; equivalence not exercised");
    return;
  }
  Rng rng(42);
  for (int t = 0; t < 500; ++t) {
    const std::size_t dim = 1 + rng.uniform(300);
    const auto c = random_case(rng, dim, rng.uniform(dim + 1));
    const double s = kernels::scalar::sparse_dot(c.weights, c.indices);
    const double v = kernels::avx2::sparse_dot(c.weights, c.indices);
    CHECK(v == doctest::Approx(s).epsilon(1e-12));
    const double sv = kernels::scalar::sparse_dot(c.weights, c.indices, c.values);
    const double vv = kernels::avx2::sparse_dot(c.weights, c.indices, c.values);
    CHECK(std::fabs(sv - vv) <= 1e-12 * (1.0 + std::fabs(sv)) * static_cast<double>(c.indices.size() + 1));
    const double sd = kernels::scalar::dense_dot(c.weights, c.weights);
    const double vd = kernels::avx2::dense_dot(c.weights, c.weights);
    CHECK(std::fabs(sd - vd) <= 1e-12 * sd);

    std::vector<std::int8_t> a(rng.uniform(200)), b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = static_cast<std::int8_t>(rng.bernoulli(0.5));
      b[i] = static_cast<std::int8_t>(rng.bernoulli(0.5));
    }
    // Integer counts are exact on both paths.
    CHECK(kernels::scalar::count_labels(a, b) == kernels::avx2::count_labels(a, b));
  }
}

TEST_CASE("avx2 sparse_dot is exact on integer-valued weights") {
  if (!kernels::backend_available(kernels::Backend::avx2)) return;
  std::vector<double> w(64);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<double>(i);
  std::vector<std::int32_t> idx;
  for (std::int32_t i = 0; i < 64; i += 3) idx.push_back(i);
  CHECK(kernels::avx2::sparse_dot(w, idx) == kernels::scalar::sparse_dot(w, idx));
}
#endif
