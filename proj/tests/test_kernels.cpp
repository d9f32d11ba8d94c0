#include <doctest.h>

#include <cmath>
#include <vector>

#include "ttpc/kernels.hpp"
#include "ttpc/rng.hpp"

using namespace ttpc;
namespace k = ttpc::kern;

namespace {

std::vector<float> random_vec(Rng& rng, size_t n, double scale = 1.0) {
  std::vector<float> v(n);
  for (auto& x : v) x = float(rng.normal(0.0, scale));
  return v;
}

// Runs fn under both backends and requires bit-identical outputs.
template <typename Fn>
void check_backend_equivalence(Fn&& fn) {
  k::set_backend(k::Backend::Serial);
  auto serial = fn();
  k::set_backend(k::Backend::OpenMP);
  auto parallel = fn();
  k::set_backend(k::Backend::OpenMP);
  REQUIRE(serial.size() == parallel.size());
  for (size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i] == parallel[i]);  // exact: same arithmetic, split work
  }
}

}  // namespace

TEST_CASE("matmul matches a naive reference") {
  Rng rng(7);
  const int m = 5, kk = 7, n = 3;
  auto a = random_vec(rng, m * kk), b = random_vec(rng, kk * n);
  std::vector<float> c(m * n);
  k::matmul(a.data(), b.data(), c.data(), m, kk, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      float ref = 0;
      for (int p = 0; p < kk; ++p) ref += a[i * kk + p] * b[p * n + j];
      CHECK(c[i * n + j] == doctest::Approx(ref).epsilon(1e-5));
    }
}

TEST_CASE("matmul_nt and matmul_tn match transposed references") {
  Rng rng(8);
  const int m = 4, kk = 6, n = 5;
  auto a = random_vec(rng, m * kk), b = random_vec(rng, n * kk);
  std::vector<float> c(m * n);
  k::matmul_nt(a.data(), b.data(), c.data(), m, kk, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      float ref = 0;
      for (int p = 0; p < kk; ++p) ref += a[i * kk + p] * b[j * kk + p];
      CHECK(c[i * n + j] == doctest::Approx(ref).epsilon(1e-5));
    }

  const int r = 6;
  auto x = random_vec(rng, r * m), y = random_vec(rng, r * n);
  std::vector<float> z(m * n, 1.0f);
  k::matmul_tn(x.data(), y.data(), z.data(), r, m, n, /*acc=*/true);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      float ref = 1.0f;
      for (int p = 0; p < r; ++p) ref += x[p * m + i] * y[p * n + j];
      CHECK(z[i * n + j] == doctest::Approx(ref).epsilon(1e-5));
    }
}

TEST_CASE("softmax rows are normalized and stable") {
  std::vector<float> x = {1e4f, 1e4f, 0.0f, -1e4f, 1.0f, 2.0f, 3.0f, 4.0f};
  k::softmax_rows(x.data(), 2, 4);
  for (int r = 0; r < 2; ++r) {
    float sum = 0;
    for (int c = 0; c < 4; ++c) {
      CHECK(std::isfinite(x[r * 4 + c]));
      sum += x[r * 4 + c];
    }
    CHECK(sum == doctest::Approx(1.0f));
  }
  CHECK(x[0] == doctest::Approx(0.5f));
  CHECK(x[3] == doctest::Approx(0.0f));
}

TEST_CASE("bce_with_logits value and gradient") {
  // logit 0 against target 1: loss = log 2, dL/dz = (0.5 - 1)/n
  std::vector<float> logits = {0.0f, 2.0f};
  std::vector<float> targets = {1.0f, 0.0f};
  std::vector<float> grad(2);
  double loss = k::bce_with_logits(logits.data(), targets.data(), grad.data(), 2);
  const double l0 = std::log(2.0);
  const double l1 = 2.0 + std::log1p(std::exp(-2.0));
  CHECK(loss == doctest::Approx((l0 + l1) / 2.0));
  CHECK(grad[0] == doctest::Approx((0.5 - 1.0) / 2.0));
  CHECK(grad[1] == doctest::Approx((1.0 / (1.0 + std::exp(-2.0))) / 2.0));
}

TEST_CASE("layer_norm forward matches reference and backward sums to zero") {
  Rng rng(9);
  const int rows = 3, cols = 8;
  auto x = random_vec(rng, rows * cols);
  std::vector<float> gamma(cols, 1.0f), beta(cols, 0.0f);
  std::vector<float> y(rows * cols), mean(rows), rstd(rows);
  k::layer_norm(x.data(), gamma.data(), beta.data(), y.data(), mean.data(),
                rstd.data(), rows, cols);
  for (int r = 0; r < rows; ++r) {
    float mu = 0;
    for (int c = 0; c < cols; ++c) mu += y[r * cols + c];
    CHECK(mu / cols == doctest::Approx(0.0f).epsilon(1e-4));
  }

  // gradient wrt x of a row-mean-invariant function must sum to ~0 per row
  auto dy = random_vec(rng, rows * cols);
  std::vector<float> dx(rows * cols), dgamma(cols, 0.0f), dbeta(cols, 0.0f);
  k::layer_norm_grad(x.data(), gamma.data(), mean.data(), rstd.data(),
                     dy.data(), dx.data(), dgamma.data(), dbeta.data(), rows,
                     cols);
  for (int r = 0; r < rows; ++r) {
    float s = 0;
    for (int c = 0; c < cols; ++c) s += dx[r * cols + c];
    CHECK(s == doctest::Approx(0.0f).epsilon(1e-3));
  }
}

TEST_CASE("OpenMP backend is bit-identical to the serial reference") {
  Rng rng(10);
  const int m = 33, kk = 17, n = 29;
  auto a = random_vec(rng, m * kk), b = random_vec(rng, kk * n);
  auto bt = random_vec(rng, n * kk);

  check_backend_equivalence([&] {
    std::vector<float> c(m * n);
    k::matmul(a.data(), b.data(), c.data(), m, kk, n);
    return c;
  });
  check_backend_equivalence([&] {
    std::vector<float> c(m * n);
    k::matmul_nt(a.data(), bt.data(), c.data(), m, kk, n);
    return c;
  });
  check_backend_equivalence([&] {
    std::vector<float> x = a;
    k::softmax_rows(x.data(), m, kk);
    return x;
  });
  check_backend_equivalence([&] {
    std::vector<float> y(a.size());
    k::gelu(a.data(), y.data(), int64_t(a.size()));
    return y;
  });
  check_backend_equivalence([&] {
    std::vector<float> gamma(kk, 1.0f), beta(kk, 0.5f);
    std::vector<float> y(m * kk), mean(m), rstd(m);
    k::layer_norm(a.data(), gamma.data(), beta.data(), y.data(), mean.data(),
                  rstd.data(), m, kk);
    return y;
  });
  check_backend_equivalence([&] {
    std::vector<float> targets(a.size());
    for (size_t i = 0; i < targets.size(); ++i) targets[i] = float(i % 2);
    std::vector<float> grad(a.size());
    double loss =
        k::bce_with_logits(a.data(), targets.data(), grad.data(), int64_t(a.size()));
    grad.push_back(float(loss));
    return grad;
  });
}

TEST_CASE("backend switch reports compiled support") {
  if (k::openmp_compiled()) {
    k::set_backend(k::Backend::OpenMP);
    CHECK(k::active_backend() == k::Backend::OpenMP);
  } else {
    k::set_backend(k::Backend::OpenMP);
    CHECK(k::active_backend() == k::Backend::Serial);
  }
  k::set_backend(k::Backend::OpenMP);
}
