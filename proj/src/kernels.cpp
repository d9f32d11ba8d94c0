#include "ttpc/kernels.hpp"

#include <cmath>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ttpc::kern {

namespace {

#ifdef _OPENMP
Backend g_backend = Backend::OpenMP;
#else
Backend g_backend = Backend::Serial;
#endif

inline bool par() { return g_backend == Backend::OpenMP; }

constexpr double kSqrt2OverPi = 0.7978845608028653558798921198687;
constexpr double kGeluC = 0.044715;

}  // namespace

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
#ifndef _OPENMP
  b = Backend::Serial;
#endif
  g_backend = b;
}

bool openmp_compiled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

void matmul(const float* a, const float* b, float* c, int m, int k, int n) {
#pragma omp parallel for schedule(static) if (par())
  for (int i = 0; i < m; ++i) {
    float* ci = c + int64_t(i) * n;
    const float* ai = a + int64_t(i) * k;
    for (int j = 0; j < n; ++j) ci[j] = 0.0f;
    for (int p = 0; p < k; ++p) {
      const float av = ai[p];
      if (av == 0.0f) continue;
      const float* bp = b + int64_t(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void matmul_nt(const float* a, const float* b, float* c, int m, int k, int n) {
#pragma omp parallel for schedule(static) if (par())
  for (int i = 0; i < m; ++i) {
    const float* ai = a + int64_t(i) * k;
    float* ci = c + int64_t(i) * n;
    for (int j = 0; j < n; ++j) {
      const float* bj = b + int64_t(j) * k;
      float acc = 0.0f;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

void matmul_tn(const float* a, const float* b, float* c, int r, int m, int n,
               bool acc) {
#pragma omp parallel for schedule(static) if (par())
  for (int i = 0; i < m; ++i) {
    float* ci = c + int64_t(i) * n;
    if (!acc)
      for (int j = 0; j < n; ++j) ci[j] = 0.0f;
    for (int p = 0; p < r; ++p) {
      const float av = a[int64_t(p) * m + i];
      if (av == 0.0f) continue;
      const float* bp = b + int64_t(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void add_bias(float* x, const float* bias, int rows, int cols) {
#pragma omp parallel for schedule(static) if (par())
  for (int i = 0; i < rows; ++i) {
    float* xi = x + int64_t(i) * cols;
    for (int j = 0; j < cols; ++j) xi[j] += bias[j];
  }
}

void bias_grad(const float* dy, float* db, int rows, int cols) {
#pragma omp parallel for schedule(static) if (par())
  for (int j = 0; j < cols; ++j) {
    float acc = 0.0f;
    for (int i = 0; i < rows; ++i) acc += dy[int64_t(i) * cols + j];
    db[j] = acc;
  }
}

void add_inplace(float* x, const float* y, int64_t n) {
#pragma omp parallel for schedule(static) if (par())
  for (int64_t i = 0; i < n; ++i) x[i] += y[i];
}

void scale_inplace(float* x, float s, int64_t n) {
#pragma omp parallel for schedule(static) if (par())
  for (int64_t i = 0; i < n; ++i) x[i] *= s;
}

void copy(const float* src, float* dst, int64_t n) {
  std::memcpy(dst, src, size_t(n) * sizeof(float));
}

void fill_zero(float* x, int64_t n) {
  std::memset(x, 0, size_t(n) * sizeof(float));
}

void softmax_rows(float* x, int rows, int cols) {
#pragma omp parallel for schedule(static) if (par())
  for (int i = 0; i < rows; ++i) {
    float* xi = x + int64_t(i) * cols;
    float mx = xi[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, xi[j]);
    float sum = 0.0f;
    for (int j = 0; j < cols; ++j) {
      xi[j] = std::exp(xi[j] - mx);
      sum += xi[j];
    }
    const float inv = 1.0f / sum;
    for (int j = 0; j < cols; ++j) xi[j] *= inv;
  }
}

void gelu(const float* x, float* y, int64_t n) {
#pragma omp parallel for schedule(static) if (par())
  for (int64_t i = 0; i < n; ++i) {
    const double v = x[i];
    const double t = std::tanh(kSqrt2OverPi * (v + kGeluC * v * v * v));
    y[i] = static_cast<float>(0.5 * v * (1.0 + t));
  }
}

void gelu_grad(const float* x, const float* dy, float* dx, int64_t n) {
#pragma omp parallel for schedule(static) if (par())
  for (int64_t i = 0; i < n; ++i) {
    const double v = x[i];
    const double u = kSqrt2OverPi * (v + kGeluC * v * v * v);
    const double t = std::tanh(u);
    const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluC * v * v);
    const double g = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
    dx[i] = static_cast<float>(dy[i] * g);
  }
}

void sigmoid(const float* x, float* y, int64_t n) {
#pragma omp parallel for schedule(static) if (par())
  for (int64_t i = 0; i < n; ++i) {
    const double v = x[i];
    y[i] = static_cast<float>(v >= 0 ? 1.0 / (1.0 + std::exp(-v))
                                     : std::exp(v) / (1.0 + std::exp(v)));
  }
}

void layer_norm(const float* x, const float* gamma, const float* beta,
                float* y, float* mean, float* rstd, int rows, int cols) {
  constexpr float kEps = 1e-5f;
#pragma omp parallel for schedule(static) if (par())
  for (int i = 0; i < rows; ++i) {
    const float* xi = x + int64_t(i) * cols;
    float* yi = y + int64_t(i) * cols;
    float mu = 0.0f;
    for (int j = 0; j < cols; ++j) mu += xi[j];
    mu /= cols;
    float var = 0.0f;
    for (int j = 0; j < cols; ++j) {
      const float d = xi[j] - mu;
      var += d * d;
    }
    var /= cols;
    const float rs = 1.0f / std::sqrt(var + kEps);
    mean[i] = mu;
    rstd[i] = rs;
    for (int j = 0; j < cols; ++j)
      yi[j] = (xi[j] - mu) * rs * gamma[j] + beta[j];
  }
}

void layer_norm_grad(const float* x, const float* gamma, const float* mean,
                     const float* rstd, const float* dy, float* dx,
                     float* dgamma, float* dbeta, int rows, int cols) {
  // dgamma/dbeta: parallel over columns, serial over rows (deterministic).
#pragma omp parallel for schedule(static) if (par())
  for (int j = 0; j < cols; ++j) {
    float dg = 0.0f, db = 0.0f;
    for (int i = 0; i < rows; ++i) {
      const float xhat = (x[int64_t(i) * cols + j] - mean[i]) * rstd[i];
      dg += dy[int64_t(i) * cols + j] * xhat;
      db += dy[int64_t(i) * cols + j];
    }
    dgamma[j] += dg;
    dbeta[j] += db;
  }
#pragma omp parallel for schedule(static) if (par())
  for (int i = 0; i < rows; ++i) {
    const float* xi = x + int64_t(i) * cols;
    const float* dyi = dy + int64_t(i) * cols;
    float* dxi = dx + int64_t(i) * cols;
    const float mu = mean[i], rs = rstd[i];
    float sum_dyg = 0.0f, sum_dyg_xhat = 0.0f;
    for (int j = 0; j < cols; ++j) {
      const float dg = dyi[j] * gamma[j];
      const float xhat = (xi[j] - mu) * rs;
      sum_dyg += dg;
      sum_dyg_xhat += dg * xhat;
    }
    const float inv_cols = 1.0f / cols;
    for (int j = 0; j < cols; ++j) {
      const float dg = dyi[j] * gamma[j];
      const float xhat = (xi[j] - mu) * rs;
      dxi[j] = rs * (dg - inv_cols * (sum_dyg + xhat * sum_dyg_xhat));
    }
  }
}

double bce_with_logits(const float* logits, const float* targets,
                       float* dlogits, int64_t n) {
  std::vector<double> losses(static_cast<size_t>(n));
#pragma omp parallel for schedule(static) if (par())
  for (int64_t i = 0; i < n; ++i) {
    const double z = logits[i];
    const double t = targets[i];
    // max(z,0) - z*t + log(1 + exp(-|z|)) is the stable form.
    losses[i] = std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    if (dlogits) {
      const double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z))
                              : std::exp(z) / (1.0 + std::exp(z));
      dlogits[i] = static_cast<float>((s - t) / double(n));
    }
  }
  double total = 0.0;
  for (int64_t i = 0; i < n; ++i) total += losses[i];  // fixed-order reduce
  return total / double(n);
}

}  // namespace ttpc::kern
