#pragma once

#include <cstdint>
#include <vector>

namespace ttpc::kern {

// Dense kernels behind the encoder. Each kernel has one code path; the
// OpenMP backend splits work over independent output elements only, so
// Serial and OpenMP results are bit-identical for any thread count. The
// unit tests assert exact equality between the two backends.
enum class Backend { Serial, OpenMP };

Backend active_backend();
void set_backend(Backend b);  // OpenMP silently degrades to Serial when not compiled in
bool openmp_compiled();
int max_threads();
void set_threads(int n);  // n <= 0 restores the runtime default

// c[m x n] = a[m x k] * b[k x n]
void matmul(const float* a, const float* b, float* c, int m, int k, int n);
// c[m x n] = a[m x k] * b[n x k]^T
void matmul_nt(const float* a, const float* b, float* c, int m, int k, int n);
// c[m x n] = a[r x m]^T * b[r x n]; accumulates into c when acc is true
void matmul_tn(const float* a, const float* b, float* c, int r, int m, int n,
               bool acc);

void add_bias(float* x, const float* bias, int rows, int cols);
// bias_grad[c] = sum over rows of dy[r][c]
void bias_grad(const float* dy, float* db, int rows, int cols);

void add_inplace(float* x, const float* y, int64_t n);   // x += y
void scale_inplace(float* x, float s, int64_t n);        // x *= s
void copy(const float* src, float* dst, int64_t n);
void fill_zero(float* x, int64_t n);

// Row-wise numerically stable softmax, in place.
void softmax_rows(float* x, int rows, int cols);

void gelu(const float* x, float* y, int64_t n);
// dx = dy * gelu'(x)
void gelu_grad(const float* x, const float* dy, float* dx, int64_t n);

void sigmoid(const float* x, float* y, int64_t n);

// Layer norm over each row. mean/rstd are per-row stashes for backward.
void layer_norm(const float* x, const float* gamma, const float* beta,
                float* y, float* mean, float* rstd, int rows, int cols);
void layer_norm_grad(const float* x, const float* gamma, const float* mean,
                     const float* rstd, const float* dy, float* dx,
                     float* dgamma, float* dbeta, int rows, int cols);

// Binary cross-entropy with logits, mean reduction over n elements.
// Fills dlogits with d(mean loss)/dlogit when non-null. The per-element
// losses are summed serially in index order, so the result does not depend
// on the thread count.
double bce_with_logits(const float* logits, const float* targets,
                       float* dlogits, int64_t n);

}  // namespace ttpc::kern
