// Benchmark comparing the serial reference kernels against the OpenMP
// backend, plus a full encoder train step. Run with --quick for the CI
// smoke sizes.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "ttpc/encoder.hpp"
#include "ttpc/kernels.hpp"
#include "ttpc/rng.hpp"

using namespace ttpc;
namespace k = ttpc::kern;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct BenchResult {
  double serial_s = 0, omp_s = 0;
};

BenchResult time_both(const std::function<void()>& fn, int reps) {
  BenchResult r;
  for (k::Backend b : {k::Backend::Serial, k::Backend::OpenMP}) {
    k::set_backend(b);
    fn();  // warm up
    double t0 = now_seconds();
    for (int i = 0; i < reps; ++i) fn();
    double dt = (now_seconds() - t0) / reps;
    (b == k::Backend::Serial ? r.serial_s : r.omp_s) = dt;
  }
  k::set_backend(k::Backend::OpenMP);
  return r;
}

void report(const char* name, const BenchResult& r, double flops) {
  printf("%-26s serial %9.3f ms  omp %9.3f ms  speedup %5.2fx", name,
         r.serial_s * 1e3, r.omp_s * 1e3, r.serial_s / r.omp_s);
  if (flops > 0)
    printf("  (%6.2f / %6.2f GFLOP/s)", flops / r.serial_s / 1e9,
           flops / r.omp_s / 1e9);
  printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;

  printf("threads available: %d (openmp %s)\n", k::max_threads(),
         k::openmp_compiled() ? "on" : "off");

  Rng rng(123);
  const int m = quick ? 128 : 768;
  const int kk = quick ? 64 : 256;
  const int n = quick ? 64 : 256;
  const int reps = quick ? 3 : 10;

  std::vector<float> a(size_t(m) * kk), b(size_t(kk) * n), c(size_t(m) * n);
  for (auto& x : a) x = float(rng.normal());
  for (auto& x : b) x = float(rng.normal());

  report("matmul", time_both([&] {
           k::matmul(a.data(), b.data(), c.data(), m, kk, n);
         }, reps),
         2.0 * m * kk * n);

  report("matmul_nt", time_both([&] {
           std::vector<float> bt(size_t(n) * kk, 0.5f);
           k::matmul_nt(a.data(), bt.data(), c.data(), m, kk, n);
         }, reps),
         2.0 * m * kk * n);

  report("softmax_rows", time_both([&] {
           std::vector<float> x = a;
           k::softmax_rows(x.data(), m, kk);
         }, reps),
         0);

  report("layer_norm", time_both([&] {
           std::vector<float> gamma(kk, 1.0f), beta(kk, 0.0f);
           std::vector<float> y(a.size()), mean(m), rstd(m);
           k::layer_norm(a.data(), gamma.data(), beta.data(), y.data(),
                         mean.data(), rstd.data(), m, kk);
         }, reps),
         0);

  report("gelu", time_both([&] {
           std::vector<float> y(a.size());
           k::gelu(a.data(), y.data(), int64_t(a.size()));
         }, reps),
         0);

  // end-to-end: one forward+backward step of the miniature encoder
  {
    ArchConfig arch;
    arch.vocab_size = 4000;
    arch.dim = quick ? 32 : 64;
    arch.heads = quick ? 2 : 4;
    arch.layers = quick ? 1 : 2;
    arch.max_positions = 96;
    MiniEncoder model(arch);
    Rng init(7);
    model.init_params(init);

    EncoderBatch batch;
    batch.batch = 8;
    batch.seq = 96;
    batch.ids.resize(size_t(batch.batch) * batch.seq);
    batch.lens.assign(batch.batch, batch.seq);
    for (auto& id : batch.ids) id = int32_t(2 + init.bounded(3990));
    std::vector<float> targets(size_t(batch.batch) * kTacticCount, 0.0f);
    for (int i = 0; i < batch.batch; ++i)
      targets[size_t(i) * kTacticCount + i % kTacticCount] = 1.0f;

    report("encoder train step", time_both([&] {
             model.zero_grads();
             model.forward(batch, targets.data(), true);
             model.backward();
           }, reps),
           0);
  }

  return 0;
}
