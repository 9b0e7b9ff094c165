// Compares the serial reference kernels against the OpenMP versions on the
// shapes the training loop actually uses, and checks they agree bit-for-bit.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "bowlab/kernels.hpp"
#include "bowlab/rng.hpp"

using namespace bowlab;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() / reps;
}

std::vector<float> random_vec(std::size_t n, Rng& rng) {
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(rng.normal());
  return v;
}

void report(const char* name, double serial_ms, double par_ms, bool identical) {
  std::printf("%-24s serial %9.3f ms   openmp %9.3f ms   speedup %5.2fx   %s\n", name, serial_ms, par_ms,
              serial_ms / par_ms, identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int reps = 5;
  if (argc > 1) reps = std::max(1, std::atoi(argv[1]));
  std::printf("threads: %d, reps: %d\n", kernels::max_threads(), reps);
  Rng rng(7);

  {
    const int m = 1024, k = 256, n = 512;
    const auto a = random_vec(static_cast<std::size_t>(m) * k, rng);
    const auto b = random_vec(static_cast<std::size_t>(k) * n, rng);
    std::vector<float> cs(static_cast<std::size_t>(m) * n), cp(cs.size());
    const double ts = time_ms([&] { kernels::serial::matmul(a.data(), b.data(), cs.data(), m, k, n); }, reps);
    const double tp = time_ms([&] { kernels::par::matmul(a.data(), b.data(), cp.data(), m, k, n); }, reps);
    report("matmul 1024x256x512", ts, tp, std::memcmp(cs.data(), cp.data(), cs.size() * 4) == 0);
  }
  {
    const int m = 2048, k = 64, n = 2000;
    const auto a = random_vec(static_cast<std::size_t>(m) * k, rng);
    const auto b = random_vec(static_cast<std::size_t>(n) * k, rng);
    std::vector<float> cs(static_cast<std::size_t>(m) * n), cp(cs.size());
    const double ts =
        time_ms([&] { kernels::serial::matmul_nt(a.data(), b.data(), cs.data(), m, k, n); }, reps);
    const double tp = time_ms([&] { kernels::par::matmul_nt(a.data(), b.data(), cp.data(), m, k, n); }, reps);
    report("lm-head 2048x64x2000", ts, tp, std::memcmp(cs.data(), cp.data(), cs.size() * 4) == 0);
  }
  {
    const long rows = 8192;
    const int cols = 64;
    const auto x = random_vec(static_cast<std::size_t>(rows) * cols, rng);
    std::vector<float> ys(x.size()), yp(x.size());
    const double ts = time_ms([&] { kernels::serial::softmax_rows(x.data(), ys.data(), rows, cols); }, reps);
    const double tp = time_ms([&] { kernels::par::softmax_rows(x.data(), yp.data(), rows, cols); }, reps);
    report("softmax 8192x64", ts, tp, std::memcmp(ys.data(), yp.data(), ys.size() * 4) == 0);
  }
  {
    const long rows = 8192;
    const int cols = 64;
    const auto x = random_vec(static_cast<std::size_t>(rows) * cols, rng);
    const auto g = random_vec(cols, rng);
    const auto b = random_vec(cols, rng);
    std::vector<float> ys(x.size()), yp(x.size()), mean(rows), rstd(rows);
    const double ts = time_ms(
        [&] {
          kernels::serial::layernorm_rows(x.data(), g.data(), b.data(), 1e-12f, ys.data(), mean.data(),
                                          rstd.data(), rows, cols);
        },
        reps);
    const double tp = time_ms(
        [&] {
          kernels::par::layernorm_rows(x.data(), g.data(), b.data(), 1e-12f, yp.data(), mean.data(),
                                       rstd.data(), rows, cols);
        },
        reps);
    report("layernorm 8192x64", ts, tp, std::memcmp(ys.data(), yp.data(), ys.size() * 4) == 0);
  }
  {
    const std::size_t n = 1u << 22;
    const auto x = random_vec(n, rng);
    std::vector<float> ys(n), yp(n);
    const double ts = time_ms([&] { kernels::serial::gelu(x.data(), ys.data(), n); }, reps);
    const double tp = time_ms([&] { kernels::par::gelu(x.data(), yp.data(), n); }, reps);
    report("gelu 4M", ts, tp, std::memcmp(ys.data(), yp.data(), n * 4) == 0);
  }
  return 0;
}
