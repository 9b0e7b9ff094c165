#pragma once

// Dense inner-loop kernels. Every kernel exists twice: kernels::serial:: is
// the reference implementation, kernels::par:: adds OpenMP over the
// independent outer dimension. Both drive the same noinline per-row helpers,
// so outputs are bit-identical regardless of thread count (each output
// element is accumulated in a fixed order). The dispatching entry points at
// namespace scope pick par:: when it is enabled and the work is large enough
// to pay for a fork/join.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#if defined(__GNUC__) || defined(__clang__)
#define BOWLAB_NOINLINE __attribute__((noinline))
#else
#define BOWLAB_NOINLINE
#endif

namespace bowlab::kernels {

inline bool& parallel_flag() {
  static bool on = true;
  return on;
}
inline bool parallel_enabled() {
#ifdef _OPENMP
  return parallel_flag();
#else
  return false;
#endif
}
inline void set_parallel(bool on) { parallel_flag() = on; }

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Attention logits at or below this value are treated as -inf.
inline constexpr double kMaskSentinel = -1e9;
inline constexpr double kDegenerateRowMax = -1e8;

// Minimum flop-ish count before a parallel region is worth opening.
inline constexpr std::size_t kParGrain = 16 * 1024;

namespace detail {

template <class T>
BOWLAB_NOINLINE void matmul_row(const T* a_row, const T* b, T* c_row, int k, int n, bool acc) {
  if (!acc) std::fill(c_row, c_row + n, T(0));
  for (int kk = 0; kk < k; ++kk) {
    const T av = a_row[kk];
    const T* b_row = b + static_cast<std::size_t>(kk) * n;
    for (int j = 0; j < n; ++j) c_row[j] += av * b_row[j];
  }
}

// c_row[j] = dot(a_row, b[j,:]) with b stored [n x k].
template <class T>
BOWLAB_NOINLINE void matmul_nt_row(const T* a_row, const T* b, T* c_row, int k, int n, bool acc) {
  for (int j = 0; j < n; ++j) {
    const T* b_row = b + static_cast<std::size_t>(j) * k;
    T s = 0;
    for (int kk = 0; kk < k; ++kk) s += a_row[kk] * b_row[kk];
    c_row[j] = acc ? c_row[j] + s : s;
  }
}

// c_row[j] = sum_kk a[kk,i] * b[kk,j] for output row i, a stored [k x m].
template <class T>
BOWLAB_NOINLINE void matmul_tn_row(const T* a, const T* b, T* c_row, int i, int k, int m, int n, bool acc) {
  if (!acc) std::fill(c_row, c_row + n, T(0));
  for (int kk = 0; kk < k; ++kk) {
    const T av = a[static_cast<std::size_t>(kk) * m + i];
    const T* b_row = b + static_cast<std::size_t>(kk) * n;
    for (int j = 0; j < n; ++j) c_row[j] += av * b_row[j];
  }
}

// Returns false when the row is degenerate (max <= kDegenerateRowMax).
template <class T>
BOWLAB_NOINLINE bool softmax_row(const T* x, T* y, int cols) {
  T mx = x[0];
  for (int j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
  if (static_cast<double>(mx) <= kDegenerateRowMax) return false;
  T sum = 0;
  for (int j = 0; j < cols; ++j) {
    const T e = std::exp(x[j] - mx);
    y[j] = e;
    sum += e;
  }
  const T inv = T(1) / sum;
  for (int j = 0; j < cols; ++j) y[j] *= inv;
  return true;
}

// dx += y * (dy - dot(y, dy))
template <class T>
BOWLAB_NOINLINE void softmax_backward_row(const T* y, const T* dy, T* dx, int cols) {
  T dot = 0;
  for (int j = 0; j < cols; ++j) dot += y[j] * dy[j];
  for (int j = 0; j < cols; ++j) dx[j] += y[j] * (dy[j] - dot);
}

template <class T>
BOWLAB_NOINLINE void layernorm_row(const T* x, const T* gain, const T* bias, T eps, T* y, T* mean_out,
                                   T* rstd_out, int cols) {
  T m = 0;
  for (int j = 0; j < cols; ++j) m += x[j];
  m /= static_cast<T>(cols);
  T v = 0;
  for (int j = 0; j < cols; ++j) {
    const T d = x[j] - m;
    v += d * d;
  }
  v /= static_cast<T>(cols);
  const T rstd = T(1) / std::sqrt(v + eps);
  for (int j = 0; j < cols; ++j) y[j] = (x[j] - m) * rstd * gain[j] + bias[j];
  *mean_out = m;
  *rstd_out = rstd;
}

template <class T>
BOWLAB_NOINLINE void layernorm_dx_row(const T* x, const T* gain, T mean, T rstd, const T* dy, T* dx,
                                      int cols) {
  T dnorm_mean = 0, dnorm_norm_mean = 0;
  for (int j = 0; j < cols; ++j) {
    const T norm = (x[j] - mean) * rstd;
    const T dnorm = gain[j] * dy[j];
    dnorm_mean += dnorm;
    dnorm_norm_mean += dnorm * norm;
  }
  dnorm_mean /= static_cast<T>(cols);
  dnorm_norm_mean /= static_cast<T>(cols);
  for (int j = 0; j < cols; ++j) {
    const T norm = (x[j] - mean) * rstd;
    const T dnorm = gain[j] * dy[j];
    dx[j] += (dnorm - dnorm_mean - norm * dnorm_norm_mean) * rstd;
  }
}

template <class T>
BOWLAB_NOINLINE void gelu_span(const T* x, T* y, std::size_t n) {
  constexpr double inv_sqrt2 = 0.7071067811865475244;
  for (std::size_t i = 0; i < n; ++i)
    y[i] = T(0.5) * x[i] * (T(1) + static_cast<T>(std::erf(static_cast<double>(x[i]) * inv_sqrt2)));
}

template <class T>
BOWLAB_NOINLINE void gelu_backward_span(const T* x, const T* dy, T* dx, std::size_t n) {
  constexpr double inv_sqrt2 = 0.7071067811865475244;
  constexpr double inv_sqrt2pi = 0.3989422804014326779;
  for (std::size_t i = 0; i < n; ++i) {
    const double xv = static_cast<double>(x[i]);
    const double cdf = 0.5 * (1.0 + std::erf(xv * inv_sqrt2));
    const double pdf = inv_sqrt2pi * std::exp(-0.5 * xv * xv);
    dx[i] += dy[i] * static_cast<T>(cdf + xv * pdf);
  }
}

// Mean-subtracted log-sum-exp cross entropy for one row; returns the loss and
// leaves softmax probabilities in prob (may alias nothing).
template <class T>
BOWLAB_NOINLINE T ce_row_loss(const T* logits, int cols, int target) {
  T mx = logits[0];
  for (int j = 1; j < cols; ++j) mx = std::max(mx, logits[j]);
  T sum = 0;
  for (int j = 0; j < cols; ++j) sum += std::exp(logits[j] - mx);
  const T lse = mx + std::log(sum);
  return lse - logits[target];
}

// dlogits_row += scale * (softmax(logits) - onehot(target))
template <class T>
BOWLAB_NOINLINE void ce_backward_row(const T* logits, T* dlogits, int cols, int target, T scale) {
  T mx = logits[0];
  for (int j = 1; j < cols; ++j) mx = std::max(mx, logits[j]);
  T sum = 0;
  for (int j = 0; j < cols; ++j) sum += std::exp(logits[j] - mx);
  const T inv = T(1) / sum;
  for (int j = 0; j < cols; ++j) dlogits[j] += scale * std::exp(logits[j] - mx) * inv;
  dlogits[target] -= scale;
}

// Multi-label row: loss = lse(logits) - mean(logits[bag]).
template <class T>
BOWLAB_NOINLINE T mlce_row_loss(const T* logits, int cols, const std::int32_t* bag, int bag_size) {
  T mx = logits[0];
  for (int j = 1; j < cols; ++j) mx = std::max(mx, logits[j]);
  T sum = 0;
  for (int j = 0; j < cols; ++j) sum += std::exp(logits[j] - mx);
  const T lse = mx + std::log(sum);
  T tgt = 0;
  for (int b = 0; b < bag_size; ++b) tgt += logits[bag[b]];
  return lse - tgt / static_cast<T>(bag_size);
}

template <class T>
BOWLAB_NOINLINE void mlce_backward_row(const T* logits, T* dlogits, int cols, const std::int32_t* bag,
                                       int bag_size, T scale) {
  T mx = logits[0];
  for (int j = 1; j < cols; ++j) mx = std::max(mx, logits[j]);
  T sum = 0;
  for (int j = 0; j < cols; ++j) sum += std::exp(logits[j] - mx);
  const T inv = T(1) / sum;
  for (int j = 0; j < cols; ++j) dlogits[j] += scale * std::exp(logits[j] - mx) * inv;
  const T w = scale / static_cast<T>(bag_size);
  for (int b = 0; b < bag_size; ++b) dlogits[bag[b]] -= w;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Reference implementations.

namespace serial {

template <class T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n, bool acc = false) {
  for (int i = 0; i < m; ++i)
    detail::matmul_row(a + static_cast<std::size_t>(i) * k, b, c + static_cast<std::size_t>(i) * n, k, n, acc);
}

template <class T>
void matmul_nt(const T* a, const T* b, T* c, int m, int k, int n, bool acc = false) {
  for (int i = 0; i < m; ++i)
    detail::matmul_nt_row(a + static_cast<std::size_t>(i) * k, b, c + static_cast<std::size_t>(i) * n, k, n, acc);
}

template <class T>
void matmul_tn(const T* a, const T* b, T* c, int m, int k, int n, bool acc = false) {
  for (int i = 0; i < m; ++i) detail::matmul_tn_row(a, b, c + static_cast<std::size_t>(i) * n, i, k, m, n, acc);
}

// Returns index of the first degenerate row, or -1.
template <class T>
long softmax_rows(const T* x, T* y, long rows, int cols) {
  for (long r = 0; r < rows; ++r)
    if (!detail::softmax_row(x + r * cols, y + r * cols, cols)) return r;
  return -1;
}

template <class T>
void softmax_backward_rows(const T* y, const T* dy, T* dx, long rows, int cols) {
  for (long r = 0; r < rows; ++r)
    detail::softmax_backward_row(y + r * cols, dy + r * cols, dx + r * cols, cols);
}

template <class T>
void layernorm_rows(const T* x, const T* gain, const T* bias, T eps, T* y, T* mean, T* rstd, long rows,
                    int cols) {
  for (long r = 0; r < rows; ++r)
    detail::layernorm_row(x + r * cols, gain, bias, eps, y + r * cols, mean + r, rstd + r, cols);
}

template <class T>
void layernorm_dx_rows(const T* x, const T* gain, const T* mean, const T* rstd, const T* dy, T* dx,
                       long rows, int cols) {
  for (long r = 0; r < rows; ++r)
    detail::layernorm_dx_row(x + r * cols, gain, mean[r], rstd[r], dy + r * cols, dx + r * cols, cols);
}

template <class T>
void gelu(const T* x, T* y, std::size_t n) {
  detail::gelu_span(x, y, n);
}

template <class T>
void gelu_backward(const T* x, const T* dy, T* dx, std::size_t n) {
  detail::gelu_backward_span(x, dy, dx, n);
}

template <class T>
void gather_rows(const T* src, const std::int32_t* idx, T* dst, long rows, int cols) {
  for (long r = 0; r < rows; ++r)
    std::copy_n(src + static_cast<std::size_t>(idx[r]) * cols, cols, dst + r * cols);
}

template <class T>
void bmm(const T* a, const T* b, T* c, long g, int m, int k, int n, bool acc = false) {
  for (long gg = 0; gg < g; ++gg)
    matmul(a + gg * static_cast<std::size_t>(m) * k, b + gg * static_cast<std::size_t>(k) * n,
           c + gg * static_cast<std::size_t>(m) * n, m, k, n, acc);
}

template <class T>
void bmm_nt(const T* a, const T* b, T* c, long g, int m, int k, int n, bool acc = false) {
  for (long gg = 0; gg < g; ++gg)
    matmul_nt(a + gg * static_cast<std::size_t>(m) * k, b + gg * static_cast<std::size_t>(n) * k,
              c + gg * static_cast<std::size_t>(m) * n, m, k, n, acc);
}

template <class T>
void bmm_tn(const T* a, const T* b, T* c, long g, int m, int k, int n, bool acc = false) {
  for (long gg = 0; gg < g; ++gg)
    matmul_tn(a + gg * static_cast<std::size_t>(k) * m, b + gg * static_cast<std::size_t>(k) * n,
              c + gg * static_cast<std::size_t>(m) * n, m, k, n, acc);
}

// targets: -1 marks an ignored row (its loss entry is set to 0).
template <class T>
void ce_rows(const T* logits, const std::int32_t* targets, T* row_loss, long rows, int cols) {
  for (long r = 0; r < rows; ++r)
    row_loss[r] = targets[r] < 0 ? T(0) : detail::ce_row_loss(logits + r * cols, cols, targets[r]);
}

template <class T>
void ce_backward_rows(const T* logits, const std::int32_t* targets, T* dlogits, long rows, int cols,
                      T scale) {
  for (long r = 0; r < rows; ++r)
    if (targets[r] >= 0) detail::ce_backward_row(logits + r * cols, dlogits + r * cols, cols, targets[r], scale);
}

// Bags flattened as [offsets[r], offsets[r+1]) into ids; empty bags skipped.
template <class T>
void mlce_rows(const T* logits, const std::int32_t* ids, const std::int64_t* offsets, T* row_loss,
               long rows, int cols) {
  for (long r = 0; r < rows; ++r) {
    const int sz = static_cast<int>(offsets[r + 1] - offsets[r]);
    row_loss[r] = sz == 0 ? T(0) : detail::mlce_row_loss(logits + r * cols, cols, ids + offsets[r], sz);
  }
}

template <class T>
void mlce_backward_rows(const T* logits, const std::int32_t* ids, const std::int64_t* offsets,
                        T* dlogits, long rows, int cols, T scale) {
  for (long r = 0; r < rows; ++r) {
    const int sz = static_cast<int>(offsets[r + 1] - offsets[r]);
    if (sz > 0) detail::mlce_backward_row(logits + r * cols, dlogits + r * cols, cols, ids + offsets[r], sz, scale);
  }
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP versions: same row helpers, parallel outer loop.

namespace par {

template <class T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n, bool acc = false) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i)
    detail::matmul_row(a + static_cast<std::size_t>(i) * k, b, c + static_cast<std::size_t>(i) * n, k, n, acc);
}

template <class T>
void matmul_nt(const T* a, const T* b, T* c, int m, int k, int n, bool acc = false) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i)
    detail::matmul_nt_row(a + static_cast<std::size_t>(i) * k, b, c + static_cast<std::size_t>(i) * n, k, n, acc);
}

template <class T>
void matmul_tn(const T* a, const T* b, T* c, int m, int k, int n, bool acc = false) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) detail::matmul_tn_row(a, b, c + static_cast<std::size_t>(i) * n, i, k, m, n, acc);
}

template <class T>
long softmax_rows(const T* x, T* y, long rows, int cols) {
  std::atomic<long> degenerate{-1};
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r) {
    if (!detail::softmax_row(x + r * cols, y + r * cols, cols)) {
      long cur = degenerate.load();
      while ((cur == -1 || r < cur) && !degenerate.compare_exchange_weak(cur, r)) {
      }
    }
  }
  return degenerate.load();
}

template <class T>
void softmax_backward_rows(const T* y, const T* dy, T* dx, long rows, int cols) {
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r)
    detail::softmax_backward_row(y + r * cols, dy + r * cols, dx + r * cols, cols);
}

template <class T>
void layernorm_rows(const T* x, const T* gain, const T* bias, T eps, T* y, T* mean, T* rstd, long rows,
                    int cols) {
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r)
    detail::layernorm_row(x + r * cols, gain, bias, eps, y + r * cols, mean + r, rstd + r, cols);
}

template <class T>
void layernorm_dx_rows(const T* x, const T* gain, const T* mean, const T* rstd, const T* dy, T* dx,
                       long rows, int cols) {
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r)
    detail::layernorm_dx_row(x + r * cols, gain, mean[r], rstd[r], dy + r * cols, dx + r * cols, cols);
}

template <class T>
void gelu(const T* x, T* y, std::size_t n) {
  const long chunks = max_threads();
  const std::size_t per = (n + chunks - 1) / chunks;
#pragma omp parallel for schedule(static)
  for (long c = 0; c < chunks; ++c) {
    const std::size_t lo = c * per;
    if (lo < n) detail::gelu_span(x + lo, y + lo, std::min(per, n - lo));
  }
}

template <class T>
void gelu_backward(const T* x, const T* dy, T* dx, std::size_t n) {
  const long chunks = max_threads();
  const std::size_t per = (n + chunks - 1) / chunks;
#pragma omp parallel for schedule(static)
  for (long c = 0; c < chunks; ++c) {
    const std::size_t lo = c * per;
    if (lo < n) detail::gelu_backward_span(x + lo, dy + lo, dx + lo, std::min(per, n - lo));
  }
}

template <class T>
void gather_rows(const T* src, const std::int32_t* idx, T* dst, long rows, int cols) {
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r)
    std::copy_n(src + static_cast<std::size_t>(idx[r]) * cols, cols, dst + r * cols);
}

template <class T>
void bmm(const T* a, const T* b, T* c, long g, int m, int k, int n, bool acc = false) {
#pragma omp parallel for schedule(static)
  for (long gg = 0; gg < g; ++gg)
    serial::matmul(a + gg * static_cast<std::size_t>(m) * k, b + gg * static_cast<std::size_t>(k) * n,
                   c + gg * static_cast<std::size_t>(m) * n, m, k, n, acc);
}

template <class T>
void bmm_nt(const T* a, const T* b, T* c, long g, int m, int k, int n, bool acc = false) {
#pragma omp parallel for schedule(static)
  for (long gg = 0; gg < g; ++gg)
    serial::matmul_nt(a + gg * static_cast<std::size_t>(m) * k, b + gg * static_cast<std::size_t>(n) * k,
                      c + gg * static_cast<std::size_t>(m) * n, m, k, n, acc);
}

template <class T>
void bmm_tn(const T* a, const T* b, T* c, long g, int m, int k, int n, bool acc = false) {
#pragma omp parallel for schedule(static)
  for (long gg = 0; gg < g; ++gg)
    serial::matmul_tn(a + gg * static_cast<std::size_t>(k) * m, b + gg * static_cast<std::size_t>(k) * n,
                      c + gg * static_cast<std::size_t>(m) * n, m, k, n, acc);
}

template <class T>
void ce_rows(const T* logits, const std::int32_t* targets, T* row_loss, long rows, int cols) {
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r)
    row_loss[r] = targets[r] < 0 ? T(0) : detail::ce_row_loss(logits + r * cols, cols, targets[r]);
}

template <class T>
void ce_backward_rows(const T* logits, const std::int32_t* targets, T* dlogits, long rows, int cols,
                      T scale) {
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r)
    if (targets[r] >= 0) detail::ce_backward_row(logits + r * cols, dlogits + r * cols, cols, targets[r], scale);
}

template <class T>
void mlce_rows(const T* logits, const std::int32_t* ids, const std::int64_t* offsets, T* row_loss,
               long rows, int cols) {
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r) {
    const int sz = static_cast<int>(offsets[r + 1] - offsets[r]);
    row_loss[r] = sz == 0 ? T(0) : detail::mlce_row_loss(logits + r * cols, cols, ids + offsets[r], sz);
  }
}

template <class T>
void mlce_backward_rows(const T* logits, const std::int32_t* ids, const std::int64_t* offsets,
                        T* dlogits, long rows, int cols, T scale) {
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r) {
    const int sz = static_cast<int>(offsets[r + 1] - offsets[r]);
    if (sz > 0) detail::mlce_backward_row(logits + r * cols, dlogits + r * cols, cols, ids + offsets[r], sz, scale);
  }
}

}  // namespace par

// ---------------------------------------------------------------------------
// Dispatchers.

template <class T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n, bool acc = false) {
  if (parallel_enabled() && static_cast<std::size_t>(m) * k * n >= kParGrain)
    par::matmul(a, b, c, m, k, n, acc);
  else
    serial::matmul(a, b, c, m, k, n, acc);
}

template <class T>
void matmul_nt(const T* a, const T* b, T* c, int m, int k, int n, bool acc = false) {
  if (parallel_enabled() && static_cast<std::size_t>(m) * k * n >= kParGrain)
    par::matmul_nt(a, b, c, m, k, n, acc);
  else
    serial::matmul_nt(a, b, c, m, k, n, acc);
}

template <class T>
void matmul_tn(const T* a, const T* b, T* c, int m, int k, int n, bool acc = false) {
  if (parallel_enabled() && static_cast<std::size_t>(m) * k * n >= kParGrain)
    par::matmul_tn(a, b, c, m, k, n, acc);
  else
    serial::matmul_tn(a, b, c, m, k, n, acc);
}

template <class T>
long softmax_rows(const T* x, T* y, long rows, int cols) {
  if (parallel_enabled() && static_cast<std::size_t>(rows) * cols >= kParGrain)
    return par::softmax_rows(x, y, rows, cols);
  return serial::softmax_rows(x, y, rows, cols);
}

template <class T>
void softmax_backward_rows(const T* y, const T* dy, T* dx, long rows, int cols) {
  if (parallel_enabled() && static_cast<std::size_t>(rows) * cols >= kParGrain)
    par::softmax_backward_rows(y, dy, dx, rows, cols);
  else
    serial::softmax_backward_rows(y, dy, dx, rows, cols);
}

template <class T>
void layernorm_rows(const T* x, const T* gain, const T* bias, T eps, T* y, T* mean, T* rstd, long rows,
                    int cols) {
  if (parallel_enabled() && static_cast<std::size_t>(rows) * cols >= kParGrain)
    par::layernorm_rows(x, gain, bias, eps, y, mean, rstd, rows, cols);
  else
    serial::layernorm_rows(x, gain, bias, eps, y, mean, rstd, rows, cols);
}

template <class T>
void layernorm_dx_rows(const T* x, const T* gain, const T* mean, const T* rstd, const T* dy, T* dx,
                       long rows, int cols) {
  if (parallel_enabled() && static_cast<std::size_t>(rows) * cols >= kParGrain)
    par::layernorm_dx_rows(x, gain, mean, rstd, dy, dx, rows, cols);
  else
    serial::layernorm_dx_rows(x, gain, mean, rstd, dy, dx, rows, cols);
}

template <class T>
void gelu(const T* x, T* y, std::size_t n) {
  if (parallel_enabled() && n >= kParGrain)
    par::gelu(x, y, n);
  else
    serial::gelu(x, y, n);
}

template <class T>
void gelu_backward(const T* x, const T* dy, T* dx, std::size_t n) {
  if (parallel_enabled() && n >= kParGrain)
    par::gelu_backward(x, dy, dx, n);
  else
    serial::gelu_backward(x, dy, dx, n);
}

template <class T>
void gather_rows(const T* src, const std::int32_t* idx, T* dst, long rows, int cols) {
  if (parallel_enabled() && static_cast<std::size_t>(rows) * cols >= kParGrain)
    par::gather_rows(src, idx, dst, rows, cols);
  else
    serial::gather_rows(src, idx, dst, rows, cols);
}

template <class T>
void bmm(const T* a, const T* b, T* c, long g, int m, int k, int n, bool acc = false) {
  if (parallel_enabled() && static_cast<std::size_t>(g) * m * k * n >= kParGrain && g > 1)
    par::bmm(a, b, c, g, m, k, n, acc);
  else
    serial::bmm(a, b, c, g, m, k, n, acc);
}

template <class T>
void bmm_nt(const T* a, const T* b, T* c, long g, int m, int k, int n, bool acc = false) {
  if (parallel_enabled() && static_cast<std::size_t>(g) * m * k * n >= kParGrain && g > 1)
    par::bmm_nt(a, b, c, g, m, k, n, acc);
  else
    serial::bmm_nt(a, b, c, g, m, k, n, acc);
}

template <class T>
void bmm_tn(const T* a, const T* b, T* c, long g, int m, int k, int n, bool acc = false) {
  if (parallel_enabled() && static_cast<std::size_t>(g) * m * k * n >= kParGrain && g > 1)
    par::bmm_tn(a, b, c, g, m, k, n, acc);
  else
    serial::bmm_tn(a, b, c, g, m, k, n, acc);
}

template <class T>
void ce_rows(const T* logits, const std::int32_t* targets, T* row_loss, long rows, int cols) {
  if (parallel_enabled() && static_cast<std::size_t>(rows) * cols >= kParGrain)
    par::ce_rows(logits, targets, row_loss, rows, cols);
  else
    serial::ce_rows(logits, targets, row_loss, rows, cols);
}

template <class T>
void ce_backward_rows(const T* logits, const std::int32_t* targets, T* dlogits, long rows, int cols,
                      T scale) {
  if (parallel_enabled() && static_cast<std::size_t>(rows) * cols >= kParGrain)
    par::ce_backward_rows(logits, targets, dlogits, rows, cols, scale);
  else
    serial::ce_backward_rows(logits, targets, dlogits, rows, cols, scale);
}

template <class T>
void mlce_rows(const T* logits, const std::int32_t* ids, const std::int64_t* offsets, T* row_loss,
               long rows, int cols) {
  if (parallel_enabled() && static_cast<std::size_t>(rows) * cols >= kParGrain)
    par::mlce_rows(logits, ids, offsets, row_loss, rows, cols);
  else
    serial::mlce_rows(logits, ids, offsets, row_loss, rows, cols);
}

template <class T>
void mlce_backward_rows(const T* logits, const std::int32_t* ids, const std::int64_t* offsets,
                        T* dlogits, long rows, int cols, T scale) {
  if (parallel_enabled() && static_cast<std::size_t>(rows) * cols >= kParGrain)
    par::mlce_backward_rows(logits, ids, offsets, dlogits, rows, cols, scale);
  else
    serial::mlce_backward_rows(logits, ids, offsets, dlogits, rows, cols, scale);
}

// Scatter-add has write collisions (repeated indices), so it stays serial.
template <class T>
void scatter_add_rows(const T* rows_src, const std::int32_t* idx, T* dst, long rows, int cols) {
  for (long r = 0; r < rows; ++r) {
    T* d = dst + static_cast<std::size_t>(idx[r]) * cols;
    const T* s = rows_src + r * cols;
    for (int j = 0; j < cols; ++j) d[j] += s[j];
  }
}

}  // namespace bowlab::kernels
