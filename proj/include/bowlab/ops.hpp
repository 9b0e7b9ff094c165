#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "bowlab/kernels.hpp"
#include "bowlab/rng.hpp"
#include "bowlab/tensor.hpp"

namespace bowlab::core {

namespace detail {

template <class T>
void check_rank(const Tensor<T>& t, int rank, const char* op) {
  if (t.rank() != rank)
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                     shape_str(t.shape()));
}

template <class T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Matrix products.

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_rank(a, 2, "matmul");
  detail::check_rank(b, 2, "matmul");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  Tensor<T> out = Tensor<T>::zeros({m, n}, false);
  kernels::matmul(a.data(), b.data(), out.data(), m, k, n);
  if (recording<T>({&a, &b})) {
    out.set_requires_grad(true);
    Tensor<T> ca = a, cb = b, co = out;
    Tape<T>::current()->record("matmul", out, [ca, cb, co, m, k, n]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (ca.requires_grad())
        kernels::matmul_nt(co.grad_view().data(), cb.data(), ca.grad().data(), m, n, k, true);
      if (cb.requires_grad())
        kernels::matmul_tn(ca.data(), co.grad_view().data(), cb.grad().data(), k, m, n, true);
    });
  }
  return out;
}

// a [m,k] times b-transposed where b is stored [n,k].
template <class T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_rank(a, 2, "matmul_nt");
  detail::check_rank(b, 2, "matmul_nt");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k)
    throw ShapeError("matmul_nt: inner dimensions disagree, " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  Tensor<T> out = Tensor<T>::zeros({m, n}, false);
  kernels::matmul_nt(a.data(), b.data(), out.data(), m, k, n);
  if (recording<T>({&a, &b})) {
    out.set_requires_grad(true);
    Tensor<T> ca = a, cb = b, co = out;
    Tape<T>::current()->record("matmul_nt", out, [ca, cb, co, m, k, n]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (ca.requires_grad())
        kernels::matmul(co.grad_view().data(), cb.data(), ca.grad().data(), m, n, k, true);
      if (cb.requires_grad())
        kernels::matmul_tn(co.grad_view().data(), ca.data(), cb.grad().data(), n, m, k, true);
    });
  }
  return out;
}

template <class T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_rank(a, 3, "bmm");
  detail::check_rank(b, 3, "bmm");
  const long g = a.dim(0);
  const int m = a.dim(1), k = a.dim(2), n = b.dim(2);
  if (b.dim(0) != g || b.dim(1) != k)
    throw ShapeError("bmm: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor<T> out = Tensor<T>::zeros({static_cast<int>(g), m, n}, false);
  kernels::bmm(a.data(), b.data(), out.data(), g, m, k, n);
  if (recording<T>({&a, &b})) {
    out.set_requires_grad(true);
    Tensor<T> ca = a, cb = b, co = out;
    Tape<T>::current()->record("bmm", out, [ca, cb, co, g, m, k, n]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (ca.requires_grad())
        kernels::bmm_nt(co.grad_view().data(), cb.data(), ca.grad().data(), g, m, n, k, true);
      if (cb.requires_grad())
        kernels::bmm_tn(ca.data(), co.grad_view().data(), cb.grad().data(), g, k, m, n, true);
    });
  }
  return out;
}

// Batched a[g] times b[g]-transposed, b stored [g,n,k].
template <class T>
Tensor<T> bmm_nt(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_rank(a, 3, "bmm_nt");
  detail::check_rank(b, 3, "bmm_nt");
  const long g = a.dim(0);
  const int m = a.dim(1), k = a.dim(2), n = b.dim(1);
  if (b.dim(0) != g || b.dim(2) != k)
    throw ShapeError("bmm_nt: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor<T> out = Tensor<T>::zeros({static_cast<int>(g), m, n}, false);
  kernels::bmm_nt(a.data(), b.data(), out.data(), g, m, k, n);
  if (recording<T>({&a, &b})) {
    out.set_requires_grad(true);
    Tensor<T> ca = a, cb = b, co = out;
    Tape<T>::current()->record("bmm_nt", out, [ca, cb, co, g, m, k, n]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (ca.requires_grad())
        kernels::bmm(co.grad_view().data(), cb.data(), ca.grad().data(), g, m, n, k, true);
      if (cb.requires_grad())
        kernels::bmm_tn(co.grad_view().data(), ca.data(), cb.grad().data(), g, n, m, k, true);
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise and broadcast ops.

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "add");
  Tensor<T> out = Tensor<T>::zeros(a.shape(), false);
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
  if (recording<T>({&a, &b})) {
    out.set_requires_grad(true);
    Tensor<T> ca = a, cb = b, co = out;
    Tape<T>::current()->record("add", out, [ca, cb, co, n]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (ca.requires_grad()) {
        auto g = ca.grad();
        for (std::size_t i = 0; i < n; ++i) g[i] += co.grad_view()[i];
      }
      if (cb.requires_grad()) {
        auto g = cb.grad();
        for (std::size_t i = 0; i < n; ++i) g[i] += co.grad_view()[i];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "mul");
  Tensor<T> out = Tensor<T>::zeros(a.shape(), false);
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
  if (recording<T>({&a, &b})) {
    out.set_requires_grad(true);
    Tensor<T> ca = a, cb = b, co = out;
    Tape<T>::current()->record("mul", out, [ca, cb, co, n]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (ca.requires_grad()) {
        auto g = ca.grad();
        for (std::size_t i = 0; i < n; ++i) g[i] += co.grad_view()[i] * cb.data()[i];
      }
      if (cb.requires_grad()) {
        auto g = cb.grad();
        for (std::size_t i = 0; i < n; ++i) g[i] += co.grad_view()[i] * ca.data()[i];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  Tensor<T> out = Tensor<T>::zeros(a.shape(), false);
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * s;
  if (recording<T>({&a})) {
    out.set_requires_grad(true);
    Tensor<T> ca = a, co = out;
    Tape<T>::current()->record("scale", out, [ca, co, s, n]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (!ca.requires_grad()) return;
      auto g = ca.grad();
      for (std::size_t i = 0; i < n; ++i) g[i] += co.grad_view()[i] * s;
    });
  }
  return out;
}

// x is treated as rows of length |b|; b broadcasts over rows.
template <class T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& b) {
  detail::check_rank(b, 1, "add_bias");
  const int d = b.dim(0);
  if (x.dim(x.rank() - 1) != d)
    throw ShapeError("add_bias: last dim of " + shape_str(x.shape()) + " vs bias " + shape_str(b.shape()));
  const long rows = static_cast<long>(x.numel() / d);
  Tensor<T> out = Tensor<T>::zeros(x.shape(), false);
  for (long r = 0; r < rows; ++r)
    for (int j = 0; j < d; ++j) out.data()[r * d + j] = x.data()[r * d + j] + b.data()[j];
  if (recording<T>({&x, &b})) {
    out.set_requires_grad(true);
    Tensor<T> cx = x, cb = b, co = out;
    Tape<T>::current()->record("add_bias", out, [cx, cb, co, rows, d]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (cx.requires_grad()) {
        auto g = cx.grad();
        const std::size_t n = cx.numel();
        for (std::size_t i = 0; i < n; ++i) g[i] += co.grad_view()[i];
      }
      if (cb.requires_grad()) {
        auto g = cb.grad();
        for (long r = 0; r < rows; ++r)
          for (int j = 0; j < d; ++j) g[j] += co.grad_view()[r * d + j];
      }
    });
  }
  return out;
}

// Adds a constant (non-differentiated) buffer, e.g. an attention mask.
template <class T>
Tensor<T> add_const(const Tensor<T>& x, std::shared_ptr<const std::vector<T>> c) {
  if (x.numel() != c->size())
    throw ShapeError("add_const: tensor numel " + std::to_string(x.numel()) + " vs buffer " +
                     std::to_string(c->size()));
  Tensor<T> out = Tensor<T>::zeros(x.shape(), false);
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = x.data()[i] + (*c)[i];
  if (recording<T>({&x})) {
    out.set_requires_grad(true);
    Tensor<T> cx = x, co = out;
    Tape<T>::current()->record("add_const", out, [cx, co, n]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (!cx.requires_grad()) return;
      auto g = cx.grad();
      for (std::size_t i = 0; i < n; ++i) g[i] += co.grad_view()[i];
    });
  }
  return out;
}

template <class T>
Tensor<T> gelu(const Tensor<T>& x) {
  Tensor<T> out = Tensor<T>::zeros(x.shape(), false);
  kernels::gelu(x.data(), out.data(), x.numel());
  if (recording<T>({&x})) {
    out.set_requires_grad(true);
    Tensor<T> cx = x, co = out;
    Tape<T>::current()->record("gelu", out, [cx, co]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (!cx.requires_grad()) return;
      kernels::gelu_backward(cx.data(), co.grad_view().data(), cx.grad().data(), cx.numel());
    });
  }
  return out;
}

// Inverted dropout; identity when p == 0.
template <class T>
Tensor<T> dropout(const Tensor<T>& x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout rate must be in [0,1), got " + std::to_string(p));
  const std::size_t n = x.numel();
  auto keep = std::make_shared<std::vector<std::uint8_t>>(n);
  for (std::size_t i = 0; i < n; ++i) (*keep)[i] = rng.real01() >= p ? 1 : 0;
  const T s = static_cast<T>(1.0 / (1.0 - p));
  Tensor<T> out = Tensor<T>::zeros(x.shape(), false);
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = (*keep)[i] ? x.data()[i] * s : T(0);
  if (recording<T>({&x})) {
    out.set_requires_grad(true);
    Tensor<T> cx = x, co = out;
    Tape<T>::current()->record("dropout", out, [cx, co, keep, s, n]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (!cx.requires_grad()) return;
      auto g = cx.grad();
      for (std::size_t i = 0; i < n; ++i)
        if ((*keep)[i]) g[i] += co.grad_view()[i] * s;
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization and softmax.

template <class T>
Tensor<T> row_softmax(const Tensor<T>& x) {
  if (x.rank() < 1 || x.dim(x.rank() - 1) < 1) throw ShapeError("row_softmax: empty last dimension");
  const int cols = x.dim(x.rank() - 1);
  const long rows = static_cast<long>(x.numel() / cols);
  Tensor<T> out = Tensor<T>::zeros(x.shape(), false);
  const long degenerate = kernels::softmax_rows(x.data(), out.data(), rows, cols);
  if (degenerate >= 0)
    throw NumericError("degenerate attention row " + std::to_string(degenerate) +
                       " (all entries at mask sentinel)");
  if (recording<T>({&x})) {
    out.set_requires_grad(true);
    Tensor<T> cx = x, co = out;
    Tape<T>::current()->record("row_softmax", out, [cx, co, rows, cols]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (!cx.requires_grad()) return;
      kernels::softmax_backward_rows(co.data(), co.grad_view().data(), cx.grad().data(), rows, cols);
    });
  }
  return out;
}

template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  detail::check_rank(gain, 1, "layer_norm");
  detail::check_rank(bias, 1, "layer_norm");
  const int d = gain.dim(0);
  if (bias.dim(0) != d || x.dim(x.rank() - 1) != d)
    throw ShapeError("layer_norm: dims " + shape_str(x.shape()) + " / gain " + shape_str(gain.shape()) +
                     " / bias " + shape_str(bias.shape()));
  if (d < 2) throw ShapeError("layer_norm: needs last dim >= 2");
  const long rows = static_cast<long>(x.numel() / d);
  Tensor<T> out = Tensor<T>::zeros(x.shape(), false);
  auto mean = std::make_shared<std::vector<T>>(rows);
  auto rstd = std::make_shared<std::vector<T>>(rows);
  kernels::layernorm_rows(x.data(), gain.data(), bias.data(), eps, out.data(), mean->data(), rstd->data(),
                          rows, d);
  if (recording<T>({&x, &gain, &bias})) {
    out.set_requires_grad(true);
    Tensor<T> cx = x, cg = gain, cb = bias, co = out;
    Tape<T>::current()->record("layer_norm", out, [cx, cg, cb, co, mean, rstd, rows, d]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (cx.requires_grad())
        kernels::layernorm_dx_rows(cx.data(), cg.data(), mean->data(), rstd->data(), co.grad_view().data(),
                                   cx.grad().data(), rows, d);
      if (cg.requires_grad()) {
        auto g = cg.grad();
        for (long r = 0; r < rows; ++r)
          for (int j = 0; j < d; ++j)
            g[j] += co.grad_view()[r * d + j] * (cx.data()[r * d + j] - (*mean)[r]) * (*rstd)[r];
      }
      if (cb.requires_grad()) {
        auto g = cb.grad();
        for (long r = 0; r < rows; ++r)
          for (int j = 0; j < d; ++j) g[j] += co.grad_view()[r * d + j];
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structural ops.

template <class T>
Tensor<T> reshape(const Tensor<T>& x, std::vector<int> new_shape) {
  if (Tensor<T>::count(new_shape) != x.numel())
    throw ShapeError("reshape: " + shape_str(x.shape()) + " to " + shape_str(new_shape));
  Tensor<T> out = Tensor<T>::from(std::move(new_shape), {x.values().begin(), x.values().end()}, false);
  if (recording<T>({&x})) {
    out.set_requires_grad(true);
    Tensor<T> cx = x, co = out;
    Tape<T>::current()->record("reshape", out, [cx, co]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (!cx.requires_grad()) return;
      auto g = cx.grad();
      const std::size_t n = cx.numel();
      for (std::size_t i = 0; i < n; ++i) g[i] += co.grad_view()[i];
    });
  }
  return out;
}

// Gathers rows of a [N, d] matrix; also the embedding lookup.
template <class T>
Tensor<T> take_rows(const Tensor<T>& x, std::vector<std::int32_t> rows) {
  detail::check_rank(x, 2, "take_rows");
  const int n = x.dim(0), d = x.dim(1);
  for (std::int32_t r : rows)
    if (r < 0 || r >= n)
      throw DataError("take_rows: row index " + std::to_string(r) + " out of range [0, " + std::to_string(n) +
                      ")");
  const long m = static_cast<long>(rows.size());
  Tensor<T> out = Tensor<T>::zeros({static_cast<int>(m), d}, false);
  auto idx = std::make_shared<std::vector<std::int32_t>>(std::move(rows));
  kernels::gather_rows(x.data(), idx->data(), out.data(), m, d);
  if (recording<T>({&x})) {
    out.set_requires_grad(true);
    Tensor<T> cx = x, co = out;
    Tape<T>::current()->record("take_rows", out, [cx, co, idx, m, d]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (!cx.requires_grad()) return;
      kernels::scatter_add_rows(co.grad_view().data(), idx->data(), cx.grad().data(), m, d);
    });
  }
  return out;
}

// Copy of x with rows[i] overwritten by repl[i]. Row indices must be distinct.
template <class T>
Tensor<T> replace_rows(const Tensor<T>& x, std::vector<std::int32_t> rows, const Tensor<T>& repl) {
  detail::check_rank(x, 2, "replace_rows");
  detail::check_rank(repl, 2, "replace_rows");
  const int n = x.dim(0), d = x.dim(1);
  if (repl.dim(1) != d || repl.dim(0) != static_cast<int>(rows.size()))
    throw ShapeError("replace_rows: repl " + shape_str(repl.shape()) + " vs " + std::to_string(rows.size()) +
                     " rows of width " + std::to_string(d));
  for (std::int32_t r : rows)
    if (r < 0 || r >= n)
      throw DataError("replace_rows: row index " + std::to_string(r) + " out of range [0, " +
                      std::to_string(n) + ")");
  Tensor<T> out = Tensor<T>::from(x.shape(), {x.values().begin(), x.values().end()}, false);
  auto idx = std::make_shared<std::vector<std::int32_t>>(std::move(rows));
  for (std::size_t i = 0; i < idx->size(); ++i)
    std::copy_n(repl.data() + i * d, d, out.data() + static_cast<std::size_t>((*idx)[i]) * d);
  if (recording<T>({&x, &repl})) {
    out.set_requires_grad(true);
    Tensor<T> cx = x, cr = repl, co = out;
    Tape<T>::current()->record("replace_rows", out, [cx, cr, co, idx, d]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (cr.requires_grad()) {
        auto g = cr.grad();
        for (std::size_t i = 0; i < idx->size(); ++i)
          for (int j = 0; j < d; ++j)
            g[i * d + j] += co.grad_view()[static_cast<std::size_t>((*idx)[i]) * d + j];
      }
      if (cx.requires_grad()) {
        auto g = cx.grad();
        std::vector<std::uint8_t> replaced(cx.dim(0), 0);
        for (std::int32_t r : *idx) replaced[static_cast<std::size_t>(r)] = 1;
        for (int r = 0; r < cx.dim(0); ++r) {
          if (replaced[static_cast<std::size_t>(r)]) continue;
          for (int j = 0; j < d; ++j)
            g[static_cast<std::size_t>(r) * d + j] += co.grad_view()[static_cast<std::size_t>(r) * d + j];
        }
      }
    });
  }
  return out;
}

// Rearranges [B*L, d] to [B*H, L, d/H].
template <class T>
Tensor<T> split_heads(const Tensor<T>& x, int batch, int len, int heads) {
  detail::check_rank(x, 2, "split_heads");
  const int d = x.dim(1);
  if (x.dim(0) != batch * len || d % heads != 0)
    throw ShapeError("split_heads: shape " + shape_str(x.shape()) + " with B=" + std::to_string(batch) +
                     " L=" + std::to_string(len) + " H=" + std::to_string(heads));
  const int dh = d / heads;
  Tensor<T> out = Tensor<T>::zeros({batch * heads, len, dh}, false);
  for (int b = 0; b < batch; ++b)
    for (int l = 0; l < len; ++l)
      for (int h = 0; h < heads; ++h)
        std::copy_n(x.data() + (static_cast<std::size_t>(b) * len + l) * d + h * dh, dh,
                    out.data() + ((static_cast<std::size_t>(b) * heads + h) * len + l) * dh);
  if (recording<T>({&x})) {
    out.set_requires_grad(true);
    Tensor<T> cx = x, co = out;
    Tape<T>::current()->record("split_heads", out, [cx, co, batch, len, heads, d, dh]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (!cx.requires_grad()) return;
      auto g = cx.grad();
      for (int b = 0; b < batch; ++b)
        for (int l = 0; l < len; ++l)
          for (int h = 0; h < heads; ++h)
            for (int j = 0; j < dh; ++j)
              g[(static_cast<std::size_t>(b) * len + l) * d + h * dh + j] +=
                  co.grad_view()[((static_cast<std::size_t>(b) * heads + h) * len + l) * dh + j];
    });
  }
  return out;
}

// Inverse of split_heads: [B*H, L, dh] back to [B*L, H*dh].
template <class T>
Tensor<T> merge_heads(const Tensor<T>& x, int batch, int heads) {
  detail::check_rank(x, 3, "merge_heads");
  if (x.dim(0) != batch * heads)
    throw ShapeError("merge_heads: shape " + shape_str(x.shape()) + " with B=" + std::to_string(batch) +
                     " H=" + std::to_string(heads));
  const int len = x.dim(1), dh = x.dim(2), d = heads * dh;
  Tensor<T> out = Tensor<T>::zeros({batch * len, d}, false);
  for (int b = 0; b < batch; ++b)
    for (int h = 0; h < heads; ++h)
      for (int l = 0; l < len; ++l)
        std::copy_n(x.data() + ((static_cast<std::size_t>(b) * heads + h) * len + l) * dh, dh,
                    out.data() + (static_cast<std::size_t>(b) * len + l) * d + h * dh);
  if (recording<T>({&x})) {
    out.set_requires_grad(true);
    Tensor<T> cx = x, co = out;
    Tape<T>::current()->record("merge_heads", out, [cx, co, batch, heads, len, dh, d]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (!cx.requires_grad()) return;
      auto g = cx.grad();
      for (int b = 0; b < batch; ++b)
        for (int h = 0; h < heads; ++h)
          for (int l = 0; l < len; ++l)
            for (int j = 0; j < dh; ++j)
              g[((static_cast<std::size_t>(b) * heads + h) * len + l) * dh + j] +=
                  co.grad_view()[(static_cast<std::size_t>(b) * len + l) * d + h * dh + j];
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reductions and losses.

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
  T s = 0;
  for (const T v : x.values()) s += v;
  Tensor<T> out = Tensor<T>::scalar(s, false);
  if (recording<T>({&x})) {
    out.set_requires_grad(true);
    Tensor<T> cx = x, co = out;
    Tape<T>::current()->record("sum", out, [cx, co]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (!cx.requires_grad()) return;
      const T dy = co.grad_view()[0];
      auto g = cx.grad();
      for (std::size_t i = 0; i < cx.numel(); ++i) g[i] += dy;
    });
  }
  return out;
}

// Mean over non-ignored rows of -log softmax(logits)[target]; target -1 ignores
// the row. Throws when every row is ignored.
template <class T>
Tensor<T> cross_entropy_from_logits(const Tensor<T>& logits, std::vector<std::int32_t> targets) {
  detail::check_rank(logits, 2, "cross_entropy");
  const long rows = logits.dim(0);
  const int cols = logits.dim(1);
  if (static_cast<long>(targets.size()) != rows)
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(rows) + " rows");
  long supervised = 0;
  for (std::int32_t t : targets) {
    if (t >= cols)
      throw DataError("cross_entropy: target id " + std::to_string(t) + " out of range [0, " +
                      std::to_string(cols) + ")");
    if (t >= 0) ++supervised;
  }
  if (supervised == 0) throw DataError("cross_entropy: no supervised positions");
  auto tgt = std::make_shared<std::vector<std::int32_t>>(std::move(targets));
  std::vector<T> row_loss(rows);
  kernels::ce_rows(logits.data(), tgt->data(), row_loss.data(), rows, cols);
  T total = 0;
  for (long r = 0; r < rows; ++r) total += row_loss[r];
  Tensor<T> out = Tensor<T>::scalar(total / static_cast<T>(supervised), false);
  if (recording<T>({&logits})) {
    out.set_requires_grad(true);
    Tensor<T> cl = logits, co = out;
    Tape<T>::current()->record("cross_entropy", out, [cl, co, tgt, rows, cols, supervised]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (!cl.requires_grad()) return;
      const T scale = co.grad_view()[0] / static_cast<T>(supervised);
      kernels::ce_backward_rows(cl.data(), tgt->data(), cl.grad().data(), rows, cols, scale);
    });
  }
  return out;
}

// Multi-label cross entropy with a uniform target over each row's bag:
// per row, lse(logits) - mean(logits[bag]); mean over rows with non-empty bags.
template <class T>
Tensor<T> multilabel_cross_entropy(const Tensor<T>& logits, const std::vector<std::vector<std::int32_t>>& bags) {
  detail::check_rank(logits, 2, "multilabel_cross_entropy");
  const long rows = logits.dim(0);
  const int cols = logits.dim(1);
  if (static_cast<long>(bags.size()) != rows)
    throw ShapeError("multilabel_cross_entropy: " + std::to_string(bags.size()) + " bags for " +
                     std::to_string(rows) + " rows");
  auto ids = std::make_shared<std::vector<std::int32_t>>();
  auto offsets = std::make_shared<std::vector<std::int64_t>>(rows + 1, 0);
  long nonempty = 0;
  for (long r = 0; r < rows; ++r) {
    for (std::int32_t t : bags[static_cast<std::size_t>(r)]) {
      if (t < 0 || t >= cols)
        throw DataError("multilabel_cross_entropy: bag id " + std::to_string(t) + " out of range [0, " +
                        std::to_string(cols) + ")");
      ids->push_back(t);
    }
    (*offsets)[r + 1] = static_cast<std::int64_t>(ids->size());
    if (!bags[static_cast<std::size_t>(r)].empty()) ++nonempty;
  }
  if (nonempty == 0) throw DataError("multilabel_cross_entropy: all bags empty");
  std::vector<T> row_loss(rows);
  kernels::mlce_rows(logits.data(), ids->data(), offsets->data(), row_loss.data(), rows, cols);
  T total = 0;
  for (long r = 0; r < rows; ++r) total += row_loss[r];
  Tensor<T> out = Tensor<T>::scalar(total / static_cast<T>(nonempty), false);
  if (recording<T>({&logits})) {
    out.set_requires_grad(true);
    Tensor<T> cl = logits, co = out;
    Tape<T>::current()->record("multilabel_cross_entropy", out, [cl, co, ids, offsets, rows, cols, nonempty]() mutable {
      if (!co.has_grad()) return;  // no downstream gradient
      if (!cl.requires_grad()) return;
      const T scale = co.grad_view()[0] / static_cast<T>(nonempty);
      kernels::mlce_backward_rows(cl.data(), ids->data(), offsets->data(), cl.grad().data(), rows, cols,
                                  scale);
    });
  }
  return out;
}

}  // namespace bowlab::core
