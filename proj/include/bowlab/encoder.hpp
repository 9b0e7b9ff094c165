#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bowlab/adamw.hpp"
#include "bowlab/ops.hpp"
#include "bowlab/textpipe.hpp"

namespace bowlab::model {

using core::Tensor;

struct EncoderConfig {
  int layers = 2;
  int heads = 4;
  int hidden = 64;
  int ffn = 128;
  int vocab = 2000;
  int max_seq_len = 64;
  double dropout = 0.1;
  std::uint64_t seed = 42;

  void validate() const {
    if (layers < 1 || heads < 1 || hidden < 1 || ffn < 1 || vocab < 6 || max_seq_len < 3)
      throw ConfigError("encoder config: all dimensions must be positive (vocab >= 6, max_seq_len >= 3)");
    if (hidden % heads != 0)
      throw ConfigError("encoder config: hidden " + std::to_string(hidden) + " not divisible by heads " +
                        std::to_string(heads));
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("encoder config: dropout must be in [0,1)");
  }
};

inline constexpr double kLayerNormEps = 1e-12;
inline constexpr double kInitStd = 0.02;
inline constexpr double kInitCutoff = 2.0;

template <class T>
struct BlockParams {
  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor<T> ln1_g, ln1_b;
  Tensor<T> w1, b1, w2, b2;
  Tensor<T> ln2_g, ln2_b;
};

// Token/position embeddings are shared with any decoder; the LM head is the
// tied embedding matrix plus a bias, so no separate output projection exists.
template <class T>
struct EncoderParams {
  EncoderConfig cfg;
  Tensor<T> tok_emb;  // [V, d]
  Tensor<T> pos_emb;  // [max_seq_len, d]
  Tensor<T> lm_bias;  // [V]
  std::vector<BlockParams<T>> layers;
};

template <class T>
struct DecoderParams {
  BlockParams<T> block;  // exactly one shallow layer
};

namespace detail {

template <class T>
Tensor<T> normal_init(std::vector<int> shape, Rng& rng) {
  Tensor<T> t = Tensor<T>::zeros(std::move(shape), true);
  for (T& v : t.values()) v = static_cast<T>(rng.trunc_normal(kInitStd, kInitCutoff));
  return t;
}

template <class T>
Tensor<T> zeros_param(std::vector<int> shape) {
  return Tensor<T>::zeros(std::move(shape), true);
}

template <class T>
Tensor<T> ones_param(std::vector<int> shape) {
  Tensor<T> t = Tensor<T>::zeros(std::move(shape), true);
  std::fill(t.values().begin(), t.values().end(), T(1));
  return t;
}

template <class T>
BlockParams<T> init_block(int d, int ffn, Rng& rng) {
  BlockParams<T> b;
  b.wq = normal_init<T>({d, d}, rng);
  b.bq = zeros_param<T>({d});
  b.wk = normal_init<T>({d, d}, rng);
  b.bk = zeros_param<T>({d});
  b.wv = normal_init<T>({d, d}, rng);
  b.bv = zeros_param<T>({d});
  b.wo = normal_init<T>({d, d}, rng);
  b.bo = zeros_param<T>({d});
  b.ln1_g = ones_param<T>({d});
  b.ln1_b = zeros_param<T>({d});
  b.w1 = normal_init<T>({d, ffn}, rng);
  b.b1 = zeros_param<T>({ffn});
  b.w2 = normal_init<T>({ffn, d}, rng);
  b.b2 = zeros_param<T>({d});
  b.ln2_g = ones_param<T>({d});
  b.ln2_b = zeros_param<T>({d});
  return b;
}

template <class T>
void block_named(const std::string& prefix, const BlockParams<T>& b,
                 std::vector<std::pair<std::string, Tensor<T>>>& out) {
  out.emplace_back(prefix + ".wq", b.wq);
  out.emplace_back(prefix + ".bq", b.bq);
  out.emplace_back(prefix + ".wk", b.wk);
  out.emplace_back(prefix + ".bk", b.bk);
  out.emplace_back(prefix + ".wv", b.wv);
  out.emplace_back(prefix + ".bv", b.bv);
  out.emplace_back(prefix + ".wo", b.wo);
  out.emplace_back(prefix + ".bo", b.bo);
  out.emplace_back(prefix + ".ln1_g", b.ln1_g);
  out.emplace_back(prefix + ".ln1_b", b.ln1_b);
  out.emplace_back(prefix + ".w1", b.w1);
  out.emplace_back(prefix + ".b1", b.b1);
  out.emplace_back(prefix + ".w2", b.w2);
  out.emplace_back(prefix + ".b2", b.b2);
  out.emplace_back(prefix + ".ln2_g", b.ln2_g);
  out.emplace_back(prefix + ".ln2_b", b.ln2_b);
}

}  // namespace detail

template <class T>
EncoderParams<T> init_params(const EncoderConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  EncoderParams<T> p;
  p.cfg = cfg;
  p.tok_emb = detail::normal_init<T>({cfg.vocab, cfg.hidden}, rng);
  p.pos_emb = detail::normal_init<T>({cfg.max_seq_len, cfg.hidden}, rng);
  p.lm_bias = detail::zeros_param<T>({cfg.vocab});
  for (int l = 0; l < cfg.layers; ++l) p.layers.push_back(detail::init_block<T>(cfg.hidden, cfg.ffn, rng));
  return p;
}

template <class T>
DecoderParams<T> init_decoder(const EncoderConfig& cfg) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, 0xdecull));
  DecoderParams<T> d;
  d.block = detail::init_block<T>(cfg.hidden, cfg.ffn, rng);
  return d;
}

// Deterministic ordering: shared tensors first, then encoder blocks.
template <class T>
std::vector<std::pair<std::string, Tensor<T>>> named_params(const EncoderParams<T>& p) {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  out.emplace_back("tok_emb", p.tok_emb);
  out.emplace_back("pos_emb", p.pos_emb);
  out.emplace_back("lm_bias", p.lm_bias);
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    detail::block_named("enc.layer" + std::to_string(l), p.layers[l], out);
  return out;
}

template <class T>
std::vector<std::pair<std::string, Tensor<T>>> named_params(const DecoderParams<T>& p) {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  detail::block_named("dec.layer0", p.block, out);
  return out;
}

// Encoder-block weights only, i.e. everything reachable from the decoder loss
// solely through the bottleneck representation.
template <class T>
std::vector<std::pair<std::string, Tensor<T>>> encoder_block_params(const EncoderParams<T>& p) {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    detail::block_named("enc.layer" + std::to_string(l), p.layers[l], out);
  return out;
}

enum class Mode { Train, Eval };

template <class T>
struct EncoderOut {
  Tensor<T> hidden;  // [B*L, d]
  Tensor<T> cls;     // [B, d]
  int batch = 0;
  int len = 0;
};

namespace detail {

// Additive key-side padding mask, expanded per head: 0 for real keys,
// sentinel for PAD keys.
template <class T>
std::shared_ptr<const std::vector<T>> pad_attn_bias(const text::MaskedBatch& mb, int heads) {
  const int B = mb.batch, L = mb.len;
  auto buf = std::make_shared<std::vector<T>>(static_cast<std::size_t>(B) * heads * L * L, T(0));
  const T sentinel = static_cast<T>(kernels::kMaskSentinel);
  for (int b = 0; b < B; ++b) {
    for (int j = 0; j < L; ++j) {
      if (mb.padding_mask[static_cast<std::size_t>(b) * L + j]) continue;
      for (int h = 0; h < heads; ++h) {
        T* slice = buf->data() + ((static_cast<std::size_t>(b) * heads + h) * L) * L;
        for (int i = 0; i < L; ++i) slice[static_cast<std::size_t>(i) * L + j] = sentinel;
      }
    }
  }
  return buf;
}

template <class T>
Tensor<T> apply_dropout(const Tensor<T>& x, Mode mode, double rate, Rng* rng) {
  if (mode != Mode::Train || rate <= 0.0 || rng == nullptr) return x;
  return core::dropout(x, rate, *rng);
}

// One post-layer-norm transformer block over [B*L, d] with an additive
// attention bias of shape [B*H, L, L].
template <class T>
Tensor<T> block_forward(const BlockParams<T>& blk, const Tensor<T>& x, int B, int L, int heads,
                        std::shared_ptr<const std::vector<T>> attn_bias, Mode mode, double drop, Rng* rng) {
  using namespace core;
  const int d = x.dim(1);
  const int dh = d / heads;
  Tensor<T> q = add_bias(matmul(x, blk.wq), blk.bq);
  Tensor<T> k = add_bias(matmul(x, blk.wk), blk.bk);
  Tensor<T> v = add_bias(matmul(x, blk.wv), blk.bv);
  Tensor<T> qh = split_heads(q, B, L, heads);
  Tensor<T> kh = split_heads(k, B, L, heads);
  Tensor<T> vh = split_heads(v, B, L, heads);
  Tensor<T> scores = scale(bmm_nt(qh, kh), static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh))));
  scores = add_const(scores, std::move(attn_bias));
  Tensor<T> weights = row_softmax(scores);
  Tensor<T> ctx = merge_heads(bmm(weights, vh), B, heads);
  Tensor<T> attn_out = apply_dropout(add_bias(matmul(ctx, blk.wo), blk.bo), mode, drop, rng);
  Tensor<T> h1 = layer_norm(add(x, attn_out), blk.ln1_g, blk.ln1_b, static_cast<T>(kLayerNormEps));
  Tensor<T> ff = add_bias(matmul(gelu(add_bias(matmul(h1, blk.w1), blk.b1)), blk.w2), blk.b2);
  ff = apply_dropout(ff, mode, drop, rng);
  return layer_norm(add(h1, ff), blk.ln2_g, blk.ln2_b, static_cast<T>(kLayerNormEps));
}

}  // namespace detail

// Embeds ids + positions and runs the block stack. h_cls is hidden[:, 0, :].
template <class T>
EncoderOut<T> encoder_forward(const EncoderParams<T>& p, const text::MaskedBatch& mb, Mode mode,
                              Rng* rng = nullptr) {
  using namespace core;
  const int B = mb.batch, L = mb.len, d = p.cfg.hidden;
  if (L > p.cfg.max_seq_len)
    throw DataError("encoder_forward: batch length " + std::to_string(L) + " exceeds max_seq_len " +
                    std::to_string(p.cfg.max_seq_len));
  for (const std::int32_t id : mb.input_ids)
    if (id < 0 || id >= p.cfg.vocab)
      throw DataError("encoder_forward: token id " + std::to_string(id) + " out of vocab range [0, " +
                      std::to_string(p.cfg.vocab) + ")");

  std::vector<std::int32_t> pos_idx(static_cast<std::size_t>(B) * L);
  for (int b = 0; b < B; ++b)
    for (int l = 0; l < L; ++l) pos_idx[static_cast<std::size_t>(b) * L + l] = l;

  Tensor<T> x = add(take_rows(p.tok_emb, mb.input_ids), take_rows(p.pos_emb, pos_idx));
  x = detail::apply_dropout(x, mode, p.cfg.dropout, rng);

  auto attn_bias = detail::pad_attn_bias<T>(mb, p.cfg.heads);
  for (const BlockParams<T>& blk : p.layers)
    x = detail::block_forward(blk, x, B, L, p.cfg.heads, attn_bias, mode, p.cfg.dropout, rng);

  std::vector<std::int32_t> starts(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) starts[static_cast<std::size_t>(b)] = b * L;
  EncoderOut<T> out;
  out.hidden = x;
  out.cls = take_rows(x, starts);
  out.batch = B;
  out.len = L;
  (void)d;
  return out;
}

// states . E^T + lm_bias; the projection used by MLM heads, Bag-of-Word
// prediction and the vocabulary-space probe.
template <class T>
Tensor<T> lm_logits(const EncoderParams<T>& p, const Tensor<T>& states) {
  return core::add_bias(core::matmul_nt(states, p.tok_emb), p.lm_bias);
}

template <class T>
Tensor<T> lm_logits_no_bias(const EncoderParams<T>& p, const Tensor<T>& states) {
  return core::matmul_nt(states, p.tok_emb);
}

}  // namespace bowlab::model
