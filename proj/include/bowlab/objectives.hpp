#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bowlab/encoder.hpp"

namespace bowlab::objectives {

using core::Tensor;
using model::DecoderParams;
using model::EncoderParams;
using model::Mode;
using text::MaskedBatch;

enum class Objective { FurtherPretrain, AutoEncoding, AutoRegression, EnhancedDecoding, Bow };

inline const char* objective_name(Objective o) {
  switch (o) {
    case Objective::FurtherPretrain: return "further_pretrain";
    case Objective::AutoEncoding: return "auto_encoding";
    case Objective::AutoRegression: return "auto_regression";
    case Objective::EnhancedDecoding: return "enhanced_decoding";
    case Objective::Bow: return "bow";
  }
  return "?";
}

inline Objective parse_objective(const std::string& s) {
  if (s == "further_pretrain") return Objective::FurtherPretrain;
  if (s == "auto_encoding") return Objective::AutoEncoding;
  if (s == "auto_regression") return Objective::AutoRegression;
  if (s == "enhanced_decoding") return Objective::EnhancedDecoding;
  if (s == "bow") return Objective::Bow;
  throw ConfigError("unknown objective \"" + s +
                    "\" (expected further_pretrain|auto_encoding|auto_regression|enhanced_decoding|bow)");
}

inline bool needs_decoder(Objective o) {
  return o == Objective::AutoEncoding || o == Objective::AutoRegression ||
         o == Objective::EnhancedDecoding;
}

// ---------------------------------------------------------------------------
// Encoder MLM loss.

// Cross entropy at the labelled positions of an already-computed hidden state.
template <class T>
Tensor<T> mlm_loss_from_hidden(const EncoderParams<T>& p, const Tensor<T>& hidden, const MaskedBatch& mb) {
  std::vector<std::int32_t> positions;
  std::vector<std::int32_t> targets;
  const std::size_t total = mb.input_ids.size();
  for (std::size_t i = 0; i < total; ++i) {
    if (mb.mlm_labels[i] < 0) continue;
    positions.push_back(static_cast<std::int32_t>(i));
    targets.push_back(mb.mlm_labels[i]);
  }
  if (positions.empty()) throw DataError("mlm_loss: zero masked positions in whole batch");
  Tensor<T> states = core::take_rows(hidden, std::move(positions));
  return core::cross_entropy_from_logits(model::lm_logits(p, states), std::move(targets));
}

template <class T>
Tensor<T> mlm_loss(const EncoderParams<T>& p, const MaskedBatch& mb, Mode mode = Mode::Train,
                   Rng* rng = nullptr) {
  return mlm_loss_from_hidden(p, model::encoder_forward(p, mb, mode, rng).hidden, mb);
}

// ---------------------------------------------------------------------------
// Decoder input assembly shared by the auto-encoding and auto-regressive
// decoders: token+position embeddings with each sequence's position-0
// embedding replaced by the encoder representation.

namespace detail {

template <class T>
Tensor<T> decoder_input(const EncoderParams<T>& p, const MaskedBatch& mb, const Tensor<T>& h_cls) {
  const int B = mb.batch, L = mb.len;
  for (const std::int32_t id : mb.input_ids)
    if (id < 0 || id >= p.cfg.vocab)
      throw DataError("decoder input: token id " + std::to_string(id) + " out of vocab range [0, " +
                      std::to_string(p.cfg.vocab) + ")");
  if (L > p.cfg.max_seq_len)
    throw DataError("decoder input: batch length " + std::to_string(L) + " exceeds max_seq_len " +
                    std::to_string(p.cfg.max_seq_len));
  Tensor<T> emb = core::take_rows(p.tok_emb, mb.input_ids);
  std::vector<std::int32_t> starts(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) starts[static_cast<std::size_t>(b)] = b * L;
  emb = core::replace_rows(emb, std::move(starts), h_cls);
  std::vector<std::int32_t> pos_idx(static_cast<std::size_t>(B) * L);
  for (int b = 0; b < B; ++b)
    for (int l = 0; l < L; ++l) pos_idx[static_cast<std::size_t>(b) * L + l] = l;
  return core::add(emb, core::take_rows(p.pos_emb, pos_idx));
}

// Strictly causal attention bias (i attends to j <= i) combined with PAD keys.
template <class T>
std::shared_ptr<const std::vector<T>> causal_attn_bias(const MaskedBatch& mb, int heads) {
  const int B = mb.batch, L = mb.len;
  auto buf = std::make_shared<std::vector<T>>(static_cast<std::size_t>(B) * heads * L * L, T(0));
  const T sentinel = static_cast<T>(kernels::kMaskSentinel);
  for (int b = 0; b < B; ++b)
    for (int h = 0; h < heads; ++h) {
      T* slice = buf->data() + ((static_cast<std::size_t>(b) * heads + h) * L) * L;
      for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j)
          if (j > i || !mb.padding_mask[static_cast<std::size_t>(b) * L + j])
            slice[static_cast<std::size_t>(i) * L + j] = sentinel;
      // Position 0 is always a real token, so row 0 keeps itself visible and
      // no row is fully masked.
    }
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Auto-encoding decoder: reconstruct an r_dec-masked copy of the text from the
// bottleneck representation placed at position 0.

template <class T>
Tensor<T> autoencoding_decoder_loss(const EncoderParams<T>& p, const DecoderParams<T>& d,
                                    const Tensor<T>& h_cls, const MaskedBatch& dec_batch, double r_dec,
                                    double r_enc, Mode mode = Mode::Train, Rng* rng = nullptr) {
  if (!(r_dec > r_enc))
    throw ConfigError("auto_encoding requires r_dec > r_enc (got r_dec=" + std::to_string(r_dec) +
                      ", r_enc=" + std::to_string(r_enc) + ")");
  Tensor<T> x = detail::decoder_input(p, dec_batch, h_cls);
  auto bias = model::detail::pad_attn_bias<T>(dec_batch, p.cfg.heads);
  Tensor<T> h = model::detail::block_forward(d.block, x, dec_batch.batch, dec_batch.len, p.cfg.heads,
                                             std::move(bias), mode, p.cfg.dropout, rng);
  return mlm_loss_from_hidden(p, h, dec_batch);
}

// ---------------------------------------------------------------------------
// Auto-regressive decoder: causal generation of the unmasked text conditioned
// on the bottleneck representation. Position i-1 predicts token i; only
// content tokens are supervised, so [CLS,SEP]-only rows contribute nothing.

template <class T>
Tensor<T> autoregression_decoder_loss(const EncoderParams<T>& p, const DecoderParams<T>& d,
                                      const Tensor<T>& h_cls, const MaskedBatch& dec_batch,
                                      Mode mode = Mode::Train, Rng* rng = nullptr) {
  const int B = dec_batch.batch, L = dec_batch.len;
  Tensor<T> x = detail::decoder_input(p, dec_batch, h_cls);
  auto bias = detail::causal_attn_bias<T>(dec_batch, p.cfg.heads);
  Tensor<T> h = model::detail::block_forward(d.block, x, B, L, p.cfg.heads, std::move(bias), mode,
                                             p.cfg.dropout, rng);
  std::vector<std::int32_t> positions;
  std::vector<std::int32_t> targets;
  for (int b = 0; b < B; ++b) {
    const std::size_t base = static_cast<std::size_t>(b) * L;
    const int len = dec_batch.row_lengths[static_cast<std::size_t>(b)];
    for (int i = 0; i + 1 < len; ++i) {
      const std::int32_t next = dec_batch.input_ids[base + static_cast<std::size_t>(i) + 1];
      if (next == text::kClsId || next == text::kSepId || next == text::kPadId || next == text::kMaskId)
        continue;
      positions.push_back(static_cast<std::int32_t>(base) + i);
      targets.push_back(next);
    }
  }
  if (positions.empty()) throw DataError("auto_regression: no content tokens to predict in batch");
  Tensor<T> states = core::take_rows(h, std::move(positions));
  return core::cross_entropy_from_logits(model::lm_logits(p, states), std::move(targets));
}

// Decoder hidden states only, for causality probes.
template <class T>
Tensor<T> autoregression_decoder_states(const EncoderParams<T>& p, const DecoderParams<T>& d,
                                        const Tensor<T>& h_cls, const MaskedBatch& dec_batch) {
  Tensor<T> x = detail::decoder_input(p, dec_batch, h_cls);
  auto bias = detail::causal_attn_bias<T>(dec_batch, p.cfg.heads);
  return model::detail::block_forward(d.block, x, dec_batch.batch, dec_batch.len, p.cfg.heads,
                                      std::move(bias), Mode::Eval, 0.0, nullptr);
}

// ---------------------------------------------------------------------------
// Enhanced decoding: position-specific attention mask over an unprojected
// single-head cross-attention. Row i is the query for predicting token i and
// never sees token i itself.

struct EnhancedAttnMask {
  int len = 0;
  std::vector<std::uint8_t> blocked;  // len*len, 1 = masked

  bool is_blocked(int i, int j) const {
    return blocked[static_cast<std::size_t>(i) * len + j] != 0;
  }

  // Adds the sentinel into a row-major [len x len] additive bias.
  template <class T>
  void add_to(T* bias) const {
    const T sentinel = static_cast<T>(kernels::kMaskSentinel);
    for (std::size_t i = 0; i < blocked.size(); ++i)
      if (blocked[i]) bias[i] += sentinel;
  }
};

// Diagonal always masked; round(r_attn*(L-1)) off-diagonal positions masked
// per row, capped so at least one key stays visible; position 0 forced
// visible for rows i > 0. With candidates > 1, that many masks are generated
// and one is picked uniformly — the cost model of the original data pipeline.
inline EnhancedAttnMask build_enhanced_attn_mask(int len, double r_attn, Rng& rng, int candidates = 1) {
  if (len < 2) throw ConfigError("enhanced mask: L must be >= 2, got " + std::to_string(len));
  if (!(r_attn >= 0.0 && r_attn < 1.0))
    throw ConfigError("enhanced mask: r_attn must be in [0,1), got " + std::to_string(r_attn));
  if (candidates < 1) throw ConfigError("enhanced mask: candidates must be >= 1");

  std::vector<EnhancedAttnMask> generated;
  generated.reserve(static_cast<std::size_t>(candidates));
  for (int c = 0; c < candidates; ++c) {
    EnhancedAttnMask m;
    m.len = len;
    m.blocked.assign(static_cast<std::size_t>(len) * len, 0);
    const int target = static_cast<int>(std::lround(r_attn * (len - 1)));
    for (int i = 0; i < len; ++i) {
      m.blocked[static_cast<std::size_t>(i) * len + i] = 1;
      std::vector<std::int32_t> cand;
      for (int j = 0; j < len; ++j) {
        if (j == i) continue;
        if (j == 0 && i > 0) continue;  // position 0 stays visible
        cand.push_back(j);
      }
      int k = std::min(target, len - 2);  // leave at least one key visible
      if (k > static_cast<int>(cand.size())) k = static_cast<int>(cand.size());
      rng.partial_shuffle(cand, static_cast<std::size_t>(k));
      for (int t = 0; t < k; ++t)
        m.blocked[static_cast<std::size_t>(i) * len + cand[static_cast<std::size_t>(t)]] = 1;
    }
    for (int i = 0; i < len; ++i) {
      bool open = false;
      for (int j = 0; j < len && !open; ++j) open = !m.is_blocked(i, j);
      if (!open) throw DataError("enhanced mask: generated a fully-masked row");
    }
    generated.push_back(std::move(m));
  }
  const std::size_t pick = candidates == 1 ? 0 : rng.below(static_cast<std::uint64_t>(candidates));
  return std::move(generated[pick]);
}

// masks must hold one mask per row or a single mask shared by all rows.
template <class T>
Tensor<T> enhanced_decoding_loss(const EncoderParams<T>& p, const DecoderParams<T>& d,
                                 const Tensor<T>& h_cls, const MaskedBatch& batch,
                                 const std::vector<EnhancedAttnMask>& masks, Mode mode = Mode::Train,
                                 Rng* rng = nullptr) {
  const int B = batch.batch, L = batch.len, dh = p.cfg.hidden;
  if (masks.size() != 1 && masks.size() != static_cast<std::size_t>(B))
    throw DataError("enhanced_decoding: need 1 or " + std::to_string(B) + " masks, got " +
                    std::to_string(masks.size()));
  for (const std::int32_t id : batch.input_ids)
    if (id < 0 || id >= p.cfg.vocab)
      throw DataError("enhanced_decoding: token id " + std::to_string(id) + " out of vocab range");

  // Combined additive bias: per-text mask plus PAD keys; PAD query rows keep
  // only position 0 visible so no softmax row degenerates.
  auto bias = std::make_shared<std::vector<T>>(static_cast<std::size_t>(B) * L * L, T(0));
  const T sentinel = static_cast<T>(kernels::kMaskSentinel);
  for (int b = 0; b < B; ++b) {
    const EnhancedAttnMask& m = masks[masks.size() == 1 ? 0 : static_cast<std::size_t>(b)];
    const int len = batch.row_lengths[static_cast<std::size_t>(b)];
    if (m.len != L && m.len != len)
      throw DataError("enhanced_decoding: mask length " + std::to_string(m.len) +
                      " does not match batch length " + std::to_string(L) + " (row length " +
                      std::to_string(len) + ")");
    T* slice = bias->data() + static_cast<std::size_t>(b) * L * L;
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) {
        bool blocked;
        if (i < m.len && j < m.len)
          blocked = m.is_blocked(i, j) || j >= len;
        else
          blocked = i == j || j >= len || (i >= m.len && j != 0);
        if (blocked) slice[static_cast<std::size_t>(i) * L + j] = sentinel;
      }
  }

  std::vector<std::int32_t> cls_idx(static_cast<std::size_t>(B) * L);
  std::vector<std::int32_t> pos_idx(static_cast<std::size_t>(B) * L);
  for (int b = 0; b < B; ++b)
    for (int l = 0; l < L; ++l) {
      cls_idx[static_cast<std::size_t>(b) * L + l] = b;
      pos_idx[static_cast<std::size_t>(b) * L + l] = l;
    }
  if (L > p.cfg.max_seq_len)
    throw DataError("enhanced_decoding: batch length exceeds max_seq_len");

  using namespace core;
  Tensor<T> q = add(take_rows(h_cls, cls_idx), take_rows(p.pos_emb, pos_idx));
  Tensor<T> kv = take_rows(p.tok_emb, batch.input_ids);
  Tensor<T> q3 = reshape(q, {B, L, dh});
  Tensor<T> k3 = reshape(kv, {B, L, dh});
  Tensor<T> scores = scale(bmm_nt(q3, k3), static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh))));
  scores = add_const(scores, std::shared_ptr<const std::vector<T>>(bias));
  Tensor<T> attn = reshape(bmm(row_softmax(scores), k3), {B * L, dh});
  Tensor<T> ff = add_bias(matmul(gelu(add_bias(matmul(attn, d.block.w1), d.block.b1)), d.block.w2),
                          d.block.b2);
  ff = model::detail::apply_dropout(ff, mode, p.cfg.dropout, rng);
  Tensor<T> h = layer_norm(add(attn, ff), d.block.ln2_g, d.block.ln2_b,
                           static_cast<T>(model::kLayerNormEps));

  // All non-pad input tokens are labels, position 0 included.
  std::vector<std::int32_t> positions;
  std::vector<std::int32_t> targets;
  for (int b = 0; b < B; ++b) {
    const std::size_t base = static_cast<std::size_t>(b) * L;
    const int len = batch.row_lengths[static_cast<std::size_t>(b)];
    for (int i = 0; i < len; ++i) {
      positions.push_back(static_cast<std::int32_t>(base) + i);
      targets.push_back(batch.input_ids[base + static_cast<std::size_t>(i)]);
    }
  }
  Tensor<T> states = take_rows(h, std::move(positions));
  return cross_entropy_from_logits(model::lm_logits(p, states), std::move(targets));
}

// ---------------------------------------------------------------------------
// Bag-of-Word prediction: project the bottleneck representation to the
// vocabulary with the tied LM head and apply multi-label cross entropy over
// the input token set. No decoder, no positional information.

template <class T>
Tensor<T> bow_loss(const EncoderParams<T>& p, const Tensor<T>& h_cls,
                   const std::vector<std::vector<std::int32_t>>& bags) {
  return core::multilabel_cross_entropy(model::lm_logits(p, h_cls), bags);
}

}  // namespace bowlab::objectives
