#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bowlab/gradcheck.hpp"
#include "bowlab/objectives.hpp"
#include "oracles.hpp"

using namespace bowlab;
using namespace bowlab::model;
using bowlab::core::Tensor;

namespace {

EncoderConfig tiny_cfg(int vocab = 50, int seed = 7) {
  EncoderConfig cfg;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.hidden = 16;
  cfg.ffn = 32;
  cfg.vocab = vocab;
  cfg.max_seq_len = 24;
  cfg.dropout = 0.0;
  cfg.seed = static_cast<std::uint64_t>(seed);
  return cfg;
}

text::Vocab toy_vocab(int words) {
  std::vector<std::string> toks = text::Vocab::special_tokens();
  for (int i = 0; i < words; ++i) toks.push_back("w" + std::to_string(i));
  return text::Vocab::from_tokens(std::move(toks));
}

text::TokenSeq seq_of(const std::vector<std::int32_t>& content) {
  text::TokenSeq s;
  s.ids.push_back(text::kClsId);
  for (const auto id : content) s.ids.push_back(id);
  s.ids.push_back(text::kSepId);
  return s;
}

}  // namespace

TEST_CASE("init is deterministic and gains start at exactly one") {
  const auto p1 = init_params<float>(tiny_cfg());
  const auto p2 = init_params<float>(tiny_cfg());
  CHECK(std::equal(p1.tok_emb.values().begin(), p1.tok_emb.values().end(), p2.tok_emb.values().begin()));
  CHECK(std::equal(p1.layers[0].wq.values().begin(), p1.layers[0].wq.values().end(),
                   p2.layers[0].wq.values().begin()));
  for (const float g : p1.layers[0].ln1_g.values()) CHECK(g == 1.0f);
  for (const float g : p1.layers[1].ln2_g.values()) CHECK(g == 1.0f);
  for (const float b : p1.lm_bias.values()) CHECK(b == 0.0f);
}

TEST_CASE("embedding init stddev is 0.02 within tolerance") {
  EncoderConfig cfg = tiny_cfg(700);
  cfg.hidden = 16;
  const auto p = init_params<double>(cfg);
  const auto vals = p.tok_emb.values();
  REQUIRE(vals.size() >= 10000);
  double mean = 0;
  for (const double v : vals) mean += v;
  mean /= static_cast<double>(vals.size());
  double var = 0;
  for (const double v : vals) var += (v - mean) * (v - mean);
  var /= static_cast<double>(vals.size());
  CHECK(std::fabs(std::sqrt(var) - 0.02) < 0.002);
}

TEST_CASE("forward of a minimal batch is finite and exposes h_cls") {
  const auto p = init_params<float>(tiny_cfg());
  const text::MaskedBatch mb = text::make_plain_batch({std::vector<text::TokenSeq>{seq_of({})}});
  const auto out = encoder_forward(p, mb, Mode::Eval);
  CHECK(out.hidden.all_finite());
  CHECK(out.cls.all_finite());
  CHECK(out.cls.dim(0) == 1);
  CHECK(out.cls.dim(1) == 16);
  // h_cls is literally row 0 of the hidden states.
  for (int j = 0; j < 16; ++j)
    CHECK(out.cls.values()[static_cast<std::size_t>(j)] == out.hidden.values()[static_cast<std::size_t>(j)]);
}

TEST_CASE("token ids outside the vocab are rejected by name") {
  const auto p = init_params<float>(tiny_cfg(10));
  text::MaskedBatch mb = text::make_plain_batch({std::vector<text::TokenSeq>{seq_of({7})}});
  mb.input_ids[1] = 99;
  try {
    encoder_forward(p, mb, Mode::Eval);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("99") != std::string::npos);
  }
}

TEST_CASE("appending PAD tokens leaves non-pad hidden states unchanged") {
  const auto p = init_params<float>(tiny_cfg());
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::int32_t> content;
    const int len = 2 + static_cast<int>(rng.below(6));
    for (int i = 0; i < len; ++i)
      content.push_back(text::kNumSpecials + static_cast<std::int32_t>(rng.below(40)));
    const text::TokenSeq base = seq_of(content);

    const text::MaskedBatch short_b = text::make_plain_batch({&base, 1});
    // Pad by batching with a longer row.
    std::vector<std::int32_t> longer(12, text::kNumSpecials);
    const std::vector<text::TokenSeq> pair = {base, seq_of(longer)};
    const text::MaskedBatch long_b = text::make_plain_batch(pair);
    REQUIRE(long_b.len > short_b.len);

    const auto short_out = encoder_forward(p, short_b, Mode::Eval);
    const auto long_out = encoder_forward(p, long_b, Mode::Eval);
    const int d = 16;
    for (int l = 0; l < short_b.len; ++l)
      for (int j = 0; j < d; ++j) {
        const float a = short_out.hidden.values()[static_cast<std::size_t>(l) * d + j];
        const float b = long_out.hidden.values()[static_cast<std::size_t>(l) * d + j];
        CHECK(std::fabs(a - b) < 1e-5f);
      }
  }
}

TEST_CASE("eval forward is deterministic, train dropout is not a no-op") {
  EncoderConfig cfg = tiny_cfg();
  cfg.dropout = 0.3;
  const auto p = init_params<float>(cfg);
  const text::MaskedBatch mb =
      text::make_plain_batch({std::vector<text::TokenSeq>{seq_of({6, 7, 8, 9})}});
  const auto e1 = encoder_forward(p, mb, Mode::Eval);
  const auto e2 = encoder_forward(p, mb, Mode::Eval);
  CHECK(std::equal(e1.hidden.values().begin(), e1.hidden.values().end(), e2.hidden.values().begin()));

  Rng r1(5);
  const auto t1 = encoder_forward(p, mb, Mode::Train, &r1);
  bool differs = false;
  for (std::size_t i = 0; i < t1.hidden.numel(); ++i)
    if (t1.hidden.values()[i] != e1.hidden.values()[i]) differs = true;
  CHECK(differs);
}

TEST_CASE("lm_logits is the tied-embedding projection") {
  const auto p = init_params<double>(tiny_cfg());
  const int d = 16, V = 50;

  // Zero states, zero bias -> all-zero logits.
  const auto zero = lm_logits(p, Tensor<double>::zeros({1, d}));
  for (const double v : zero.values()) CHECK(v == 0.0);

  // Row e_j of E as the state: logit j dominates on a random init.
  for (const int j : {0, 13, 49}) {
    std::vector<double> state(p.tok_emb.values().begin() + j * d, p.tok_emb.values().begin() + (j + 1) * d);
    const auto logits = lm_logits(p, Tensor<double>::from({1, d}, state));
    int argmax = 0;
    for (int v = 1; v < V; ++v)
      if (logits.values()[static_cast<std::size_t>(v)] > logits.values()[static_cast<std::size_t>(argmax)])
        argmax = v;
    CHECK(argmax == j);
  }

  // Matches the triple-loop oracle against E^T.
  Rng rng(9);
  std::vector<double> state(d);
  for (auto& v : state) v = rng.normal();
  const auto logits = lm_logits(p, Tensor<double>::from({1, d}, state));
  std::vector<double> et(static_cast<std::size_t>(d) * V);
  for (int r = 0; r < V; ++r)
    for (int c = 0; c < d; ++c)
      et[static_cast<std::size_t>(c) * V + r] = p.tok_emb.values()[static_cast<std::size_t>(r) * d + c];
  const auto expect = oracles::matmul(state, et, 1, d, V);
  for (int v = 0; v < V; ++v)
    CHECK(std::fabs(logits.values()[static_cast<std::size_t>(v)] - expect[static_cast<std::size_t>(v)]) <
          1e-6);
}

TEST_CASE("weight tying: mutating E moves both the lookup and the head") {
  auto p = init_params<float>(tiny_cfg());
  const text::MaskedBatch mb = text::make_plain_batch({std::vector<text::TokenSeq>{seq_of({7, 8})}});
  const auto before_hidden = encoder_forward(p, mb, Mode::Eval);
  const auto before_logits = lm_logits(p, before_hidden.cls);

  p.tok_emb.values()[7 * 16 + 3] += 0.5f;  // token 7's embedding

  const auto after_hidden = encoder_forward(p, mb, Mode::Eval);
  const auto after_logits = lm_logits(p, after_hidden.cls);
  bool lookup_changed = false;
  for (std::size_t i = 0; i < before_hidden.hidden.numel(); ++i)
    if (before_hidden.hidden.values()[i] != after_hidden.hidden.values()[i]) lookup_changed = true;
  CHECK(lookup_changed);
  bool head_changed = false;
  for (std::size_t i = 0; i < before_logits.numel(); ++i)
    if (before_logits.values()[i] != after_logits.values()[i]) head_changed = true;
  CHECK(head_changed);
}

TEST_CASE("encoder MLM loss is differentiable end to end") {
  const auto cfg = tiny_cfg();
  auto p = init_params<double>(cfg);
  const text::Vocab vocab = toy_vocab(45);
  std::vector<text::TokenSeq> seqs;
  for (int i = 0; i < 3; ++i) {
    std::vector<std::int32_t> content;
    for (int j = 0; j < 8; ++j)
      content.push_back(text::kNumSpecials + ((i * 11 + j * 5) % 45));
    seqs.push_back(seq_of(content));
  }
  Rng mask_rng(13);
  const text::MaskedBatch mb = text::apply_mlm_mask(seqs, vocab, 0.3, mask_rng);

  auto params = named_params(p);
  auto f = [&]() { return objectives::mlm_loss(p, mb, Mode::Eval); };
  Rng pick(21);
  const auto report = core::finite_diff_check<double>(f, params, 1e-4, 60, pick);
  CHECK(report.max_rel_err < 1e-4);
}
