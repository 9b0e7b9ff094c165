#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>

#include "bowlab/gradcheck.hpp"
#include "bowlab/trainer.hpp"
#include "helpers.hpp"

using namespace bowlab;
using namespace bowlab::objectives;
using helpers::seq_of;
using helpers::tiny_cfg;
using helpers::toy_vocab;

namespace {

double ln_vocab(int v) { return std::log(static_cast<double>(v)); }

template <class T>
double max_abs_grad(const std::vector<std::pair<std::string, core::Tensor<T>>>& params) {
  double mx = 0.0;
  for (const auto& [name, p] : params) {
    if (!p.has_grad()) continue;
    for (const T g : p.grad_view()) mx = std::max(mx, std::fabs(static_cast<double>(g)));
  }
  return mx;
}

}  // namespace

TEST_CASE("all losses sit near ln V at random init") {
  const auto cfg = tiny_cfg(50);
  auto enc = model::init_params<double>(cfg);
  auto dec = model::init_decoder<double>(cfg);
  const text::Vocab vocab = toy_vocab(45);
  const auto seqs = helpers::random_seqs(6, 8, 12, 45, 3);
  Rng rng(1);
  const auto enc_b = text::apply_mlm_mask(seqs, vocab, 0.3, rng);
  const auto dec_b = text::apply_mlm_mask(seqs, vocab, 0.5, rng);
  const auto plain = text::make_plain_batch(seqs);
  const auto eo = model::encoder_forward(enc, enc_b, model::Mode::Eval);

  const double lnv = ln_vocab(50);
  CHECK(std::fabs(mlm_loss_from_hidden(enc, eo.hidden, enc_b).item() - lnv) < 0.3);
  CHECK(std::fabs(
            autoencoding_decoder_loss(enc, dec, eo.cls, dec_b, 0.5, 0.3, model::Mode::Eval).item() - lnv) <
        0.3);
  CHECK(std::fabs(autoregression_decoder_loss(enc, dec, eo.cls, plain, model::Mode::Eval).item() - lnv) <
        0.3);
  std::vector<EnhancedAttnMask> masks;
  Rng mrng(2);
  for (const auto len : plain.row_lengths) masks.push_back(build_enhanced_attn_mask(len, 0.5, mrng));
  CHECK(std::fabs(enhanced_decoding_loss(enc, dec, eo.cls, plain, masks, model::Mode::Eval).item() - lnv) <
        0.3);
  CHECK(std::fabs(bow_loss(enc, eo.cls, enc_b.bag_labels).item() - lnv) < 0.5);
}

TEST_CASE("mlm loss requires at least one masked position") {
  const auto cfg = tiny_cfg();
  auto enc = model::init_params<float>(cfg);
  const auto plain = text::make_plain_batch({std::vector<text::TokenSeq>{seq_of({7, 8, 9})}});
  CHECK_THROWS_WITH_AS(mlm_loss(enc, plain, model::Mode::Eval),
                       doctest::Contains("zero masked positions"), DataError);
}

TEST_CASE("auto-encoding enforces r_dec > r_enc") {
  const auto cfg = tiny_cfg();
  auto enc = model::init_params<float>(cfg);
  auto dec = model::init_decoder<float>(cfg);
  const text::Vocab vocab = toy_vocab(45);
  const auto seqs = helpers::random_seqs(2, 6, 8, 45, 4);
  Rng rng(1);
  const auto enc_b = text::apply_mlm_mask(seqs, vocab, 0.3, rng);
  const auto dec_b = text::apply_mlm_mask(seqs, vocab, 0.5, rng);
  const auto eo = model::encoder_forward(enc, enc_b, model::Mode::Eval);
  CHECK_THROWS_AS(autoencoding_decoder_loss(enc, dec, eo.cls, dec_b, 0.3, 0.3, model::Mode::Eval),
                  ConfigError);
}

TEST_CASE("bottleneck is the only gradient path from decoder losses to the encoder blocks") {
  const auto cfg = tiny_cfg(40);
  auto enc = model::init_params<double>(cfg);
  auto dec = model::init_decoder<double>(cfg);
  const text::Vocab vocab = toy_vocab(35);
  const auto seqs = helpers::random_seqs(3, 6, 10, 35, 9);
  Rng rng(5);
  const auto enc_b = text::apply_mlm_mask(seqs, vocab, 0.3, rng);
  const auto dec_b = text::apply_mlm_mask(seqs, vocab, 0.5, rng);
  const auto plain = text::make_plain_batch(seqs);
  std::vector<EnhancedAttnMask> masks;
  Rng mrng(6);
  for (const auto len : plain.row_lengths) masks.push_back(build_enhanced_attn_mask(len, 0.5, mrng));

  auto block_params = model::encoder_block_params(enc);
  for (int which = 0; which < 3; ++which) {
    for (auto& [name, p] : block_params) p.zero_grad();
    core::Tape<double> tape;
    core::Tape<double>::Scope scope(tape);
    const auto eo = model::encoder_forward(enc, enc_b, model::Mode::Eval);
    const core::Tensor<double> frozen = eo.cls.detach();  // constant bottleneck
    core::Tensor<double> loss;
    if (which == 0)
      loss = autoencoding_decoder_loss(enc, dec, frozen, dec_b, 0.5, 0.3, model::Mode::Eval);
    else if (which == 1)
      loss = autoregression_decoder_loss(enc, dec, frozen, plain, model::Mode::Eval);
    else
      loss = enhanced_decoding_loss(enc, dec, frozen, plain, masks, model::Mode::Eval);
    tape.backward(loss);
    CHECK(max_abs_grad(block_params) < 1e-10);
  }
}

TEST_CASE("auto-regression is strictly causal") {
  const auto cfg = tiny_cfg(40);
  auto enc = model::init_params<float>(cfg);
  auto dec = model::init_decoder<float>(cfg);
  const auto base = seq_of({7, 8, 9, 10, 11, 12});
  const auto batch = text::make_plain_batch({&base, 1});
  const auto eo = model::encoder_forward(enc, batch, model::Mode::Eval);

  auto perturbed_seq = base;
  const int j = 4;  // perturb token at position 4
  perturbed_seq.ids[static_cast<std::size_t>(j)] = 20;
  const auto batch2 = text::make_plain_batch({&perturbed_seq, 1});

  const auto s1 = autoregression_decoder_states(enc, dec, eo.cls, batch);
  const auto s2 = autoregression_decoder_states(enc, dec, eo.cls, batch2);
  const int d = cfg.hidden;
  for (int pos = 0; pos < j; ++pos)
    for (int c = 0; c < d; ++c)
      CHECK(s1.values()[static_cast<std::size_t>(pos) * d + c] ==
            s2.values()[static_cast<std::size_t>(pos) * d + c]);
  bool later_changed = false;
  for (int c = 0; c < d; ++c)
    if (s1.values()[static_cast<std::size_t>(j) * d + c] != s2.values()[static_cast<std::size_t>(j) * d + c])
      later_changed = true;
  CHECK(later_changed);
}

TEST_CASE("auto-regression skips rows without content") {
  const auto cfg = tiny_cfg(40);
  auto enc = model::init_params<float>(cfg);
  auto dec = model::init_decoder<float>(cfg);
  const std::vector<text::TokenSeq> seqs = {seq_of({}), seq_of({7, 8, 9})};
  const auto batch = text::make_plain_batch(seqs);
  const auto eo = model::encoder_forward(enc, batch, model::Mode::Eval);
  const auto loss = autoregression_decoder_loss(enc, dec, eo.cls, batch, model::Mode::Eval);
  CHECK(std::isfinite(loss.item()));

  // All rows empty: nothing to supervise.
  const std::vector<text::TokenSeq> empty = {seq_of({}), seq_of({})};
  const auto eb = text::make_plain_batch(empty);
  const auto eo2 = model::encoder_forward(enc, eb, model::Mode::Eval);
  CHECK_THROWS_AS(autoregression_decoder_loss(enc, dec, eo2.cls, eb, model::Mode::Eval), DataError);
}

TEST_CASE("enhanced mask: r_attn=0 masks exactly the diagonal") {
  Rng rng(1);
  const auto m = build_enhanced_attn_mask(4, 0.0, rng);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(m.is_blocked(i, j) == (i == j));
}

TEST_CASE("enhanced masks satisfy their invariants over 1000 draws") {
  Rng rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    const int len = 4 + static_cast<int>(rng.below(45));
    const double r = 0.05 + 0.8 * rng.real01();
    const auto m = build_enhanced_attn_mask(len, r, rng);
    for (int i = 0; i < len; ++i) {
      CHECK(m.is_blocked(i, i));
      if (i > 0) CHECK(!m.is_blocked(i, 0));
      int open = 0, masked_off_diag = 0;
      for (int j = 0; j < len; ++j) {
        if (!m.is_blocked(i, j)) ++open;
        if (j != i && m.is_blocked(i, j)) ++masked_off_diag;
      }
      CHECK(open >= 1);
      const double frac = static_cast<double>(masked_off_diag) / (len - 1);
      CHECK(std::fabs(frac - r) <= 1.0 / len + 1e-12);
    }
  }
}

TEST_CASE("enhanced mask generation cost scales with the candidate count") {
  Rng rng(7);
  const int len = 48;
  const auto time_builds = [&](int candidates, int reps) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) build_enhanced_attn_mask(len, 0.5, rng, candidates);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
  };
  time_builds(256, 1);  // warm
  const double one = time_builds(1, 512);
  const double many = time_builds(256, 8);
  CHECK(many / one >= 100.0);
}

TEST_CASE("enhanced decoding rejects mismatched mask lengths") {
  const auto cfg = tiny_cfg(40);
  auto enc = model::init_params<float>(cfg);
  auto dec = model::init_decoder<float>(cfg);
  const auto seqs = helpers::random_seqs(2, 6, 6, 35, 8);
  const auto plain = text::make_plain_batch(seqs);
  const auto eo = model::encoder_forward(enc, plain, model::Mode::Eval);
  Rng rng(3);
  const std::vector<EnhancedAttnMask> bad = {build_enhanced_attn_mask(3, 0.5, rng)};
  CHECK_THROWS_WITH_AS(enhanced_decoding_loss(enc, dec, eo.cls, plain, bad, model::Mode::Eval),
                       doctest::Contains("mask length"), DataError);
}

TEST_CASE("enhanced decoding depends on the query stream") {
  const auto cfg = tiny_cfg(40);
  auto enc = model::init_params<double>(cfg);
  auto dec = model::init_decoder<double>(cfg);
  const auto seqs = helpers::random_seqs(3, 6, 6, 35, 11);
  const auto plain = text::make_plain_batch(seqs);
  const auto eo = model::encoder_forward(enc, plain, model::Mode::Eval);
  std::vector<EnhancedAttnMask> masks;
  Rng rng(4);
  for (const auto len : plain.row_lengths) masks.push_back(build_enhanced_attn_mask(len, 0.5, rng));
  const double with_cls = enhanced_decoding_loss(enc, dec, eo.cls, plain, masks, model::Mode::Eval).item();
  const auto zero_cls = core::Tensor<double>::zeros(eo.cls.shape());
  const double without = enhanced_decoding_loss(enc, dec, zero_cls, plain, masks, model::Mode::Eval).item();
  CHECK(std::fabs(with_cls - without) > 0.0);
}

TEST_CASE("masked attention weight is exactly zero after softmax") {
  Rng rng(13);
  const int len = 12;
  const auto m = build_enhanced_attn_mask(len, 0.5, rng);
  std::vector<float> logits(static_cast<std::size_t>(len) * len);
  for (auto& v : logits) v = static_cast<float>(rng.normal() * 2);
  std::vector<float> biased = logits;
  m.add_to(biased.data());
  const auto w = core::row_softmax(core::Tensor<float>::from({len, len}, biased));
  for (int i = 0; i < len; ++i)
    for (int j = 0; j < len; ++j)
      if (m.is_blocked(i, j))
        CHECK(w.values()[static_cast<std::size_t>(i) * len + j] < 1e-6f);
}

TEST_CASE("bow loss on the full vocabulary with uniform logits equals ln V") {
  const auto cfg = tiny_cfg(30);
  auto enc = model::init_params<double>(cfg);
  // Zero representation + zero bias -> uniform logits.
  const auto zero_cls = core::Tensor<double>::zeros({1, cfg.hidden});
  std::vector<std::int32_t> full;
  for (int v = 0; v < 30; ++v) full.push_back(v);
  const double loss = bow_loss(enc, zero_cls, {full}).item();
  CHECK(loss == doctest::Approx(std::log(30.0)).epsilon(1e-9));
}

TEST_CASE("bow loss is invariant to token order and matches CE on singletons") {
  const auto cfg = tiny_cfg(40);
  auto enc = model::init_params<double>(cfg);
  Rng rng(17);
  std::vector<double> cls(static_cast<std::size_t>(cfg.hidden));
  for (auto& v : cls) v = rng.normal();
  const auto h = core::Tensor<double>::from({1, cfg.hidden}, cls);

  const auto seq1 = seq_of({9, 7, 8, 7});
  const auto seq2 = seq_of({7, 8, 9, 7});  // permuted interior
  const double l1 = bow_loss(enc, h, {text::make_bag(seq1)}).item();
  const double l2 = bow_loss(enc, h, {text::make_bag(seq2)}).item();
  CHECK(l1 == l2);  // exactly zero difference

  const double single = bow_loss(enc, h, {{12}}).item();
  const auto logits = model::lm_logits(enc, h);
  const double ce = core::cross_entropy_from_logits(logits, {12}).item();
  CHECK(std::fabs(single - ce) < 1e-7);
}

TEST_CASE("bow skips empty bags and errors when all are empty") {
  const auto cfg = tiny_cfg(40);
  auto enc = model::init_params<double>(cfg);
  const auto h = core::Tensor<double>::zeros({2, cfg.hidden});
  const double with_skip = bow_loss(enc, h, {{7, 8}, {}}).item();
  const double alone = bow_loss(enc, core::Tensor<double>::zeros({1, cfg.hidden}), {{7, 8}}).item();
  CHECK(with_skip == doctest::Approx(alone));
  CHECK_THROWS_WITH_AS(bow_loss(enc, h, {{}, {}}), doctest::Contains("all bags empty"), DataError);
}

TEST_CASE("gradient check covers every decoder objective") {
  const auto cfg = tiny_cfg(40);
  auto enc = model::init_params<double>(cfg);
  auto dec = model::init_decoder<double>(cfg);
  const text::Vocab vocab = toy_vocab(35);
  const auto seqs = helpers::random_seqs(2, 5, 7, 35, 19);
  Rng rng(23);
  const auto enc_b = text::apply_mlm_mask(seqs, vocab, 0.3, rng);
  const auto dec_b = text::apply_mlm_mask(seqs, vocab, 0.5, rng);
  const auto plain = text::make_plain_batch(seqs);
  std::vector<EnhancedAttnMask> masks;
  for (const auto len : plain.row_lengths) masks.push_back(build_enhanced_attn_mask(len, 0.5, rng));

  auto params = model::named_params(enc);
  auto dparams = model::named_params(dec);
  params.insert(params.end(), dparams.begin(), dparams.end());

  const auto check = [&](const core::LossFn<double>& f) {
    Rng pick(31);
    return core::finite_diff_check<double>(f, params, 1e-4, 40, pick).max_rel_err;
  };
  CHECK(check([&]() {
          const auto eo = model::encoder_forward(enc, enc_b, model::Mode::Eval);
          return core::add(mlm_loss_from_hidden(enc, eo.hidden, enc_b),
                           autoencoding_decoder_loss(enc, dec, eo.cls, dec_b, 0.5, 0.3, model::Mode::Eval));
        }) < 1e-4);
  CHECK(check([&]() {
          const auto eo = model::encoder_forward(enc, enc_b, model::Mode::Eval);
          return core::add(mlm_loss_from_hidden(enc, eo.hidden, enc_b),
                           autoregression_decoder_loss(enc, dec, eo.cls, plain, model::Mode::Eval));
        }) < 1e-4);
  CHECK(check([&]() {
          const auto eo = model::encoder_forward(enc, enc_b, model::Mode::Eval);
          return core::add(mlm_loss_from_hidden(enc, eo.hidden, enc_b),
                           enhanced_decoding_loss(enc, dec, eo.cls, plain, masks, model::Mode::Eval));
        }) < 1e-4);
  CHECK(check([&]() {
          const auto eo = model::encoder_forward(enc, enc_b, model::Mode::Eval);
          return core::add(mlm_loss_from_hidden(enc, eo.hidden, enc_b),
                           bow_loss(enc, eo.cls, enc_b.bag_labels));
        }) < 1e-4);
}

TEST_CASE("joint step bundles losses exactly and allocates no decoder for bow") {
  const auto cfg = tiny_cfg(40, 32);
  const text::Vocab vocab = toy_vocab(35);
  const auto seqs = helpers::random_seqs(8, 6, 10, 35, 29);

  ObjectiveSettings fp;
  fp.objective = Objective::FurtherPretrain;
  Trainer<float> t1(cfg, vocab, fp, core::AdamHyper{}, 1);
  CHECK(!t1.has_decoder());
  const auto b1 = t1.step(seqs, 0);
  CHECK(b1.l_total == b1.l_enc);
  CHECK(b1.l_dec == 0.0);
  CHECK(b1.timings.decoder_ms == 0.0);

  ObjectiveSettings bow;
  bow.objective = Objective::Bow;
  Trainer<float> t2(cfg, vocab, bow, core::AdamHyper{}, 1);
  CHECK(!t2.has_decoder());
  const auto b2 = t2.step(seqs, 0);
  CHECK(static_cast<float>(b2.l_total) == static_cast<float>(b2.l_enc) + static_cast<float>(b2.l_dec));
  CHECK(b2.timings.decoder_ms == 0.0);
  CHECK(b2.l_dec > 0.0);

  ObjectiveSettings ae;
  ae.objective = Objective::AutoEncoding;
  ae.r_enc = 0.3;
  Trainer<float> t3(cfg, vocab, ae, core::AdamHyper{}, 1);
  CHECK(t3.has_decoder());
  const auto b3 = t3.step(seqs, 0);
  CHECK(b3.l_dec > 0.0);
}

TEST_CASE("mlm loss trends down over 200 steps on a small corpus") {
  const auto cfg = tiny_cfg(64, 32);
  std::vector<std::string> docs;
  Rng drng(31);
  for (int i = 0; i < 50; ++i) {
    std::string d;
    for (int j = 0; j < 8 + static_cast<int>(drng.below(5)); ++j)
      d += "w" + std::to_string(drng.below(50)) + " ";
    docs.push_back(d);
  }
  const text::Vocab vocab = text::Vocab::build(docs, 64);
  std::vector<text::TokenSeq> seqs;
  for (const auto& d : docs) seqs.push_back(text::encode_text(vocab, d, 32));

  ObjectiveSettings fp;
  fp.objective = Objective::FurtherPretrain;
  core::AdamHyper opt;
  opt.lr = 1e-3;
  model::EncoderConfig mcfg = cfg;
  mcfg.vocab = vocab.size();
  Trainer<float> trainer(mcfg, vocab, fp, opt, 11);
  std::vector<double> losses;
  for (int k = 0; k < 200; ++k) {
    const auto batch = sample_batch(seqs, 8, 11, static_cast<std::uint64_t>(k));
    losses.push_back(trainer.step(batch, static_cast<std::uint64_t>(k)).l_enc);
  }
  const auto window = [&](int from) {
    double s = 0;
    for (int i = from; i < from + 20; ++i) s += losses[static_cast<std::size_t>(i)];
    return s / 20;
  };
  const double first = window(0), last = window(180);
  CHECK(last < first * 0.8);
  for (int from = 0; from + 40 <= 200; from += 20) CHECK(window(from + 20) < window(from) + 0.05);
}

TEST_CASE("bow decoder loss drops by 30 percent over 500 steps") {
  const auto cfg = tiny_cfg(64, 32);
  const text::Vocab vocab = toy_vocab(59);
  const auto seqs = helpers::random_seqs(50, 6, 12, 59, 41);
  ObjectiveSettings bow;
  bow.objective = Objective::Bow;
  core::AdamHyper opt;
  opt.lr = 1e-3;
  model::EncoderConfig mcfg = cfg;
  mcfg.vocab = vocab.size();
  Trainer<float> trainer(mcfg, vocab, bow, opt, 17);
  double first = 0, last = 0;
  for (int k = 0; k < 500; ++k) {
    const auto batch = sample_batch(seqs, 8, 17, static_cast<std::uint64_t>(k));
    const auto b = trainer.step(batch, static_cast<std::uint64_t>(k));
    if (k < 20) first += b.l_dec / 20;
    if (k >= 480) last += b.l_dec / 20;
  }
  CHECK(last < first * 0.7);
}

TEST_CASE("trainer steps are reproducible from (seed, step)") {
  const auto cfg = tiny_cfg(40, 16);
  const text::Vocab vocab = toy_vocab(35);
  const auto seqs = helpers::random_seqs(10, 5, 9, 35, 43);
  ObjectiveSettings bow;
  bow.objective = Objective::Bow;
  const auto run = [&]() {
    Trainer<float> t(cfg, vocab, bow, core::AdamHyper{}, 77);
    std::vector<double> losses;
    for (int k = 0; k < 5; ++k) {
      const auto batch = sample_batch(seqs, 4, 77, static_cast<std::uint64_t>(k));
      losses.push_back(t.step(batch, static_cast<std::uint64_t>(k)).l_total);
    }
    return losses;
  };
  CHECK(run() == run());
}
