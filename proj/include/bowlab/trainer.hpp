#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bowlab/objectives.hpp"

namespace bowlab::objectives {

struct StepTimings {
  double data_ms = 0.0;
  double encoder_ms = 0.0;
  double decoder_ms = 0.0;  // additional-decoder phase; 0 for bow/further_pretrain
  double total_ms = 0.0;
};

struct LossBundle {
  double l_enc = 0.0;
  double l_dec = 0.0;
  double l_total = 0.0;
  StepTimings timings;
  int skipped_rows = 0;
};

struct ObjectiveSettings {
  Objective objective = Objective::Bow;
  double r_enc = 0.15;
  double r_dec = 0.50;
  double r_attn = 0.50;
  int candidates = 1;  // enhanced-mask emulation count
  text::BagOptions bags;

  void validate() const {
    auto in01 = [](double r) { return r > 0.0 && r < 1.0; };
    if (!in01(r_enc) || !in01(r_dec) || !(r_attn >= 0.0 && r_attn < 1.0))
      throw ConfigError("mask ratios must lie in (0,1)");
    if (objective == Objective::AutoEncoding && !(r_dec > r_enc))
      throw ConfigError("auto_encoding requires r_dec > r_enc");
    if (candidates < 1) throw ConfigError("candidates must be >= 1");
  }
};

namespace detail {
inline double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace detail

// Owns the model and optimizer for one pre-training objective. One step =
// batch assembly (data phase), encoder forward + encoder loss, decoder-side
// loss, one backward and one AdamW update. Per-step randomness derives from
// (seed, step) so a resumed run replays the interrupted one exactly.
template <class T>
class Trainer {
 public:
  Trainer(const model::EncoderConfig& cfg, const text::Vocab& vocab, ObjectiveSettings os,
          core::AdamHyper opt, std::uint64_t seed)
      : vocab_(vocab), settings_(os), seed_(seed) {
    settings_.validate();
    enc_ = model::init_params<T>(cfg);
    if (needs_decoder(os.objective)) dec_ = model::init_decoder<T>(cfg);
    opt_ = std::make_unique<core::AdamW<T>>(collect_params(), opt);
  }

  LossBundle step(std::span<const text::TokenSeq> docs, std::uint64_t step_index) {
    Rng rng = step_rng(seed_, step_index);
    const auto t_start = std::chrono::steady_clock::now();
    LossBundle out;

    // Data phase: masking, bags and (for enhanced decoding) mask sampling.
    text::MaskedBatch enc_batch = text::apply_mlm_mask(docs, vocab_, settings_.r_enc, rng, settings_.bags);
    std::optional<text::MaskedBatch> dec_batch;
    std::vector<EnhancedAttnMask> attn_masks;
    switch (settings_.objective) {
      case Objective::AutoEncoding:
        dec_batch = text::apply_mlm_mask(docs, vocab_, settings_.r_dec, rng);
        break;
      case Objective::AutoRegression:
        dec_batch = text::make_plain_batch(docs);
        break;
      case Objective::EnhancedDecoding: {
        dec_batch = text::make_plain_batch(docs);
        attn_masks.reserve(docs.size());
        for (const std::int32_t len : dec_batch->row_lengths)
          attn_masks.push_back(build_enhanced_attn_mask(len, settings_.r_attn, rng, settings_.candidates));
        break;
      }
      default: break;
    }
    out.skipped_rows = enc_batch.skipped_rows;
    out.timings.data_ms = detail::ms_since(t_start);

    core::Tape<T> tape;
    typename core::Tape<T>::Scope scope(tape);

    const auto t_enc = std::chrono::steady_clock::now();
    model::EncoderOut<T> eo = model::encoder_forward(enc_, enc_batch, model::Mode::Train, &rng);
    Tensor<T> l_enc = mlm_loss_from_hidden(enc_, eo.hidden, enc_batch);
    Tensor<T> l_total = l_enc;
    Tensor<T> l_dec;
    if (settings_.objective == Objective::Bow) {
      l_dec = bow_loss(enc_, eo.cls, enc_batch.bag_labels);
      l_total = core::add(l_enc, l_dec);
    }
    out.timings.encoder_ms = detail::ms_since(t_enc);

    const auto t_dec = std::chrono::steady_clock::now();
    switch (settings_.objective) {
      case Objective::AutoEncoding:
        l_dec = autoencoding_decoder_loss(enc_, *dec_, eo.cls, *dec_batch, settings_.r_dec,
                                          settings_.r_enc, model::Mode::Train, &rng);
        l_total = core::add(l_enc, l_dec);
        break;
      case Objective::AutoRegression:
        l_dec = autoregression_decoder_loss(enc_, *dec_, eo.cls, *dec_batch, model::Mode::Train, &rng);
        l_total = core::add(l_enc, l_dec);
        break;
      case Objective::EnhancedDecoding:
        l_dec = enhanced_decoding_loss(enc_, *dec_, eo.cls, *dec_batch, attn_masks, model::Mode::Train,
                                       &rng);
        l_total = core::add(l_enc, l_dec);
        break;
      default: break;
    }
    if (needs_decoder(settings_.objective)) out.timings.decoder_ms = detail::ms_since(t_dec);

    out.l_enc = static_cast<double>(l_enc.item());
    out.l_dec = l_dec.defined() ? static_cast<double>(l_dec.item()) : 0.0;
    out.l_total = static_cast<double>(l_total.item());
    if (!std::isfinite(out.l_total))
      throw NumericError("step " + std::to_string(step_index) + ": non-finite loss " +
                         std::to_string(out.l_total));

    opt_->zero_grad();
    tape.backward(l_total);
    opt_->step();
    out.timings.total_ms = detail::ms_since(t_start);
    return out;
  }

  model::EncoderParams<T>& encoder() { return enc_; }
  const model::EncoderParams<T>& encoder() const { return enc_; }
  bool has_decoder() const { return dec_.has_value(); }
  model::DecoderParams<T>& decoder() { return *dec_; }
  core::AdamW<T>& optimizer() { return *opt_; }
  const ObjectiveSettings& settings() const { return settings_; }
  std::uint64_t seed() const { return seed_; }
  const text::Vocab& vocab() const { return vocab_; }

  std::vector<std::pair<std::string, Tensor<T>>> collect_params() const {
    auto out = model::named_params(enc_);
    if (dec_) {
      auto d = model::named_params(*dec_);
      out.insert(out.end(), d.begin(), d.end());
    }
    return out;
  }

 private:
  const text::Vocab& vocab_;
  ObjectiveSettings settings_;
  std::uint64_t seed_;
  model::EncoderParams<T> enc_;
  std::optional<model::DecoderParams<T>> dec_;
  std::unique_ptr<core::AdamW<T>> opt_;
};

// Deterministic with-replacement batch sampler, decoupled from the trainer's
// per-step stream.
inline std::vector<text::TokenSeq> sample_batch(std::span<const text::TokenSeq> corpus, int batch_size,
                                                std::uint64_t seed, std::uint64_t step_index) {
  Rng rng(mix_seed(mix_seed(seed, 0xba7c5), step_index));
  std::vector<text::TokenSeq> out;
  out.reserve(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i)
    out.push_back(corpus[static_cast<std::size_t>(rng.below(corpus.size()))]);
  return out;
}

// step,objective,l_enc,l_dec,l_total,data_ms,encoder_ms,decoder_ms,total_ms
class MetricsCsv {
 public:
  explicit MetricsCsv(const std::string& path) {
    if (path.empty()) return;
    out_.open(path);
    if (!out_) throw DataError("cannot write metrics csv: " + path);
    out_ << "step,objective,l_enc,l_dec,l_total,data_ms,encoder_ms,decoder_ms,total_ms\n";
  }

  void row(std::uint64_t step, Objective obj, const LossBundle& b) {
    if (!out_.is_open()) return;
    out_ << step << ',' << objective_name(obj) << ',' << b.l_enc << ',' << b.l_dec << ',' << b.l_total
         << ',' << b.timings.data_ms << ',' << b.timings.encoder_ms << ',' << b.timings.decoder_ms << ','
         << b.timings.total_ms << '\n';
  }

 private:
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Step-time benchmark across objectives under an identical model and batch.

struct BenchRow {
  std::string objective;
  double data_ms = 0.0;
  double encoder_ms = 0.0;
  double decoder_ms = 0.0;
  double total_ms = 0.0;
  double samples_per_sec = 0.0;
  double degeneration_pct = 0.0;  // vs further_pretrain
};

namespace detail {
inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace detail

template <class T>
BenchRow bench_objective(const model::EncoderConfig& cfg, const text::Vocab& vocab,
                         ObjectiveSettings os, std::span<const text::TokenSeq> corpus, int batch_size,
                         int steps, int warmup, std::uint64_t seed) {
  if (steps < 10) throw ConfigError("benchmark needs at least 10 timed steps for stable medians");
  Trainer<T> trainer(cfg, vocab, os, core::AdamHyper{}, seed);
  std::vector<double> data, enc, dec, total, sps;
  for (int s = 0; s < warmup + steps; ++s) {
    const auto batch = sample_batch(corpus, batch_size, seed, static_cast<std::uint64_t>(s));
    const LossBundle b = trainer.step(batch, static_cast<std::uint64_t>(s));
    if (s < warmup) continue;
    data.push_back(b.timings.data_ms);
    enc.push_back(b.timings.encoder_ms);
    dec.push_back(b.timings.decoder_ms);
    total.push_back(b.timings.total_ms);
    sps.push_back(1000.0 * batch_size / b.timings.total_ms);
  }
  BenchRow row;
  row.objective = objective_name(os.objective);
  row.data_ms = detail::median(data);
  row.encoder_ms = detail::median(enc);
  row.decoder_ms = detail::median(dec);
  row.total_ms = detail::median(total);
  row.samples_per_sec = detail::median(sps);
  return row;
}

// Runs every requested objective; degeneration is relative throughput loss vs
// further_pretrain, which always runs first as the baseline.
template <class T>
std::vector<BenchRow> run_benchmark(const model::EncoderConfig& cfg, const text::Vocab& vocab,
                                    const ObjectiveSettings& base, std::vector<Objective> objectives,
                                    std::span<const text::TokenSeq> corpus, int batch_size, int steps,
                                    int warmup, std::uint64_t seed) {
  ObjectiveSettings fp = base;
  fp.objective = Objective::FurtherPretrain;
  const BenchRow baseline = bench_objective<T>(cfg, vocab, fp, corpus, batch_size, steps, warmup, seed);

  std::vector<BenchRow> rows;
  for (const Objective o : objectives) {
    BenchRow row;
    if (o == Objective::FurtherPretrain) {
      row = baseline;
    } else {
      ObjectiveSettings os = base;
      os.objective = o;
      row = bench_objective<T>(cfg, vocab, os, corpus, batch_size, steps, warmup, seed);
    }
    row.degeneration_pct =
        100.0 * (baseline.samples_per_sec - row.samples_per_sec) / baseline.samples_per_sec;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace bowlab::objectives
