#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "bowlab/metrics.hpp"
#include "bowlab/trainer.hpp"

namespace bowlab::retrieval {

enum class SimMode { Dot, Cosine };

template <class T>
double similarity(std::span<const T> vq, std::span<const T> vp, SimMode mode = SimMode::Dot) {
  if (vq.size() != vp.size())
    throw ShapeError("similarity: dims " + std::to_string(vq.size()) + " vs " + std::to_string(vp.size()));
  double dot = 0.0, nq = 0.0, np = 0.0;
  for (std::size_t i = 0; i < vq.size(); ++i) {
    dot += static_cast<double>(vq[i]) * static_cast<double>(vp[i]);
    nq += static_cast<double>(vq[i]) * static_cast<double>(vq[i]);
    np += static_cast<double>(vp[i]) * static_cast<double>(vp[i]);
  }
  if (mode == SimMode::Dot) return dot;
  if (nq == 0.0 || np == 0.0) throw DataError("similarity: zero vector in cosine mode");
  return dot / (std::sqrt(nq) * std::sqrt(np));
}

// In-batch-negative cross entropy over similarity logits. p_reps holds B
// groups of group_size passages; query i's positive sits at row i*group_size.
template <class T>
core::Tensor<T> contrastive_loss(const core::Tensor<T>& q_reps, const core::Tensor<T>& p_reps,
                                 int group_size, double temperature) {
  if (temperature <= 0.0) throw ConfigError("contrastive_loss: temperature must be > 0");
  const int B = q_reps.dim(0);
  if (p_reps.dim(0) != B * group_size || p_reps.dim(1) != q_reps.dim(1))
    throw ShapeError("contrastive_loss: group bookkeeping mismatch, queries " +
                     core::shape_str(q_reps.shape()) + " vs passages " + core::shape_str(p_reps.shape()) +
                     " with group size " + std::to_string(group_size));
  core::Tensor<T> logits =
      core::scale(core::matmul_nt(q_reps, p_reps), static_cast<T>(1.0 / temperature));
  std::vector<std::int32_t> targets(static_cast<std::size_t>(B));
  for (int i = 0; i < B; ++i) targets[static_cast<std::size_t>(i)] = i * group_size;
  return core::cross_entropy_from_logits(logits, std::move(targets));
}

struct EmbeddingMatrix {
  int n = 0;
  int d = 0;
  std::vector<float> data;       // row-major n x d
  std::vector<std::string> ids;  // row order

  std::span<const float> row(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
  }
};

// Eval-mode CLS representations, row order = input order.
template <class T>
EmbeddingMatrix encode_corpus(const model::EncoderParams<T>& p, const text::Vocab& vocab,
                              std::span<const std::string> ids, std::span<const std::string> texts,
                              int batch_size = 32) {
  if (texts.empty()) throw DataError("encode_corpus: empty collection");
  if (ids.size() != texts.size()) throw DataError("encode_corpus: ids/texts length mismatch");
  EmbeddingMatrix out;
  out.n = static_cast<int>(texts.size());
  out.d = p.cfg.hidden;
  out.data.resize(static_cast<std::size_t>(out.n) * out.d);
  out.ids.assign(ids.begin(), ids.end());
  std::vector<text::TokenSeq> seqs;
  for (std::size_t at = 0; at < texts.size(); at += static_cast<std::size_t>(batch_size)) {
    const std::size_t n = std::min(static_cast<std::size_t>(batch_size), texts.size() - at);
    seqs.clear();
    for (std::size_t i = 0; i < n; ++i)
      seqs.push_back(text::encode_text(vocab, texts[at + i], p.cfg.max_seq_len));
    const text::MaskedBatch mb = text::make_plain_batch(seqs);
    const model::EncoderOut<T> eo = model::encoder_forward(p, mb, model::Mode::Eval);
    for (std::size_t i = 0; i < n; ++i)
      for (int j = 0; j < out.d; ++j)
        out.data[(at + i) * out.d + static_cast<std::size_t>(j)] =
            static_cast<float>(eo.cls.values()[i * static_cast<std::size_t>(out.d) + static_cast<std::size_t>(j)]);
  }
  return out;
}

struct SearchInfo {
  int clipped_queries = 0;  // top_n larger than the collection
};

// Exact top-n by dot product, score-descending, ties by ascending passage id.
RunResult brute_force_search(const EmbeddingMatrix& queries, const EmbeddingMatrix& corpus, int top_n,
                             SearchInfo* info = nullptr);

// ---------------------------------------------------------------------------
// Contrastive fine-tuning.

struct Triple {
  std::string query;
  std::string pos_pid;
  std::vector<std::string> neg_pids;
};

struct Collection {
  std::vector<std::string> pids;
  std::vector<std::string> texts;
  std::unordered_map<std::string, std::size_t> index;

  void add(std::string pid, std::string text);
  const std::string& text_of(const std::string& pid) const;
};

struct FinetuneConfig {
  int epochs = 3;
  int batch_queries = 8;
  int group_size = 4;
  double temperature = 1.0;
  core::AdamHyper opt;
  std::uint64_t seed = 42;
  bool mine_negatives = false;  // one ANCE-style round after the main epochs
  int mine_top_n = 20;
  int mine_epochs = 1;
};

struct FinetuneLog {
  std::vector<double> step_losses;
  std::vector<double> epoch_mean_loss;
  int mined_triples = 0;
};

// Replaces each triple's negatives with retrieval-mined ones, excluding every
// known positive of that query.
template <class T>
std::vector<Triple> mine_negatives(const model::EncoderParams<T>& p, const text::Vocab& vocab,
                                   const std::vector<Triple>& triples, const Collection& coll, int top_n) {
  std::unordered_map<std::string, std::unordered_set<std::string>> positives;
  for (const Triple& t : triples) positives[t.query].insert(t.pos_pid);

  std::vector<std::string> qids, qtexts;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    qids.push_back("q" + std::to_string(i));
    qtexts.push_back(triples[i].query);
  }
  const EmbeddingMatrix qm = encode_corpus(p, vocab, qids, qtexts);
  const EmbeddingMatrix cm = encode_corpus(p, vocab, coll.pids, coll.texts);
  const RunResult run = brute_force_search(qm, cm, top_n);

  std::vector<Triple> mined = triples;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto& entries = run.ranked.at(qids[i]);
    std::vector<std::string> negs;
    for (const RunEntry& e : entries) {
      if (positives[triples[i].query].count(e.pid)) continue;
      negs.push_back(e.pid);
    }
    if (!negs.empty()) mined[i].neg_pids = std::move(negs);
  }
  return mined;
}

namespace detail {

template <class T>
double finetune_epoch(model::EncoderParams<T>& p, core::AdamW<T>& opt, const std::vector<Triple>& triples,
                      const Collection& coll, const text::Vocab& vocab, const FinetuneConfig& cfg,
                      std::uint64_t epoch_index, FinetuneLog& log) {
  std::vector<std::size_t> order(triples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(cfg.seed, 0xf17e + epoch_index));
  rng.shuffle(order);

  double epoch_loss = 0.0;
  int steps = 0;
  for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_queries)) {
    const std::size_t nb = std::min(static_cast<std::size_t>(cfg.batch_queries), order.size() - at);
    std::vector<text::TokenSeq> qseqs, pseqs;
    for (std::size_t i = 0; i < nb; ++i) {
      const Triple& t = triples[order[at + i]];
      qseqs.push_back(text::encode_text(vocab, t.query, p.cfg.max_seq_len));
      pseqs.push_back(text::encode_text(vocab, coll.text_of(t.pos_pid), p.cfg.max_seq_len));
      for (int g = 1; g < cfg.group_size; ++g) {
        std::string neg;
        if (!t.neg_pids.empty()) {
          neg = t.neg_pids[static_cast<std::size_t>(g - 1) % t.neg_pids.size()];
        } else {
          // No negatives provided: sample any other passage.
          do {
            neg = coll.pids[static_cast<std::size_t>(rng.below(coll.pids.size()))];
          } while (neg == t.pos_pid && coll.pids.size() > 1);
        }
        pseqs.push_back(text::encode_text(vocab, coll.text_of(neg), p.cfg.max_seq_len));
      }
    }
    const text::MaskedBatch qb = text::make_plain_batch(qseqs);
    const text::MaskedBatch pb = text::make_plain_batch(pseqs);
    core::Tape<T> tape;
    typename core::Tape<T>::Scope scope(tape);
    const model::EncoderOut<T> qo = model::encoder_forward(p, qb, model::Mode::Train, &rng);
    const model::EncoderOut<T> po = model::encoder_forward(p, pb, model::Mode::Train, &rng);
    core::Tensor<T> loss = contrastive_loss(qo.cls, po.cls, cfg.group_size, cfg.temperature);
    const double lv = static_cast<double>(loss.item());
    if (!std::isfinite(lv)) throw NumericError("finetune: non-finite loss");
    opt.zero_grad();
    tape.backward(loss);
    opt.step();
    log.step_losses.push_back(lv);
    epoch_loss += lv;
    ++steps;
  }
  return steps ? epoch_loss / steps : 0.0;
}

}  // namespace detail

// Epochs of in-batch-negative contrastive training; optionally one further
// round on freshly mined negatives.
template <class T>
FinetuneLog finetune(model::EncoderParams<T>& p, const std::vector<Triple>& triples,
                     const Collection& coll, const text::Vocab& vocab, const FinetuneConfig& cfg) {
  if (triples.empty()) throw DataError("finetune: no training triples");
  for (const Triple& t : triples) {
    coll.text_of(t.pos_pid);  // resolvable
    for (const std::string& n : t.neg_pids) {
      coll.text_of(n);
      if (n == t.pos_pid) throw DataError("finetune: positive " + n + " repeated among negatives");
    }
  }
  FinetuneLog log;
  core::AdamW<T> opt(model::named_params(p), cfg.opt);
  for (int e = 0; e < cfg.epochs; ++e)
    log.epoch_mean_loss.push_back(
        detail::finetune_epoch(p, opt, triples, coll, vocab, cfg, static_cast<std::uint64_t>(e), log));
  if (cfg.mine_negatives) {
    const std::vector<Triple> mined = mine_negatives(p, vocab, triples, coll, cfg.mine_top_n);
    log.mined_triples = static_cast<int>(mined.size());
    for (int e = 0; e < cfg.mine_epochs; ++e)
      log.epoch_mean_loss.push_back(detail::finetune_epoch(
          p, opt, mined, coll, vocab, cfg, static_cast<std::uint64_t>(cfg.epochs + e), log));
  }
  return log;
}

}  // namespace bowlab::retrieval
