#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bowlab/objectives.hpp"

namespace bowlab::interpret {

using model::EncoderParams;
using text::TokenSeq;

// Vocabulary-space projection of a single representation: h . E^T (+ bias).
template <class T>
std::vector<double> project_to_vocab(const EncoderParams<T>& p, std::span<const T> h, bool with_bias = true) {
  if (static_cast<int>(h.size()) != p.cfg.hidden)
    throw ShapeError("project_to_vocab: representation size " + std::to_string(h.size()) +
                     " vs hidden " + std::to_string(p.cfg.hidden));
  for (const T v : h)
    if (!std::isfinite(static_cast<double>(v))) throw NumericError("project_to_vocab: non-finite input");
  const int V = p.cfg.vocab, d = p.cfg.hidden;
  std::vector<double> scores(static_cast<std::size_t>(V), 0.0);
  for (int v = 0; v < V; ++v) {
    double s = with_bias ? static_cast<double>(p.lm_bias.values()[static_cast<std::size_t>(v)]) : 0.0;
    const T* row = p.tok_emb.data() + static_cast<std::size_t>(v) * d;
    for (int j = 0; j < d; ++j) s += static_cast<double>(row[j]) * static_cast<double>(h[static_cast<std::size_t>(j)]);
    scores[static_cast<std::size_t>(v)] = s;
  }
  return scores;
}

// The k largest scores, ties broken by ascending token id.
inline std::vector<std::int32_t> topk_tokens(std::span<const double> scores, int k) {
  const int V = static_cast<int>(scores.size());
  if (k < 1 || k > V)
    throw ConfigError("topk_tokens: k=" + std::to_string(k) + " outside [1, " + std::to_string(V) + "]");
  std::vector<std::int32_t> ids(static_cast<std::size_t>(V));
  std::iota(ids.begin(), ids.end(), 0);
  const auto better = [&scores](std::int32_t a, std::int32_t b) {
    const double sa = scores[static_cast<std::size_t>(a)], sb = scores[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  };
  std::partial_sort(ids.begin(), ids.begin() + k, ids.end(), better);
  ids.resize(static_cast<std::size_t>(k));
  return ids;
}

// Deduplicated non-special input token set of a sequence.
inline std::vector<std::int32_t> input_token_set(const TokenSeq& seq) { return text::make_bag(seq); }

// |topk intersect T| / |T| with T the deduplicated non-special input set.
inline double input_token_coverage(std::span<const std::int32_t> topk, const TokenSeq& seq) {
  const std::vector<std::int32_t> set = input_token_set(seq);
  if (set.empty()) throw DataError("input_token_coverage: no content tokens");
  std::size_t hits = 0;
  for (const std::int32_t t : set)
    if (std::find(topk.begin(), topk.end(), t) != topk.end()) ++hits;
  return static_cast<double>(hits) / static_cast<double>(set.size());
}

// Mean MLM loss over a corpus sample with reproducible evaluation masks,
// weighted by supervised positions.
template <class T>
double eval_mlm_loss(const EncoderParams<T>& p, std::span<const TokenSeq> texts, const text::Vocab& vocab,
                     double r_enc, std::uint64_t seed, int batch_size = 32) {
  if (texts.empty()) throw DataError("eval_mlm_loss: empty sample");
  Rng rng(mix_seed(seed, 0xe7a1));
  double weighted = 0.0;
  std::size_t positions = 0;
  for (std::size_t at = 0; at < texts.size(); at += static_cast<std::size_t>(batch_size)) {
    const std::size_t n = std::min(static_cast<std::size_t>(batch_size), texts.size() - at);
    text::MaskedBatch mb = text::apply_mlm_mask(texts.subspan(at, n), vocab, r_enc, rng);
    if (mb.total_masked() == 0) continue;
    core::Tensor<T> loss = objectives::mlm_loss(p, mb, model::Mode::Eval);
    weighted += static_cast<double>(loss.item()) * static_cast<double>(mb.total_masked());
    positions += mb.total_masked();
  }
  if (positions == 0) throw DataError("eval_mlm_loss: sample has no maskable tokens");
  return weighted / static_cast<double>(positions);
}

struct TextCoverage {
  int text_id = 0;
  std::vector<std::int32_t> top_ids;  // descending score order
  std::vector<double> top_scores;
  std::vector<double> r_by_k;  // aligned with the report's k grid
  std::vector<std::int32_t> input_set;
};

struct CoverageReport {
  std::vector<int> k_grid;
  std::vector<TextCoverage> texts;
  std::vector<double> mean_r;  // aggregate per k
};

inline const std::vector<int>& default_k_grid() {
  static const std::vector<int> grid = {8, 16, 32, 64, 128};
  return grid;
}

// Encodes each text unmasked in eval mode, projects the CLS representation to
// the vocabulary and measures top-k input coverage.
template <class T>
CoverageReport coverage_report(const EncoderParams<T>& p, std::span<const TokenSeq> texts,
                               std::vector<int> k_grid, int keep_top = 20, bool with_bias = true) {
  if (texts.empty()) throw DataError("coverage_report: no texts");
  if (k_grid.empty()) k_grid = default_k_grid();
  for (int& k : k_grid) k = std::min(k, p.cfg.vocab);
  std::sort(k_grid.begin(), k_grid.end());
  k_grid.erase(std::unique(k_grid.begin(), k_grid.end()), k_grid.end());
  const int max_k = std::max(k_grid.back(), std::min(keep_top, p.cfg.vocab));

  CoverageReport report;
  report.k_grid = k_grid;
  report.mean_r.assign(k_grid.size(), 0.0);
  int counted = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const TokenSeq& seq = texts[i];
    TextCoverage tc;
    tc.text_id = static_cast<int>(i);
    tc.input_set = input_token_set(seq);
    if (tc.input_set.empty()) continue;  // no content tokens to cover
    const text::MaskedBatch mb = text::make_plain_batch({&seq, 1});
    const model::EncoderOut<T> out = model::encoder_forward(p, mb, model::Mode::Eval);
    const std::vector<double> scores = project_to_vocab(p, out.cls.values(), with_bias);
    tc.top_ids = topk_tokens(scores, max_k);
    tc.top_scores.reserve(tc.top_ids.size());
    for (const std::int32_t id : tc.top_ids) tc.top_scores.push_back(scores[static_cast<std::size_t>(id)]);
    for (std::size_t g = 0; g < k_grid.size(); ++g) {
      const std::span<const std::int32_t> prefix(tc.top_ids.data(),
                                                 static_cast<std::size_t>(k_grid[g]));
      tc.r_by_k.push_back(input_token_coverage(prefix, seq));
      report.mean_r[g] += tc.r_by_k.back();
    }
    report.texts.push_back(std::move(tc));
    ++counted;
  }
  if (counted == 0) throw DataError("coverage_report: every text was empty");
  for (double& m : report.mean_r) m /= static_cast<double>(counted);
  return report;
}

// text_id,k,r_dominate
void write_coverage_csv(const CoverageReport& report, const std::string& path);
// text_id,rank,token,score,hit
void write_top_tokens_csv(const CoverageReport& report, const text::Vocab& vocab, const std::string& path,
                          int top_n = 20);

}  // namespace bowlab::interpret
