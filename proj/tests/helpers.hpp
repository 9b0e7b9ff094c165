#pragma once

// Small fixtures shared across test suites.

#include <string>
#include <vector>

#include "bowlab/objectives.hpp"

namespace helpers {

inline bowlab::model::EncoderConfig tiny_cfg(int vocab = 50, int hidden = 16, int seed = 7) {
  bowlab::model::EncoderConfig cfg;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.hidden = hidden;
  cfg.ffn = hidden * 2;
  cfg.vocab = vocab;
  cfg.max_seq_len = 32;
  cfg.dropout = 0.0;
  cfg.seed = static_cast<std::uint64_t>(seed);
  return cfg;
}

inline bowlab::text::Vocab toy_vocab(int words) {
  std::vector<std::string> toks = bowlab::text::Vocab::special_tokens();
  for (int i = 0; i < words; ++i) toks.push_back("w" + std::to_string(i));
  return bowlab::text::Vocab::from_tokens(std::move(toks));
}

inline bowlab::text::TokenSeq seq_of(const std::vector<std::int32_t>& content) {
  bowlab::text::TokenSeq s;
  s.ids.push_back(bowlab::text::kClsId);
  for (const auto id : content) s.ids.push_back(id);
  s.ids.push_back(bowlab::text::kSepId);
  return s;
}

// Deterministic pseudo-random token sequences over a toy vocab.
inline std::vector<bowlab::text::TokenSeq> random_seqs(int count, int min_len, int max_len, int words,
                                                       std::uint64_t seed) {
  bowlab::Rng rng(seed);
  std::vector<bowlab::text::TokenSeq> seqs;
  for (int i = 0; i < count; ++i) {
    const int len = min_len + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_len - min_len + 1)));
    std::vector<std::int32_t> content;
    for (int j = 0; j < len; ++j)
      content.push_back(bowlab::text::kNumSpecials + static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(words))));
    seqs.push_back(seq_of(content));
  }
  return seqs;
}

}  // namespace helpers
