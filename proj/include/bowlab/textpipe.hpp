#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bowlab/rng.hpp"
#include "bowlab/vocab.hpp"

namespace bowlab::text {

// [CLS] ... [SEP], never longer than max_seq_len, no interior padding.
struct TokenSeq {
  std::vector<std::int32_t> ids;
  std::string source_text;
};

TokenSeq encode_text(const Vocab& v, const std::string& text, int max_seq_len);

// One document per line; overlong lines are split at whitespace.
std::vector<std::string> read_corpus(const std::string& path, std::size_t max_line_bytes = 8192);

// Deduplicated non-special token ids, ascending. Order-free set semantics.
std::vector<std::int32_t> make_bag(const TokenSeq& seq);

struct BagOptions {
  bool count_weighted = false;  // keep duplicates, weighting tokens by count
  bool from_masked = false;     // build bags from post-mask ids (sensitivity probe)
};

struct MaskedBatch {
  int batch = 0;
  int len = 0;
  std::vector<std::int32_t> input_ids;   // batch x len, PAD-filled
  std::vector<std::int32_t> mlm_labels;  // batch x len, -1 where unsupervised
  std::vector<std::uint8_t> padding_mask;  // 1 = real token
  std::vector<std::int32_t> row_lengths;
  std::vector<std::vector<std::int32_t>> bag_labels;        // per row
  std::vector<std::vector<std::int32_t>> masked_positions;  // per row
  double mask_ratio = 0.0;
  int skipped_rows = 0;  // rows with no maskable token

  std::size_t total_masked() const {
    std::size_t n = 0;
    for (const auto& m : masked_positions) n += m.size();
    return n;
  }
};

// Pads a batch without masking (no labels). Bags are still collected.
MaskedBatch make_plain_batch(std::span<const TokenSeq> seqs, const BagOptions& bags = {});

// BERT-style masking: ceil(r * maskable) positions per row, 80% -> [MASK],
// 10% -> random non-special token, 10% unchanged; labels at every selected
// position. Bags come from the pre-mask ids unless opts.from_masked.
MaskedBatch apply_mlm_mask(std::span<const TokenSeq> seqs, const Vocab& v, double r, Rng& rng,
                           const BagOptions& opts = {});

}  // namespace bowlab::text
