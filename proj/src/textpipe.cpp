#include "bowlab/textpipe.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace bowlab::text {

TokenSeq encode_text(const Vocab& v, const std::string& text, int max_seq_len) {
  if (max_seq_len < 3) throw ConfigError("encode_text: max_seq_len must be >= 3");
  TokenSeq seq;
  seq.source_text = text;
  seq.ids.push_back(kClsId);
  const std::vector<std::string> toks = tokenize(text);
  const std::size_t cap = static_cast<std::size_t>(max_seq_len) - 2;
  for (std::size_t i = 0; i < toks.size() && i < cap; ++i) seq.ids.push_back(v.id_of(toks[i]));
  seq.ids.push_back(kSepId);
  return seq;
}

std::vector<std::string> read_corpus(const std::string& path, std::size_t max_line_bytes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file: " + path);
  std::vector<std::string> docs;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.size() <= max_line_bytes) {
      docs.push_back(line);
      continue;
    }
    // Greedy whitespace split into chunks no longer than max_line_bytes.
    std::size_t start = 0;
    while (start < line.size()) {
      std::size_t end = std::min(start + max_line_bytes, line.size());
      if (end < line.size()) {
        const std::size_t ws = line.rfind(' ', end);
        if (ws != std::string::npos && ws > start) end = ws;
      }
      const std::string chunk = line.substr(start, end - start);
      if (chunk.find_first_not_of(" \t") != std::string::npos) docs.push_back(chunk);
      start = end + (end < line.size() && line[end] == ' ' ? 1 : 0);
    }
  }
  return docs;
}

namespace {

std::vector<std::int32_t> bag_of_ids(std::span<const std::int32_t> ids, bool count_weighted) {
  std::vector<std::int32_t> bag;
  for (const std::int32_t id : ids)
    if (!is_special_id(id)) bag.push_back(id);
  std::sort(bag.begin(), bag.end());
  if (!count_weighted) bag.erase(std::unique(bag.begin(), bag.end()), bag.end());
  return bag;
}

}  // namespace

std::vector<std::int32_t> make_bag(const TokenSeq& seq) { return bag_of_ids(seq.ids, false); }

MaskedBatch make_plain_batch(std::span<const TokenSeq> seqs, const BagOptions& bags) {
  MaskedBatch mb;
  mb.batch = static_cast<int>(seqs.size());
  for (const TokenSeq& s : seqs) mb.len = std::max(mb.len, static_cast<int>(s.ids.size()));
  const std::size_t total = static_cast<std::size_t>(mb.batch) * mb.len;
  mb.input_ids.assign(total, kPadId);
  mb.mlm_labels.assign(total, -1);
  mb.padding_mask.assign(total, 0);
  mb.bag_labels.resize(static_cast<std::size_t>(mb.batch));
  mb.masked_positions.resize(static_cast<std::size_t>(mb.batch));
  for (int b = 0; b < mb.batch; ++b) {
    const auto& ids = seqs[static_cast<std::size_t>(b)].ids;
    mb.row_lengths.push_back(static_cast<std::int32_t>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      mb.input_ids[static_cast<std::size_t>(b) * mb.len + i] = ids[i];
      mb.padding_mask[static_cast<std::size_t>(b) * mb.len + i] = 1;
    }
    mb.bag_labels[static_cast<std::size_t>(b)] = bag_of_ids(ids, bags.count_weighted);
  }
  return mb;
}

MaskedBatch apply_mlm_mask(std::span<const TokenSeq> seqs, const Vocab& v, double r, Rng& rng,
                           const BagOptions& opts) {
  if (!(r > 0.0 && r < 1.0))
    throw ConfigError("apply_mlm_mask: mask ratio must be in (0,1), got " + std::to_string(r));
  MaskedBatch mb = make_plain_batch(seqs, opts);
  mb.mask_ratio = r;
  const std::int32_t vsize = v.size();
  for (int b = 0; b < mb.batch; ++b) {
    const std::size_t base = static_cast<std::size_t>(b) * mb.len;
    std::vector<std::int32_t> maskable;
    for (std::int32_t i = 0; i < mb.row_lengths[static_cast<std::size_t>(b)]; ++i)
      if (!is_special_id(mb.input_ids[base + static_cast<std::size_t>(i)]))
        maskable.push_back(i);
    if (maskable.empty()) {
      ++mb.skipped_rows;
      continue;
    }
    const std::size_t k =
        static_cast<std::size_t>(std::ceil(r * static_cast<double>(maskable.size())));
    rng.partial_shuffle(maskable, k);
    std::vector<std::int32_t> selected(maskable.begin(), maskable.begin() + static_cast<long>(k));
    std::sort(selected.begin(), selected.end());
    for (const std::int32_t pos : selected) {
      const std::size_t at = base + static_cast<std::size_t>(pos);
      mb.mlm_labels[at] = mb.input_ids[at];
      const double u = rng.real01();
      if (u < 0.8) {
        mb.input_ids[at] = kMaskId;
      } else if (u < 0.9) {
        mb.input_ids[at] = kNumSpecials + static_cast<std::int32_t>(rng.below(
                                              static_cast<std::uint64_t>(vsize - kNumSpecials)));
      }  // else keep the original token
      mb.masked_positions[static_cast<std::size_t>(b)].push_back(pos);
    }
    if (opts.from_masked) {
      const std::span<const std::int32_t> row(mb.input_ids.data() + base,
                                              static_cast<std::size_t>(mb.row_lengths[static_cast<std::size_t>(b)]));
      mb.bag_labels[static_cast<std::size_t>(b)] = bag_of_ids(row, opts.count_weighted);
    }
  }
  return mb;
}

}  // namespace bowlab::text
