#include "bowlab/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

namespace bowlab::text {

const std::vector<std::string>& Vocab::special_tokens() {
  static const std::vector<std::string> specials = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
  return specials;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : text) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (u >= 0x80 || std::isalnum(u)) {
      cur.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocab Vocab::build(std::span<const std::string> docs, std::size_t max_size, std::size_t min_freq) {
  if (docs.empty()) throw DataError("build_vocab: empty corpus");
  if (max_size < static_cast<std::size_t>(kNumSpecials) + 1)
    throw ConfigError("build_vocab: max_size must be at least " + std::to_string(kNumSpecials + 1));
  std::unordered_map<std::string, std::size_t> freq;
  for (const std::string& doc : docs)
    for (std::string& tok : tokenize(doc)) ++freq[std::move(tok)];
  if (freq.empty()) throw DataError("build_vocab: corpus contains no tokens");

  std::vector<std::pair<std::string, std::size_t>> items;
  items.reserve(freq.size());
  for (auto& [tok, n] : freq)
    if (n >= min_freq) items.emplace_back(tok, n);
  if (items.empty()) throw DataError("build_vocab: no token reaches min_freq");
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::vector<std::string> toks = special_tokens();
  const std::size_t cap = max_size - static_cast<std::size_t>(kNumSpecials);
  for (std::size_t i = 0; i < items.size() && i < cap; ++i) toks.push_back(items[i].first);
  return from_tokens(std::move(toks));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < static_cast<std::size_t>(kNumSpecials) + 1)
    throw DataError("vocab needs at least one non-special token (size >= 6)");
  for (std::int32_t i = 0; i < kNumSpecials; ++i)
    if (tokens[static_cast<std::size_t>(i)] != special_tokens()[static_cast<std::size_t>(i)])
      throw DataError("vocab entry " + std::to_string(i) + " must be " +
                      special_tokens()[static_cast<std::size_t>(i)] + ", got " +
                      tokens[static_cast<std::size_t>(i)]);
  Vocab v;
  v.id_to_token_ = std::move(tokens);
  v.token_to_id_.reserve(v.id_to_token_.size());
  for (std::size_t i = 0; i < v.id_to_token_.size(); ++i) {
    auto [it, inserted] = v.token_to_id_.emplace(v.id_to_token_[i], static_cast<std::int32_t>(i));
    if (!inserted) throw DataError("vocab has duplicate token: " + v.id_to_token_[i]);
  }
  return v;
}

std::int32_t Vocab::id_of(const std::string& token) const {
  const auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token_of(std::int32_t id) const {
  if (id < 0 || id >= size())
    throw DataError("vocab id " + std::to_string(id) + " out of range [0, " + std::to_string(size()) + ")");
  return id_to_token_[static_cast<std::size_t>(id)];
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocab file: " + path);
  for (const std::string& tok : id_to_token_) out << tok << '\n';
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocab file: " + path);
  std::vector<std::string> toks;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    toks.push_back(line);
  }
  return from_tokens(std::move(toks));
}

}  // namespace bowlab::text
