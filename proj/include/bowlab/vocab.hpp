#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bowlab/errors.hpp"

namespace bowlab::text {

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;
inline constexpr std::int32_t kClsId = 2;
inline constexpr std::int32_t kSepId = 3;
inline constexpr std::int32_t kMaskId = 4;
inline constexpr std::int32_t kNumSpecials = 5;

inline bool is_special_id(std::int32_t id) { return id >= 0 && id < kNumSpecials; }

// Lowercased maximal runs of alphanumeric characters (bytes >= 0x80 count as
// word characters so multi-byte UTF-8 sequences stay intact).
std::vector<std::string> tokenize(const std::string& text);

// token <-> id map with the five specials pinned at ids 0..4.
class Vocab {
 public:
  // Most frequent corpus tokens, capped at max_size including the specials.
  // Ties break lexicographically.
  static Vocab build(std::span<const std::string> docs, std::size_t max_size, std::size_t min_freq = 1);

  // From a full id->token list whose first five entries are the specials.
  static Vocab from_tokens(std::vector<std::string> tokens);

  std::int32_t id_of(const std::string& token) const;  // kUnkId when absent
  const std::string& token_of(std::int32_t id) const;
  std::int32_t size() const { return static_cast<std::int32_t>(id_to_token_.size()); }

  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

  static const std::vector<std::string>& special_tokens();

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::int32_t> token_to_id_;
};

}  // namespace bowlab::text
