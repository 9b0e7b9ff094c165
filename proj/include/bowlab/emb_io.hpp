#pragma once

#include <string>

#include "bowlab/retrieval.hpp"

namespace bowlab::retrieval {

// Binary embedding file: magic "BEMB", u32 version, u32 N, u32 d,
// N*d little-endian float32, then N newline-separated UTF-8 ids.
inline constexpr std::uint32_t kEmbVersion = 1;

void write_embeddings(const EmbeddingMatrix& m, const std::string& path);
EmbeddingMatrix read_embeddings(const std::string& path);

}  // namespace bowlab::retrieval
