#include "bowlab/emb_io.hpp"

#include "binio.hpp"

namespace bowlab::retrieval {

void write_embeddings(const EmbeddingMatrix& m, const std::string& path) {
  binio::Writer w(path);
  w.str("BEMB");
  w.u32(kEmbVersion);
  w.u32(static_cast<std::uint32_t>(m.n));
  w.u32(static_cast<std::uint32_t>(m.d));
  w.f32_array(m.data.data(), m.data.size());
  for (const std::string& id : m.ids) {
    w.str(id);
    w.str("\n");
  }
  w.close();
}

EmbeddingMatrix read_embeddings(const std::string& path) {
  binio::Reader r(path);
  const std::string magic = r.str(4, "magic");
  if (magic != "BEMB") throw DataError(path + ": bad magic \"" + magic + "\", expected BEMB");
  const std::uint32_t version = r.u32("version");
  if (version != kEmbVersion)
    throw DataError(path + ": unsupported embedding file version " + std::to_string(version) +
                    " (expected " + std::to_string(kEmbVersion) + ")");
  EmbeddingMatrix m;
  m.n = static_cast<int>(r.u32("row count"));
  m.d = static_cast<int>(r.u32("dimension"));
  m.data.resize(static_cast<std::size_t>(m.n) * static_cast<std::size_t>(m.d));
  r.f32_array(m.data.data(), m.data.size(), "embedding values");
  for (int i = 0; i < m.n; ++i) {
    std::string id;
    char c;
    while (true) {
      r.bytes(&c, 1, "id list");
      if (c == '\n') break;
      id.push_back(c);
    }
    m.ids.push_back(std::move(id));
  }
  return m;
}

}  // namespace bowlab::retrieval
