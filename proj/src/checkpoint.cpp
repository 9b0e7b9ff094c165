#include "bowlab/checkpoint.hpp"

#include "binio.hpp"

namespace bowlab::ckpt {

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  binio::Writer w(path);
  w.str("BOWL");
  w.u32(kCheckpointVersion);
  w.u64(c.config_text.size());
  w.str(c.config_text);
  for (const TensorRecord& t : c.tensors) {
    std::size_t numel = 1;
    for (const std::uint32_t d : t.dims) numel *= d;
    if (numel != t.data.size())
      throw DataError("checkpoint record " + t.name + ": dims disagree with data length");
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.str(t.name);
    w.u8(static_cast<std::uint8_t>(t.dims.size()));
    for (const std::uint32_t d : t.dims) w.u32(d);
    w.f32_array(t.data.data(), t.data.size());
  }
  w.close();
}

Checkpoint load_checkpoint(const std::string& path) {
  binio::Reader r(path);
  const std::string magic = r.str(4, "magic");
  if (magic != "BOWL") throw DataError(path + ": bad magic \"" + magic + "\", expected BOWL");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion)
    throw DataError(path + ": unsupported checkpoint version " + std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  Checkpoint c;
  const std::uint64_t cfg_len = r.u64("config length");
  c.config_text = r.str(static_cast<std::size_t>(cfg_len), "config text");
  while (!r.at_eof()) {
    TensorRecord t;
    const std::uint32_t name_len = r.u32("tensor name length");
    t.name = r.str(name_len, "tensor name");
    const std::uint8_t rank = r.u8("tensor rank");
    std::size_t numel = 1;
    for (int i = 0; i < rank; ++i) {
      t.dims.push_back(r.u32("tensor dims"));
      numel *= t.dims.back();
    }
    t.data.resize(numel);
    r.f32_array(t.data.data(), numel, ("tensor data of " + t.name).c_str());
    c.tensors.push_back(std::move(t));
  }
  return c;
}

}  // namespace bowlab::ckpt
