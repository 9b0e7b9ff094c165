#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bowlab/errors.hpp"

namespace bowlab::ckpt {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorRecord {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

// Config text plus named float32 arrays (parameters and optimizer moments).
// Binary layout: magic "BOWL", u32 version, u64 config length, config bytes,
// then per record: u32 name length, name, u8 rank, u32 dims..., float32 data.
struct Checkpoint {
  std::string config_text;
  std::vector<TensorRecord> tensors;

  const TensorRecord* find(const std::string& name) const {
    for (const TensorRecord& t : tensors)
      if (t.name == name) return &t;
    return nullptr;
  }
};

void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace bowlab::ckpt
