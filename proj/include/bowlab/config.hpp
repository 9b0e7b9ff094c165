#pragma once

#include <cstdint>
#include <string>

#include "bowlab/errors.hpp"

namespace bowlab {

// All pre-training / fine-tuning knobs plus file paths, parsed from a
// key = value document. Defaults are desk-scale; the reference full-scale
// settings live in paper_scale below.
struct TrainConfig {
  std::string objective = "bow";

  double r_enc = 0.15;
  double r_dec = 0.50;
  double r_attn = 0.50;

  int layers = 2;
  int heads = 4;
  int hidden = 64;
  int ffn = 128;
  int vocab_size = 2000;
  int max_seq_len = 64;
  double dropout = 0.1;

  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;

  int batch_size = 32;
  long steps = 2000;
  int epochs = 3;  // fine-tuning
  std::uint64_t seed = 42;
  int candidates = 1;  // enhanced-decoding mask emulation count

  double temperature = 1.0;
  int group_size = 4;
  bool mine_negatives = false;
  int mine_top_n = 20;

  bool bag_count_weighted = false;
  bool bag_from_masked = false;

  long completed_steps = 0;  // checkpoint resume counter

  std::string corpus_path;
  std::string vocab_path;

  void validate() const;
};

// Reference settings from the original full-scale experiments, selectable via
// the CLI --paper-scale flag. Not usable on a desk machine; kept as documented
// constants.
namespace paper_scale {
inline constexpr int kBatchSize = 2048;
inline constexpr int kEpochs = 20;
inline constexpr int kMaxSeqLen = 512;
inline constexpr int kMsMarcoSeqLen = 144;
inline constexpr double kPretrainLr = 3e-4;
inline constexpr double kFinetuneLr = 2e-5;
inline constexpr int kFinetuneBatch = 64;
inline constexpr int kGroupSize = 16;
inline constexpr int kEnhancedCandidates = 256;
inline constexpr double kDefaultEncMaskRatio = 0.15;
}  // namespace paper_scale

void apply_paper_scale(TrainConfig& cfg);

// Parses a key = value document ('#' comments). Unknown keys are rejected;
// missing keys keep their defaults. BOWLAB_SEED in the environment overrides
// the seed. When the objective is auto_encoding and r_enc was not given
// explicitly, it defaults to 0.30 so r_dec > r_enc holds out of the box.
TrainConfig parse_config_text(const std::string& text);
TrainConfig load_config(const std::string& path);

// Canonical serialization: fixed key order, full precision. parse(serialize(c))
// reproduces c.
std::string serialize_config(const TrainConfig& cfg);

}  // namespace bowlab
