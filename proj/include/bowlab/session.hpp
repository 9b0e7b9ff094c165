#pragma once

#include <memory>
#include <string>
#include <utility>

#include "bowlab/checkpoint.hpp"
#include "bowlab/config.hpp"
#include "bowlab/trainer.hpp"

namespace bowlab {

inline model::EncoderConfig encoder_config_from(const TrainConfig& cfg, int actual_vocab) {
  model::EncoderConfig ec;
  ec.layers = cfg.layers;
  ec.heads = cfg.heads;
  ec.hidden = cfg.hidden;
  ec.ffn = cfg.ffn;
  ec.vocab = actual_vocab;
  ec.max_seq_len = cfg.max_seq_len;
  ec.dropout = cfg.dropout;
  ec.seed = cfg.seed;
  return ec;
}

inline objectives::ObjectiveSettings objective_settings_from(const TrainConfig& cfg) {
  objectives::ObjectiveSettings os;
  os.objective = objectives::parse_objective(cfg.objective);
  os.r_enc = cfg.r_enc;
  os.r_dec = cfg.r_dec;
  os.r_attn = cfg.r_attn;
  os.candidates = cfg.candidates;
  os.bags.count_weighted = cfg.bag_count_weighted;
  os.bags.from_masked = cfg.bag_from_masked;
  return os;
}

inline core::AdamHyper adam_hyper_from(const TrainConfig& cfg) {
  core::AdamHyper h;
  h.lr = cfg.lr;
  h.beta1 = cfg.beta1;
  h.beta2 = cfg.beta2;
  h.eps = cfg.adam_eps;
  h.weight_decay = cfg.weight_decay;
  return h;
}

// ---------------------------------------------------------------------------
// Checkpoint adapters.

namespace detail {

template <class T>
ckpt::TensorRecord to_record(const std::string& name, const core::Tensor<T>& t) {
  ckpt::TensorRecord rec;
  rec.name = name;
  for (const int d : t.shape()) rec.dims.push_back(static_cast<std::uint32_t>(d));
  rec.data.reserve(t.numel());
  for (const T v : t.values()) rec.data.push_back(static_cast<float>(v));
  return rec;
}

inline ckpt::TensorRecord vec_record(const std::string& name, const std::vector<float>& v) {
  ckpt::TensorRecord rec;
  rec.name = name;
  rec.dims.push_back(static_cast<std::uint32_t>(v.size()));
  rec.data = v;
  return rec;
}

template <class T>
void fill_from_record(core::Tensor<T>& t, const ckpt::Checkpoint& c, const std::string& name) {
  const ckpt::TensorRecord* rec = c.find(name);
  if (!rec) throw DataError("checkpoint is missing tensor " + name);
  if (rec->data.size() != t.numel())
    throw DataError("checkpoint tensor " + name + " has " + std::to_string(rec->data.size()) +
                    " values, expected " + std::to_string(t.numel()));
  for (std::size_t i = 0; i < rec->data.size(); ++i) t.values()[i] = static_cast<T>(rec->data[i]);
}

}  // namespace detail

// Parameters, optimizer moments and the step counter (inside the config text).
template <class T>
ckpt::Checkpoint checkpoint_from_trainer(objectives::Trainer<T>& trainer, TrainConfig cfg) {
  cfg.completed_steps = static_cast<long>(trainer.optimizer().step_count());
  ckpt::Checkpoint c;
  c.config_text = serialize_config(cfg);
  const auto& params = trainer.optimizer().params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    c.tensors.push_back(detail::to_record(params[i].first, params[i].second));
    const core::AdamState<T>& st = trainer.optimizer().state(i);
    std::vector<float> m(st.m.begin(), st.m.end());
    std::vector<float> v(st.v.begin(), st.v.end());
    c.tensors.push_back(detail::vec_record(params[i].first + ".adam_m", m));
    c.tensors.push_back(detail::vec_record(params[i].first + ".adam_v", v));
  }
  return c;
}

template <class T>
void restore_trainer(objectives::Trainer<T>& trainer, const ckpt::Checkpoint& c, long completed_steps) {
  auto& opt = trainer.optimizer();
  const auto& params = opt.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    core::Tensor<T> t = params[i].second;
    detail::fill_from_record(t, c, params[i].first);
    core::AdamState<T>& st = opt.state(i);
    const ckpt::TensorRecord* m = c.find(params[i].first + ".adam_m");
    const ckpt::TensorRecord* v = c.find(params[i].first + ".adam_v");
    if (!m || !v) throw DataError("checkpoint is missing optimizer state for " + params[i].first);
    if (m->data.size() != st.m.size() || v->data.size() != st.v.size())
      throw DataError("checkpoint optimizer state for " + params[i].first + " has wrong length");
    for (std::size_t j = 0; j < st.m.size(); ++j) st.m[j] = static_cast<T>(m->data[j]);
    for (std::size_t j = 0; j < st.v.size(); ++j) st.v[j] = static_cast<T>(v->data[j]);
  }
  opt.set_step_count(completed_steps);
}

// Eval-side view of a checkpoint: config, vocab and bare encoder parameters.
template <class T>
struct LoadedEncoder {
  TrainConfig cfg;
  std::unique_ptr<text::Vocab> vocab;
  model::EncoderParams<T> params;
};

template <class T>
LoadedEncoder<T> load_encoder(const std::string& checkpoint_path, const std::string& vocab_override = "") {
  const ckpt::Checkpoint c = ckpt::load_checkpoint(checkpoint_path);
  LoadedEncoder<T> out;
  out.cfg = parse_config_text(c.config_text);
  const std::string vocab_path = vocab_override.empty() ? out.cfg.vocab_path : vocab_override;
  if (vocab_path.empty())
    throw DataError("checkpoint config has no vocab_path; pass the vocab file explicitly");
  out.vocab = std::make_unique<text::Vocab>(text::Vocab::load(vocab_path));
  out.params = model::init_params<T>(encoder_config_from(out.cfg, out.vocab->size()));
  for (auto& [name, tensor] : model::named_params(out.params)) {
    core::Tensor<T> t = tensor;
    detail::fill_from_record(t, c, name);
  }
  return out;
}

// Owns everything a training command needs. The vocab lives behind a
// unique_ptr so the trainer's reference stays valid across moves.
template <class T>
struct Session {
  TrainConfig cfg;
  std::unique_ptr<text::Vocab> vocab;
  std::unique_ptr<objectives::Trainer<T>> trainer;
  long start_step = 0;

  Session(TrainConfig config, text::Vocab v) : cfg(std::move(config)) {
    vocab = std::make_unique<text::Vocab>(std::move(v));
    trainer = std::make_unique<objectives::Trainer<T>>(encoder_config_from(cfg, vocab->size()), *vocab,
                                                       objective_settings_from(cfg), adam_hyper_from(cfg),
                                                       cfg.seed);
  }

  static Session from_checkpoint(const std::string& path, const std::string& vocab_override = "") {
    const ckpt::Checkpoint c = ckpt::load_checkpoint(path);
    TrainConfig cfg = parse_config_text(c.config_text);
    const std::string vocab_path = vocab_override.empty() ? cfg.vocab_path : vocab_override;
    if (vocab_path.empty())
      throw DataError("checkpoint config has no vocab_path; pass the vocab file explicitly");
    Session s(cfg, text::Vocab::load(vocab_path));
    restore_trainer(*s.trainer, c, cfg.completed_steps);
    s.start_step = cfg.completed_steps;
    return s;
  }

  void save(const std::string& path) { ckpt::save_checkpoint(path, checkpoint_from_trainer(*trainer, cfg)); }
};

}  // namespace bowlab
