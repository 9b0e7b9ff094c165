#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bowlab/tensor.hpp"

namespace bowlab::core {

template <class T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
};

struct AdamHyper {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// One decoupled-weight-decay update. t is the already-incremented step count
// used for bias correction. state must start zeroed (or empty, which zeroes it).
template <class T>
void adamw_step(std::span<T> param, std::span<const T> grad, AdamState<T>& state, std::int64_t t,
                const AdamHyper& h) {
  if (state.m.empty()) state.m.assign(param.size(), T(0));
  if (state.v.empty()) state.v.assign(param.size(), T(0));
  if (grad.size() != param.size() || state.m.size() != param.size() || state.v.size() != param.size())
    throw ShapeError("adamw_step: param/grad/state size mismatch (" + std::to_string(param.size()) + "/" +
                     std::to_string(grad.size()) + "/" + std::to_string(state.m.size()) + ")");
  const T b1 = static_cast<T>(h.beta1), b2 = static_cast<T>(h.beta2);
  const T corr1 = static_cast<T>(1.0 - std::pow(h.beta1, static_cast<double>(t)));
  const T corr2 = static_cast<T>(1.0 - std::pow(h.beta2, static_cast<double>(t)));
  const T lr = static_cast<T>(h.lr), eps = static_cast<T>(h.eps), wd = static_cast<T>(h.weight_decay);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T g = grad[i];
    state.m[i] = b1 * state.m[i] + (T(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (T(1) - b2) * g * g;
    const T mhat = state.m[i] / corr1;
    const T vhat = state.v[i] / corr2;
    param[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * param[i]);
  }
}

// Owns the moment buffers for a fixed, ordered parameter list.
template <class T>
class AdamW {
 public:
  using NamedParams = std::vector<std::pair<std::string, Tensor<T>>>;

  AdamW(NamedParams params, AdamHyper hyper) : params_(std::move(params)), hyper_(hyper) {
    states_.resize(params_.size());
  }

  void step() {
    ++t_;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor<T>& p = params_[i].second;
      p.ensure_grad();
      adamw_step<T>(p.values(), p.grad_view(), states_[i], t_, hyper_);
    }
  }

  void zero_grad() {
    for (auto& [name, p] : params_) p.zero_grad();
  }

  std::int64_t step_count() const { return t_; }
  void set_step_count(std::int64_t t) { t_ = t; }

  const NamedParams& params() const { return params_; }
  AdamHyper& hyper() { return hyper_; }

  // Moment buffers by parameter index; allocated lazily like the free function.
  AdamState<T>& state(std::size_t i) {
    auto& st = states_[i];
    const std::size_t n = params_[i].second.numel();
    if (st.m.empty()) st.m.assign(n, T(0));
    if (st.v.empty()) st.v.assign(n, T(0));
    return st;
  }

 private:
  NamedParams params_;
  std::vector<AdamState<T>> states_;
  AdamHyper hyper_;
  std::int64_t t_ = 0;
};

}  // namespace bowlab::core
