#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "bowlab/rng.hpp"
#include "bowlab/tensor.hpp"

namespace bowlab::core {

template <class T>
using LossFn = std::function<Tensor<T>()>;

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t coords = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
};

// Central-difference check of the tape's gradients. f must be a deterministic
// forward procedure over the given parameters; it runs once twice to detect
// non-determinism, once under a tape for the analytic gradients, and twice per
// sampled coordinate for the numeric estimate.
template <class T>
GradCheckReport finite_diff_check(const LossFn<T>& f,
                                  std::vector<std::pair<std::string, Tensor<T>>>& params, T h,
                                  std::size_t sample_coords, Rng& rng) {
  if (!(h > T(0)) || h > T(1e-2)) throw ConfigError("finite_diff_check: h must be in (0, 1e-2]");
  const T base1 = f().item();
  const T base2 = f().item();
  if (base1 != base2)
    throw DataError("finite_diff_check: loss procedure is non-deterministic (" + std::to_string(base1) +
                    " vs " + std::to_string(base2) + ")");

  for (auto& [name, p] : params) p.zero_grad();
  {
    Tape<T> tape;
    typename Tape<T>::Scope scope(tape);
    Tensor<T> loss = f();
    tape.backward(loss);
  }

  std::size_t total = 0;
  for (auto& [name, p] : params) total += p.numel();
  if (sample_coords > total) sample_coords = total;

  // Distinct global coordinate indices.
  std::vector<std::size_t> picks;
  if (sample_coords == total) {
    picks.resize(total);
    for (std::size_t i = 0; i < total; ++i) picks[i] = i;
  } else {
    std::vector<std::size_t> all(total);
    for (std::size_t i = 0; i < total; ++i) all[i] = i;
    rng.partial_shuffle(all, sample_coords);
    picks.assign(all.begin(), all.begin() + static_cast<long>(sample_coords));
  }

  GradCheckReport report;
  report.coords = picks.size();
  for (const std::size_t global : picks) {
    std::size_t off = global;
    std::size_t pi = 0;
    while (off >= params[pi].second.numel()) {
      off -= params[pi].second.numel();
      ++pi;
    }
    Tensor<T>& p = params[pi].second;
    const T analytic = p.has_grad() ? p.grad_view()[off] : T(0);
    const T saved = p.values()[off];
    p.values()[off] = saved + h;
    const T fp = f().item();
    p.values()[off] = saved - h;
    const T fm = f().item();
    p.values()[off] = saved;
    const T numeric = (fp - fm) / (T(2) * h);
    const double rel = std::fabs(static_cast<double>(analytic - numeric)) /
                       (std::fabs(static_cast<double>(analytic)) + 1e-8);
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_param = params[pi].first;
      report.worst_index = off;
    }
  }
  return report;
}

}  // namespace bowlab::core
