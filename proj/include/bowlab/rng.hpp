#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace bowlab {

// mt19937_64 plus hand-rolled distributions. The std:: distributions are
// implementation-defined, so all sampling goes through these helpers to keep
// runs reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling on the top bits; bias-free.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  int below_int(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

  // Uniform in [0, 1), 53-bit resolution.
  double real01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Standard normal via Marsaglia polar; caches the spare deviate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * real01() - 1.0;
      v = 2.0 * real01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // Normal(0, sd) resampled until |x| <= cutoff (absolute bound).
  double trunc_normal(double sd, double cutoff) {
    double x;
    do {
      x = normal() * sd;
    } while (std::fabs(x) > cutoff);
    return x;
  }

  // Draws k distinct elements into items[0..k) via partial Fisher-Yates.
  template <class T>
  void partial_shuffle(std::vector<T>& items, std::size_t k) {
    const std::size_t n = items.size();
    if (k > n) k = n;
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + static_cast<std::size_t>(below(n - i));
      std::swap(items[i], items[j]);
    }
  }

  template <class T>
  void shuffle(std::vector<T>& items) {
    partial_shuffle(items, items.size());
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// splitmix64 round, used to derive decorrelated per-step RNG streams so that a
// resumed run draws exactly the masks of the uninterrupted one.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline Rng step_rng(std::uint64_t seed, std::uint64_t step) { return Rng(mix_seed(seed, step)); }

}  // namespace bowlab
