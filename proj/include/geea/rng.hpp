#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace geea {

// Deterministic random source. All sampling goes through explicit bit
// manipulation (no std::*_distribution) so that a given seed produces the
// same stream on every platform and every run.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller (cosine branch only).
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);
  Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi);

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent stream derived from this rng's seed and a salt. Forking with
  // the same salt always yields the same stream regardless of how much of
  // the parent stream has been consumed.
  Rng fork(std::uint64_t salt) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

// SplitMix64 finalizer, used for seed derivation.
std::uint64_t mix_seed(std::uint64_t x);

}  // namespace geea
