#pragma once

#include <cstdint>
#include <random>

#include <ATen/core/Generator.h>

namespace advface {

/// Explicit random stream. Every stochastic operation takes one of these;
/// nothing in the library touches a global generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  /// Uniform in [lo, hi]; returns lo exactly when lo == hi.
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Independent stream derived from (seed, index). Does not advance this stream.
  Rng substream(std::uint64_t index) const;

  /// A torch CPU generator seeded from the next draw of this stream.
  at::Generator torch_generator();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace advface
