#include "advface/rng.hpp"

#include <ATen/CPUGeneratorImpl.h>

namespace advface {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform(double lo, double hi) {
  // 53-bit mantissa draw; std::uniform_real_distribution is not specified bit-for-bit.
  const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  if (lo == hi) return lo;
  return lo + (hi - lo) * u;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

Rng Rng::substream(std::uint64_t index) const { return Rng(mix_seed(seed_, index)); }

at::Generator Rng::torch_generator() {
  return at::make_generator<at::CPUGeneratorImpl>(next_u64());
}

}  // namespace advface
