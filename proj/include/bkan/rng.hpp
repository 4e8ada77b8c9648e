#pragma once

#include <cstdint>
#include <cmath>

namespace bkan {

// SplitMix64 finalizer. Used both as the generator step and for deriving
// substream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic random stream. Same seed -> same sequence on every run of the
// same build; substreams derived from (seed, id) do not depend on how much of
// the parent stream has been consumed, so per-sample work can be reordered or
// parallelized without changing results.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng substream(std::uint64_t seed, std::uint64_t stream_id) {
    return Rng(mix64(seed ^ mix64(stream_id + 0x9e3779b97f4a7c15ull)));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in (0, 1]. The +1 keeps log() finite in next_normal().
  double next_uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (next_uniform() - 0x1.0p-53) * (hi - lo);
  }

  // Standard normal via Box-Muller. Two uniforms per draw, no cached spare,
  // so draw counts stay easy to reason about.
  double next_normal() {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

 private:
  static constexpr double kTwoPi = 6.283185307179586476925286766559;
  std::uint64_t state_;
};

}  // namespace bkan
