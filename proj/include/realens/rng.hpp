#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace realens {

/// Master random stream. Draws are converted to doubles by hand below so
/// results do not depend on the standard library's distribution classes.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double uniform01(Rng& rng) { return uniform01(rng()); }

/// Exponential waiting time with the given positive rate.
inline double exponential(Rng& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

/// SplitMix64: a small counter-style generator used for per-member substreams,
/// so that a member's draws depend only on (step key, member index).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() { return uniform01(next()); }

 private:
  std::uint64_t state_;
};

/// Deterministic seed for substream `index` of `key`.
inline std::uint64_t derive_seed(std::uint64_t key, std::uint64_t index) {
  SplitMix64 mixer(key ^ (index * 0xd1b54a32d192ed03ULL));
  mixer.next();
  return mixer.next();
}

}  // namespace realens
