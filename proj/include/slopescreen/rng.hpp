#pragma once

#include <cmath>
#include <cstdint>

namespace slopescreen {

// SplitMix64 step: advances the state and returns the next 64-bit output.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Derives the seed of an independent stream from a master seed and a stream
// index (trial number, sub-draw tag, ...). Streams are decorrelated by one
// SplitMix64 mixing step applied to master ^ index.
inline std::uint64_t derive_stream(std::uint64_t master_seed, std::uint64_t index) {
  std::uint64_t s = master_seed ^ index;
  return splitmix64(s);
}

/// Deterministic generator used for all randomized instance generation.
/// SplitMix64 underneath; gaussians via Box-Muller. The exact sequence is
/// part of the reproducibility contract of this library (same seed, same
/// build => identical instances).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace slopescreen
