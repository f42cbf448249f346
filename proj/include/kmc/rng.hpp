#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace kmc {

/// SplitMix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Seed for (master seed, path index, substream). Pure function, so any
/// worker can reproduce any path's stream; substream separates the two
/// independent streams an uncoupled pair needs.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t path,
                                 std::uint64_t substream = 0) {
  return mix64(mix64(mix64(master) ^ path) ^ substream);
}

/// Deterministic random stream. mt19937_64 output is fully specified by the
/// standard; the uniform mapping below is pinned here rather than delegated to
/// distribution classes so that byte-identical replay is a property of the
/// code, not of the standard library build.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Exponential waiting time with the given total rate. rate must be > 0.
  double exp_time(double rate) { return -std::log1p(-uniform01()) / rate; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace kmc
