#pragma once

// Counter-based, splittable random stream.
//
// Algorithm (reproducible in any language):
//   mix(z):  z += 0x9E3779B97F4A7C15
//            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//            z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//            return z ^ (z >> 31)                       (SplitMix64 finalizer)
//   stream(key), n-th draw:   mix(key ^ mix(n)),  n = 0, 1, 2, ...
//   split(key, id):           key' = mix(key + 0xD1B54A32D192ED03 * (id + 1))
//   uniform01(x):             (x >> 11) * 2^-53
// All arithmetic is modulo 2^64.

#include <cstdint>

namespace angiorecon {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

  constexpr std::uint64_t key() const { return key_; }
  constexpr std::uint64_t counter() const { return counter_; }

  constexpr std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }

  /// Uniform in [0, 1).
  constexpr double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }
  constexpr double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// +1 or -1 with equal probability.
  constexpr double sign() { return (next_u64() >> 63) ? -1.0 : 1.0; }

  /// Independent child stream; does not advance this one.
  constexpr CounterRng split(std::uint64_t stream_id) const {
    return CounterRng(mix64(key_ + 0xD1B54A32D192ED03ULL * (stream_id + 1)));
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace angiorecon
