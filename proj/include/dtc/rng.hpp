#pragma once

#include <cstdint>

namespace dtc {

/// Counter-based splittable RNG. Each instance is keyed by
/// (master seed, sample index, stream id) so that ensemble members and
/// parameter streams are reproducible independently of evaluation order.
/// The generator is SplitMix64 over a mixed key; output is platform-stable.
class SplitRng {
 public:
  SplitRng(std::uint64_t master_seed, std::uint64_t sample_index,
           std::uint64_t stream_id)
      : state_(mix(mix(mix(0x9e3779b97f4a7c15ull ^ master_seed) ^ sample_index) ^
                   stream_id)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  /// Uniform double in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

/// Parameter stream ids used by the disorder sampler.
enum class RngStream : std::uint64_t {
  Coupling = 0,
  FieldZ = 1,
  FieldX = 2,
  Generic = 100,
};

}  // namespace dtc
