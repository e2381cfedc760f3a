#pragma once

#include <cassert>
#include <cstdint>

namespace cosmix {

// Counter-based PRNG (splitmix64). Hand-rolled on purpose: the standard
// <random> distributions are implementation-defined, and every run here must
// replay bit-identically from its seed across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  // Uniform double in [0, 1), 53 mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform index in [0, n). Multiply-shift (Lemire); n must be > 0.
  std::size_t uniform_index(std::size_t n) {
    assert(n > 0);
    const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) *
                                   static_cast<unsigned __int128>(n);
    return static_cast<std::size_t>(wide >> 64);
  }

  // Independent child stream. Does not advance this generator, so the same
  // parent can hand out any number of named streams deterministically.
  Rng split(std::uint64_t stream) const {
    return Rng(mix(state_ ^ mix(stream + 0x632BE59BD9B4E019ull)));
  }

  std::uint64_t state() const { return state_; }

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

 private:
  std::uint64_t state_;
};

}  // namespace cosmix
