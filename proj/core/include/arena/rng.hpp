#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace arena {

/// xoshiro256** seeded through splitmix64.
///
/// All randomness in the simulator, trainer and evaluator flows through this
/// type so that a (seed, stream) pair fully determines every draw on every
/// platform. The standard <random> distributions are implementation defined,
/// so the helpers below are written out explicitly.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0x5eedULL, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t uniform_int(std::uint64_t bound);

  bool bernoulli(double p) { return uniform01() < p; }

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  /// Independent child generator; the parent state is not advanced.
  [[nodiscard]] Rng derive(std::uint64_t stream) const;

  [[nodiscard]] std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
};

/// Mixes two 64-bit values into one; used to derive per-world and
/// per-population seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace arena
