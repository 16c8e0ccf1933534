#ifndef TDIFF_RNG_HPP
#define TDIFF_RNG_HPP

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace tdiff {

/// splitmix64 finalizer. Used to expand a (seed, stream) key into generator state.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
///
/// Streams are keyed: `Xoshiro256pp(seed, stream)` hashes both words through
/// splitmix64, so replicate k of an experiment draws from a stream that depends
/// only on (seed, k) and never on scheduling order.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed, std::uint64_t stream = 0) noexcept {
    std::uint64_t sm = seed;
    const std::uint64_t mixed_seed = splitmix64(sm);
    std::uint64_t key = mixed_seed ^ (stream * 0xD1342543DE82EF95ULL + 0x2545F4914F6CDD1DULL);
    for (auto& word : s_) word = splitmix64(key);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  friend bool operator==(const Xoshiro256pp&, const Xoshiro256pp&) = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> s_{};
};

/// Bundles a keyed generator with the variate transforms used by the simulator.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream) : engine_(seed, stream) {}

  double normal() { return normal_(engine_); }
  double exponential() { return exponential_(engine_); }
  double uniform() { return uniform_(engine_); }

  Xoshiro256pp& engine() noexcept { return engine_; }

 private:
  Xoshiro256pp engine_;
  boost::random::normal_distribution<double> normal_{0.0, 1.0};
  boost::random::exponential_distribution<double> exponential_{1.0};
  boost::random::uniform_01<double> uniform_;
};

}  // namespace tdiff

#endif  // TDIFF_RNG_HPP
