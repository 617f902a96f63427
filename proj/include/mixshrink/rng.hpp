#ifndef MIXSHRINK_RNG_HPP
#define MIXSHRINK_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

namespace mixshrink {

// Self-contained generator (splitmix64 seeding + xoshiro256++) so that
// streams are reproducible bit-for-bit regardless of the standard library.
// Streams support deterministic forking: fork(key) depends only on the
// stream's creation seed and the key, never on how many draws were consumed.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on (0,1]; strictly positive so log() is always safe.
  double uniform01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second deviate is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
  }

  // Uniform integer in [0, n); rejection sampling keeps it unbiased.
  std::size_t uniform_below(std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t bound = n;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw;
    do {
      draw = next_u64();
    } while (draw >= limit);
    return static_cast<std::size_t>(draw % bound);
  }

  // One draw from a categorical distribution with the given (possibly
  // unnormalized) non-negative weights.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform01() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u <= 0.0) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
  }

  // Child stream keyed off the creation seed; independent of draw history.
  RngStream fork(std::uint64_t key) const {
    std::uint64_t x = seed_ ^ (0x9E3779B97F4A7C15ULL * (key + 1));
    const std::uint64_t child_seed = splitmix64(x) ^ splitmix64(x);
    return RngStream(child_seed);
  }

  std::uint64_t creation_seed() const { return seed_; }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace mixshrink

#endif  // MIXSHRINK_RNG_HPP
