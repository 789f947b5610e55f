#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace aemr {

// xoshiro256** generator whose state is derived by hashing a key tuple with
// SplitMix64. Streams are cheap to construct, so every (seed, draw, trio)
// triple gets its own stream and results never depend on scheduling.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed);
  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

// SplitMix64 finaliser; exposed so callers can derive sub-seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> keys);

// Domain tags keep streams of different purposes apart.
namespace stream_tag {
inline constexpr std::uint64_t kDraw = 0x6472617700000000ULL;
inline constexpr std::uint64_t kFamily = 0x66616d0000000000ULL;
inline constexpr std::uint64_t kMap = 0x6d61700000000000ULL;
inline constexpr std::uint64_t kReplicate = 0x7265700000000000ULL;
inline constexpr std::uint64_t kTest = 0x7465737400000000ULL;
}  // namespace stream_tag

}  // namespace aemr
