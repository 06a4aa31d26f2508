#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace blockboot {

// Counter-based 64-bit generator (SplitMix64). The state is a Weyl counter,
// so discard() is O(1) and independently seeded streams never share state
// evolution. Satisfies UniformRandomBitGenerator.
class SplitMix64 {
public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  void discard(unsigned long long n) noexcept {
    state_ += 0x9e3779b97f4a7c15ULL * n;
  }

private:
  std::uint64_t state_;
};

namespace detail {
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Deterministic substream derivation: hash of (master seed, lane indices).
// Distinct lanes give statistically independent streams, so parallel Monte
// Carlo replications can be seeded by index regardless of worker count.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t lane0,
                                    std::uint64_t lane1 = 0,
                                    std::uint64_t lane2 = 0) noexcept {
  std::uint64_t s = detail::mix64(master ^ 0x9e3779b97f4a7c15ULL);
  s = detail::mix64(s ^ (lane0 + 0x9e3779b97f4a7c15ULL));
  s = detail::mix64(s ^ (lane1 + 0xbf58476d1ce4e5b9ULL));
  s = detail::mix64(s ^ (lane2 + 0x94d049bb133111ebULL));
  return s;
}

// Convenience wrapper bundling the engine with the distributions used in the
// resampling and simulation paths.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed) noexcept : engine_(seed) {}

  double normal() { return normal_(engine_); }

  // Uniform on {0, ..., m-1}.
  std::size_t uniform_index(std::size_t m) {
    return std::uniform_int_distribution<std::size_t>(0, m - 1)(engine_);
  }

  SplitMix64& engine() noexcept { return engine_; }

private:
  SplitMix64 engine_;
  std::normal_distribution<double> normal_{};
};

}  // namespace blockboot
