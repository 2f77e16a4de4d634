#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace vrh {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives the key of substream `index` of a parent key.
constexpr std::uint64_t substream_key(std::uint64_t key, std::uint64_t index) noexcept {
  return mix64(mix64(key ^ 0x6a09e667f3bcc909ULL) + 0x9e3779b97f4a7c15ULL * (index + 1));
}

/// Counter-based generator: output k is mix64(key + (k+1) * golden).
/// Streams for replica r of a run are obtained with `Rng(seed).split(r)`,
/// so a replica's draws never depend on scheduling.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Rng(std::uint64_t seed = 0) noexcept : key_(mix64(seed)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + 0x9e3779b97f4a7c15ULL * counter_);
  }

  [[nodiscard]] constexpr Rng split(std::uint64_t index) const noexcept {
    Rng child;
    child.key_ = substream_key(key_, index);
    return child;
  }

  [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }
  [[nodiscard]] constexpr std::uint64_t counter() const noexcept { return counter_; }

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Exp(1).
  double exponential() noexcept { return -std::log(uniform_open()); }

  /// Uniform integer in [0, n); n > 0. Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) noexcept {
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

/// Poisson(mean) sample.
std::uint64_t sample_poisson(Rng& rng, double mean);

/// Standard normal sample.
double sample_normal(Rng& rng);

}  // namespace vrh
