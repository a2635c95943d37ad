#pragma once

#include <cstdint>

namespace piecy {

/// Counter-based SplitMix64 generator.
///
/// The i-th output of stream (seed, stream) is mix64(key + i * 0x9e3779b97f4a7c15)
/// with key = mix64(seed ^ mix64(stream + 0x9e3779b97f4a7c15)) and i starting at 1.
/// mix64 is the SplitMix64 finalizer (Stafford variant 13). Streams are therefore
/// identical on every platform, and any position can be reached with seek().
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  static std::uint64_t mix64(std::uint64_t z) noexcept;

  std::uint64_t next() noexcept;

  /// Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() noexcept;

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) noexcept;

  /// Uniform integer in [0, bound) (Lemire multiply-shift). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

  /// Standard normal via Box-Muller; consumes two outputs per pair of draws.
  double gaussian() noexcept;

  std::uint64_t position() const noexcept { return counter_; }
  void seek(std::uint64_t position) noexcept {
    counter_ = position;
    has_spare_ = false;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace piecy
