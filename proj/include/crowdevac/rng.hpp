#pragma once

#include <cstdint>
#include <numbers>
#include <random>

namespace crowdevac {

// SplitMix64 finalizer. Used to derive independent stream seeds; the
// constants are fixed so derived seeds are stable across platforms.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum class Stream : std::uint64_t {
  kHumans = 1,
  kRobotDirections = 2,
  kObstacles = 3,
};

constexpr std::uint64_t substream_seed(std::uint64_t master, Stream stream) noexcept {
  return mix64(master ^ mix64(static_cast<std::uint64_t>(stream)));
}

/// Portable uniform generator. std::uniform_real_distribution is
/// implementation-defined, so doubles are built from the raw 64-bit
/// Mersenne Twister output (which the standard pins down).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double angle() { return 2.0 * std::numbers::pi * uniform(); }

  bool coin() { return (engine_() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace crowdevac
