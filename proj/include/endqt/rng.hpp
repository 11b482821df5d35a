#pragma once

#include <cstdint>

namespace endqt {

// Counter-based generator: draw i of a stream is a bit-mix of (key, i), so
// identical seeds give identical sequences on every platform. split() derives
// an independent stream key; child streams never share state with the parent.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : key_(mix64(seed + kGamma)) {}

  SplitRng split(std::uint64_t stream) const {
    return SplitRng(FromKey{}, mix64(key_ ^ mix64(stream + kGamma2)));
  }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGamma); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(next_double() * static_cast<double>(n)) % n;
  }

 private:
  struct FromKey {};
  SplitRng(FromKey, std::uint64_t key) : key_(key) {}

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kGamma2 = 0xD1B54A32D192ED03ull;

  static std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace endqt
