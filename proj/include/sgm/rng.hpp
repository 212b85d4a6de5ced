#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace sgm {

/// Deterministic RNG. mt19937_64 is bit-stable across platforms; the standard
/// distributions are not, so the derived draws below are implemented by hand.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(eng_() % span);
  }

  /// Standard normal via Box-Muller (pair cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Derives an independent substream seed from a base seed and a tag (FNV-1a).
  static uint64_t derive(uint64_t base, std::string_view tag, uint64_t index = 0) {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= 1099511628211ull;
      }
    };
    mix(base);
    for (char c : tag) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    mix(index);
    return h;
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sgm
