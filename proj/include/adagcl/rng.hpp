#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace adagcl {

// Deterministic named stream. Distributions are hand-rolled on top of
// mt19937_64 so that outputs are identical across standard libraries;
// std::uniform_*_distribution is implementation-defined.
class RngStream {
 public:
  RngStream() : engine_(0x9e3779b97f4a7c15ULL) {}
  RngStream(std::uint64_t seed, std::string_view name)
      : engine_(mix(seed, fnv1a(name))) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, n)
  std::uint64_t next_below(std::uint64_t n) {
    // rejection sampling to avoid modulo bias
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {  // inclusive
    return lo + static_cast<std::int64_t>(
                    next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // uniform in [0, 1)
  double next_real() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // uniform in (0, 1), open on both ends (safe for logit transforms)
  double next_open_real() {
    double u;
    do {
      u = next_real();
    } while (u <= 0.0);
    return u;
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_real();
  }

  // Box-Muller; one draw per call, the spare is kept.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_open_real();
    double u2 = next_real();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.141592653589793238462643 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined seed
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b | 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace adagcl
