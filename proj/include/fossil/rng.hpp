#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fossil/common.hpp"

namespace fossil {

// Deterministic random source. mt19937_64 has a standard-specified output
// sequence; the distribution transforms live here instead of <random> so that
// identical seeds give identical draws on every standard library.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform on [0, n), unbiased via rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw ValidationError("Rng::below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  // Inclusive integer range.
  long long range(long long lo, long long hi) {
    if (lo > hi) throw ValidationError("Rng::range: empty range");
    return lo + static_cast<long long>(
                    below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Standard normal via Box-Muller; the spare draw is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.empty()) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fossil
