#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace decipher {

// Seeded RNG with hand-rolled distributions so that streams are bit-identical
// across standard library implementations. All randomness in the project goes
// through this class.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller. No cached second value, so the stream
  // position is a pure function of the number of calls.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // Child seed for an independent stream (per-example noise, worker streams).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace decipher
