#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace segpr {

// Seeded random source. All randomness in the library flows through this
// class so that a fixed seed reproduces a run bit for bit. The double and
// integer mappings are implemented by hand on top of the raw mt19937_64
// stream; the standard distributions are implementation-defined and would
// break cross-toolchain reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Uniform in [0, n), unbiased via rejection.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  int next_int(int n) { return static_cast<int>(next_below(static_cast<std::uint64_t>(n))); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derived independent stream, stable in (seed, stream id).
  static Rng fork(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix(seed + 0x9E3779B97F4A7C15ULL * (stream + 1)));
  }

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 gen_;
};

}  // namespace segpr
