#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace emogan {

// Seedable generator with portable output: the engine is std::mt19937_64,
// whose sequence is fixed by the standard, and every distribution below is
// implemented here rather than taken from <random> (whose distributions are
// implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal();

  // Uniform integer in [0, n), unbiased by rejection.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stage seed = mix(master, stage name, index). Distinct stage names or
// indices give independent streams from one master seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t index = 0);

// 64-bit FNV-1a.
std::uint64_t fnv1a(const void* data, std::size_t size,
                    std::uint64_t hash = 1469598103934665603ULL);

}  // namespace emogan
