#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "ctxbench/hash.hpp"

namespace ctxbench {

// mt19937_64 is fully specified by the standard; the distributions are not,
// so bounded draws are done here to keep outputs identical across stdlibs.
class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}
  DeterministicRng(std::uint64_t seed, std::string_view salt)
      : engine_(mix_seed(seed, salt)) {}

  // Uniform in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  // Uniform in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ctxbench
