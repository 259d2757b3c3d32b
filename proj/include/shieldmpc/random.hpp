#pragma once

#include <cstdint>
#include <limits>

namespace shieldmpc {

// Counter-based generator: the stream is a pure function of (seed, keys), so
// per-particle / per-step draws do not depend on evaluation order.
// Satisfies UniformRandomBitGenerator for use with <random> distributions.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  explicit StreamRng(std::uint64_t seed, std::uint64_t key0 = 0,
                     std::uint64_t key1 = 0, std::uint64_t key2 = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()();

  // Uniform in [0, 1).
  double uniform();
  // Standard normal via Box-Muller; the spare value is cached.
  double normal();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace shieldmpc
