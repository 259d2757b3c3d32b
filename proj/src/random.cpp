#include "shieldmpc/random.hpp"

#include <cmath>
#include <numbers>

namespace shieldmpc {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

StreamRng::StreamRng(std::uint64_t seed, std::uint64_t key0,
                     std::uint64_t key1, std::uint64_t key2) {
  std::uint64_t s = mix64(seed);
  s = mix64(s ^ mix64(key0 + 0x632be59bd9b4e019ULL));
  s = mix64(s ^ mix64(key1 + 0x8cb92ba72f3d8dd7ULL));
  s = mix64(s ^ mix64(key2 + 0xd1b54a32d192ed03ULL));
  state_ = s;
}

StreamRng::result_type StreamRng::operator()() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double StreamRng::uniform() {
  // 53 random mantissa bits.
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double StreamRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

}  // namespace shieldmpc
