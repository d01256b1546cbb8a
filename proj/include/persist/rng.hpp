#pragma once

#include <cstdint>
#include <random>

namespace persist {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct SeedSpec {
  std::uint64_t master = 0;

  // seed(k) = splitmix64(splitmix64(master) ^ splitmix64(k))
  constexpr std::uint64_t stream(std::uint64_t index) const {
    return splitmix64(splitmix64(master) ^ splitmix64(index));
  }
};

// mt19937_64 output is fixed by the standard for a given seed, and the
// conversions below use integer arithmetic only, so streams are portable.
class Stream {
 public:
  Stream(SeedSpec seed, std::uint64_t index) : eng_(seed.stream(index)) {}

  std::uint64_t bits() { return eng_(); }

  // 53 random bits scaled into [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Multiply-high reduction onto {0,...,n-1}.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(eng_()) * n) >> 64);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace persist
