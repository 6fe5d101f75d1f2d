#pragma once

#include <cstdint>

namespace mapcsim {

// Splitmix64 stream. Self-contained so that identical seeds give identical
// streams on every platform, which the replay contract depends on;
// std::uniform_int_distribution makes no such promise.
class Rng {
 public:
  Rng() = default;
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n). n must be > 0.
  std::uint32_t bounded(std::uint32_t n) {
    return static_cast<std::uint32_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  int range(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(bounded(static_cast<std::uint32_t>(hi - lo + 1)));
  }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return unit() < p; }

  // Independent child stream; advancing the child leaves the parent untouched.
  Rng fork(std::uint64_t salt) {
    return Rng(next() ^ (salt * 0xd1b54a32d192ed03ULL + 0x2545f4914f6cdd1dULL));
  }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

 private:
  std::uint64_t state_ = 0;
};

}  // namespace mapcsim
