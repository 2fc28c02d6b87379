#pragma once

#include <cmath>
#include <cstdint>

namespace pwb {

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Immutable key for a counter-based stream hierarchy. Streams are identified
// by the chain of child ids, never by draw order, so concurrent callers get
// identical randomness regardless of schedule.
class RngKey {
 public:
  explicit RngKey(std::uint64_t seed) : key_(mix64(seed ^ 0x5bf03635d6534f23ULL)) {}

  RngKey child(std::uint64_t id) const {
    RngKey k(*this);
    k.key_ = mix64(key_ ^ mix64(id ^ 0x94630cbfa9e1f2a1ULL));
    return k;
  }

  std::uint64_t raw() const { return key_; }

 private:
  std::uint64_t key_;
};

// splitmix64 stream seeded from a key.
class RngStream {
 public:
  explicit RngStream(RngKey key) : state_(key.raw()) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform on [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Box-Muller; u1 shifted into (0, 1] so the log is finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace pwb
