#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace spdelab {

// Counter-based splittable generator. Streams are keyed by hashing an id
// tuple (seed, replicate, step, ...); the i-th output of a stream is a pure
// function of (key, i), so draws depend only on the ids, never on thread
// scheduling.
inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  template <class... Ids>
  static RngStream keyed(std::uint64_t seed, Ids... ids) {
    std::uint64_t key = mix64(seed + kGolden);
    ((key = mix64(key ^ (static_cast<std::uint64_t>(ids) + kGolden))), ...);
    return RngStream(key);
  }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  // uniform on (0,1); never returns 0 or 1
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  // standard normal, Box-Muller; each pair of uniforms yields two normals
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  void fill_normals(std::span<double> out) {
    for (double& v : out) v = normal();
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace spdelab
