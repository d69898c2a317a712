#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

// Counter-based randomness. Every draw is addressed by (key, counter), so any
// stream can be replayed from its key alone — no generator state is stored or
// serialized anywhere. Distinct logical streams are derived from a master seed
// by mixing in a short tag string.

namespace hashinv::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Combine a key with an index (or another key) into a new independent key.
inline std::uint64_t mix(std::uint64_t key, std::uint64_t v) {
  return splitmix64(key ^ (v * kGolden + 0x1234567890ABCDEFull));
}

// Derive a named stream key from a seed, e.g. stream(seed, "world.means").
inline std::uint64_t stream(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a over the tag bytes
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return mix(splitmix64(seed), h);
}

// Raw 64 bits at position ctr of the stream identified by key.
inline std::uint64_t bits_at(std::uint64_t key, std::uint64_t ctr) {
  return splitmix64(key ^ (ctr * kGolden));
}

// Uniform draw in (0, 1]: the +1 before scaling excludes exact zero so that
// log(u) below is always finite.
inline double uniform_at(std::uint64_t key, std::uint64_t ctr) {
  return static_cast<double>((bits_at(key, ctr) >> 11) + 1) * 0x1.0p-53;
}

// Standard normal via Box–Muller; draw i consumes uniform counters 2i, 2i+1.
inline double normal_at(std::uint64_t key, std::uint64_t i) {
  const double u1 = uniform_at(key, 2 * i);
  const double u2 = uniform_at(key, 2 * i + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

// Block addressing for vector-valued draws: block b of width d occupies normal
// indices [b*d, (b+1)*d). Used by the sampler so that the noise injected at
// reverse step t can be re-read later without storing it.
inline double normal_block(std::uint64_t key, std::uint64_t block,
                           std::uint64_t width, std::uint64_t i) {
  return normal_at(key, block * width + i);
}

// Stateful convenience cursor over one stream.
class Sequence {
 public:
  explicit Sequence(std::uint64_t key) : key_(key) {}

  std::uint64_t bits() { return bits_at(key_, ubits_++); }
  double uniform() { return uniform_at(key_, ubits_++); }
  double normal() {
    // Keep the uniform and normal counters disjoint by carving normals out of
    // a separate half of the counter space.
    const double z = normal_at(key_ ^ 0x5851F42D4C957F2Dull, nidx_++);
    return z;
  }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const double u = uniform();  // (0,1]
    std::uint64_t v = static_cast<std::uint64_t>(u * static_cast<double>(n));
    return v >= n ? n - 1 : v;
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t ubits_ = 0;
  std::uint64_t nidx_ = 0;
};

}  // namespace hashinv::rng
