#include <arm_neon.h>

#include <bit>
#include <cstddef>
#include <cstdint>

#include "hashinv/kernels.hpp"

// NEON variant: xor two words at a time, byte popcount via vcntq_u8, then a
// horizontal add. Scalar tail for odd word counts.

namespace hashinv::kernels {

std::uint32_t hamming_neon(const std::uint64_t* a, const std::uint64_t* b,
                           std::size_t nwords) {
  std::uint64_t total = 0;
  std::size_t i = 0;
  for (; i + 2 <= nwords; i += 2) {
    const uint64x2_t va = vld1q_u64(a + i);
    const uint64x2_t vb = vld1q_u64(b + i);
    const uint8x16_t x = vreinterpretq_u8_u64(veorq_u64(va, vb));
    total += vaddvq_u8(vcntq_u8(x));
  }
  for (; i < nwords; ++i) {
    total += static_cast<std::uint64_t>(std::popcount(a[i] ^ b[i]));
  }
  return static_cast<std::uint32_t>(total);
}

}  // namespace hashinv::kernels
