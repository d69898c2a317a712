#pragma once

#include <cstddef>
#include <cstdint>

// Packed-word Hamming distance kernels. A scalar reference implementation is
// always available; on x86-64 an AVX2 variant (and on ARM a NEON variant) is
// compiled in and selected at runtime when the CPU supports it. The env var
// HASHINV_SIMD={scalar,avx2,neon} forces a specific kernel.

namespace hashinv::kernels {

using hamming_fn = std::uint32_t (*)(const std::uint64_t*, const std::uint64_t*,
                                     std::size_t nwords);

std::uint32_t hamming_scalar(const std::uint64_t* a, const std::uint64_t* b,
                             std::size_t nwords);
#if defined(HASHINV_HAVE_AVX2_TU)
std::uint32_t hamming_avx2(const std::uint64_t* a, const std::uint64_t* b,
                           std::size_t nwords);
#endif
#if defined(HASHINV_HAVE_NEON_TU)
std::uint32_t hamming_neon(const std::uint64_t* a, const std::uint64_t* b,
                           std::size_t nwords);
#endif

// Resolution logic: honors HASHINV_SIMD if set (throwing a config error for
// kernels this build/cpu cannot provide), otherwise picks the best available.
// Re-evaluated on every call.
hamming_fn resolve_from_env();

// Active kernel (resolve_from_env, cached on first use).
hamming_fn active();
const char* active_name();

inline std::uint32_t hamming(const std::uint64_t* a, const std::uint64_t* b,
                             std::size_t nwords) {
  return active()(a, b, nwords);
}

}  // namespace hashinv::kernels
