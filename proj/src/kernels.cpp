#include "hashinv/kernels.hpp"

#include <bit>
#include <cstdlib>
#include <cstring>
#include <string>

#include "hashinv/errors.hpp"

namespace hashinv::kernels {

std::uint32_t hamming_scalar(const std::uint64_t* a, const std::uint64_t* b,
                             std::size_t nwords) {
  std::uint32_t acc = 0;
  for (std::size_t i = 0; i < nwords; ++i) {
    acc += static_cast<std::uint32_t>(std::popcount(a[i] ^ b[i]));
  }
  return acc;
}

hamming_fn resolve_from_env() {
  const char* forced = std::getenv("HASHINV_SIMD");
  if (forced != nullptr) {
    const std::string want(forced);
    if (want == "scalar") return hamming_scalar;
#if defined(HASHINV_HAVE_AVX2_TU)
    if (want == "avx2") {
      if (!__builtin_cpu_supports("avx2"))
        throw config_error("HASHINV_SIMD=avx2 but cpu lacks avx2");
      return hamming_avx2;
    }
#endif
#if defined(HASHINV_HAVE_NEON_TU)
    if (want == "neon") return hamming_neon;
#endif
    throw config_error("HASHINV_SIMD=" + want + " not available in this build");
  }
#if defined(HASHINV_HAVE_AVX2_TU)
  if (__builtin_cpu_supports("avx2")) return hamming_avx2;
#endif
#if defined(HASHINV_HAVE_NEON_TU)
  return hamming_neon;
#endif
  return hamming_scalar;
}

hamming_fn active() {
  static const hamming_fn fn = resolve_from_env();
  return fn;
}

const char* active_name() {
  const hamming_fn fn = active();
#if defined(HASHINV_HAVE_AVX2_TU)
  if (fn == hamming_avx2) return "avx2";
#endif
#if defined(HASHINV_HAVE_NEON_TU)
  if (fn == hamming_neon) return "neon";
#endif
  return "scalar";
}

}  // namespace hashinv::kernels
