#include <cstdlib>
#include <string_view>

#include "vrh/simd.hpp"

namespace vrh::simd {

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

#ifndef VRH_HAVE_AVX2
const Kernels* avx2_kernels() noexcept { return nullptr; }
#endif

bool cpu_supports(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(VRH_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

namespace {

const Kernels& select() noexcept {
  if (const char* forced = std::getenv("VRH_SIMD"); forced && std::string_view(forced) == "scalar")
    return scalar_kernels();
  if (avx2_kernels() != nullptr && cpu_supports(Isa::avx2)) return *avx2_kernels();
  return scalar_kernels();
}

}  // namespace

const Kernels& active() noexcept {
  static const Kernels& table = select();
  return table;
}

}  // namespace vrh::simd
