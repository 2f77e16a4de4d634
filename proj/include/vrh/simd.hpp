#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Data-parallel inner loops. Every kernel has a scalar reference
// implementation; wider variants are chosen once per process from the CPU
// feature set and are equivalence-tested against the reference.

namespace vrh::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// Kernel entry points for one instruction set.
struct Kernels {
  Isa isa = Isa::scalar;

  /// out[i] = exp(-dist2[i]^(alpha/2) - energy[i]).
  void (*hopping_weights)(const double* dist2, const double* energy, std::size_t n, double alpha,
                          double* out) = nullptr;

  /// y[r] = sum_{k in [row_start[r], row_start[r+1])} values[k] * x[cols[k]].
  void (*csr_matvec)(const std::uint32_t* row_start, const std::uint32_t* cols,
                     const double* values, std::size_t rows, const double* x, double* y) = nullptr;

  double (*dot)(const double* a, const double* b, std::size_t n) = nullptr;

  /// y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n) = nullptr;

  /// p = r + b * p
  void (*xpby)(const double* r, double b, double* p, std::size_t n) = nullptr;

  /// sum_k weight[k] * a[k] * b[k]
  double (*weighted_dot)(const double* weight, const double* a, const double* b,
                         std::size_t n) = nullptr;
};

const Kernels& scalar_kernels() noexcept;

/// nullptr when the variant was not compiled in.
const Kernels* avx2_kernels() noexcept;

/// True when the running CPU can execute the given variant.
bool cpu_supports(Isa isa) noexcept;

/// The dispatched table: the widest supported variant, unless the
/// environment variable VRH_SIMD=scalar forces the reference path.
const Kernels& active() noexcept;

}  // namespace vrh::simd
