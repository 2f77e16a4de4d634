#include <cmath>

#include "vrh/simd.hpp"

namespace vrh::simd {
namespace {

inline double radial_power(double dist2, double alpha) {
  if (alpha == 1.0) return std::sqrt(dist2);
  if (alpha == 2.0) return dist2;
  return dist2 > 0.0 ? std::pow(dist2, 0.5 * alpha) : 0.0;
}

void hopping_weights(const double* dist2, const double* energy, std::size_t n, double alpha,
                     double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(-radial_power(dist2[i], alpha) - energy[i]);
}

void csr_matvec(const std::uint32_t* row_start, const std::uint32_t* cols, const double* values,
                std::size_t rows, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::uint32_t k = row_start[r]; k < row_start[r + 1]; ++k) s += values[k] * x[cols[k]];
    y[r] = s;
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void xpby(const double* r, double b, double* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + b * p[i];
}

double weighted_dot(const double* w, const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

}  // namespace

const Kernels& scalar_kernels() noexcept {
  static const Kernels table{Isa::scalar, &hopping_weights, &csr_matvec, &dot,
                             &axpy,       &xpby,            &weighted_dot};
  return table;
}

}  // namespace vrh::simd
