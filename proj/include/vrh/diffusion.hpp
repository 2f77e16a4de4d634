#pragma once

#include <array>
#include <cstddef>
#include <string>

namespace vrh {

/// d x d diffusion matrix, row-major in a 3x3 block, with per-entry standard
/// errors. Normalized as covariance / (2t) by every estimator.
struct DiffusionEstimate {
  int dim = 2;
  std::array<double, 9> value{};
  std::array<double, 9> std_error{};
  std::string method;  // "msd" | "variational"
  std::size_t samples = 0;

  [[nodiscard]] double at(int i, int j) const noexcept { return value[static_cast<std::size_t>(3 * i + j)]; }
  [[nodiscard]] double se(int i, int j) const noexcept { return std_error[static_cast<std::size_t>(3 * i + j)]; }
};

}  // namespace vrh
