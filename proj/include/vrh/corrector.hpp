#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vrh/diffusion.hpp"
#include "vrh/pointproc.hpp"
#include "vrh/rates.hpp"
#include "vrh/stats.hpp"

namespace vrh {

enum class SolverMethod { cg, jacobi };

std::string to_string(SolverMethod m);
SolverMethod solver_method_from_string(const std::string& s);

struct SolverOptions {
  double tol = 1e-8;  // max interior residual |sum_y p(x,y) Phi(y) - Phi(x)|
  std::size_t max_iter = 100000;
  SolverMethod method = SolverMethod::cg;
  double damping = 1.0;  // jacobi only
};

/// Harmonic coordinates Phi = x + chi on a free window, pinned to the
/// identity on the boundary layer (points within `layer` of the edge).
struct HarmonicField {
  int dim = 2;
  std::vector<Point> phi;
  std::vector<std::uint8_t> interior;
  std::vector<std::uint8_t> pinned;  // interior points fixed to the identity (no path to the boundary)
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t interior_count = 0;
  std::size_t pinned_count = 0;

  [[nodiscard]] Point chi(const MarkedPointSet& env, std::size_t i) const noexcept;
};

/// Throws std::invalid_argument on a torus window or an empty interior.
HarmonicField solve_harmonic(const MarkedPointSet& env, const JumpTable& table, double layer,
                             const SolverOptions& opts = {});

/// max over interior x of |sum_y p(x,y) Phi(y) - Phi(x)| (all coordinates).
double harmonic_residual(const MarkedPointSet& env, const JumpTable& table, const HarmonicField& field);

struct SublinearityRow {
  double n = 0.0;
  double s = 0.0;            // max |chi(x)| / n over interior x with |x|_inf <= n/2
  std::size_t argmax = 0;
  std::size_t points = 0;
};

SublinearityRow sublinearity(const MarkedPointSet& env, const HarmonicField& field, double n);

/// Per-environment sums entering the variational formula. For the chosen
/// central points x: energy_ij = sum_x sum_y c(x,y) dPhi_i dPhi_j with
/// dPhi = Phi(y) - Phi(x), weight = sum_x w(x), count = number of x.
struct VariationalSample {
  std::array<double, 9> energy{};
  double weight = 0.0;
  double count = 0.0;
};

/// Central points are those with |x|_inf <= central_half_side; with
/// central_half_side < 0 only point 0 (the Palm origin) is used. Throws if
/// a central point lies within the cutoff of the window edge, where its
/// stencil would be cut short.
VariationalSample variational_sample(const MarkedPointSet& env, const JumpTable& table,
                                     const HarmonicField& field, double central_half_side);

struct VariationalD {
  DiffusionEstimate dtrw;  // E[energy] / (2 E[weight])
  DiffusionEstimate ctrw;  // E[energy] / (2 E[count])
  stats::Estimate ew0;     // E[weight] / E[count]
};

VariationalD variational_d(std::span<const VariationalSample> samples, int dim);

/// max over triples of |chi(x->y) + chi(y->z) - chi(x->z)| with
/// chi(a->b) = Phi(b) - Phi(a) - (b - a).
double shift_covariance_defect(const MarkedPointSet& env, const HarmonicField& field,
                               std::span<const std::array<std::size_t, 3>> triples);

}  // namespace vrh
