#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vrh/diffusion.hpp"
#include "vrh/stats.hpp"
#include "vrh/walk.hpp"

namespace vrh {

struct FitWindow {
  double skip_fraction = 0.1;  // leading share of the grid treated as pre-asymptotic
};

struct MsdCurve {
  std::vector<double> time;
  std::vector<double> msd;
  std::vector<double> std_error;
  stats::LinearFit fit;
  std::size_t fit_from = 0;  // first grid index used by the fit
  bool low_r2 = false;       // fit R^2 < 0.99
};

/// Displacement samples: paths[r][k] is the position of trajectory r at
/// grid time times[k]. All paths share the grid.
struct PathSet {
  int dim = 2;
  std::vector<double> times;
  std::vector<std::vector<Point>> paths;

  void add(const Trajectory& tr);
};

/// Mean |X_t - X_0|^2 with errors over trajectories, and a linear fit on the grid after `window`.
MsdCurve msd(const PathSet& data, const FitWindow& window = {});

/// D_ij from non-overlapping increments of `lag` grid steps: each
/// trajectory contributes the average of dX_i dX_j / (2 dt) over its
/// increments; errors come from the spread across trajectories.
DiffusionEstimate diffusion_matrix(const PathSet& data, std::size_t lag);

struct EinsteinEntry {
  int i = 0, j = 0;
  double ratio = 0.0;
  double std_error = 0.0;
  stats::Interval ci;  // 95%
  double rel_half_width = 0.0;
  bool contains_one = false;
};

/// R_ij = D_ctrw / (Ew0 * D_dtrw) for entries where |D_dtrw| exceeds 3 of
/// its standard errors; errors propagated to first order.
std::vector<EinsteinEntry> einstein_check(const DiffusionEstimate& ctrw, const DiffusionEstimate& dtrw,
                                          const stats::Estimate& ew0);

/// Accumulates returns and distances of poissonized restricted walks.
struct ReturnTally {
  std::vector<double> time;
  std::vector<std::uint64_t> returns;
  std::vector<stats::Running> distance;  // |Y_t - Y_0|
  std::uint64_t replicas = 0;

  explicit ReturnTally(std::vector<double> t_grid = {});
  void add(std::span<const std::uint32_t> index_at_t, std::span<const Point> position_at_t,
           std::uint32_t start, const Point& start_pos, int dim);
  void merge(const ReturnTally& other);
};

struct HeatKernelCurve {
  std::vector<double> time;
  std::vector<double> probability;
  std::vector<stats::Interval> ci;
  std::vector<std::uint64_t> returns;
  stats::LinearFit fit;   // log P against log t over the fit range
  double fit_lo = 0.0, fit_hi = 0.0;
  std::size_t fit_points = 0;
};

/// Drops times with fewer than `min_returns` returns and fits the largest
/// decade of the remaining ones, weighting by inverse binomial variance on the log scale.
HeatKernelCurve heat_kernel_return(const ReturnTally& tally, std::uint64_t min_returns = 50);

struct DistanceRatioCurve {
  std::vector<double> time;
  std::vector<double> ratio;  // E|Y_t - Y_0| / sqrt(t)
  std::vector<double> std_error;
  double flat_lo = 0.0, flat_hi = 0.0;  // range used for the flatness statistic
  double variation = 0.0;               // max/min - 1 over that range
};

/// Flatness over the decade [t_hi / 10, t_hi]; t_hi defaults to the largest grid time.
DistanceRatioCurve distance_ratio(const ReturnTally& tally, double t_hi = 0.0);

struct KsRow {
  double epsilon = 0.0;
  int coordinate = 0;
  double distance = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// KS distance of standardized coordinates of epsilon * X_{t/eps^2}
/// against N(0,1); endpoints[e][r] belongs to epsilons[e].
std::vector<KsRow> gaussianity_test(std::span<const double> epsilons,
                                    const std::vector<std::vector<Point>>& endpoints, int dim);

struct GeometricFit {
  std::size_t samples = 0;
  double delta = 1.0;  // MLE 1 / (1 + mean)
  double delta_se = 0.0;
  bool no_holes = false;  // every sample was zero
  stats::LinearFit tail;  // log P(Gamma >= k) against k
  std::vector<int> k;
  std::vector<std::uint64_t> at_least;  // #{Gamma >= k}
};

/// Tail fit over k with at least `min_count` samples with Gamma >= k.
GeometricFit geometric_tail_fit(std::span<const std::uint32_t> gammas, std::uint64_t min_count = 100);

/// Same fit from a histogram: hist[k] = #{Gamma = k}.
GeometricFit geometric_tail_fit_histogram(std::span<const std::uint64_t> hist, std::uint64_t min_count = 100);

}  // namespace vrh
