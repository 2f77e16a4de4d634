#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vrh/geometry.hpp"
#include "vrh/pointproc.hpp"
#include "vrh/rates.hpp"
#include "vrh/rng.hpp"

namespace vrh {

enum class WalkBoundary { wrap, absorb };

std::string to_string(WalkBoundary b);
WalkBoundary walk_boundary_from_string(const std::string& s);

/// Substreams of a walk seed: jumps and holding times are drawn from separate
/// streams so a CTRW and a DTRW with the same seed share their jump chain.
inline constexpr std::uint64_t kJumpStream = 0;
inline constexpr std::uint64_t kHoldStream = 1;

struct WalkConfig {
  std::uint64_t steps = 0;       // DTRW step budget
  double t_max = 0.0;            // CTRW time budget
  std::uint64_t record_every = 1;  // DTRW: record every k-th step
  double record_dt = 1.0;          // CTRW: record on the grid 0, dt, 2dt, ...
  WalkBoundary boundary = WalkBoundary::wrap;
  double absorb_margin = 0.0;  // absorb mode: stop once within this distance of the window edge
  bool keep_events = false;    // CTRW: store every jump (index and time)

  void validate() const;
};

/// Positions are unwrapped (accumulated displacements), so they grow beyond
/// the window on a torus. Sample k is at step k*record_every (DTRW) or time
/// k*record_dt (CTRW).
struct Trajectory {
  std::vector<std::uint32_t> index;
  std::vector<Point> position;
  std::vector<double> time;
  std::vector<std::uint64_t> jumps;  // jumps made up to each recorded sample
  std::vector<std::uint32_t> event_index;  // keep_events only: X_1, X_2, ...
  std::vector<double> event_time;          // keep_events only: epochs of those jumps
  std::uint64_t total_jumps = 0;
  double t_end = 0.0;
  bool absorbed = false;
  std::uint64_t seed = 0;
};

Trajectory run_dtrw(std::size_t x0, const MarkedPointSet& env, const JumpTable& table, const WalkConfig& cfg,
                    std::uint64_t seed);

/// Holding time at X_i is Exp(1)/w(X_i); the embedded chain is the DTRW with the same seed.
Trajectory run_ctrw(std::size_t x0, const MarkedPointSet& env, const JumpTable& table, const WalkConfig& cfg,
                    std::uint64_t seed);

/// Full-walk statistics of one excursion away from the good set.
struct Excursion {
  std::uint64_t length = 0;  // T_1 for this excursion
  std::uint32_t gamma = 0;   // jumps into a new hole class
  double sup_dbar = 0.0;     // max over the excursion of dbar(start, X_j)
  double sup_dist = 0.0;     // max over the excursion of |X_j - start|
  bool truncated = false;
};

/// Steps the full walk and reports its successive visits to the good set.
class RestrictedWalker {
 public:
  RestrictedWalker(const MarkedPointSet& env, const JumpTable& table, const EnvironmentGeometry& geom,
                   std::size_t x0, std::uint64_t seed, std::uint64_t step_cap = 1'000'000,
                   bool track_dbar = false);

  /// Runs to the next visit and returns its excursion record. After a
  /// truncated excursion the walker stays where it stopped.
  Excursion next();

  [[nodiscard]] std::uint32_t current() const noexcept { return x_; }
  [[nodiscard]] const Point& position() const noexcept { return pos_; }
  [[nodiscard]] std::uint64_t steps() const noexcept { return steps_; }
  [[nodiscard]] std::uint64_t visits() const noexcept { return visits_; }

  /// If set, every full-walk position index is appended here.
  void record_path(std::vector<std::uint32_t>* sink) noexcept { path_ = sink; }

 private:
  const MarkedPointSet* env_;
  const JumpTable* table_;
  const EnvironmentGeometry* geom_;
  Rng rng_;
  std::uint32_t x_;
  Point pos_{0.0, 0.0, 0.0};
  std::uint64_t steps_ = 0;
  std::uint64_t visits_ = 0;
  std::uint64_t cap_;
  bool track_dbar_;
  std::vector<std::uint32_t>* path_ = nullptr;
};

struct RestrictedTrajectory {
  std::vector<std::uint32_t> visit;   // Y_0, Y_1, ...
  std::vector<Point> position;        // unwrapped positions of the visits
  std::vector<std::uint64_t> visit_step;  // T_n
  std::vector<Excursion> excursions;  // excursion n leads from Y_n to Y_{n+1}
  std::vector<std::uint32_t> gamma_cumulative;  // Gamma_{T_n}
  std::vector<std::uint32_t> path;    // full walk, when requested
  bool truncated = false;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument if x0 is not a good point.
RestrictedTrajectory run_restricted(std::size_t x0, std::uint64_t visits, const MarkedPointSet& env,
                                    const JumpTable& table, const EnvironmentGeometry& geom, std::uint64_t seed,
                                    std::uint64_t step_cap = 1'000'000, bool keep_path = false,
                                    bool track_dbar = false);

/// Gamma counter along an arbitrary full path: increments when X_i is off
/// the good set and outside the hole class of X_{i-1}.
std::vector<std::uint32_t> gamma_counts(std::span<const std::uint32_t> path, const EnvironmentGeometry& geom);

struct PoissonizedSample {
  std::vector<std::uint64_t> count;     // N_t per grid time
  std::vector<std::uint32_t> index;     // Y_{N_t}
  bool undercovered = false;            // N_t exceeded the recorded visits
};

/// Y~_t = Y_{N_t} with N a unit-rate Poisson process independent of Y.
PoissonizedSample poissonize(const RestrictedTrajectory& y, std::span<const double> t_grid, std::uint64_t seed);

/// n*(t)/t with a batch-means error over the recorded samples.
stats::Estimate jump_rate_lln(const Trajectory& ctrw, std::size_t batches = 20);

struct ExcursionMoments {
  std::size_t excursions = 0;
  stats::Estimate dbar1, dbar2;  // E[sup dbar], E[sup dbar^2]
  stats::Estimate dist1, dist2;  // E[sup |X_j - x|], E[sup |X_j - x|^2]
  std::size_t truncated = 0;
};

ExcursionMoments excursion_moments(std::span<const Excursion> excursions);

}  // namespace vrh
