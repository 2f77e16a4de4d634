#pragma once

// Ensemble drivers shared by the command-line tool and the acceptance suite.
// Every driver derives environment e's seed as Rng(seed).split(e) and merges
// per-environment results in environment order.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vrh/corrector.hpp"
#include "vrh/estimators.hpp"
#include "vrh/geometry.hpp"
#include "vrh/pointproc.hpp"
#include "vrh/rates.hpp"
#include "vrh/walk.hpp"

namespace vrh {

struct EnvSpec {
  ProcessKind kind = ProcessKind::ppp;
  double intensity = 1.0;
  WindowSpec window{2, 64.0, Boundary::torus, 0.0};
  bool marks = false;  // attach marks with exponent `gamma`
  double gamma = 0.0;
  double cell_size = 1.0;
  bool palm = false;
};

MarkedPointSet make_env(const EnvSpec& spec, std::uint64_t seed);

/// Seed of environment e and the base seed of the walks run on it.
std::uint64_t env_seed(std::uint64_t seed, std::size_t e);
std::uint64_t walk_base_seed(std::uint64_t seed, std::size_t e);

struct WalkStart {
  std::size_t x0 = 0;
  std::uint64_t seed = 0;
};

/// Start point (uniform over the n points) and walk seed of replica r.
WalkStart walk_start(std::uint64_t walk_base, std::size_t r, std::size_t n);

enum class WalkMode { dtrw, ctrw };

struct WalkEnsemble {
  PathSet paths;
  std::vector<double> jump_rate;     // n*(t)/t per trajectory (CTRW)
  std::vector<std::uint64_t> seeds;  // per trajectory
  std::vector<std::uint64_t> env_seeds;
  std::size_t absorbed = 0;
  TruncationCertificate worst_certificate;  // largest bound seen
};

/// `per_env` trajectories on each of `envs` environments, started at
/// uniformly chosen points.
WalkEnsemble run_walk_ensemble(const EnvSpec& spec, const RateModel& model, const TruncationPolicy& trunc,
                               WalkMode mode, std::size_t envs, std::size_t per_env, const WalkConfig& cfg,
                               std::uint64_t seed, unsigned workers);

/// Palm-ensemble Monte Carlo of E_0 w(0): free windows just large enough
/// to hold the cutoff ball around the origin.
stats::Estimate palm_w0(double density, int dim, const RateModel& model, const TruncationPolicy& trunc,
                        bool marks, std::size_t replicas, std::uint64_t seed, unsigned workers);

struct RestrictedStudy {
  ReturnTally tally;
  std::vector<std::uint64_t> gamma_hist;  // per-excursion Gamma histogram
  std::vector<Excursion> sample_excursions;  // first excursions kept for moment tables
  std::size_t truncated = 0;
  double good_fraction = 0.0;  // mean share of points in the good cluster
  double white_fraction = 0.0;
};

struct RestrictedPlan {
  double K = 2.0;
  double t0 = 12.0;
  std::size_t envs = 1;
  std::size_t replicas_per_env = 1000;
  std::vector<double> t_grid;
  std::uint64_t step_cap = 1'000'000;
  std::size_t keep_excursions = 0;
  bool track_dbar = false;
};

/// Poissonized restricted walks from uniformly chosen good points; each
/// replica draws its own Poisson clock and walk.
RestrictedStudy run_restricted_study(const EnvSpec& spec, const RateModel& model, const TruncationPolicy& trunc,
                                     const RestrictedPlan& plan, std::uint64_t seed, unsigned workers);

/// Sub-environment of the points with |x|_inf < half_side, as a free window.
MarkedPointSet restrict_window(const MarkedPointSet& env, double half_side);

/// Solves on nested windows of half side n for each n and reports s(n).
std::vector<SublinearityRow> sublinearity_profile(const MarkedPointSet& env, const RateModel& model,
                                                  const TruncationPolicy& trunc, std::span<const double> ns,
                                                  const SolverOptions& opts);

struct VariationalStudy {
  VariationalD result;
  std::vector<VariationalSample> samples;
  std::size_t max_iterations = 0;
  double worst_residual = 0.0;
  std::size_t pinned = 0;
};

/// Dirichlet solves on `envs` Palm environments in a free window; central
/// points |x|_inf <= central_half_side (or the origin only when negative).
VariationalStudy run_variational_study(const EnvSpec& spec, const RateModel& model, const TruncationPolicy& trunc,
                                       std::size_t envs, double central_half_side, const SolverOptions& opts,
                                       std::uint64_t seed, unsigned workers);

struct MottRow {
  double beta = 0.0;
  DiffusionEstimate d;  // CTRW
  stats::Estimate mean_diag;  // (D_11 + ... + D_dd)/d
  stats::Estimate drop_to_next;  // paired difference mean_diag(beta) - mean_diag(next beta)
};

/// CTRW diffusion per beta with common environments, marks and walk seeds.
std::vector<MottRow> mott_scan(const EnvSpec& spec, const RateModel& base, const TruncationPolicy& trunc,
                               std::span<const double> betas, std::size_t envs, std::size_t per_env,
                               const WalkConfig& cfg, std::size_t lag, std::uint64_t seed, unsigned workers);

/// Geometric sequence t0, t0*ratio, ... up to t_max inclusive.
std::vector<double> geometric_grid(double t0, double ratio, double t_max);

}  // namespace vrh
