#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "vrh/acceptance.hpp"
#include "vrh/experiments.hpp"
#include "vrh/geometry.hpp"
#include "vrh/stats.hpp"
#include "vrh/walk.hpp"

using namespace vrh;

namespace {

const RateModel kModel{1.0, 0.0, 0.0};
const TruncationPolicy kTrunc{8.0, 1e-2};

MarkedPointSet two_points() {
  return MarkedPointSet(WindowSpec{2, 4.0, Boundary::free, 0.0}, {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}}, {}, false);
}

// Two adjacent occupied unit boxes form the good cluster; a third, isolated
// occupied box is a hole.
MarkedPointSet two_state() {
  return MarkedPointSet(WindowSpec{2, 1.5, Boundary::free, 0.0},
                        {{-1.0, -1.0, 0.0}, {0.0, -1.0, 0.0}, {1.0, 1.0, 0.0}}, {}, false);
}

WalkConfig steps(std::uint64_t n) {
  WalkConfig c;
  c.steps = n;
  return c;
}

// Free windows cannot wrap; a zero margin never absorbs.
WalkConfig free_walk() {
  WalkConfig c;
  c.boundary = WalkBoundary::absorb;
  return c;
}

// omega by summing P_GH P_HH^k P_HG until the terms vanish.
std::vector<std::vector<double>> omega_neumann(const MarkedPointSet& env, const EnvironmentGeometry& geom,
                                               std::vector<std::uint32_t>& good) {
  const std::size_t n = env.size();
  std::vector<std::vector<double>> P(n, std::vector<double>(n, 0.0));
  for (std::size_t x = 0; x < n; ++x) {
    const auto t = transition_probs(x, env, kModel, kTrunc);
    for (std::size_t k = 0; k < t.targets.size(); ++k) P[x][t.targets[k]] += t.probs[k];
  }
  good.clear();
  for (std::size_t i = 0; i < n; ++i)
    if (geom.good_point[i]) good.push_back(static_cast<std::uint32_t>(i));
  std::vector<std::vector<double>> omega(good.size(), std::vector<double>(good.size(), 0.0));
  for (std::size_t a = 0; a < good.size(); ++a) {
    // mass[h]: probability of sitting at hole point h after the current number of hole steps
    std::vector<double> mass(n, 0.0);
    for (std::size_t y = 0; y < n; ++y) {
      if (geom.good_point[y])
        omega[a][static_cast<std::size_t>(std::find(good.begin(), good.end(), y) - good.begin())] += P[good[a]][y];
      else
        mass[y] = P[good[a]][y];
    }
    for (int it = 0; it < 100000; ++it) {
      std::vector<double> next(n, 0.0);
      double left = 0.0;
      for (std::size_t h = 0; h < n; ++h) {
        if (mass[h] == 0.0) continue;
        for (std::size_t b = 0; b < good.size(); ++b) omega[a][b] += mass[h] * P[h][good[b]];
        for (std::size_t y = 0; y < n; ++y)
          if (!geom.good_point[y]) next[y] += mass[h] * P[h][y];
      }
      for (double m : next) left += m;
      mass.swap(next);
      if (left < 1e-17) break;
    }
  }
  return omega;
}

}  // namespace

TEST_CASE("dtrw transitions follow the enumerated probabilities") {
  const auto env = two_points();
  const JumpTable table(env, kModel, kTrunc);
  WalkConfig c = free_walk();
  c.steps = 200000;
  const auto tr = run_dtrw(0, env, table, c, 1);
  REQUIRE(tr.index.size() == 200001);
  std::vector<std::uint64_t> from0(2, 0), from1(2, 0);
  for (std::size_t i = 1; i < tr.index.size(); ++i) ++(tr.index[i - 1] == 0 ? from0 : from1)[tr.index[i]];
  const double q = std::exp(-1.0) / (1.0 + std::exp(-1.0));
  const std::vector<double> p0{1.0 - q, q}, p1{q, 1.0 - q};
  CHECK(stats::chi2_gof(from0, p0).p_value > 0.01);
  CHECK(stats::chi2_gof(from1, p1).p_value > 0.01);
  // positions are consistent with the indices (free window, no wrapping)
  for (std::size_t i = 0; i < tr.index.size(); i += 997) CHECK(tr.position[i] == env.point(tr.index[i]));
}

TEST_CASE("ctrw holding times have mean 1/w") {
  const auto env = two_points();
  const JumpTable table(env, kModel, kTrunc);
  WalkConfig c = free_walk();
  c.t_max = 100000.0;
  c.record_dt = 1000.0;
  c.keep_events = true;
  const auto tr = run_ctrw(0, env, table, c, 3);
  // Holding time at x is the gap between consecutive jump epochs out of x.
  stats::Running hold;
  double prev = 0.0;
  std::uint32_t at = 0;
  for (std::size_t i = 0; i < tr.event_time.size(); ++i) {
    if (at == 0) hold.add(tr.event_time[i] - prev);
    prev = tr.event_time[i];
    at = tr.event_index[i];
  }
  const double w = 1.0 + std::exp(-1.0);
  CHECK(std::fabs(hold.mean() - 1.0 / w) < 3.0 * hold.std_error());
}

TEST_CASE("ctrw and dtrw share the jump chain") {
  const auto env = sample_ppp(1.0, WindowSpec{2, 16.0, Boundary::torus, 0.0}, 2);
  const JumpTable table(env, kModel, kTrunc);
  // w is about 1 + 2 pi here, so t = 500 takes a few thousand jumps.
  const auto d = run_dtrw(5, env, table, steps(20000), 77);
  WalkConfig c;
  c.t_max = 500.0;
  c.keep_events = true;
  const auto t = run_ctrw(5, env, table, c, 77);
  REQUIRE(t.event_index.size() <= 20000);
  REQUIRE(t.event_index.size() > 100);
  for (std::size_t i = 0; i < t.event_index.size(); ++i) CHECK(t.event_index[i] == d.index[i + 1]);
  CHECK(t.total_jumps == t.event_index.size());
  for (std::size_t k = 1; k < t.time.size(); ++k) CHECK(t.time[k] > t.time[k - 1]);

  const auto zero = run_dtrw(5, env, table, steps(0), 1);
  CHECK(zero.index.size() == 1);
  CHECK(zero.total_jumps == 0);
}

TEST_CASE("restricted walk embeds in the full walk") {
  const auto env = sample_ppp(1.0, WindowSpec{2, 24.0, Boundary::torus, 0.0}, 6);
  const JumpTable table(env, kModel, kTrunc);
  // A fine geometry so that the walk actually crosses holes.
  const auto geom = build_geometry(env, 1.0, 3.0, 1.0);
  std::size_t x0 = 0;
  while (!geom.good_point[x0]) ++x0;
  const auto y = run_restricted(x0, 2000, env, table, geom, 9, 1'000'000, true);
  REQUIRE_FALSE(y.truncated);
  REQUIRE(y.visit.size() == 2001);
  for (std::size_t n = 0; n < y.visit.size(); ++n) {
    CHECK(y.visit[n] == y.path[y.visit_step[n]]);
    CHECK(geom.good_point[y.visit[n]]);
    if (n > 0) CHECK(y.visit_step[n] > y.visit_step[n - 1]);
  }
  const auto gamma = gamma_counts(y.path, geom);
  for (std::size_t n = 0; n < y.visit.size(); ++n) CHECK(y.gamma_cumulative[n] == gamma[y.visit_step[n]]);
  for (std::size_t n = 1; n < y.visit.size(); ++n) {
    CHECK(y.gamma_cumulative[n] >= y.gamma_cumulative[n - 1]);
    CHECK(y.gamma_cumulative[n] <= y.visit_step[n]);
    CHECK(y.excursions[n - 1].length == y.visit_step[n] - y.visit_step[n - 1]);
  }
  std::size_t bad = 0;
  while (bad < env.size() && geom.good_point[bad]) ++bad;
  REQUIRE(bad < env.size());
  CHECK_THROWS_AS(run_restricted(bad, 10, env, table, geom, 1), std::invalid_argument);
}

TEST_CASE("restricted transition matrix: absorbing chain, reversibility, Monte Carlo") {
  const auto env = omega_fixture();
  const auto geom = build_geometry(env, 1.0, 100.0, 1.0);
  const JumpTable table(env, kModel, kTrunc);
  std::vector<std::uint32_t> good_lu, good_ne;
  const auto lu = restricted_transition_matrix(env, kModel, kTrunc, geom, good_lu);
  const auto ne = omega_neumann(env, geom, good_ne);
  REQUIRE(good_lu == good_ne);
  REQUIRE(good_lu.size() + 2 == env.size());
  for (std::size_t a = 0; a < lu.size(); ++a) {
    double row = 0.0;
    for (std::size_t b = 0; b < lu.size(); ++b) {
      CHECK(std::fabs(lu[a][b] - ne[a][b]) < 1e-12);
      CHECK(std::fabs(table.weight(good_lu[a]) * lu[a][b] - table.weight(good_lu[b]) * lu[b][a]) <= 1e-9);
      row += lu[a][b];
    }
    CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
  }

  // Next good point after one excursion from the good point next to the hole.
  std::size_t a = 0;
  for (std::size_t k = 0; k < good_lu.size(); ++k)
    if (std::fabs(env.point(good_lu[k])[0]) + std::fabs(env.point(good_lu[k])[1] - 2.0) < 1e-12) a = k;  // (0, 2)
  const int n = 100000;
  std::vector<std::uint64_t> hits(good_lu.size(), 0);
  for (int i = 0; i < n; ++i) {
    RestrictedWalker w(env, table, geom, good_lu[a], Rng(5).split(static_cast<std::uint64_t>(i))());
    const auto ex = w.next();
    REQUIRE_FALSE(ex.truncated);
    ++hits[static_cast<std::size_t>(std::find(good_lu.begin(), good_lu.end(), w.current()) - good_lu.begin())];
  }
  for (std::size_t b = 0; b < good_lu.size(); ++b) {
    const double p = lu[a][b];
    if (p * n < 20) continue;
    CHECK(std::fabs(double(hits[b]) / n - p) <= 3.0 * std::sqrt(p * (1 - p) / n));
  }
  CHECK(stats::chi2_gof(hits, lu[a]).p_value > 0.001);
}

TEST_CASE("poissonized two-state walk matches the matrix exponential") {
  const auto env = two_state();
  const auto geom = build_geometry(env, 1.0, 100.0, 1.0);
  REQUIRE(geom.good_points == 2);
  const JumpTable table(env, kModel, kTrunc);
  std::vector<std::uint32_t> good;
  const auto om = omega_neumann(env, geom, good);
  Eigen::Matrix2d gen;
  gen << om[0][0] - 1.0, om[0][1], om[1][0], om[1][1] - 1.0;

  const std::vector<double> grid{0.5, 2.0, 5.0};
  const int reps = 40000;
  std::vector<std::uint64_t> at_start(grid.size(), 0);
  for (int r = 0; r < reps; ++r) {
    const Rng seed = Rng(8).split(static_cast<std::uint64_t>(r));
    const auto y = run_restricted(good[0], 60, env, table, geom, seed.split(0)());
    const auto s = poissonize(y, grid, seed.split(1)());
    REQUIRE_FALSE(s.undercovered);
    for (std::size_t k = 0; k < grid.size(); ++k) at_start[k] += s.index[k] == good[0];
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Eigen::Matrix2d q = (gen * grid[k]).exp();
    const double p = q(0, 0);
    CHECK(std::fabs(double(at_start[k]) / reps - p) <= 3.0 * std::sqrt(p * (1 - p) / reps));
  }
}

TEST_CASE("walk ensembles do not depend on the worker count") {
  EnvSpec spec;
  spec.window = WindowSpec{2, 16.0, Boundary::torus, 0.0};
  WalkConfig c = steps(500);
  c.record_every = 50;
  const auto a = run_walk_ensemble(spec, kModel, kTrunc, WalkMode::dtrw, 3, 4, c, 11, 1);
  const auto b = run_walk_ensemble(spec, kModel, kTrunc, WalkMode::dtrw, 3, 4, c, 11, 5);
  REQUIRE(a.paths.paths.size() == b.paths.paths.size());
  for (std::size_t r = 0; r < a.paths.paths.size(); ++r) CHECK(a.paths.paths[r] == b.paths.paths[r]);
  CHECK(a.seeds == b.seeds);
}

TEST_CASE("jump-rate estimate and excursion moments") {
  const auto env = two_points();
  const JumpTable table(env, kModel, kTrunc);
  WalkConfig c = free_walk();
  c.t_max = 20000.0;
  const auto tr = run_ctrw(0, env, table, c, 4);
  const auto est = jump_rate_lln(tr);
  CHECK(std::fabs(est.value - (1.0 + std::exp(-1.0))) < 4.0 * est.std_error + 1e-3);

  std::vector<Excursion> ex(3);
  ex[0].sup_dbar = 1;
  ex[1].sup_dbar = 2;
  ex[2].sup_dbar = 3;
  ex[2].truncated = true;
  const auto m = excursion_moments(ex);
  CHECK(m.excursions == 2);
  CHECK(m.truncated == 1);
  CHECK(m.dbar1.value == doctest::Approx(1.5));
  CHECK(m.dbar2.value == doctest::Approx(2.5));
}
