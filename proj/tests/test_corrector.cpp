#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "doctest.h"
#include "vrh/corrector.hpp"
#include "vrh/geometry.hpp"
#include "vrh/stats.hpp"
#include "vrh/walk.hpp"

using namespace vrh;

namespace {

SolverOptions tight(SolverMethod m = SolverMethod::cg) {
  SolverOptions o;
  o.tol = 1e-13;
  o.method = m;
  return o;
}

double max_chi(const MarkedPointSet& env, const HarmonicField& f) {
  double m = 0.0;
  for (std::size_t i = 0; i < env.size(); ++i) {
    const Point c = f.chi(env, i);
    for (int k = 0; k < f.dim; ++k) m = std::max(m, std::fabs(c[k]));
  }
  return m;
}

}  // namespace

TEST_CASE("one interior point has the closed-form solution") {
  const Point y{-2.6, 0.0, 0.0}, z{2.7, 0.4, 0.0}, x{0.4, 0.2, 0.0};
  const MarkedPointSet env(WindowSpec{2, 3.0, Boundary::free, 0.0}, {y, x, z}, {}, false);
  const RateModel m{1.0, 0.0, 0.0};
  const JumpTable table(env, m, TruncationPolicy{10.0, 1.0});
  const auto f = solve_harmonic(env, table, 1.0, tight());
  REQUIRE(f.interior_count == 1);
  CHECK(f.interior[1]);
  // Phi(x) (w - r(0)) = r(y - x) y + r(z - x) z, and w - r(0) = r(y - x) + r(z - x).
  const double ry = rate({y[0] - x[0], y[1] - x[1], 0}, 2, 1.0), rz = rate({z[0] - x[0], z[1] - x[1], 0}, 2, 1.0);
  for (int k = 0; k < 2; ++k) CHECK(std::fabs(f.phi[1][k] - (ry * y[k] + rz * z[k]) / (ry + rz)) <= 1e-10);
  CHECK(f.phi[0] == y);
  CHECK(f.phi[2] == z);
}

TEST_CASE("full lattice corrector vanishes and gives the lattice-sum D") {
  const auto env = palmify(ProcessKind::diluted, 1.0, WindowSpec{2, 12.0, Boundary::free, 0.5}, 1);
  const RateModel m{1.0, 0.0, 0.0};
  const TruncationPolicy tr{4.0, 1.0};
  const JumpTable table(env, m, tr);
  const auto f = solve_harmonic(env, table, tr.r_cut);
  CHECK(f.converged);
  CHECK(max_chi(env, f) <= 1e-8);

  // Oracle: D_ij = sum_v r(v) v_i v_j / (2 sum_v r(v)) over |v| <= r_cut, v in Z^2.
  double num = 0.0, cross = 0.0, den = 0.0;
  for (int i = -4; i <= 4; ++i)
    for (int j = -4; j <= 4; ++j) {
      if (i * i + j * j > 16) continue;
      const double r = rate({double(i), double(j), 0}, 2, 1.0);
      num += r * i * i;
      cross += r * i * j;
      den += r;
    }
  const std::vector<VariationalSample> s{variational_sample(env, table, f, 0.0)};
  const auto d = variational_d(s, 2);
  CHECK(d.dtrw.at(0, 0) == doctest::Approx(num / (2.0 * den)).epsilon(1e-9));
  CHECK(d.dtrw.at(1, 1) == doctest::Approx(num / (2.0 * den)).epsilon(1e-9));
  CHECK(std::fabs(d.dtrw.at(0, 1)) <= 1e-12);
  CHECK(std::fabs(cross) <= 1e-12);
  CHECK(d.ew0.value == doctest::Approx(den).epsilon(1e-12));
  CHECK(d.ctrw.at(0, 0) == doctest::Approx(d.ew0.value * d.dtrw.at(0, 0)).epsilon(1e-12));
}

TEST_CASE("PPP solve: boundary data, residual, solver agreement, positive D") {
  const auto env = palmify(ProcessKind::ppp, 1.0, WindowSpec{2, 20.0, Boundary::free, 0.0}, 4);
  const RateModel m{1.0, 0.0, 0.0};
  const TruncationPolicy tr{6.0, 1.0};
  const JumpTable table(env, m, tr);
  SolverOptions o;
  o.tol = 1e-10;
  const auto cg = solve_harmonic(env, table, tr.r_cut, o);
  REQUIRE(cg.converged);
  CHECK(cg.residual <= o.tol);
  CHECK(harmonic_residual(env, table, cg) <= o.tol * 1.0001);
  for (std::size_t i = 0; i < env.size(); ++i)
    if (!cg.interior[i] || cg.pinned[i]) CHECK(cg.phi[i] == env.point(i));
  for (std::size_t i = 0; i < env.size(); ++i)
    if (env.window().edge_distance(env.point(i)) < tr.r_cut) CHECK_FALSE(cg.interior[i]);

  o.method = SolverMethod::jacobi;
  const auto jac = solve_harmonic(env, table, tr.r_cut, o);
  REQUIRE(jac.converged);
  double diff = 0.0;
  for (std::size_t i = 0; i < env.size(); ++i)
    for (int k = 0; k < 2; ++k) diff = std::max(diff, std::fabs(jac.phi[i][k] - cg.phi[i][k]));
  CHECK(diff < 1e-6);

  const std::vector<VariationalSample> s{variational_sample(env, table, cg, 6.0)};
  const auto d = variational_d(s, 2);
  Eigen::Matrix2d D;
  D << d.dtrw.at(0, 0), d.dtrw.at(0, 1), d.dtrw.at(1, 0), d.dtrw.at(1, 1);
  CHECK(D.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() > 0.0);
  CHECK(std::fabs(d.dtrw.at(0, 1) - d.dtrw.at(1, 0)) <= 1e-12);
  CHECK_THROWS_AS(variational_sample(env, table, cg, 18.0), std::invalid_argument);

  std::vector<std::array<std::size_t, 3>> triples{{0, 1, 2}, {5, 9, 40}, {3, 3, 7}};
  CHECK(shift_covariance_defect(env, cg, triples) <= 1e-12);

  const auto row = sublinearity(env, cg, 16.0);
  CHECK(row.s >= 0.0);
  CHECK(row.points > 0);

  const auto torus = sample_ppp(1.0, WindowSpec{2, 10.0, Boundary::torus, 0.0}, 1);
  CHECK_THROWS_AS(solve_harmonic(torus, JumpTable(torus, m, tr), 2.0), std::invalid_argument);
}

TEST_CASE("Phi is a martingale along excursions of the full walk") {
  // Phi is harmonic only off the boundary layer, so the window is wide enough
  // that excursions from the centre never reach it.
  const auto env = sample_ppp(1.0, WindowSpec{2, 40.0, Boundary::free, 0.0}, 12);
  const RateModel m{1.0, 0.0, 0.0};
  const TruncationPolicy tr{6.0, 1.0};
  const JumpTable table(env, m, tr);
  const auto f = solve_harmonic(env, table, tr.r_cut);
  const double reach = 40.0 - tr.r_cut - 8.0;
  REQUIRE(f.converged);
  const auto geom = build_geometry(env, 2.0, 12.0, 1.0);
  std::vector<std::uint32_t> starts;
  for (std::size_t i = 0; i < env.size(); ++i) {
    const auto& p = env.point(i);
    if (geom.good_point[i] && std::fabs(p[0]) <= 8.0 && std::fabs(p[1]) <= 8.0) starts.push_back(static_cast<std::uint32_t>(i));
  }
  REQUIRE(starts.size() > 100);
  stats::Running inc[2];
  const Rng base(31);
  for (std::uint64_t r = 0; r < 100000; ++r) {
    Rng pick = base.split(2 * r);
    const auto x0 = starts[pick.below(starts.size())];
    RestrictedWalker w(env, table, geom, x0, base.split(2 * r + 1)());
    const auto e = w.next();
    REQUIRE_FALSE(e.truncated);
    REQUIRE(e.sup_dist < reach);
    for (int k = 0; k < 2; ++k) inc[k].add(f.phi[w.current()][k] - f.phi[x0][k]);
  }
  for (int k = 0; k < 2; ++k) CHECK(std::fabs(inc[k].mean()) <= 3.0 * inc[k].std_error());
}
