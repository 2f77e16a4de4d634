#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "vrh/estimators.hpp"
#include "vrh/stats.hpp"

using namespace vrh;

namespace {

// Gaussian walk with per-step, per-coordinate variance s2, recorded every step.
PathSet gaussian_paths(std::size_t n, std::size_t steps, double s2, std::uint64_t seed) {
  PathSet ps;
  ps.dim = 2;
  for (std::size_t k = 0; k <= steps; ++k) ps.times.push_back(static_cast<double>(k));
  const Rng base(seed);
  const double s = std::sqrt(s2);
  for (std::size_t r = 0; r < n; ++r) {
    Rng g = base.split(r);
    std::vector<Point> path{{0.0, 0.0, 0.0}};
    Point x{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < steps; ++k) {
      x[0] += s * sample_normal(g);
      x[1] += s * sample_normal(g);
      path.push_back(x);
    }
    ps.paths.push_back(std::move(path));
  }
  return ps;
}

std::vector<double> median_ks(const std::vector<std::vector<double>>& by_eps) {
  std::vector<double> out;
  for (auto v : by_eps) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    out.push_back(v[v.size() / 2]);
  }
  return out;
}

}  // namespace

TEST_CASE("msd of a Gaussian walk grows like d s^2 t") {
  const double s2 = 0.7;
  const auto ps = gaussian_paths(2000, 100, s2, 1);
  const auto c = msd(ps);
  for (std::size_t k = 1; k < c.time.size(); ++k) {
    CHECK(c.msd[k] >= 0.0);
    CHECK(c.time[k] > c.time[k - 1]);
  }
  CHECK(c.fit_from >= 10);
  CHECK_FALSE(c.low_r2);
  const double tol = 3.0 * c.std_error.back() / c.time.back();
  CHECK(std::fabs(c.fit.slope - 2.0 * s2) <= tol);
  CHECK(std::fabs(c.msd.back() / c.time.back() - 2.0 * s2) <= tol);
}

TEST_CASE("diffusion matrix of a Gaussian walk and its error scaling") {
  const double s2 = 0.5;
  const auto small = gaussian_paths(1000, 200, s2, 2);
  const auto big = gaussian_paths(2000, 200, s2, 3);
  const auto d1 = diffusion_matrix(small, 10);
  const auto d2 = diffusion_matrix(big, 10);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::fabs(d2.at(i, i) - s2 / 2.0) <= 3.0 * d2.se(i, i));
    CHECK(d2.at(i, i) > 0.0);
    const double ratio = (d2.se(i, i) * d2.se(i, i)) / (d1.se(i, i) * d1.se(i, i));
    CHECK(ratio == doctest::Approx(0.5).epsilon(0.3));
  }
  CHECK(std::fabs(d2.at(0, 1) - d2.at(1, 0)) <= 1e-12);
  CHECK(std::fabs(d2.at(0, 1)) <= 3.0 * d2.se(0, 1));

  // rerun is bit-identical
  const auto again = diffusion_matrix(big, 10);
  CHECK(again.value == d2.value);
  CHECK(again.std_error == d2.std_error);
}

TEST_CASE("einstein ratios") {
  DiffusionEstimate dt, ct;
  dt.value = {0.25, 0.0, 0, 0.0, 0.25, 0, 0, 0, 0};
  dt.std_error = {0.001, 0.001, 0, 0.001, 0.001, 0, 0, 0, 0};
  ct.value = {1.0, 0.0, 0, 0.0, 1.1, 0, 0, 0, 0};
  ct.std_error = {0.004, 0.004, 0, 0.004, 0.004, 0, 0, 0, 0};
  const stats::Estimate ew0{4.0, 0.01, 100};
  const auto rows = einstein_check(ct, dt, ew0);
  REQUIRE(rows.size() == 2);  // off-diagonal D_dtrw is indistinguishable from 0
  CHECK(rows[0].ratio == doctest::Approx(1.0));
  CHECK(rows[0].contains_one);
  CHECK(rows[1].ratio == doctest::Approx(1.1));
  CHECK_FALSE(rows[1].contains_one);
  CHECK(rows[0].ci.lo < 1.0);
  CHECK(rows[0].rel_half_width == doctest::Approx(1.959963984540054 * rows[0].std_error / rows[0].ratio));
}

TEST_CASE("heat kernel fit on an exact power law") {
  ReturnTally t(std::vector<double>{1, 2, 4, 8, 16, 32, 64, 128});
  t.replicas = 1000000;
  for (std::size_t k = 0; k < t.time.size(); ++k)
    t.returns[k] = static_cast<std::uint64_t>(std::llround(0.4 * 1e6 / t.time[k]));
  const auto c = heat_kernel_return(t, 50);
  CHECK(c.fit_hi == 128.0);
  CHECK(c.fit_lo == doctest::Approx(12.8));
  CHECK(c.fit_points == 4);
  CHECK(c.fit.slope == doctest::Approx(-1.0).epsilon(1e-3));
  for (std::size_t k = 0; k < c.probability.size(); ++k) {
    CHECK(c.probability[k] >= 0.0);
    CHECK(c.probability[k] <= 1.0);
    if (k > 0) CHECK(c.probability[k] <= c.probability[k - 1]);
  }
}

TEST_CASE("distance ratio of a diffusive walk is flat") {
  const double D = 0.3;
  std::vector<double> grid;
  for (double t = 1; t <= 1024; t *= 2) grid.push_back(t);
  ReturnTally tally(grid);
  Rng g(4);
  for (int r = 0; r < 20000; ++r) {
    std::vector<std::uint32_t> idx(grid.size(), 1);
    std::vector<Point> pos(grid.size());
    double prev = 0.0;
    Point x{0, 0, 0};
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double s = std::sqrt(2.0 * D * (grid[k] - prev));
      x[0] += s * sample_normal(g);
      x[1] += s * sample_normal(g);
      pos[k] = x;
      prev = grid[k];
    }
    tally.add(idx, pos, 0, {0, 0, 0}, 2);
  }
  const auto c = distance_ratio(tally);
  CHECK(c.variation <= 0.15);
  // E|Y_t| = sqrt(2 D t) sqrt(pi / 2) in d = 2
  const double want = std::sqrt(2.0 * D) * std::sqrt(std::numbers::pi / 2.0);
  CHECK(std::fabs(c.ratio.back() - want) <= 3.0 * c.std_error.back());
  CHECK(tally.returns[0] == 0);
}

TEST_CASE("return tallies merge like one tally") {
  const std::vector<double> grid{1, 2};
  ReturnTally a(grid), b(grid), all(grid);
  const std::vector<std::uint32_t> i1{3, 4}, i2{4, 3};
  const std::vector<Point> p1{{1, 0, 0}, {2, 0, 0}}, p2{{0, 3, 0}, {0, 1, 0}};
  a.add(i1, p1, 3, {0, 0, 0}, 2);
  b.add(i2, p2, 3, {0, 0, 0}, 2);
  all.add(i1, p1, 3, {0, 0, 0}, 2);
  all.add(i2, p2, 3, {0, 0, 0}, 2);
  a.merge(b);
  CHECK(a.replicas == 2);
  CHECK(a.returns == all.returns);
  CHECK(a.returns == std::vector<std::uint64_t>{1, 1});
  CHECK(a.distance[1].mean() == doctest::Approx(all.distance[1].mean()));
}

TEST_CASE("gaussianity test: calibration, convergence and power") {
  const std::vector<double> eps{1.0};
  int accepted = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    Rng g(rep);
    std::vector<std::vector<Point>> e(1);
    for (int i = 0; i < 500; ++i) e[0].push_back({1.7 * sample_normal(g), sample_normal(g) - 3.0, 0.0});
    const auto rows = gaussianity_test(eps, e, 2);
    accepted += rows[0].p_value > 0.01;
  }
  CHECK(accepted >= 95);

  // epsilon X_{1/eps^2} for a +-1 walk: the KS distance shrinks as eps is halved.
  const std::vector<double> halving{1.0, 0.5, 0.25, 0.125};
  std::vector<std::vector<double>> ks(halving.size());
  for (std::uint64_t rep = 0; rep < 21; ++rep) {
    Rng g(1000 + rep);
    std::vector<std::vector<Point>> e(halving.size());
    for (std::size_t k = 0; k < halving.size(); ++k) {
      const int n = static_cast<int>(std::lround(1.0 / (halving[k] * halving[k])));
      for (int i = 0; i < 2000; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += g.below(2) ? 1.0 : -1.0;
        e[k].push_back({s, 0.0, 0.0});
      }
    }
    const auto rows = gaussianity_test(halving, e, 1);
    for (std::size_t k = 0; k < halving.size(); ++k) ks[k].push_back(rows[k].distance);
  }
  const auto med = median_ks(ks);
  for (std::size_t k = 1; k < med.size(); ++k) CHECK(med[k] <= med[k - 1]);

  Rng g(7);
  std::vector<std::vector<Point>> heavy(1);
  for (int i = 0; i < 2000; ++i) heavy[0].push_back({std::tan(std::numbers::pi * (g.uniform_open() - 0.5)), 0.0, 0.0});
  CHECK(gaussianity_test(eps, heavy, 1)[0].p_value < 1e-6);
}

TEST_CASE("geometric tail fit") {
  Rng g(3);
  std::vector<std::uint32_t> xs(100000);
  for (auto& x : xs) {
    std::uint32_t k = 0;
    while (g.uniform() < 0.5) ++k;
    x = k;
  }
  const auto f = geometric_tail_fit(xs, 100);
  CHECK(std::fabs(f.delta - 0.5) <= 3.0 * f.delta_se);
  CHECK(f.tail.slope == doctest::Approx(std::log(0.5)).epsilon(0.05));
  CHECK(f.tail.r2 >= 0.95);
  CHECK(f.at_least.front() == xs.size());
  for (std::size_t k = 0; k < f.k.size(); ++k) CHECK(f.at_least[k] >= 100);

  std::vector<std::uint64_t> hist(40, 0);
  for (auto x : xs) ++hist[x];
  const auto h = geometric_tail_fit_histogram(hist, 100);
  CHECK(h.delta == doctest::Approx(f.delta));
  CHECK(h.tail.slope == doctest::Approx(f.tail.slope));

  const std::vector<std::uint32_t> zeros(50, 0);
  CHECK(geometric_tail_fit(zeros, 10).no_holes);
}
