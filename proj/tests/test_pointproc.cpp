#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "vrh/pointproc.hpp"
#include "vrh/stats.hpp"

using namespace vrh;

namespace {

WindowSpec free2(double L) { return WindowSpec{2, L, Boundary::free, 0.0}; }
WindowSpec lattice2(double L, Boundary b = Boundary::free) { return WindowSpec{2, L, b, 0.5}; }

double nearest_to_origin(const MarkedPointSet& ps, std::size_t skip) {
  double best = INFINITY;
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (i != skip || !ps.origin_pinned()) best = std::min(best, std::sqrt(norm2(ps.point(i), 2)));
  return best;
}

}  // namespace

TEST_CASE("ppp count is Poisson(rho * volume)") {
  stats::Running count, unit_box;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto ps = sample_ppp(1.0, free2(10.0), s);
    count.add(static_cast<double>(ps.size()));
    std::size_t in = 0;
    for (const auto& p : ps.points()) in += p[0] >= 0.0 && p[0] < 1.0 && p[1] >= 0.0 && p[1] < 1.0;
    unit_box.add(static_cast<double>(in));
  }
  CHECK(std::fabs(count.mean() - 400.0) < 3.0 * std::sqrt(400.0 / 10000.0));
  CHECK(count.variance() == doctest::Approx(400.0).epsilon(0.05));
  CHECK(std::fabs(unit_box.mean() - 1.0) < 3.0 * unit_box.std_error());
}

TEST_CASE("sampling is deterministic and the cell index is exhaustive") {
  const auto a = sample_ppp(1.3, WindowSpec{2, 12.0, Boundary::torus, 0.0}, 77);
  const auto b = sample_ppp(1.3, WindowSpec{2, 12.0, Boundary::torus, 0.0}, 77);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.point(i) == b.point(i));

  std::vector<int> seen(a.size(), 0);
  for (std::size_t c = 0; c < a.index().cell_count(); ++c)
    for (auto j : a.index().bucket(c)) {
      ++seen[j];
      CHECK(a.index().cell_of(a.point(j)) == c);
    }
  for (int s : seen) CHECK(s == 1);
  for (const auto& p : a.points()) CHECK(a.window().contains(p));
}

TEST_CASE("visit_within matches a brute-force scan, including the torus") {
  for (Boundary bd : {Boundary::free, Boundary::torus}) {
    const auto ps = sample_ppp(1.0, WindowSpec{2, 8.0, bd, 0.0}, 5);
    for (std::size_t x = 0; x < ps.size(); x += 7) {
      std::vector<std::uint32_t> got;
      ps.index().visit_within(ps.window(), ps.points(), ps.point(x), 3.5,
                              [&](std::uint32_t j, const Point&, double) { got.push_back(j); });
      std::vector<std::uint32_t> want;
      for (std::size_t j = 0; j < ps.size(); ++j)
        if (ps.window().distance2(ps.point(x), ps.point(j)) <= 3.5 * 3.5) want.push_back(static_cast<std::uint32_t>(j));
      std::sort(got.begin(), got.end());
      CHECK(got == want);
    }
  }
}

TEST_CASE("diluted lattice") {
  const auto full = sample_diluted_lattice(1.0, lattice2(6.0), 1);
  CHECK(full.size() == 13u * 13u);
  const auto d = sample_diluted_lattice(0.7, lattice2(50.0), 2);
  const double n = 101.0 * 101.0;
  CHECK(std::fabs(static_cast<double>(d.size()) / n - 0.7) < 3.0 * std::sqrt(0.7 * 0.3 / n));
  CHECK_THROWS_AS(sample_diluted_lattice(0.0, lattice2(5.0), 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_diluted_lattice(1.5, lattice2(5.0), 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_ppp(-1.0, free2(5.0), 1), std::invalid_argument);

  const auto marked = sample_marks(d, MarkLaw{1.0}, 3);
  REQUIRE(marked.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(marked.point(i) == d.point(i));
}

TEST_CASE("mark moments") {
  const auto ps = sample_diluted_lattice(1.0, lattice2(100.0), 4);
  for (double gamma : {0.0, 2.0}) {
    const auto m = sample_marks(ps, MarkLaw{gamma}, 8);
    stats::Running first, second;
    double worst = 0.0;
    for (double e : m.marks()) {
      first.add(e);
      second.add(e * e);
      worst = std::max(worst, std::fabs(e));
    }
    CHECK(worst <= 1.0);
    const double want2 = (gamma + 1.0) / (gamma + 3.0);  // 1/3 and 3/5
    CHECK(std::fabs(first.mean()) < 3.0 * first.std_error());
    CHECK(std::fabs(second.mean() - want2) < 3.0 * second.std_error());
    CHECK(MarkLaw{gamma}.abs_moment(2.0) == doctest::Approx(want2));
  }
}

TEST_CASE("palm versions") {
  stats::Running diluted;
  for (std::uint64_t s = 0; s < 4000; ++s) {
    const auto p = palmify(ProcessKind::diluted, 0.5, lattice2(10.0), s);
    REQUIRE(p.origin_pinned());
    CHECK(p.point(0) == Point{0.0, 0.0, 0.0});
    diluted.add(static_cast<double>(p.size()));
  }
  CHECK(std::fabs(diluted.mean() - 221.0) < 3.0 * std::sqrt(0.25 * 440.0 / 4000.0));

  // Slivnyak: removing the added atom leaves a plain PPP, so the distance
  // from the origin to the nearest remaining point has the plain law.
  std::vector<double> palm, plain;
  for (std::uint64_t s = 0; s < 3000; ++s) {
    const auto p = palmify(ProcessKind::ppp, 1.0, free2(4.0), s);
    CHECK(p.point(0) == Point{0.0, 0.0, 0.0});
    palm.push_back(nearest_to_origin(p, 0));
    plain.push_back(nearest_to_origin(sample_ppp(1.0, free2(4.0), s + 100000), SIZE_MAX));
  }
  CHECK(stats::ks_two_sample(palm, plain).p_value > 0.01);
}

TEST_CASE("campbell identity") {
  const auto pure = campbell_check(CampbellFunctional::exp_decay, 1.0, 2, 2000, 1, 16.0, 8.0);
  CHECK(pure.exact == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-6));
  CHECK(pure.consistent);
  const auto ball = campbell_check(CampbellFunctional::exp_decay_ball, 1.0, 2, 10000, 2, 16.0, 8.0);
  CHECK(ball.consistent);
  CHECK(std::fabs(ball.left - ball.right) <= 3.0 * std::hypot(ball.left_se, ball.right_se));
  const auto iso = campbell_check(CampbellFunctional::exp_decay_isolated, 1.0, 2, 4000, 3, 16.0, 8.0);
  CHECK(iso.consistent);

  const auto twice = campbell_check(CampbellFunctional::exp_decay, 2.0, 2, 2000, 1, 16.0, 8.0);
  CHECK(twice.right_raw / pure.right_raw == doctest::Approx(2.0).epsilon(0.05));
}
