#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "vrh/pointproc.hpp"
#include "vrh/rates.hpp"
#include "vrh/stats.hpp"

using namespace vrh;

namespace {

MarkedPointSet custom(std::vector<Point> pts, std::vector<double> marks = {}, double L = 8.0) {
  return MarkedPointSet(WindowSpec{2, L, Boundary::free, 0.0}, std::move(pts), std::move(marks), false);
}

MarkedPointSet random_config(std::size_t n, std::uint64_t seed, double L, bool marks) {
  Rng r(seed);
  std::vector<Point> pts(n);
  std::vector<double> e;
  for (auto& p : pts) p = {(2.0 * r.uniform() - 1.0) * L, (2.0 * r.uniform() - 1.0) * L, 0.0};
  if (marks)
    for (std::size_t i = 0; i < n; ++i) e.push_back(2.0 * r.uniform() - 1.0);
  return custom(std::move(pts), std::move(e), L);
}

// Tail oracle: plain double loop over a box large enough that the rest is below 1e-60.
double tail_direct(double a, double m, int R) {
  double s = 0.0;
  for (int i = -R; i <= R; ++i)
    for (int j = -R; j <= R; ++j) {
      const double r = std::sqrt(double(i * i + j * j));
      if (r >= m) s += std::exp(-a * r);
    }
  return s;
}

double poisson_tail_direct(double lambda, double t) {
  double s = 0.0;
  for (int k = static_cast<int>(std::floor(t)) + 1; k < 400; ++k)
    s += std::exp(-lambda + k * std::log(lambda) - std::lgamma(k + 1.0));
  return s;
}

const TruncationPolicy wide{30.0, 1.0};

}  // namespace

TEST_CASE("kernel and mark interaction") {
  CHECK(rate({0, 0, 0}, 2, 1.0) == 1.0);
  CHECK(rate({1, 0, 0}, 2, 1.0) == doctest::Approx(0.367879441171));
  CHECK(rate({0, 2, 0}, 2, 2.0) == doctest::Approx(0.018315638889));
  CHECK(mott_u(0.0, 0.0, 3.0) == 0.0);
  CHECK(mott_u(0.5, -0.5, 2.0) == doctest::Approx(4.0));
  CHECK_THROWS_AS(mott_u(1.5, 0.0, 1.0), std::invalid_argument);
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double a = 2.0 * r.uniform() - 1.0, b = 2.0 * r.uniform() - 1.0, beta = 5.0 * r.uniform();
    const Point v{r.uniform() * 4 - 2, r.uniform() * 4 - 2, 0.0};
    CHECK(rate(v, 2, 0.7) == rate({-v[0], -v[1], 0.0}, 2, 0.7));
    CHECK(mott_u(a, b, beta) == mott_u(b, a, beta));
    CHECK(mott_u(a, b, beta) >= 0.0);
    CHECK(mott_u(a, b, beta) <= 4.0 * beta + 1e-12);
  }
}

TEST_CASE("two-point weights and transition probabilities") {
  const auto single = custom({{0.5, 0.5, 0.0}}, {0.3});
  CHECK(local_weight(0, single, RateModel{1.0, 0.0, 0.0}, wide).w == 1.0);
  const auto t1 = transition_probs(0, single, RateModel{1.0, 2.0, 0.0}, wide);
  REQUIRE(t1.targets.size() == 1);
  CHECK(t1.probs[0] == 1.0);
  Rng rs(4);
  CHECK(sample_jump(0, single, RateModel{}, wide, rs) == 0);

  const auto two = custom({{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}});
  const RateModel m{1.0, 0.0, 0.0};
  CHECK(local_weight(0, two, m, wide).w == doctest::Approx(1.0 + std::exp(-1.0)).epsilon(1e-14));
  const auto tp = transition_probs(0, two, m, wide);
  for (std::size_t k = 0; k < tp.targets.size(); ++k)
    CHECK(tp.probs[k] == doctest::Approx(tp.targets[k] == 0 ? 0.731058578630 : 0.268941421370).epsilon(1e-10));

  const JumpTable table(two, m, wide);
  Rng r(2);
  const int n = 200000;
  int self = 0;
  for (int i = 0; i < n; ++i) self += table.sample(0, r) == 0;
  const double p = 0.731058578630;
  CHECK(std::fabs(double(self) / n - p) < 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("normalization and detailed balance") {
  const auto env = random_config(100, 7, 5.0, true);
  const RateModel m{0.8, 1.5, 1.0};
  const TruncationPolicy tr{4.0, 1.0};
  const JumpTable table(env, m, tr);
  for (std::size_t x = 0; x < env.size(); ++x) {
    const auto t = transition_probs(x, env, m, tr);
    double s = 0.0;
    for (double p : t.probs) s += p;
    CHECK(std::fabs(s - 1.0) <= 1e-12);
    CHECK(table.weight(x) == doctest::Approx(t.w).epsilon(1e-13));
    for (std::size_t k = 0; k < t.targets.size(); ++k) {
      const std::size_t y = t.targets[k];
      const auto back = transition_probs(y, env, m, tr);
      const auto it = std::find(back.targets.begin(), back.targets.end(), x);
      REQUIRE(it != back.targets.end());
      const double pyx = back.probs[static_cast<std::size_t>(it - back.targets.begin())];
      CHECK(std::fabs(t.w * t.probs[k] - back.w * pyx) <= 1e-12 * std::max(1.0, t.w));
    }
  }
}

TEST_CASE("truncated weight is within the certified tail of the full sum") {
  const auto env = sample_ppp(1.0, WindowSpec{2, 16.0, Boundary::free, 0.0}, 3);
  const RateModel m{1.0, 0.0, 0.0};
  const TruncationPolicy tr{5.0, 1.0};
  const auto cert = certify(env, m, tr);
  for (std::size_t x = 0; x < env.size(); x += 5) {
    double full = 0.0;
    for (std::size_t z = 0; z < env.size(); ++z)
      full += rate_from_dist2(env.window().distance2(env.point(x), env.point(z)), 1.0);
    const auto w = local_weight(x, env, m, tr);
    CHECK(full - w.w >= -1e-12);
    CHECK(full - w.w <= w.tail_bound);
    CHECK(w.tail_bound <= cert.bound);
  }
}

TEST_CASE("tail sums") {
  CHECK(tail_sum(1.0, 0.0, 2, 1.0) >= 1.0);
  const double want = tail_direct(1.0, 3.0, 80);
  const double got = tail_sum(1.0, 3.0, 2, 1.0);
  CHECK(got >= want - 1e-15);
  CHECK(got - want <= std::min(1e-13, 1e-9 * want) + 1e-15);
  std::vector<double> ratio;
  for (int m = 5; m <= 40; ++m)
    ratio.push_back(tail_sum(1.0, m, 2, 1.0) * std::exp(double(m)) * std::pow(double(m), 1.0 - 2.0));
  const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
  CHECK(*lo > 0.0);
  CHECK(*hi / *lo < 3.0);
}

TEST_CASE("certificate and cutoff") {
  const double b = certificate_bound(6, 1.0, 8.0, 2, 1.0);
  CHECK(b > 0.0);
  CHECK(certificate_bound(6, 1.0, 12.0, 2, 1.0) < b);
  const double r = choose_cutoff(6, 1.0, 2, 1.0, 1e-10);
  CHECK(certificate_bound(6, 1.0, r, 2, 1.0) <= 1e-10);
  CHECK(certificate_bound(6, 1.0, r - 0.01, 2, 1.0) > 1e-10);
  // A failing certificate is reported, not thrown.
  const auto env = sample_ppp(1.0, WindowSpec{2, 8.0, Boundary::torus, 0.0}, 1);
  const JumpTable t(env, RateModel{}, TruncationPolicy{3.0, 1e-12});
  CHECK_FALSE(t.certificate().ok);
}

TEST_CASE("samplers match enumerated probabilities") {
  const RateModel m{1.0, 1.0, 0.0};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto env = random_config(10, 100 + seed, 2.0, true);
    const JumpTable table(env, m, wide);
    const auto t = transition_probs(0, env, m, wide);
    std::map<std::uint32_t, std::size_t> slot;
    for (std::size_t k = 0; k < t.targets.size(); ++k) slot[t.targets[k]] = k;
    std::vector<std::uint64_t> alias(t.probs.size(), 0), direct(t.probs.size(), 0);
    Rng r(seed);
    const int n = seed == 0 ? 1000000 : 200000;
    for (int i = 0; i < n; ++i) ++alias[slot.at(table.sample(0, r))];
    for (int i = 0; i < n / 10; ++i) ++direct[slot.at(sample_jump(0, env, m, wide, r))];
    CHECK(stats::chi2_gof(alias, t.probs).p_value > 0.01);
    CHECK(stats::chi2_gof(direct, t.probs).p_value > 0.01);
  }
}

TEST_CASE("poisson tail inequalities") {
  CHECK(poisson_upper_tail(1.0, 8.0) == doctest::Approx(poisson_tail_direct(1.0, 8.0)).epsilon(1e-10));
  CHECK(poisson_upper_tail(1.0, 8.0) == doctest::Approx(1.1252e-6).epsilon(1e-3));
  const std::vector<double> lambdas{1.0, 0.5, 2.0}, ts{8.0, 4.0, 2.0 * std::exp(2.0)};
  for (const auto& row : poisson_tail_check(lambdas, ts)) {
    if (!row.applicable) continue;
    CHECK(row.ok);
    CHECK(row.exact == doctest::Approx(poisson_tail_direct(row.lambda, row.t)).epsilon(1e-10));
    CHECK(row.exact <= row.middle);
    CHECK(row.middle <= row.outer * (1.0 + 1e-12));
  }
  const double l = 0.5;
  const auto edge = poisson_tail_check(std::span<const double>(&l, 1), std::vector<double>{std::exp(2.0) * l});
  REQUIRE(edge.size() == 1);
  CHECK(edge[0].applicable);
  CHECK(edge[0].exact <= edge[0].middle);
}
