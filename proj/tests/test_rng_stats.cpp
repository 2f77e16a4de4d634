#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "vrh/parallel.hpp"
#include "vrh/rng.hpp"
#include "vrh/stats.hpp"

using namespace vrh;

TEST_CASE("rng streams are reproducible and split by index") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
  Rng s1 = Rng(42).split(3), s2 = Rng(42).split(3), s3 = Rng(42).split(4);
  CHECK(s1() == s2());
  CHECK(s1() != s3());
  // a split does not depend on how far the parent has advanced
  Rng p(7);
  const auto before = p.split(1)();
  for (int i = 0; i < 10; ++i) p();
  CHECK(p.split(1)() == before);
}

TEST_CASE("uniform and below") {
  Rng r(1);
  std::vector<std::uint64_t> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[r.below(7)];
  std::vector<double> p(7, 1.0 / 7.0);
  CHECK(stats::chi2_gof(counts, p).p_value > 0.001);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform(), v = r.uniform_open();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("poisson and normal moments") {
  Rng r(9);
  for (double mean : {0.3, 4.0, 50.0}) {
    stats::Running s;
    for (int i = 0; i < 40000; ++i) s.add(static_cast<double>(sample_poisson(r, mean)));
    CHECK(std::fabs(s.mean() - mean) < 4.0 * std::sqrt(mean / 40000.0));
    CHECK(std::fabs(s.variance() / mean - 1.0) < 0.05);
  }
  stats::Running z;
  for (int i = 0; i < 40000; ++i) z.add(sample_normal(r));
  CHECK(std::fabs(z.mean()) < 4.0 / 200.0);
  CHECK(std::fabs(z.variance() - 1.0) < 0.03);
}

TEST_CASE("running merge equals the pooled accumulator") {
  Rng r(3);
  stats::Running all, left, right;
  for (int i = 0; i < 500; ++i) {
    const double x = r.uniform() * 10.0;
    all.add(x);
    (i < 123 ? left : right).add(x);
  }
  left.merge(right);
  CHECK(left.count() == all.count());
  CHECK(left.mean() == doctest::Approx(all.mean()).epsilon(1e-12));
  CHECK(left.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
}

TEST_CASE("linear fit recovers an exact line") {
  std::vector<double> x{1, 2, 3, 4, 5}, y;
  for (double v : x) y.push_back(2.5 - 0.75 * v);
  const auto f = stats::linear_fit(x, y);
  CHECK(f.slope == doctest::Approx(-0.75));
  CHECK(f.intercept == doctest::Approx(2.5));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK(f.points == 5);
}

TEST_CASE("distribution helpers") {
  CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(stats::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
  for (double p : {0.001, 0.1, 0.5, 0.9, 0.999})
    CHECK(stats::normal_cdf(stats::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
  CHECK(stats::chi2_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(stats::chi2_sf(2.0 * 2.302585092994046, 2) == doctest::Approx(0.1).epsilon(1e-9));
  const auto w = stats::wilson_interval(50, 100);
  CHECK(w.lo < 0.5);
  CHECK(w.hi > 0.5);
  CHECK(w.hi - 0.5 == doctest::Approx(0.5 - w.lo));
}

TEST_CASE("ks tests separate matching and shifted samples") {
  Rng r(11);
  std::vector<double> a, b, c;
  for (int i = 0; i < 2000; ++i) {
    a.push_back(sample_normal(r));
    b.push_back(sample_normal(r));
    c.push_back(sample_normal(r) + 0.3);
  }
  CHECK(stats::ks_pvalue(stats::ks_distance_normal(a), a.size()) > 0.001);
  CHECK(stats::ks_two_sample(a, b).p_value > 0.001);
  CHECK(stats::ks_two_sample(a, c).p_value < 1e-6);
}

TEST_CASE("batch means of independent data match the naive error") {
  Rng r(5);
  std::vector<double> xs(20000);
  for (auto& x : xs) x = r.uniform();
  const auto naive = stats::mean_se(xs);
  const auto bm = stats::batch_means(xs, 20);
  CHECK(bm.value == doctest::Approx(naive.value));
  CHECK(bm.std_error / naive.std_error > 0.5);
  CHECK(bm.std_error / naive.std_error < 1.6);
}

TEST_CASE("parallel_for fills slots independently of worker count") {
  auto run = [](unsigned workers) {
    std::vector<std::uint64_t> out(257);
    parallel_for(out.size(), workers, [&](std::size_t i) { out[i] = Rng(99).split(i)(); });
    return out;
  };
  CHECK(run(1) == run(4));
  CHECK(run(1) == run(13));
  CHECK_THROWS(parallel_for(10, 3, [](std::size_t i) {
    if (i == 5) throw std::runtime_error("boom");
  }));
}
