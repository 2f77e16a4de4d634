#include "vrh/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace vrh::stats {

double Running::std_error() const noexcept {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

Estimate mean_se(std::span<const double> xs) {
  Running acc;
  for (double x : xs) acc.add(x);
  return {acc.mean(), acc.std_error(), acc.count()};
}

Estimate batch_means(std::span<const double> xs, std::size_t batches) {
  const std::size_t n = xs.size();
  if (n == 0) return {};
  batches = std::clamp<std::size_t>(batches, 1, n);
  const std::size_t per = n / batches;
  Running acc;
  double total = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t begin = b * per;
    const std::size_t end = (b + 1 == batches) ? n : begin + per;
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += xs[i];
    total += s;
    acc.add(s / static_cast<double>(end - begin));
  }
  return {total / static_cast<double>(n), acc.std_error(), n};
}

Estimate ratio_of_means(std::span<const double> num, std::span<const double> den) {
  if (num.size() != den.size()) throw std::invalid_argument("ratio_of_means: size mismatch");
  const std::size_t n = num.size();
  if (n == 0) return {};
  const double mn = std::accumulate(num.begin(), num.end(), 0.0) / static_cast<double>(n);
  const double md = std::accumulate(den.begin(), den.end(), 0.0) / static_cast<double>(n);
  const double r = mn / md;
  if (n < 2) return {r, 0.0, n};
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = num[i] - r * den[i];
    s += e * e;
  }
  const double var = s / static_cast<double>(n - 1) / static_cast<double>(n);
  return {r, std::sqrt(var) / std::fabs(md), n};
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> weights) {
  if (x.size() != y.size() || (!weights.empty() && weights.size() != x.size()))
    throw std::invalid_argument("linear_fit: size mismatch");
  const std::size_t n = x.size();
  LinearFit fit;
  fit.points = n;
  if (n < 2) return fit;
  auto wt = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += wt(i);
    sx += wt(i) * x[i];
    sy += wt(i) * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += wt(i) * dx * dx;
    sxy += wt(i) * dx * dy;
    syy += wt(i) * dy * dy;
  }
  if (sxx <= 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - fit.intercept - fit.slope * x[i];
    sse += wt(i) * e * e;
  }
  fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  if (n > 2) {
    // Residual-scaled slope error; with weights this is the usual WLS form.
    fit.slope_se = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double chi2_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

double ks_distance_normal(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = normal_cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

namespace {

// Q_KS(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)
double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  if (lambda < 1.18) {
    // Small-lambda theta-function form converges faster.
    const double y = std::exp(-std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda));
    double s = 0.0;
    for (int k = 1; k <= 7; k += 2) s += std::pow(y, k * k);
    return 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s;
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

}  // namespace

double ks_pvalue(double distance, std::size_t n) {
  if (n == 0) return 1.0;
  const double sn = std::sqrt(static_cast<double>(n));
  return kolmogorov_q((sn + 0.12 + 0.11 / sn) * distance);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) return {};
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double sn = std::sqrt(ne);
  return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

Chi2Result chi2_gof(std::span<const std::uint64_t> observed, std::span<const double> probs,
                    double min_expected) {
  if (observed.size() != probs.size()) throw std::invalid_argument("chi2_gof: size mismatch");
  const double total = std::accumulate(observed.begin(), observed.end(), 0.0,
                                       [](double s, std::uint64_t v) { return s + static_cast<double>(v); });
  Chi2Result res;
  double pool_obs = 0.0, pool_exp = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = probs[i] * total;
    const double o = static_cast<double>(observed[i]);
    if (e < min_expected) {
      pool_obs += o;
      pool_exp += e;
      continue;
    }
    res.statistic += (o - e) * (o - e) / e;
    ++cells;
  }
  if (pool_exp > 0.0) {
    res.statistic += (pool_obs - pool_exp) * (pool_obs - pool_exp) / pool_exp;
    ++cells;
  }
  res.dof = cells > 1 ? static_cast<double>(cells - 1) : 1.0;
  res.p_value = chi2_sf(res.statistic, res.dof);
  return res;
}

}  // namespace vrh::stats
