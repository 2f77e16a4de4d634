#include "vrh/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vrh {

void PathSet::add(const Trajectory& tr) {
  if (times.empty()) times = tr.time;
  if (tr.time.size() < times.size()) throw std::invalid_argument("trajectory shorter than the shared grid");
  paths.emplace_back(tr.position.begin(), tr.position.begin() + static_cast<std::ptrdiff_t>(times.size()));
}

MsdCurve msd(const PathSet& data, const FitWindow& window) {
  MsdCurve c;
  c.time = data.times;
  const std::size_t n = data.times.size();
  std::vector<double> vals(data.paths.size());
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t r = 0; r < data.paths.size(); ++r) {
      Point d{0.0, 0.0, 0.0};
      for (int a = 0; a < data.dim; ++a) d[a] = data.paths[r][k][a] - data.paths[r][0][a];
      vals[r] = norm2(d, data.dim);
    }
    const stats::Estimate e = stats::mean_se(vals);
    c.msd.push_back(e.value);
    c.std_error.push_back(e.std_error);
  }
  c.fit_from = std::min(n, static_cast<std::size_t>(std::ceil(window.skip_fraction * static_cast<double>(n))));
  if (n - c.fit_from >= 2) {
    c.fit = stats::linear_fit(std::span(c.time).subspan(c.fit_from), std::span(c.msd).subspan(c.fit_from));
    c.low_r2 = c.fit.r2 < 0.99;
  }
  return c;
}

DiffusionEstimate diffusion_matrix(const PathSet& data, std::size_t lag) {
  if (lag == 0) throw std::invalid_argument("diffusion_matrix: lag must be positive");
  if (data.times.size() <= lag) throw std::invalid_argument("diffusion_matrix: lag exceeds the time grid");
  DiffusionEstimate est;
  est.dim = data.dim;
  est.method = "msd";
  est.samples = data.paths.size();
  const int d = data.dim;
  std::vector<std::vector<double>> per(9);
  for (const auto& path : data.paths) {
    std::array<double, 9> acc{};
    std::size_t blocks = 0;
    for (std::size_t k = 0; k + lag < data.times.size(); k += lag) {
      const double dt = data.times[k + lag] - data.times[k];
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          acc[static_cast<std::size_t>(3 * a + b)] +=
              (path[k + lag][a] - path[k][a]) * (path[k + lag][b] - path[k][b]) / (2.0 * dt);
      ++blocks;
    }
    for (std::size_t i = 0; i < 9; ++i) per[i].push_back(acc[i] / static_cast<double>(blocks));
  }
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const auto idx = static_cast<std::size_t>(3 * a + b);
      const stats::Estimate e = stats::mean_se(per[idx]);
      est.value[idx] = e.value;
      est.std_error[idx] = e.std_error;
    }
  return est;
}

std::vector<EinsteinEntry> einstein_check(const DiffusionEstimate& ctrw, const DiffusionEstimate& dtrw,
                                          const stats::Estimate& ew0) {
  constexpr double z = 1.959963984540054;
  std::vector<EinsteinEntry> out;
  for (int i = 0; i < dtrw.dim; ++i)
    for (int j = 0; j < dtrw.dim; ++j) {
      const double dd = dtrw.at(i, j), sd = dtrw.se(i, j);
      if (!(std::fabs(dd) > 3.0 * sd)) continue;  // indistinguishable from zero
      EinsteinEntry e;
      e.i = i;
      e.j = j;
      e.ratio = ctrw.at(i, j) / (ew0.value * dd);
      const double rel2 = std::pow(ctrw.se(i, j) / ctrw.at(i, j), 2) + std::pow(ew0.std_error / ew0.value, 2) +
                          std::pow(sd / dd, 2);
      e.std_error = std::fabs(e.ratio) * std::sqrt(rel2);
      e.ci = {e.ratio - z * e.std_error, e.ratio + z * e.std_error};
      e.rel_half_width = z * e.std_error / std::fabs(e.ratio);
      e.contains_one = e.ci.lo <= 1.0 && 1.0 <= e.ci.hi;
      out.push_back(e);
    }
  return out;
}

// ---------------------------------------------------------------------------

ReturnTally::ReturnTally(std::vector<double> t_grid)
    : time(std::move(t_grid)), returns(time.size(), 0), distance(time.size()) {}

void ReturnTally::add(std::span<const std::uint32_t> index_at_t, std::span<const Point> position_at_t,
                      std::uint32_t start, const Point& start_pos, int dim) {
  for (std::size_t k = 0; k < time.size(); ++k) {
    if (index_at_t[k] == start) ++returns[k];
    Point d{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) d[a] = position_at_t[k][a] - start_pos[a];
    distance[k].add(std::sqrt(norm2(d, dim)));
  }
  ++replicas;
}

void ReturnTally::merge(const ReturnTally& other) {
  if (other.time != time) throw std::invalid_argument("ReturnTally::merge: grids differ");
  for (std::size_t k = 0; k < time.size(); ++k) {
    returns[k] += other.returns[k];
    distance[k].merge(other.distance[k]);
  }
  replicas += other.replicas;
}

HeatKernelCurve heat_kernel_return(const ReturnTally& tally, std::uint64_t min_returns) {
  HeatKernelCurve c;
  const double n = static_cast<double>(tally.replicas);
  std::vector<std::size_t> usable;
  for (std::size_t k = 0; k < tally.time.size(); ++k) {
    c.time.push_back(tally.time[k]);
    c.returns.push_back(tally.returns[k]);
    c.probability.push_back(n > 0 ? static_cast<double>(tally.returns[k]) / n : 0.0);
    c.ci.push_back(stats::wilson_interval(tally.returns[k], tally.replicas));
    if (tally.time[k] > 0.0 && tally.returns[k] >= min_returns && tally.returns[k] < tally.replicas)
      usable.push_back(k);
  }
  if (usable.empty()) return c;
  double t_hi = 0.0;
  for (std::size_t k : usable) t_hi = std::max(t_hi, tally.time[k]);
  c.fit_hi = t_hi;
  c.fit_lo = t_hi / 10.0;
  std::vector<double> x, y, w;
  for (std::size_t k : usable) {
    if (tally.time[k] < c.fit_lo * (1.0 - 1e-12)) continue;
    const double p = c.probability[k];
    x.push_back(std::log(tally.time[k]));
    y.push_back(std::log(p));
    w.push_back(n * p / (1.0 - p));
  }
  c.fit_points = x.size();
  if (x.size() >= 2) c.fit = stats::linear_fit(x, y, w);
  return c;
}

DistanceRatioCurve distance_ratio(const ReturnTally& tally, double t_hi) {
  DistanceRatioCurve c;
  if (t_hi <= 0.0)
    for (double t : tally.time) t_hi = std::max(t_hi, t);
  c.flat_hi = t_hi;
  c.flat_lo = t_hi / 10.0;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t k = 0; k < tally.time.size(); ++k) {
    const double t = tally.time[k];
    if (!(t > 0.0)) continue;
    const double r = tally.distance[k].mean() / std::sqrt(t);
    c.time.push_back(t);
    c.ratio.push_back(r);
    c.std_error.push_back(tally.distance[k].std_error() / std::sqrt(t));
    if (t >= c.flat_lo * (1.0 - 1e-12) && t <= c.flat_hi * (1.0 + 1e-12)) {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  c.variation = hi > 0.0 && lo > 0.0 ? hi / lo - 1.0 : std::numeric_limits<double>::infinity();
  return c;
}

std::vector<KsRow> gaussianity_test(std::span<const double> epsilons,
                                    const std::vector<std::vector<Point>>& endpoints, int dim) {
  if (endpoints.size() != epsilons.size()) throw std::invalid_argument("one endpoint set per epsilon expected");
  std::vector<KsRow> rows;
  for (std::size_t e = 0; e < epsilons.size(); ++e)
    for (int a = 0; a < dim; ++a) {
      std::vector<double> xs;
      for (const Point& p : endpoints[e]) xs.push_back(epsilons[e] * p[a]);
      KsRow row;
      row.epsilon = epsilons[e];
      row.coordinate = a;
      row.n = xs.size();
      if (xs.size() >= 2) {
        stats::Running r;
        for (double v : xs) r.add(v);
        const double sd = std::sqrt(r.variance());
        for (double& v : xs) v = sd > 0.0 ? (v - r.mean()) / sd : 0.0;
        row.distance = stats::ks_distance_normal(xs);
        row.p_value = stats::ks_pvalue(row.distance, row.n);
      }
      rows.push_back(row);
    }
  return rows;
}

GeometricFit geometric_tail_fit(std::span<const std::uint32_t> gammas, std::uint64_t min_count) {
  std::uint32_t top = 0;
  for (auto v : gammas) top = std::max(top, v);
  std::vector<std::uint64_t> hist(gammas.empty() ? 0 : static_cast<std::size_t>(top) + 1, 0);
  for (auto v : gammas) ++hist[v];
  return geometric_tail_fit_histogram(hist, min_count);
}

GeometricFit geometric_tail_fit_histogram(std::span<const std::uint64_t> hist, std::uint64_t min_count) {
  GeometricFit g;
  double n = 0.0, sum = 0.0, sum2 = 0.0;
  for (std::size_t k = 0; k < hist.size(); ++k) {
    const double c = static_cast<double>(hist[k]);
    n += c;
    sum += c * static_cast<double>(k);
    sum2 += c * static_cast<double>(k) * static_cast<double>(k);
  }
  g.samples = static_cast<std::size_t>(n);
  if (n == 0.0) return g;
  const double mean = sum / n;
  const double var = n > 1.0 ? (sum2 - n * mean * mean) / (n - 1.0) : 0.0;
  g.no_holes = sum == 0.0;
  g.delta = 1.0 / (1.0 + mean);
  g.delta_se = std::sqrt(std::max(var, 0.0) / n) / std::pow(1.0 + mean, 2);
  std::vector<double> x, y;
  std::uint64_t tail = 0;
  std::vector<std::uint64_t> at_least(hist.size());
  for (std::size_t k = hist.size(); k-- > 0;) {
    tail += hist[k];
    at_least[k] = tail;
  }
  for (std::size_t k = 0; k < at_least.size(); ++k) {
    if (at_least[k] < min_count) break;
    g.k.push_back(static_cast<int>(k));
    g.at_least.push_back(at_least[k]);
    x.push_back(static_cast<double>(k));
    y.push_back(std::log(static_cast<double>(at_least[k]) / n));
  }
  if (x.size() >= 2) g.tail = stats::linear_fit(x, y);
  return g;
}

}  // namespace vrh
