#include "vrh/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "vrh/simd.hpp"

namespace vrh {

void RateModel::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be nonnegative");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be nonnegative");
}

void TruncationPolicy::validate() const {
  if (!(r_cut > 0.0)) throw std::invalid_argument("r_cut must be positive");
  if (!(budget > 0.0)) throw std::invalid_argument("truncation budget must be positive");
}

double rate_from_dist2(double dist2, double alpha) noexcept {
  if (alpha == 1.0) return std::exp(-std::sqrt(dist2));
  if (alpha == 2.0) return std::exp(-dist2);
  return dist2 > 0.0 ? std::exp(-std::pow(dist2, 0.5 * alpha)) : 1.0;
}

double rate(const Point& v, int dim, double alpha) noexcept { return rate_from_dist2(norm2(v, dim), alpha); }

double mott_u(double ex, double ey, double beta) {
  if (!(std::fabs(ex) <= 1.0) || !(std::fabs(ey) <= 1.0))
    throw std::invalid_argument("mott_u: marks must lie in [-1, 1]");
  return beta * (std::fabs(ex) + std::fabs(ey) + std::fabs(ey - ex));
}

// ---------------------------------------------------------------------------

namespace {

double sphere_area(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    default: return 4.0 * std::numbers::pi;
  }
}

// Upper bound for the lattice sum over |v| >= big of exp(-a|v|^alpha): every
// v owns the unit cube around it, on which |y| - c <= |v| with c = sqrt(d)/2.
double lattice_remainder(double a, double big, int dim, double alpha) {
  const double c = 0.5 * std::sqrt(static_cast<double>(dim));
  const double t0 = big - 2.0 * c;
  double total = 0.0;
  double binom = 1.0;
  for (int k = 0; k <= dim - 1; ++k) {
    if (k > 0) binom = binom * (dim - k) / k;
    const double s = (k + 1.0) / alpha;
    const double x = a * std::pow(t0, alpha);
    const double upper = boost::math::tgamma(s, x);
    const double ik = upper * std::pow(a, -s) / alpha;
    total += binom * std::pow(c, dim - 1 - k) * ik;
  }
  return 2.0 * sphere_area(dim) * total;  // factor 2 covers special-function rounding
}

double lattice_direct(double a, double m, double big, int dim, double alpha) {
  const long M = static_cast<long>(std::ceil(big));
  const double m2 = m * m, big2 = big * big;
  const long ymax = dim > 1 ? M : 0, zmax = dim > 2 ? M : 0;
  double s = 0.0;
  for (long z = -zmax; z <= zmax; ++z)
    for (long y = -ymax; y <= ymax; ++y)
      for (long x = -M; x <= M; ++x) {
        const double r2 = static_cast<double>(x * x + y * y + z * z);
        if (r2 < m2 || r2 >= big2) continue;
        s += std::exp(-a * std::pow(r2, 0.5 * alpha));
      }
  return s;
}

}  // namespace

double tail_sum(double a, double m, int dim, double alpha) {
  if (!(a > 0.0)) throw std::invalid_argument("tail_sum: a must be positive");
  if (!(alpha > 0.0)) throw std::invalid_argument("tail_sum: alpha must be positive");
  if (dim < 1 || dim > 3) throw std::invalid_argument("tail_sum: dimension must be 1, 2 or 3");
  m = std::max(m, 0.0);
  const double c2 = std::sqrt(static_cast<double>(dim));
  double big = std::max(m, c2) + std::pow(8.0 / a, 1.0 / alpha) + 1.0;
  for (int attempt = 0; attempt < 60; ++attempt) {
    const double rem = lattice_remainder(a, big, dim, alpha);
    if (rem <= 1e-13) {
      const double direct = lattice_direct(a, m, big, dim, alpha);
      if (rem <= 1e-9 * direct || rem < std::numeric_limits<double>::min()) return direct + rem;
    }
    big *= 1.25;
  }
  throw std::runtime_error("tail_sum: remainder did not converge");
}

// ---------------------------------------------------------------------------

double certificate_bound(std::size_t max_bucket, double cell_size, double r_cut, int dim, double alpha) {
  if (max_bucket == 0) return 0.0;
  const double sd = std::sqrt(static_cast<double>(dim));
  const double lambda = r_cut / (r_cut + cell_size * sd);
  const double m0 = std::max(0.0, r_cut / cell_size - sd);
  return static_cast<double>(max_bucket) * tail_sum(std::pow(lambda * cell_size, alpha), m0, dim, alpha);
}

TruncationCertificate certify(const MarkedPointSet& env, const RateModel& model, const TruncationPolicy& trunc) {
  model.validate();
  trunc.validate();
  const WindowSpec& win = env.window();
  if (win.boundary == Boundary::torus && !(trunc.r_cut < 0.5 * win.side()))
    throw std::invalid_argument("r_cut must be below half the torus side");
  TruncationCertificate c;
  c.r_cut = trunc.r_cut;
  c.cell_size = env.index().cell_size();
  c.max_bucket = env.index().max_bucket();
  c.budget = trunc.budget;
  c.bound = certificate_bound(c.max_bucket, c.cell_size, c.r_cut, win.dim, model.alpha);
  c.ok = c.bound <= c.budget;
  return c;
}

double choose_cutoff(std::size_t max_bucket, double cell_size, int dim, double alpha, double budget) {
  if (max_bucket == 0) return cell_size;
  double lo = 0.0, hi = cell_size;
  while (certificate_bound(max_bucket, cell_size, hi, dim, alpha) > budget) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw std::runtime_error("choose_cutoff: budget unreachable");
  }
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    (certificate_bound(max_bucket, cell_size, mid, dim, alpha) > budget ? lo : hi) = mid;
  }
  return hi;
}

double conductance(const MarkedPointSet& env, const RateModel& model, std::size_t i, std::size_t j) {
  const double d2 = env.window().distance2(env.point(i), env.point(j));
  return rate_from_dist2(d2, model.alpha) * std::exp(-mott_u(env.mark(i), env.mark(j), model.beta));
}

namespace {

template <class Fn>
void visit_neighbours(std::size_t x, const MarkedPointSet& env, const TruncationPolicy& trunc, Fn&& fn) {
  env.index().visit_within(env.window(), env.points(), env.point(x), trunc.r_cut, std::forward<Fn>(fn));
}

void check_index(std::size_t x, const MarkedPointSet& env) {
  if (x >= env.size()) throw std::out_of_range("point index out of range");
}

}  // namespace

WeightResult local_weight(std::size_t x, const MarkedPointSet& env, const RateModel& model,
                          const TruncationPolicy& trunc) {
  check_index(x, env);
  const TruncationCertificate cert = certify(env, model, trunc);
  WeightResult res;
  const double ex = env.mark(x);
  visit_neighbours(x, env, trunc, [&](std::uint32_t j, const Point&, double d2) {
    res.w += rate_from_dist2(d2, model.alpha) * std::exp(-mott_u(ex, env.mark(j), model.beta));
  });
  res.tail_bound = cert.bound;
  res.certified = cert.ok;
  return res;
}

Transition transition_probs(std::size_t x, const MarkedPointSet& env, const RateModel& model,
                            const TruncationPolicy& trunc) {
  check_index(x, env);
  const TruncationCertificate cert = certify(env, model, trunc);
  Transition t;
  const double ex = env.mark(x);
  visit_neighbours(x, env, trunc, [&](std::uint32_t j, const Point&, double d2) {
    t.targets.push_back(j);
    t.probs.push_back(rate_from_dist2(d2, model.alpha) * std::exp(-mott_u(ex, env.mark(j), model.beta)));
  });
  for (double c : t.probs) t.w += c;
  for (double& p : t.probs) p /= t.w;
  t.tail_bound = cert.bound;
  t.certified = cert.ok;
  return t;
}

std::uint32_t sample_jump(std::size_t x, const MarkedPointSet& env, const RateModel& model,
                          const TruncationPolicy& trunc, Rng& rng) {
  const Transition t = transition_probs(x, env, model, trunc);
  // Invert on the unnormalized conductances so the last target absorbs rounding.
  const double u = rng.uniform() * t.w;
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < t.targets.size(); ++k) {
    acc += t.probs[k] * t.w;
    if (u < acc) return t.targets[k];
  }
  return t.targets.back();
}

// ---------------------------------------------------------------------------

JumpTable::JumpTable(const MarkedPointSet& env, const RateModel& model, const TruncationPolicy& trunc) {
  cert_ = certify(env, model, trunc);
  const std::size_t n = env.size();
  if (n >= std::numeric_limits<std::uint32_t>::max()) throw std::length_error("environment too large");
  const simd::Kernels& kern = simd::active();
  start_.assign(n + 1, 0);
  weight_.assign(n, 0.0);

  std::vector<std::uint32_t> row;
  std::vector<double> dist2, energy, cond, scaled;
  std::vector<std::uint32_t> small, large;
  for (std::size_t x = 0; x < n; ++x) {
    row.clear();
    dist2.clear();
    energy.clear();
    const double ex = env.mark(x);
    visit_neighbours(x, env, trunc, [&](std::uint32_t j, const Point&, double d2) {
      row.push_back(j);
      dist2.push_back(d2);
      energy.push_back(mott_u(ex, env.mark(j), model.beta));
    });
    const std::size_t deg = row.size();
    cond.resize(deg);
    kern.hopping_weights(dist2.data(), energy.data(), deg, model.alpha, cond.data());
    double w = 0.0;
    for (double c : cond) w += c;
    weight_[x] = w;

    // Vose alias construction on deg * c / w.
    const std::size_t base = target_.size();
    target_.insert(target_.end(), row.begin(), row.end());
    conductance_.insert(conductance_.end(), cond.begin(), cond.end());
    accept_.resize(base + deg, 1.0);
    alias_.resize(base + deg);
    scaled.resize(deg);
    small.clear();
    large.clear();
    for (std::size_t k = 0; k < deg; ++k) {
      scaled[k] = cond[k] * static_cast<double>(deg) / w;
      alias_[base + k] = row[k];
      (scaled[k] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(k));
    }
    while (!small.empty() && !large.empty()) {
      const std::uint32_t s = small.back();
      small.pop_back();
      const std::uint32_t l = large.back();
      accept_[base + s] = scaled[s];
      alias_[base + s] = row[l];
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (std::uint32_t k : large) accept_[base + k] = 1.0;
    for (std::uint32_t k : small) accept_[base + k] = 1.0;  // rounding leftovers
    start_[x + 1] = static_cast<std::uint32_t>(target_.size());
  }
}

// ---------------------------------------------------------------------------

double poisson_upper_tail(double lambda, double t) {
  if (!(lambda > 0.0)) throw std::invalid_argument("poisson_upper_tail: lambda must be positive");
  const double k0 = std::floor(std::max(t, -1.0)) + 1.0;
  double sum = 0.0;
  for (double k = k0;; k += 1.0) {
    const double term = std::exp(k * std::log(lambda) - lambda - std::lgamma(k + 1.0));
    sum += term;
    if (k > lambda && term <= 1e-18 * sum) break;
    if (term == 0.0 && k > lambda) break;
  }
  return sum;
}

std::vector<PoissonTailRow> poisson_tail_check(std::span<const double> lambdas, std::span<const double> ts) {
  std::vector<PoissonTailRow> rows;
  for (double lambda : lambdas)
    for (double t : ts) {
      PoissonTailRow r;
      r.lambda = lambda;
      r.t = t;
      r.exact = poisson_upper_tail(lambda, t);
      r.middle = std::exp(-t * (std::log(t) - std::log(lambda)) + t - lambda);
      r.outer = std::exp(-t);
      r.applicable = t >= std::exp(2.0) * lambda * (1.0 - 1e-12);
      r.ok = !r.applicable || (r.exact <= r.middle && r.middle <= r.outer * (1.0 + 1e-12));
      rows.push_back(r);
    }
  return rows;
}

}  // namespace vrh
