#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vrh/pointproc.hpp"
#include "vrh/rng.hpp"

namespace vrh {

/// Kernel r(v) = exp(-|v|^alpha) with Mott interaction u = beta(|Ex|+|Ey|+|Ey-Ex|).
/// `gamma` is the exponent of the mark law the model is meant to be run with.
struct RateModel {
  double alpha = 1.0;
  double beta = 0.0;
  double gamma = 0.0;

  void validate() const;
};

/// exp(-|v|^alpha) over the first `dim` coordinates.
double rate(const Point& v, int dim, double alpha) noexcept;
double rate_from_dist2(double dist2, double alpha) noexcept;

/// beta(|ex| + |ey| + |ey - ex|); throws std::invalid_argument for marks outside [-1, 1].
double mott_u(double ex, double ey, double beta);

/// phi(a, m) = sum over v in Z^d with |v| >= m of exp(-a |v|^alpha). The
/// returned value is an upper bound exceeding the true sum by at most
/// min(1e-13, 1e-9 * sum).
double tail_sum(double a, double m, int dim, double alpha);

struct TruncationPolicy {
  double r_cut = 8.0;
  double budget = 1e-10;  // absolute bound allowed on the omitted part of w(x)

  void validate() const;
};

/// Bound on the omitted tail of every w(x) in a given window. Points omitted
/// from w(x) lie in cells v (relative to x's cell, side h) with
/// |v| >= m0 = R/h - sqrt(d), and each such point is at distance at least
/// lambda*h*|v| from x, lambda = R/(R + h sqrt(d)). Hence the tail is at most
/// N_max * phi((lambda h)^alpha, m0) with N_max the largest bucket.
struct TruncationCertificate {
  double r_cut = 0.0;
  double cell_size = 0.0;
  std::size_t max_bucket = 0;
  double bound = 0.0;
  double budget = 0.0;
  bool ok = false;
};

TruncationCertificate certify(const MarkedPointSet& env, const RateModel& model, const TruncationPolicy& trunc);
double certificate_bound(std::size_t max_bucket, double cell_size, double r_cut, int dim, double alpha);

/// Smallest cutoff (to 1e-3) whose certificate fits `budget`.
double choose_cutoff(std::size_t max_bucket, double cell_size, int dim, double alpha, double budget);

/// Conductance r(x,y) e^{-u(E_x,E_y)} between points i and j of `env`.
double conductance(const MarkedPointSet& env, const RateModel& model, std::size_t i, std::size_t j);

struct WeightResult {
  double w = 0.0;
  double tail_bound = 0.0;
  bool certified = false;
};

/// w(x) over all points within r_cut, self-term included.
WeightResult local_weight(std::size_t x, const MarkedPointSet& env, const RateModel& model,
                          const TruncationPolicy& trunc);

struct Transition {
  std::vector<std::uint32_t> targets;  // in cell-visit order; contains x itself
  std::vector<double> probs;
  double w = 0.0;
  double tail_bound = 0.0;
  bool certified = false;
};

Transition transition_probs(std::size_t x, const MarkedPointSet& env, const RateModel& model,
                            const TruncationPolicy& trunc);

/// Exact draw from transition_probs by enumeration and inversion.
std::uint32_t sample_jump(std::size_t x, const MarkedPointSet& env, const RateModel& model,
                          const TruncationPolicy& trunc, Rng& rng);

/// Per-point neighbour lists with conductances and Walker alias tables.
/// Built once per environment; O(1) exact jump sampling afterwards.
class JumpTable {
 public:
  JumpTable() = default;
  JumpTable(const MarkedPointSet& env, const RateModel& model, const TruncationPolicy& trunc);

  [[nodiscard]] std::size_t size() const noexcept { return weight_.size(); }
  [[nodiscard]] std::size_t edges() const noexcept { return target_.size(); }
  [[nodiscard]] double weight(std::size_t x) const noexcept { return weight_[x]; }
  [[nodiscard]] std::span<const double> weights() const noexcept { return weight_; }
  [[nodiscard]] std::span<const std::uint32_t> row_start() const noexcept { return start_; }
  [[nodiscard]] std::span<const std::uint32_t> targets() const noexcept { return target_; }
  [[nodiscard]] std::span<const double> conductances() const noexcept { return conductance_; }
  [[nodiscard]] std::span<const std::uint32_t> neighbours(std::size_t x) const noexcept {
    return {target_.data() + start_[x], target_.data() + start_[x + 1]};
  }
  [[nodiscard]] std::span<const double> neighbour_conductances(std::size_t x) const noexcept {
    return {conductance_.data() + start_[x], conductance_.data() + start_[x + 1]};
  }
  [[nodiscard]] const TruncationCertificate& certificate() const noexcept { return cert_; }

  std::uint32_t sample(std::size_t x, Rng& rng) const noexcept {
    const std::uint32_t begin = start_[x];
    const std::uint32_t deg = start_[x + 1] - begin;
    const double u = rng.uniform() * deg;
    auto k = static_cast<std::uint32_t>(u);
    if (k >= deg) k = deg - 1;
    const double frac = u - k;
    return frac < accept_[begin + k] ? target_[begin + k] : alias_[begin + k];
  }

 private:
  std::vector<std::uint32_t> start_;
  std::vector<std::uint32_t> target_;
  std::vector<double> conductance_;
  std::vector<double> accept_;
  std::vector<std::uint32_t> alias_;  // stores the aliased target index directly
  std::vector<double> weight_;
  TruncationCertificate cert_;
};

struct PoissonTailRow {
  double lambda = 0.0;
  double t = 0.0;
  double exact = 0.0;   // P(N > t)
  double middle = 0.0;  // exp{-t(log t - log lambda) + t - lambda}
  double outer = 0.0;   // e^{-t}
  bool applicable = false;  // t >= e^2 lambda
  bool ok = false;
};

/// P(N > t) by summing the Poisson mass function from floor(t) + 1 upward.
double poisson_upper_tail(double lambda, double t);

/// One row per (lambda, t) pair; `ok` requires both inequalities where applicable.
std::vector<PoissonTailRow> poisson_tail_check(std::span<const double> lambdas, std::span<const double> ts);

}  // namespace vrh
