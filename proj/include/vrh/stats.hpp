#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vrh::stats {

/// Welford accumulator.
class Running {
 public:
  void add(double x) noexcept {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  /// Pooled accumulator (Chan et al. pairwise update).
  void merge(const Running& o) noexcept {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(n_ + o.n_);
    const double delta = o.mean_ - mean_;
    mean_ += delta * static_cast<double>(o.n_) / n;
    m2_ += o.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
    n_ += o.n_;
  }
  [[nodiscard]] std::size_t count() const noexcept { return n_; }
  [[nodiscard]] double mean() const noexcept { return mean_; }
  [[nodiscard]] double variance() const noexcept {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }
  [[nodiscard]] double std_error() const noexcept;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Mean with the naive i.i.d. standard error.
Estimate mean_se(std::span<const double> xs);

/// Mean with a batch-means standard error over `batches` contiguous batches
/// (clamped to the sample count). Leftover samples are folded into the last batch.
Estimate batch_means(std::span<const double> xs, std::size_t batches);

/// Ratio mean(num)/mean(den) over paired samples with a delta-method error.
Estimate ratio_of_means(std::span<const double> num, std::span<const double> den);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
  std::size_t points = 0;
};

/// Least squares y = a + b x; `weights` may be empty (unweighted).
LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> weights = {});

double normal_cdf(double x);
double normal_quantile(double p);

/// Upper tail of chi-square with `dof` degrees of freedom.
double chi2_sf(double x, double dof);

/// One-sample Kolmogorov-Smirnov distance of `xs` against N(0,1).
double ks_distance_normal(std::vector<double> xs);

/// Asymptotic p-value of a KS distance with Stephens' finite-n correction.
double ks_pvalue(double distance, std::size_t n);

/// Two-sample KS distance and its asymptotic p-value.
struct KsResult {
  double distance = 0.0;
  double p_value = 1.0;
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Pearson chi-square goodness of fit of observed counts against expected
/// probabilities. Cells with expected count below `min_expected` are pooled.
struct Chi2Result {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};
Chi2Result chi2_gof(std::span<const std::uint64_t> observed, std::span<const double> probs,
                    double min_expected = 5.0);

}  // namespace vrh::stats
