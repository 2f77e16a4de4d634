#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vrh/rng.hpp"

namespace vrh {

/// Points are stored in three slots; coordinates beyond the window dimension are 0.
using Point = std::array<double, 3>;

enum class Boundary { free, torus };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

/// Axis-aligned window [-(L+pad), L+pad)^d. Lattice windows use pad = 1/2 so
/// that the sites -L..L sit at cell centres and the torus period is 2L+1.
struct WindowSpec {
  int dim = 2;
  double half_side = 1.0;
  Boundary boundary = Boundary::free;
  double pad = 0.0;

  [[nodiscard]] double lo() const noexcept { return -(half_side + pad); }
  [[nodiscard]] double side() const noexcept { return 2.0 * (half_side + pad); }
  [[nodiscard]] double volume() const noexcept;
  [[nodiscard]] bool contains(const Point& p) const noexcept;

  /// `to - from`, reduced to the minimum image on a torus.
  [[nodiscard]] Point displacement(const Point& from, const Point& to) const noexcept;
  [[nodiscard]] double distance2(const Point& a, const Point& b) const noexcept;

  /// Smallest distance from `p` to the window edge (infinite on a torus).
  [[nodiscard]] double edge_distance(const Point& p) const noexcept;

  /// Throws std::invalid_argument on d outside {1,2,3} or L <= 0.
  void validate() const;
};

double norm2(const Point& v, int dim) noexcept;

/// Uniform grid bucketing of point indices. Each point appears in exactly one bucket.
class CellIndex {
 public:
  CellIndex() = default;
  CellIndex(const WindowSpec& window, std::span<const Point> points, double cell_size);

  [[nodiscard]] double cell_size() const noexcept { return cell_; }
  [[nodiscard]] int cells_per_dim() const noexcept { return per_dim_; }
  [[nodiscard]] std::size_t cell_count() const noexcept { return start_.empty() ? 0 : start_.size() - 1; }
  [[nodiscard]] std::size_t cell_of(const Point& p) const noexcept;
  [[nodiscard]] std::span<const std::uint32_t> bucket(std::size_t cell) const noexcept;
  [[nodiscard]] std::size_t max_bucket() const noexcept { return max_bucket_; }

  /// Calls fn(j, displacement from `centre` to point j, squared distance) for
  /// every point within `radius` of `centre` (minimum image on a torus).
  /// Visits cells in a fixed order, so enumeration is deterministic.
  template <class Fn>
  void visit_within(const WindowSpec& window, std::span<const Point> points, const Point& centre,
                    double radius, Fn&& fn) const;

 private:
  int dim_ = 0;
  int per_dim_ = 0;
  double cell_ = 1.0;
  double lo_ = 0.0;
  std::vector<std::uint32_t> start_;
  std::vector<std::uint32_t> items_;
  std::size_t max_bucket_ = 0;

  [[nodiscard]] int coord(double x) const noexcept;
};

/// How an environment was produced; carried into the serialized header.
struct Provenance {
  std::string kind = "custom";  // "ppp" | "diluted" | "custom"
  double intensity = 0.0;       // rho for PPP, retention p for diluted lattices
  std::uint64_t seed = 0;
  std::optional<double> mark_exponent;
  std::uint64_t mark_seed = 0;
};

/// Point configuration with optional energy marks; immutable after construction.
class MarkedPointSet {
 public:
  MarkedPointSet() = default;
  MarkedPointSet(WindowSpec window, std::vector<Point> points, std::vector<double> marks,
                 bool origin_pinned, Provenance provenance = {}, double cell_size = 1.0);

  [[nodiscard]] const WindowSpec& window() const noexcept { return window_; }
  [[nodiscard]] std::span<const Point> points() const noexcept { return points_; }
  [[nodiscard]] const Point& point(std::size_t i) const noexcept { return points_[i]; }
  [[nodiscard]] std::span<const double> marks() const noexcept { return marks_; }
  [[nodiscard]] bool has_marks() const noexcept { return !marks_.empty(); }
  /// Mark of point i, or 0 when marks are unset.
  [[nodiscard]] double mark(std::size_t i) const noexcept { return marks_.empty() ? 0.0 : marks_[i]; }
  [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
  [[nodiscard]] bool origin_pinned() const noexcept { return origin_pinned_; }
  [[nodiscard]] const CellIndex& index() const noexcept { return index_; }
  [[nodiscard]] const Provenance& provenance() const noexcept { return provenance_; }

  /// Copy with marks attached; positions unchanged.
  [[nodiscard]] MarkedPointSet with_marks(std::vector<double> marks, Provenance provenance) const;

 private:
  WindowSpec window_;
  std::vector<Point> points_;
  std::vector<double> marks_;
  bool origin_pinned_ = false;
  Provenance provenance_;
  CellIndex index_;
};

/// Mark density c|E|^gamma on [-1, 1], c = (gamma + 1) / 2.
struct MarkLaw {
  double exponent = 0.0;
  [[nodiscard]] double normalization() const noexcept { return 0.5 * (exponent + 1.0); }
  [[nodiscard]] double density(double e) const noexcept;
  /// E[|E|^k] = (gamma + 1) / (gamma + k + 1).
  [[nodiscard]] double abs_moment(double k) const noexcept;
};

MarkedPointSet sample_ppp(double density, const WindowSpec& window, std::uint64_t seed,
                          double cell_size = 1.0);

/// Sites of Z^d in [-L, L]^d kept independently with probability p. L must be an integer.
MarkedPointSet sample_diluted_lattice(double p, const WindowSpec& window, std::uint64_t seed,
                                      double cell_size = 1.0);

/// Attaches i.i.d. marks by inversion: E = s * U^(1/(gamma+1)), s = +-1 equiprobable.
MarkedPointSet sample_marks(const MarkedPointSet& ps, const MarkLaw& law, std::uint64_t seed);

enum class ProcessKind { ppp, diluted };

std::string to_string(ProcessKind k);
ProcessKind process_kind_from_string(const std::string& s);

/// Palm version: PPP plus an origin atom, or the diluted lattice conditioned
/// on the origin site. The origin is always point 0.
MarkedPointSet palmify(ProcessKind kind, double intensity, const WindowSpec& window,
                       std::uint64_t seed, double cell_size = 1.0);

/// Built-in test functionals f(x, xi) for the Campbell self-test.
enum class CampbellFunctional {
  exp_decay,          // e^{-|x|}
  exp_decay_ball,     // e^{-|x|} * xi(B(0,1))
  exp_decay_isolated  // e^{-|x|} * 1{no other point of xi within 1/2 of 0}
};

struct CampbellResult {
  double left = 0.0;  // int dx E_0 f(x, xi)
  double left_se = 0.0;
  double right = 0.0;  // rho^{-1} E sum_{x in xi} f(x, tau_x xi)
  double right_se = 0.0;
  double right_raw = 0.0;  // E sum_{x in xi} f(x, tau_x xi), before the 1/rho factor
  double exact = 0.0;      // closed form where available, else NaN
  bool consistent = true;  // |left - right| <= 3 combined sigma
};

/// Monte Carlo over `replicas` PPP/Palm pairs in a free window of half side
/// `half_side`; only base points at distance >= `margin` from the window
/// edge contribute to the right-hand side.
CampbellResult campbell_check(CampbellFunctional f, double density, int dim, std::size_t replicas,
                              std::uint64_t seed, double half_side = 32.0, double margin = 8.0);

// ---------------------------------------------------------------------------

template <class Fn>
void CellIndex::visit_within(const WindowSpec& window, std::span<const Point> points,
                             const Point& centre, double radius, Fn&& fn) const {
  const double r2 = radius * radius;
  const int reach = static_cast<int>(std::ceil(radius / cell_));
  const bool torus = window.boundary == Boundary::torus;
  std::array<int, 3> c{0, 0, 0};
  for (int k = 0; k < dim_; ++k) c[k] = coord(centre[k]);

  std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int k = 0; k < dim_; ++k) {
    if (torus && 2 * reach + 1 >= per_dim_) {
      lo[k] = 0;
      hi[k] = per_dim_ - 1;
    } else if (torus) {
      lo[k] = c[k] - reach;
      hi[k] = c[k] + reach;
    } else {
      lo[k] = std::max(0, c[k] - reach);
      hi[k] = std::min(per_dim_ - 1, c[k] + reach);
    }
  }
  auto wrap = [&](int v) { return ((v % per_dim_) + per_dim_) % per_dim_; };
  const int z_lo = dim_ > 2 ? lo[2] : 0, z_hi = dim_ > 2 ? hi[2] : 0;
  const int y_lo = dim_ > 1 ? lo[1] : 0, y_hi = dim_ > 1 ? hi[1] : 0;
  for (int cz = z_lo; cz <= z_hi; ++cz) {
    for (int cy = y_lo; cy <= y_hi; ++cy) {
      for (int cx = lo[0]; cx <= hi[0]; ++cx) {
        std::size_t cell = static_cast<std::size_t>(wrap(cx));
        if (dim_ > 1) cell += static_cast<std::size_t>(per_dim_) * static_cast<std::size_t>(wrap(cy));
        if (dim_ > 2)
          cell += static_cast<std::size_t>(per_dim_) * static_cast<std::size_t>(per_dim_) *
                  static_cast<std::size_t>(wrap(cz));
        for (std::uint32_t j : bucket(cell)) {
          const Point d = window.displacement(centre, points[j]);
          const double d2 = norm2(d, dim_);
          if (d2 <= r2) fn(j, d, d2);
        }
      }
    }
  }
}

}  // namespace vrh
