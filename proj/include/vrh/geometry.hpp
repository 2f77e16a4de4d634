#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vrh/pointproc.hpp"
#include "vrh/rates.hpp"
#include "vrh/stats.hpp"

namespace vrh {

/// Discrete grid of K-boxes covering a window; vertex ids are row-major with
/// the first axis fastest. Adjacency is nearest-neighbour (l1 distance 1),
/// wrapping on a torus.
struct BoxGrid {
  int dim = 2;
  int per_dim = 0;
  bool torus = false;

  [[nodiscard]] std::size_t size() const noexcept;
  [[nodiscard]] std::array<int, 3> coords(std::size_t v) const noexcept;
  [[nodiscard]] std::size_t id(const std::array<int, 3>& c) const noexcept;
  /// Vertex at c + offset, wrapped on a torus; false if it leaves a free grid.
  [[nodiscard]] bool shifted(std::size_t v, const std::array<int, 3>& offset, std::size_t& out) const noexcept;
  /// Offset from a to b, reduced to the minimum image on a torus.
  [[nodiscard]] std::array<int, 3> offset(std::size_t a, std::size_t b) const noexcept;
  [[nodiscard]] double dist2(std::size_t a, std::size_t b) const noexcept;
  [[nodiscard]] int dist1(std::size_t a, std::size_t b) const noexcept;
  /// Calls fn(u) for each in-grid nearest neighbour u of v.
  template <class Fn>
  void for_each_neighbour(std::size_t v, Fn&& fn) const;
  [[nodiscard]] bool on_edge(std::size_t v) const noexcept;
};

/// R_z = (log n)^{2/alpha}; also the m0 matching T0 through T0 = exp(m0^{alpha/2}).
double overcrowding_radius(double n, double alpha);
double m0_from_t0(double t0, double alpha);
double t0_from_m0(double m0, double alpha);

struct BoxFields {
  BoxGrid grid;
  double K = 0.0;
  double t0 = 0.0;
  double alpha = 1.0;
  double lo = 0.0;  // window corner; box z covers lo + K z + [0, K)^d
  std::vector<std::uint32_t> count;
  std::vector<std::uint8_t> occupied;  // sigma_z
  std::vector<double> radius;          // R_z
  std::vector<std::uint8_t> shadow;    // z in the bad set
  std::vector<std::uint8_t> white;     // theta_z

  [[nodiscard]] std::size_t box_of(const Point& p) const noexcept;
  [[nodiscard]] double white_fraction() const noexcept;
};

/// Throws std::invalid_argument when the window side is not a multiple of K or T0 < 2.
BoxFields box_fields(const MarkedPointSet& env, double K, double t0, double alpha);

struct ClusterLabeling {
  std::vector<std::int32_t> label;  // -1 on zero vertices; labels are 0..clusters-1 by smallest vertex
  std::vector<std::size_t> sizes;
  std::int32_t largest = -1;        // ties broken by smallest label
  std::size_t largest_size = 0;
};

/// Union-find labelling of the ones of `field` under grid adjacency.
ClusterLabeling label_clusters(const BoxGrid& grid, std::span<const std::uint8_t> field);

struct Hole {
  std::vector<std::uint32_t> vertices;  // ascending
  double diam2 = 0.0;
  bool touches_edge = false;  // free grids only
  std::int32_t cls = -1;
};

struct HoleSet {
  std::vector<Hole> holes;
  std::vector<std::int32_t> hole_of;      // per vertex; -1 inside the good cluster
  std::vector<std::int32_t> vertex_class; // per vertex equivalence class; -1 if in no enlargement
  std::int32_t classes = 0;
  std::vector<std::uint32_t> class_start;   // CSR of class members (vertices)
  std::vector<std::uint32_t> class_members;
};

/// Holes are the components of the complement of `good` (a vertex mask).
HoleSet build_holes(const BoxGrid& grid, std::span<const std::uint8_t> good);

/// Explicit enlargement {z : d2(z, C) <= diam2(C)}, ascending.
std::vector<std::uint32_t> enlargement(const BoxGrid& grid, const Hole& hole);

/// Quotient-graph distances from `source` to every vertex.
std::vector<std::int32_t> dbar_from(const BoxGrid& grid, const HoleSet& holes, std::size_t source);
std::int32_t dbar(const BoxGrid& grid, const HoleSet& holes, std::size_t a, std::size_t b);

/// Box fields, white clusters, the good cluster (largest white cluster) and its holes.
struct EnvironmentGeometry {
  BoxFields fields;
  ClusterLabeling white_clusters;
  std::vector<std::uint8_t> good_box;
  HoleSet holes;
  std::vector<std::uint32_t> point_box;   // box of every point
  std::vector<std::uint8_t> good_point;   // point lies in the good cluster
  std::size_t good_points = 0;

  [[nodiscard]] std::int32_t hole_class_of_point(std::size_t i) const noexcept {
    const std::int32_t h = holes.hole_of[point_box[i]];
    return h < 0 ? -1 : holes.holes[static_cast<std::size_t>(h)].cls;
  }
};

EnvironmentGeometry build_geometry(const MarkedPointSet& env, double K, double t0, double alpha);

struct WhiteWeightAudit {
  std::size_t points = 0;
  double max_w = 0.0;
  double mean_w = 0.0;
  double q50 = 0.0, q90 = 0.0, q99 = 0.0;
};

/// Distribution of w(x) over points in white boxes; `weights` indexed by point.
WhiteWeightAudit white_weight_audit(const MarkedPointSet& env, const BoxFields& fields,
                                    std::span<const double> weights);

struct Dist0Row {
  int d1 = 0;
  std::size_t samples = 0;
  std::size_t hits = 0;  // dbar(0, z) <= d1 / 2
  stats::Interval ci;
};

/// Empirical P(dbar(0, z) <= d1(0, z)/2) for z = d1 e_1 from the box holding
/// the origin, over `envs` PPP environments on a torus of half side L.
std::vector<Dist0Row> dist0_probe(std::size_t envs, double density, int dim, double half_side, double K,
                                  double t0, double alpha, std::span<const int> distances, std::uint64_t seed);

// ---------------------------------------------------------------------------

template <class Fn>
void BoxGrid::for_each_neighbour(std::size_t v, Fn&& fn) const {
  for (int k = 0; k < dim; ++k)
    for (int s = -1; s <= 1; s += 2) {
      std::array<int, 3> o{0, 0, 0};
      o[k] = s;
      std::size_t u;
      if (shifted(v, o, u) && u != v) fn(u);
    }
}

}  // namespace vrh
