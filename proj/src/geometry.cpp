#include "vrh/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include <boost/pending/disjoint_sets.hpp>

namespace vrh {

std::size_t BoxGrid::size() const noexcept {
  std::size_t n = 1;
  for (int k = 0; k < dim; ++k) n *= static_cast<std::size_t>(per_dim);
  return n;
}

std::array<int, 3> BoxGrid::coords(std::size_t v) const noexcept {
  std::array<int, 3> c{0, 0, 0};
  for (int k = 0; k < dim; ++k) {
    c[k] = static_cast<int>(v % static_cast<std::size_t>(per_dim));
    v /= static_cast<std::size_t>(per_dim);
  }
  return c;
}

std::size_t BoxGrid::id(const std::array<int, 3>& c) const noexcept {
  std::size_t v = 0;
  for (int k = dim - 1; k >= 0; --k) v = v * static_cast<std::size_t>(per_dim) + static_cast<std::size_t>(c[k]);
  return v;
}

bool BoxGrid::shifted(std::size_t v, const std::array<int, 3>& offset, std::size_t& out) const noexcept {
  std::array<int, 3> c = coords(v);
  for (int k = 0; k < dim; ++k) {
    int x = c[k] + offset[k];
    if (torus) {
      x %= per_dim;
      if (x < 0) x += per_dim;
    } else if (x < 0 || x >= per_dim) {
      return false;
    }
    c[k] = x;
  }
  out = id(c);
  return true;
}

std::array<int, 3> BoxGrid::offset(std::size_t a, std::size_t b) const noexcept {
  const auto ca = coords(a), cb = coords(b);
  std::array<int, 3> o{0, 0, 0};
  for (int k = 0; k < dim; ++k) {
    o[k] = cb[k] - ca[k];
    if (torus) {
      if (o[k] > per_dim / 2) o[k] -= per_dim;
      if (o[k] < -(per_dim - 1) / 2) o[k] += per_dim;
    }
  }
  return o;
}

double BoxGrid::dist2(std::size_t a, std::size_t b) const noexcept {
  const auto o = offset(a, b);
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += static_cast<double>(o[k]) * o[k];
  return s;
}

int BoxGrid::dist1(std::size_t a, std::size_t b) const noexcept {
  const auto o = offset(a, b);
  int s = 0;
  for (int k = 0; k < dim; ++k) s += std::abs(o[k]);
  return s;
}

bool BoxGrid::on_edge(std::size_t v) const noexcept {
  if (torus) return false;
  const auto c = coords(v);
  for (int k = 0; k < dim; ++k)
    if (c[k] == 0 || c[k] == per_dim - 1) return true;
  return false;
}

double overcrowding_radius(double n, double alpha) { return std::pow(std::log(n), 2.0 / alpha); }
double m0_from_t0(double t0, double alpha) { return std::pow(std::log(t0), 2.0 / alpha); }
double t0_from_m0(double m0, double alpha) { return std::exp(std::pow(m0, 0.5 * alpha)); }

// ---------------------------------------------------------------------------

std::size_t BoxFields::box_of(const Point& p) const noexcept {
  std::array<int, 3> c{0, 0, 0};
  for (int k = 0; k < grid.dim; ++k)
    c[k] = std::clamp(static_cast<int>(std::floor((p[k] - lo) / K)), 0, grid.per_dim - 1);
  return grid.id(c);
}

double BoxFields::white_fraction() const noexcept {
  if (white.empty()) return 0.0;
  std::size_t n = 0;
  for (auto w : white) n += w;
  return static_cast<double>(n) / static_cast<double>(white.size());
}

BoxFields box_fields(const MarkedPointSet& env, double K, double t0, double alpha) {
  if (!(K > 0.0)) throw std::invalid_argument("box side K must be positive");
  if (!(t0 >= 2.0)) throw std::invalid_argument("overcrowding threshold T0 must be at least 2");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  const WindowSpec& win = env.window();
  const double ratio = win.side() / K;
  const double nb = std::round(ratio);
  if (nb < 1.0 || std::fabs(ratio - nb) > 1e-9 * ratio)
    throw std::invalid_argument("window side is not a multiple of the box side K");

  BoxFields f;
  f.grid = BoxGrid{win.dim, static_cast<int>(nb), win.boundary == Boundary::torus};
  f.K = K;
  f.t0 = t0;
  f.alpha = alpha;
  f.lo = win.lo();
  const std::size_t n = f.grid.size();
  f.count.assign(n, 0);
  for (const Point& p : env.points()) ++f.count[f.box_of(p)];
  f.occupied.assign(n, 0);
  f.radius.assign(n, 0.0);
  f.shadow.assign(n, 0);
  for (std::size_t z = 0; z < n; ++z) {
    f.occupied[z] = f.count[z] >= 1;
    if (f.count[z] >= t0) f.radius[z] = overcrowding_radius(static_cast<double>(f.count[z]), alpha);
  }
  // Q(z, R) = {z' : |z - z'|_inf < R}.
  for (std::size_t z = 0; z < n; ++z) {
    if (f.radius[z] <= 0.0) continue;
    const int reach = std::min(static_cast<int>(std::ceil(f.radius[z])) - 1, f.grid.per_dim);
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int k = 0; k < f.grid.dim; ++k) {
      lo[k] = -reach;
      hi[k] = reach;
    }
    for (int oz = lo[2]; oz <= hi[2]; ++oz)
      for (int oy = lo[1]; oy <= hi[1]; ++oy)
        for (int ox = lo[0]; ox <= hi[0]; ++ox) {
          std::size_t u;
          if (f.grid.shifted(z, {ox, oy, oz}, u)) f.shadow[u] = 1;
        }
  }
  f.white.assign(n, 0);
  for (std::size_t z = 0; z < n; ++z) f.white[z] = f.occupied[z] && !f.shadow[z];
  return f;
}

// ---------------------------------------------------------------------------

namespace {

using DisjointSets = boost::disjoint_sets_with_storage<>;

// Compact labels 0..k-1 in order of first appearance along ascending vertex id.
ClusterLabeling compact(const BoxGrid& grid, std::span<const std::uint8_t> field, DisjointSets& ds) {
  ClusterLabeling out;
  const std::size_t n = grid.size();
  out.label.assign(n, -1);
  std::unordered_map<std::size_t, std::int32_t> root_label;
  for (std::size_t v = 0; v < n; ++v) {
    if (!field[v]) continue;
    const std::size_t r = ds.find_set(v);
    auto [it, inserted] = root_label.try_emplace(r, static_cast<std::int32_t>(out.sizes.size()));
    if (inserted) out.sizes.push_back(0);
    out.label[v] = it->second;
    ++out.sizes[static_cast<std::size_t>(it->second)];
  }
  for (std::size_t l = 0; l < out.sizes.size(); ++l)
    if (out.sizes[l] > out.largest_size) {
      out.largest_size = out.sizes[l];
      out.largest = static_cast<std::int32_t>(l);
    }
  return out;
}

}  // namespace

ClusterLabeling label_clusters(const BoxGrid& grid, std::span<const std::uint8_t> field) {
  const std::size_t n = grid.size();
  if (field.size() != n) throw std::invalid_argument("field size does not match grid");
  DisjointSets ds(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (!field[v]) continue;
    grid.for_each_neighbour(v, [&](std::size_t u) {
      if (u > v && field[u]) ds.union_set(v, u);
    });
  }
  return compact(grid, field, ds);
}

// ---------------------------------------------------------------------------

namespace {

// Vertices of `hole` with an l1-neighbour in Z^d outside the hole (leaving a
// free grid counts as outside). Extreme points of the set are among them.
std::vector<std::uint32_t> outer_vertices(const BoxGrid& grid, const Hole& hole,
                                          std::span<const std::int32_t> hole_of, std::int32_t h) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t v : hole.vertices) {
    bool outer = false;
    for (int k = 0; k < grid.dim && !outer; ++k)
      for (int s = -1; s <= 1 && !outer; s += 2) {
        std::array<int, 3> o{0, 0, 0};
        o[k] = s;
        std::size_t u;
        if (!grid.shifted(v, o, u) || hole_of[u] != h) outer = true;
      }
    if (outer) out.push_back(v);
  }
  return out;
}

double diameter2(const BoxGrid& grid, std::span<const std::uint32_t> vs) {
  double best = 0.0;
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j) best = std::max(best, grid.dist2(vs[i], vs[j]));
  return std::sqrt(best);
}

// Calls fn(u) for every vertex u with d2(u, hole) <= diam2(hole), possibly
// more than once. The nearest point of a set to an outside vertex always has
// a neighbour outside the set, so stamping balls around outer vertices suffices.
template <class Fn>
void stamp_enlargement(const BoxGrid& grid, const Hole& hole, std::span<const std::uint32_t> outer, Fn&& fn) {
  for (std::uint32_t v : hole.vertices) fn(v);
  const int reach = static_cast<int>(std::floor(hole.diam2 + 1e-9));
  if (reach == 0) return;
  const double r2 = hole.diam2 * hole.diam2 + 1e-9;
  const int rz = grid.dim > 2 ? reach : 0, ry = grid.dim > 1 ? reach : 0;
  for (std::uint32_t b : outer)
    for (int oz = -rz; oz <= rz; ++oz)
      for (int oy = -ry; oy <= ry; ++oy)
        for (int ox = -reach; ox <= reach; ++ox) {
          if (static_cast<double>(ox * ox + oy * oy + oz * oz) > r2) continue;
          std::size_t u;
          if (grid.shifted(b, {ox, oy, oz}, u)) fn(u);
        }
}

}  // namespace

HoleSet build_holes(const BoxGrid& grid, std::span<const std::uint8_t> good) {
  const std::size_t n = grid.size();
  if (good.size() != n) throw std::invalid_argument("good mask size does not match grid");
  std::vector<std::uint8_t> bad(n);
  for (std::size_t v = 0; v < n; ++v) bad[v] = !good[v];
  const ClusterLabeling comps = label_clusters(grid, bad);

  HoleSet hs;
  hs.hole_of = comps.label;
  hs.holes.resize(comps.sizes.size());
  for (std::size_t v = 0; v < n; ++v)
    if (comps.label[v] >= 0) {
      Hole& h = hs.holes[static_cast<std::size_t>(comps.label[v])];
      h.vertices.push_back(static_cast<std::uint32_t>(v));
      if (grid.on_edge(v)) h.touches_edge = true;
    }

  // Enlargements: a vertex covered by two holes' enlargements joins them.
  DisjointSets ds(std::max<std::size_t>(hs.holes.size(), 1));
  std::vector<std::int32_t> owner(n, -1);
  for (std::size_t hi = 0; hi < hs.holes.size(); ++hi) {
    Hole& h = hs.holes[hi];
    const auto h32 = static_cast<std::int32_t>(hi);
    const auto outer = outer_vertices(grid, h, hs.hole_of, h32);
    h.diam2 = outer.empty() ? diameter2(grid, h.vertices) : diameter2(grid, outer);
    stamp_enlargement(grid, h, outer, [&](std::size_t u) {
      if (owner[u] < 0)
        owner[u] = h32;
      else if (owner[u] != h32)
        ds.union_set(static_cast<std::size_t>(owner[u]), hi);
    });
  }

  std::unordered_map<std::size_t, std::int32_t> root_class;
  for (std::size_t hi = 0; hi < hs.holes.size(); ++hi) {
    const std::size_t r = ds.find_set(hi);
    auto [it, inserted] = root_class.try_emplace(r, hs.classes);
    if (inserted) ++hs.classes;
    hs.holes[hi].cls = it->second;
  }
  hs.vertex_class.assign(n, -1);
  std::vector<std::uint32_t> per_class(static_cast<std::size_t>(hs.classes) + 1, 0);
  for (std::size_t v = 0; v < n; ++v)
    if (owner[v] >= 0) {
      hs.vertex_class[v] = hs.holes[static_cast<std::size_t>(owner[v])].cls;
      ++per_class[static_cast<std::size_t>(hs.vertex_class[v]) + 1];
    }
  hs.class_start.assign(per_class.size(), 0);
  for (std::size_t c = 1; c < per_class.size(); ++c) hs.class_start[c] = hs.class_start[c - 1] + per_class[c];
  hs.class_members.resize(hs.class_start.back());
  std::vector<std::uint32_t> fill(hs.class_start.begin(), hs.class_start.end() - 1);
  for (std::size_t v = 0; v < n; ++v)
    if (hs.vertex_class[v] >= 0)
      hs.class_members[fill[static_cast<std::size_t>(hs.vertex_class[v])]++] = static_cast<std::uint32_t>(v);
  return hs;
}

std::vector<std::uint32_t> enlargement(const BoxGrid& grid, const Hole& hole) {
  std::vector<std::uint8_t> in(grid.size(), 0);
  std::vector<std::int32_t> hole_of(grid.size(), -1);
  for (std::uint32_t v : hole.vertices) hole_of[v] = 0;
  const auto outer = outer_vertices(grid, hole, hole_of, 0);
  stamp_enlargement(grid, hole, outer, [&](std::size_t u) { in[u] = 1; });
  std::vector<std::uint32_t> out;
  for (std::size_t v = 0; v < in.size(); ++v)
    if (in[v]) out.push_back(static_cast<std::uint32_t>(v));
  return out;
}

std::vector<std::int32_t> dbar_from(const BoxGrid& grid, const HoleSet& holes, std::size_t source) {
  // 0-1 BFS over vertices plus one hub node per class; members reach their
  // hub and the hub reaches every member at cost 0.
  const std::size_t n = grid.size();
  const std::size_t total = n + static_cast<std::size_t>(holes.classes);
  constexpr std::int32_t inf = std::numeric_limits<std::int32_t>::max();
  std::vector<std::int32_t> dist(total, inf);
  std::deque<std::size_t> queue;
  dist[source] = 0;
  queue.push_back(source);
  auto relax = [&](std::size_t to, std::int32_t d, bool zero) {
    if (d < dist[to]) {
      dist[to] = d;
      zero ? queue.push_front(to) : queue.push_back(to);
    }
  };
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    const std::int32_t d = dist[v];
    if (v >= n) {
      const std::size_t c = v - n;
      for (std::uint32_t k = holes.class_start[c]; k < holes.class_start[c + 1]; ++k)
        relax(holes.class_members[k], d, true);
      continue;
    }
    if (holes.vertex_class[v] >= 0) relax(n + static_cast<std::size_t>(holes.vertex_class[v]), d, true);
    grid.for_each_neighbour(v, [&](std::size_t u) { relax(u, d + 1, false); });
  }
  dist.resize(n);
  return dist;
}

std::int32_t dbar(const BoxGrid& grid, const HoleSet& holes, std::size_t a, std::size_t b) {
  return dbar_from(grid, holes, a)[b];
}

// ---------------------------------------------------------------------------

EnvironmentGeometry build_geometry(const MarkedPointSet& env, double K, double t0, double alpha) {
  EnvironmentGeometry g;
  g.fields = box_fields(env, K, t0, alpha);
  const BoxGrid& grid = g.fields.grid;
  g.white_clusters = label_clusters(grid, g.fields.white);
  g.good_box.assign(grid.size(), 0);
  if (g.white_clusters.largest >= 0)
    for (std::size_t v = 0; v < grid.size(); ++v)
      g.good_box[v] = g.white_clusters.label[v] == g.white_clusters.largest;
  g.holes = build_holes(grid, g.good_box);
  g.point_box.resize(env.size());
  g.good_point.resize(env.size());
  for (std::size_t i = 0; i < env.size(); ++i) {
    g.point_box[i] = static_cast<std::uint32_t>(g.fields.box_of(env.point(i)));
    g.good_point[i] = g.good_box[g.point_box[i]];
    g.good_points += g.good_point[i];
  }
  return g;
}

WhiteWeightAudit white_weight_audit(const MarkedPointSet& env, const BoxFields& fields,
                                    std::span<const double> weights) {
  if (weights.size() != env.size()) throw std::invalid_argument("weights do not match environment");
  std::vector<double> ws;
  for (std::size_t i = 0; i < env.size(); ++i)
    if (fields.white[fields.box_of(env.point(i))]) ws.push_back(weights[i]);
  WhiteWeightAudit a;
  a.points = ws.size();
  if (ws.empty()) return a;
  std::sort(ws.begin(), ws.end());
  a.max_w = ws.back();
  double s = 0.0;
  for (double w : ws) s += w;
  a.mean_w = s / static_cast<double>(ws.size());
  auto q = [&](double p) { return ws[static_cast<std::size_t>(p * static_cast<double>(ws.size() - 1))]; };
  a.q50 = q(0.5);
  a.q90 = q(0.9);
  a.q99 = q(0.99);
  return a;
}

std::vector<Dist0Row> dist0_probe(std::size_t envs, double density, int dim, double half_side, double K,
                                  double t0, double alpha, std::span<const int> distances, std::uint64_t seed) {
  std::vector<Dist0Row> rows;
  for (int d : distances) {
    if (d <= 0) throw std::invalid_argument("dist0_probe: distances must be positive");
    rows.push_back(Dist0Row{d, 0, 0, {}});
  }
  const WindowSpec win{dim, half_side, Boundary::torus, 0.0};
  const Rng master(seed);
  for (std::size_t e = 0; e < envs; ++e) {
    const MarkedPointSet env = sample_ppp(density, win, master.split(e).key());
    const BoxFields f = box_fields(env, K, t0, alpha);
    const ClusterLabeling wc = label_clusters(f.grid, f.white);
    std::vector<std::uint8_t> good(f.grid.size(), 0);
    if (wc.largest >= 0)
      for (std::size_t v = 0; v < good.size(); ++v) good[v] = wc.label[v] == wc.largest;
    const HoleSet hs = build_holes(f.grid, good);
    const std::size_t origin = f.box_of(Point{0.0, 0.0, 0.0});
    const auto dist = dbar_from(f.grid, hs, origin);
    for (auto& r : rows) {
      std::size_t z;
      if (!f.grid.shifted(origin, {r.d1, 0, 0}, z)) continue;
      ++r.samples;
      if (2 * dist[z] <= r.d1) ++r.hits;
    }
  }
  for (auto& r : rows) r.ci = stats::wilson_interval(r.hits, r.samples);
  return rows;
}

}  // namespace vrh
