#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "vrh/acceptance.hpp"
#include "vrh/geometry.hpp"
#include "vrh/walk.hpp"

using namespace vrh;

namespace {

std::vector<std::uint8_t> random_field(std::size_t n, double p, std::uint64_t seed) {
  Rng r(seed);
  std::vector<std::uint8_t> f(n);
  for (auto& v : f) v = r.uniform() < p;
  return f;
}

// Flood fill, clusters numbered in order of their smallest vertex.
std::vector<std::int32_t> bfs_labels(const BoxGrid& g, const std::vector<std::uint8_t>& field) {
  std::vector<std::int32_t> label(g.size(), -1);
  std::int32_t next = 0;
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (!field[s] || label[s] >= 0) continue;
    std::deque<std::size_t> q{s};
    label[s] = next;
    while (!q.empty()) {
      const auto v = q.front();
      q.pop_front();
      g.for_each_neighbour(v, [&](std::size_t u) {
        if (field[u] && label[u] < 0) {
          label[u] = next;
          q.push_back(u);
        }
      });
    }
    ++next;
  }
  return label;
}

// Minimum-image sup distance between boxes.
int sup_dist(const BoxGrid& g, std::size_t a, std::size_t b) {
  const auto ca = g.coords(a), cb = g.coords(b);
  int m = 0;
  for (int k = 0; k < g.dim; ++k) {
    int d = std::abs(ca[k] - cb[k]);
    if (g.torus) d = std::min(d, g.per_dim - d);
    m = std::max(m, d);
  }
  return m;
}

double sq(double x) { return x * x; }

double raw_dist2(const BoxGrid& g, std::size_t a, std::size_t b) {
  const auto ca = g.coords(a), cb = g.coords(b);
  double s = 0.0;
  for (int k = 0; k < g.dim; ++k) s += sq(ca[k] - cb[k]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("overcrowding radius and the T0 / m0 relation") {
  CHECK(overcrowding_radius(8.0, 2.0) == doctest::Approx(std::log(8.0)));
  CHECK(overcrowding_radius(8.0, 2.0) == doctest::Approx(2.0794).epsilon(1e-4));
  for (double t0 : {3.0, 20.0, 40.0})
    for (double a : {0.5, 1.0, 2.0}) CHECK(t0_from_m0(m0_from_t0(t0, a), a) == doctest::Approx(t0).epsilon(1e-12));
  CHECK(t0_from_m0(4.0, 2.0) == doctest::Approx(std::exp(4.0)));
}

TEST_CASE("box fields from counts") {
  for (Boundary bd : {Boundary::free, Boundary::torus}) {
    const auto env = sample_ppp(3.0, WindowSpec{2, 16.0, bd, 0.0}, 21);
    const auto f = box_fields(env, 2.0, 15.0, 2.0);
    CHECK(f.grid.per_dim == 16);
    CHECK(std::accumulate(f.count.begin(), f.count.end(), std::size_t{0}) == env.size());
    std::size_t overcrowded = 0;
    for (std::size_t z = 0; z < f.grid.size(); ++z) {
      CHECK(f.occupied[z] == (f.count[z] >= 1));
      CHECK(f.white[z] <= f.occupied[z]);
      if (f.count[z] >= 15) {
        ++overcrowded;
        CHECK(f.radius[z] == doctest::Approx(std::log(double(f.count[z]))));
      } else {
        CHECK(f.radius[z] == 0.0);
      }
    }
    CHECK(overcrowded > 0);
    for (std::size_t u = 0; u < f.grid.size(); ++u) {
      bool shadow = false;
      for (std::size_t z = 0; z < f.grid.size() && !shadow; ++z)
        shadow = f.radius[z] > 0.0 && sup_dist(f.grid, z, u) < f.radius[z];
      CHECK(f.shadow[u] == shadow);
      CHECK(f.white[u] == (f.occupied[u] && !shadow));
    }
  }
  const auto env = sample_ppp(1.0, WindowSpec{2, 16.0, Boundary::free, 0.0}, 1);
  CHECK_THROWS_AS(box_fields(env, 5.0, 20.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(box_fields(env, 4.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("union-find labelling equals flood fill") {
  for (bool torus : {false, true})
    for (double p : {0.5, 0.6, 0.8}) {
      const BoxGrid g{2, 64, torus};
      const auto field = random_field(g.size(), p, 17 + static_cast<std::uint64_t>(p * 10) + torus);
      const auto uf = label_clusters(g, field);
      const auto bfs = bfs_labels(g, field);
      CHECK(uf.label == bfs);
      std::vector<std::size_t> sizes(uf.sizes.size(), 0);
      for (auto l : bfs)
        if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
      CHECK(sizes == uf.sizes);
      CHECK(uf.largest_size == *std::max_element(sizes.begin(), sizes.end()));
      CHECK(sizes[static_cast<std::size_t>(uf.largest)] == uf.largest_size);
    }
  const BoxGrid g3{3, 12, true};
  const auto f3 = random_field(g3.size(), 0.3, 5);
  CHECK(label_clusters(g3, f3).label == bfs_labels(g3, f3));
}

TEST_CASE("two-vertex hole enlargement") {
  const BoxGrid g{2, 9, false};
  std::vector<std::uint8_t> good(g.size(), 1);
  const std::size_t a = g.id({4, 4, 0}), b = g.id({5, 4, 0});
  good[a] = good[b] = 0;
  const auto hs = build_holes(g, good);
  REQUIRE(hs.holes.size() == 1);
  CHECK(hs.holes[0].diam2 == doctest::Approx(1.0));
  std::vector<std::uint32_t> want;
  for (std::size_t z = 0; z < g.size(); ++z)
    if (std::min(raw_dist2(g, z, a), raw_dist2(g, z, b)) <= 1.0) want.push_back(static_cast<std::uint32_t>(z));
  CHECK(want.size() == 8);
  CHECK(enlargement(g, hs.holes[0]) == want);
}

TEST_CASE("holes, enlargements and classes against brute force") {
  for (bool torus : {false, true}) {
    const BoxGrid g{2, 32, torus};
    const auto good = random_field(g.size(), 0.85, 40 + torus);
    const auto hs = build_holes(g, good);
    const auto comp = bfs_labels(g, [&] {
      std::vector<std::uint8_t> bad(good.size());
      for (std::size_t i = 0; i < good.size(); ++i) bad[i] = !good[i];
      return bad;
    }());
    CHECK(hs.hole_of == comp);

    // Enlargements by direct point-to-set distances (unwrapped coordinates on
    // the free grid; the torus check is restricted to the containment C in C~).
    std::vector<std::vector<std::uint8_t>> member(hs.holes.size(), std::vector<std::uint8_t>(g.size(), 0));
    for (std::size_t h = 0; h < hs.holes.size(); ++h) {
      const auto& hole = hs.holes[h];
      const auto enl = enlargement(g, hole);
      for (auto v : enl) member[h][v] = 1;
      for (auto v : hole.vertices) CHECK(member[h][v] == 1);
      if (torus) continue;
      double diam = 0.0;
      for (auto u : hole.vertices)
        for (auto v : hole.vertices) diam = std::max(diam, raw_dist2(g, u, v));
      CHECK(hole.diam2 == doctest::Approx(diam));
      for (std::size_t z = 0; z < g.size(); ++z) {
        double d = INFINITY;
        for (auto v : hole.vertices) d = std::min(d, raw_dist2(g, z, v));
        CHECK(member[h][z] == (d <= diam + 1e-9));
      }
    }

    // Classes: holes linked when their enlargements share a vertex.
    std::vector<std::size_t> parent(hs.holes.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (std::size_t z = 0; z < g.size(); ++z) {
      std::size_t first = SIZE_MAX;
      for (std::size_t h = 0; h < hs.holes.size(); ++h)
        if (member[h][z]) {
          if (first == SIZE_MAX)
            first = h;
          else
            parent[find(h)] = find(first);
        }
    }
    for (std::size_t a = 0; a < hs.holes.size(); ++a)
      for (std::size_t b = a + 1; b < hs.holes.size(); ++b)
        CHECK((find(a) == find(b)) == (hs.holes[a].cls == hs.holes[b].cls));
    for (std::size_t v = 0; v < g.size(); ++v)
      if (hs.hole_of[v] >= 0) CHECK(hs.vertex_class[v] == hs.holes[static_cast<std::size_t>(hs.hole_of[v])].cls);
  }
}

TEST_CASE("quotient distance against an explicitly identified graph") {
  for (bool torus : {false, true}) {
    const BoxGrid g{2, 32, torus};
    const auto good = random_field(g.size(), 0.8, 90 + torus);
    const auto hs = build_holes(g, good);

    // Super-node per class, original vertex otherwise.
    const std::size_t n = g.size();
    auto node = [&](std::size_t v) {
      return hs.vertex_class[v] >= 0 ? n + static_cast<std::size_t>(hs.vertex_class[v]) : v;
    };
    std::vector<std::vector<std::size_t>> adj(n + static_cast<std::size_t>(hs.classes));
    for (std::size_t v = 0; v < n; ++v)
      g.for_each_neighbour(v, [&](std::size_t u) {
        if (node(u) != node(v)) adj[node(v)].push_back(node(u));
      });

    Rng r(3);
    for (int trial = 0; trial < 12; ++trial) {
      const std::size_t src = r.below(n);
      std::vector<std::int32_t> dist(adj.size(), -1);
      std::deque<std::size_t> q{node(src)};
      dist[node(src)] = 0;
      while (!q.empty()) {
        const auto v = q.front();
        q.pop_front();
        for (auto u : adj[v])
          if (dist[u] < 0) {
            dist[u] = dist[v] + 1;
            q.push_back(u);
          }
      }
      const auto got = dbar_from(g, hs, src);
      for (std::size_t v = 0; v < n; ++v) {
        CHECK(got[v] == dist[node(v)]);
        CHECK(got[v] <= g.dist1(src, v));
      }
    }

    // Pseudometric on sampled triples.
    for (int trial = 0; trial < 6; ++trial) {
      const std::size_t a = r.below(n), b = r.below(n);
      const auto da = dbar_from(g, hs, a), db = dbar_from(g, hs, b);
      CHECK(da[b] == db[a]);
      for (std::size_t c = 0; c < n; c += 13) CHECK(da[c] <= da[b] + db[c]);
    }
  }
}

TEST_CASE("gamma counts jumps into a new hole class") {
  const auto env = omega_fixture();
  const auto geom = build_geometry(env, 1.0, 1000.0, 1.0);
  std::uint32_t good = UINT32_MAX, hole_a = UINT32_MAX, hole_b = UINT32_MAX;
  for (std::size_t i = 0; i < env.size(); ++i) {
    if (geom.good_point[i] && good == UINT32_MAX) good = static_cast<std::uint32_t>(i);
    if (!geom.good_point[i]) (hole_a == UINT32_MAX ? hole_a : hole_b) = static_cast<std::uint32_t>(i);
  }
  REQUIRE(good != UINT32_MAX);
  REQUIRE(hole_b != UINT32_MAX);
  CHECK(geom.hole_class_of_point(hole_a) == geom.hole_class_of_point(hole_b));

  // X0 good, X1 in a hole, X2 good: Gamma_2 = Gamma_1 = 1.
  const std::vector<std::uint32_t> p1{good, hole_a, good};
  CHECK(gamma_counts(p1, geom) == std::vector<std::uint32_t>{0, 1, 1});
  // Moving inside one class does not count again; re-entering does.
  const std::vector<std::uint32_t> p2{good, hole_a, hole_b, hole_a, good, hole_b};
  CHECK(gamma_counts(p2, geom) == std::vector<std::uint32_t>{0, 1, 1, 1, 1, 2});
}

TEST_CASE("gamma and the good cluster on random environments") {
  const auto env = sample_ppp(1.0, WindowSpec{2, 32.0, Boundary::torus, 0.0}, 8);
  const auto geom = build_geometry(env, 2.0, 12.0, 1.0);
  CHECK(geom.good_points > env.size() / 2);
  for (std::size_t z = 0; z < geom.good_box.size(); ++z)
    if (geom.good_box[z]) CHECK(geom.fields.white[z]);
  const JumpTable table(env, RateModel{}, TruncationPolicy{8.0, 1e-2});
  std::vector<std::uint32_t> path;
  WalkConfig cfg;
  cfg.steps = 20000;
  const auto tr = run_dtrw(0, env, table, cfg, 4);
  for (auto i : tr.index) path.push_back(i);
  const auto gamma = gamma_counts(path, geom);
  for (std::size_t n = 1; n < gamma.size(); ++n) {
    CHECK(gamma[n] >= gamma[n - 1]);
    CHECK(gamma[n] <= n);
  }
}

TEST_CASE("distance probe rows are well formed and not increasing") {
  const std::vector<int> ds{4, 8, 16};
  const auto rows = dist0_probe(150, 1.0, 2, 48.0, 6.0, 40.0, 1.0, ds, 12);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.hits <= r.samples);
    CHECK(r.ci.lo <= r.ci.hi);
  }
  CHECK(rows[2].ci.lo <= rows[0].ci.hi);
}
