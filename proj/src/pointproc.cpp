#include "vrh/pointproc.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "vrh/stats.hpp"

namespace vrh {

std::string to_string(Boundary b) { return b == Boundary::torus ? "torus" : "free"; }

Boundary boundary_from_string(const std::string& s) {
  if (s == "torus") return Boundary::torus;
  if (s == "free") return Boundary::free;
  throw std::invalid_argument("unknown boundary mode '" + s + "' (expected free|torus)");
}

std::string to_string(ProcessKind k) { return k == ProcessKind::ppp ? "ppp" : "diluted"; }

ProcessKind process_kind_from_string(const std::string& s) {
  if (s == "ppp") return ProcessKind::ppp;
  if (s == "diluted") return ProcessKind::diluted;
  throw std::invalid_argument("unknown process kind '" + s + "' (expected ppp|diluted)");
}

double norm2(const Point& v, int dim) noexcept {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += v[k] * v[k];
  return s;
}

double WindowSpec::volume() const noexcept { return std::pow(side(), dim); }

bool WindowSpec::contains(const Point& p) const noexcept {
  for (int k = 0; k < dim; ++k)
    if (!(p[k] >= lo() && p[k] < lo() + side())) return false;
  return true;
}

Point WindowSpec::displacement(const Point& from, const Point& to) const noexcept {
  Point d{0.0, 0.0, 0.0};
  const double s = side();
  for (int k = 0; k < dim; ++k) {
    d[k] = to[k] - from[k];
    if (boundary == Boundary::torus) d[k] -= s * std::nearbyint(d[k] / s);
  }
  return d;
}

double WindowSpec::distance2(const Point& a, const Point& b) const noexcept {
  return norm2(displacement(a, b), dim);
}

double WindowSpec::edge_distance(const Point& p) const noexcept {
  if (boundary == Boundary::torus) return std::numeric_limits<double>::infinity();
  double m = std::numeric_limits<double>::infinity();
  for (int k = 0; k < dim; ++k) m = std::min({m, p[k] - lo(), lo() + side() - p[k]});
  return m;
}

void WindowSpec::validate() const {
  if (dim < 1 || dim > 3) throw std::invalid_argument("window dimension must be 1, 2 or 3");
  if (!(half_side > 0.0)) throw std::invalid_argument("window half side must be positive");
  if (!(pad >= 0.0)) throw std::invalid_argument("window pad must be nonnegative");
}

// ---------------------------------------------------------------------------

CellIndex::CellIndex(const WindowSpec& window, std::span<const Point> points, double cell_size) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("cell size must be positive");
  dim_ = window.dim;
  lo_ = window.lo();
  per_dim_ = std::max(1, static_cast<int>(std::floor(window.side() / cell_size + 1e-9)));
  cell_ = window.side() / per_dim_;
  std::size_t cells = 1;
  for (int k = 0; k < dim_; ++k) cells *= static_cast<std::size_t>(per_dim_);
  if (cells > (std::size_t{1} << 28)) throw std::invalid_argument("cell index too fine for window");

  std::vector<std::uint32_t> owner(points.size());
  start_.assign(cells + 1, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    owner[i] = static_cast<std::uint32_t>(cell_of(points[i]));
    ++start_[owner[i] + 1];
  }
  for (std::size_t c = 0; c < cells; ++c) {
    max_bucket_ = std::max<std::size_t>(max_bucket_, start_[c + 1]);
    start_[c + 1] += start_[c];
  }
  items_.resize(points.size());
  std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
  for (std::size_t i = 0; i < points.size(); ++i) items_[fill[owner[i]]++] = static_cast<std::uint32_t>(i);
}

int CellIndex::coord(double x) const noexcept {
  const int c = static_cast<int>(std::floor((x - lo_) / cell_));
  return std::clamp(c, 0, per_dim_ - 1);
}

std::size_t CellIndex::cell_of(const Point& p) const noexcept {
  std::size_t id = 0, stride = 1;
  for (int k = 0; k < dim_; ++k) {
    id += stride * static_cast<std::size_t>(coord(p[k]));
    stride *= static_cast<std::size_t>(per_dim_);
  }
  return id;
}

std::span<const std::uint32_t> CellIndex::bucket(std::size_t cell) const noexcept {
  return {items_.data() + start_[cell], items_.data() + start_[cell + 1]};
}

// ---------------------------------------------------------------------------

MarkedPointSet::MarkedPointSet(WindowSpec window, std::vector<Point> points, std::vector<double> marks,
                               bool origin_pinned, Provenance provenance, double cell_size)
    : window_(window),
      points_(std::move(points)),
      marks_(std::move(marks)),
      origin_pinned_(origin_pinned),
      provenance_(std::move(provenance)) {
  window_.validate();
  if (!marks_.empty() && marks_.size() != points_.size())
    throw std::invalid_argument("marks and points differ in length");
  for (const auto& p : points_)
    if (!window_.contains(p)) throw std::invalid_argument("point outside window");
  for (double e : marks_)
    if (!(std::fabs(e) <= 1.0)) throw std::invalid_argument("mark outside [-1, 1]");
  if (origin_pinned_) {
    if (points_.empty()) throw std::invalid_argument("origin flag set on empty configuration");
    for (int k = 0; k < 3; ++k)
      if (points_[0][k] != 0.0) throw std::invalid_argument("origin flag set but point 0 is not the origin");
  }
  index_ = CellIndex(window_, points_, cell_size);
}

MarkedPointSet MarkedPointSet::with_marks(std::vector<double> marks, Provenance provenance) const {
  return MarkedPointSet(window_, points_, std::move(marks), origin_pinned_, std::move(provenance),
                        index_.cell_size());
}

double MarkLaw::density(double e) const noexcept {
  return std::fabs(e) <= 1.0 ? normalization() * std::pow(std::fabs(e), exponent) : 0.0;
}

double MarkLaw::abs_moment(double k) const noexcept { return (exponent + 1.0) / (exponent + k + 1.0); }

// ---------------------------------------------------------------------------

MarkedPointSet sample_ppp(double density, const WindowSpec& window, std::uint64_t seed, double cell_size) {
  if (!(density > 0.0)) throw std::invalid_argument("PPP density must be positive");
  window.validate();
  Rng rng(seed);
  Rng count_rng = rng.split(0);
  Rng pos_rng = rng.split(1);
  const std::uint64_t n = sample_poisson(count_rng, density * window.volume());
  std::vector<Point> pts(n, Point{0.0, 0.0, 0.0});
  const double lo = window.lo(), side = window.side();
  for (auto& p : pts)
    for (int k = 0; k < window.dim; ++k) {
      p[k] = lo + side * pos_rng.uniform();
      if (p[k] >= lo + side) p[k] = lo;  // guard against rounding to the open end
    }
  Provenance prov{"ppp", density, seed, std::nullopt, 0};
  return MarkedPointSet(window, std::move(pts), {}, false, prov, cell_size);
}

namespace {

void require_integer_half_side(const WindowSpec& w) {
  if (std::fabs(w.half_side - std::round(w.half_side)) > 1e-12)
    throw std::invalid_argument("diluted lattice requires an integer half side");
}

WindowSpec lattice_window(WindowSpec w) {
  w.pad = 0.5;
  return w;
}

// Enumerates Z^d in [-L, L]^d in lexicographic order (last axis slowest).
template <class Fn>
void for_each_site(int dim, long L, Fn&& fn) {
  std::array<long, 3> z{0, 0, 0};
  const long zmax = dim > 2 ? L : 0, ymax = dim > 1 ? L : 0;
  for (z[2] = -zmax; z[2] <= zmax; ++z[2])
    for (z[1] = -ymax; z[1] <= ymax; ++z[1])
      for (z[0] = -L; z[0] <= L; ++z[0])
        fn(Point{static_cast<double>(z[0]), static_cast<double>(z[1]), static_cast<double>(z[2])});
}

MarkedPointSet diluted_impl(double p, WindowSpec window, std::uint64_t seed, double cell_size, bool palm) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("retention probability must lie in (0, 1]");
  window.validate();
  require_integer_half_side(window);
  window = lattice_window(window);
  Rng rng = Rng(seed).split(2);
  std::vector<Point> pts;
  if (palm) pts.push_back(Point{0.0, 0.0, 0.0});
  const long L = std::lround(window.half_side);
  for_each_site(window.dim, L, [&](const Point& site) {
    const bool origin = site[0] == 0.0 && site[1] == 0.0 && site[2] == 0.0;
    const double u = rng.uniform();  // one draw per site keeps Palm and plain runs coupled
    if (palm && origin) return;
    if (u < p) pts.push_back(site);
  });
  Provenance prov{"diluted", p, seed, std::nullopt, 0};
  return MarkedPointSet(window, std::move(pts), {}, palm, prov, cell_size);
}

}  // namespace

MarkedPointSet sample_diluted_lattice(double p, const WindowSpec& window, std::uint64_t seed,
                                      double cell_size) {
  return diluted_impl(p, window, seed, cell_size, false);
}

MarkedPointSet sample_marks(const MarkedPointSet& ps, const MarkLaw& law, std::uint64_t seed) {
  if (ps.has_marks()) throw std::invalid_argument("marks already set");
  if (!(law.exponent >= 0.0)) throw std::invalid_argument("mark exponent must be nonnegative");
  Rng rng = Rng(seed).split(3);
  std::vector<double> marks(ps.size());
  const double inv = 1.0 / (law.exponent + 1.0);
  for (auto& e : marks) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    e = sign * std::pow(rng.uniform(), inv);
  }
  Provenance prov = ps.provenance();
  prov.mark_exponent = law.exponent;
  prov.mark_seed = seed;
  return ps.with_marks(std::move(marks), prov);
}

MarkedPointSet palmify(ProcessKind kind, double intensity, const WindowSpec& window, std::uint64_t seed,
                       double cell_size) {
  if (kind == ProcessKind::diluted) return diluted_impl(intensity, window, seed, cell_size, true);
  MarkedPointSet base = sample_ppp(intensity, window, seed, cell_size);
  if (!window.contains(Point{0.0, 0.0, 0.0})) throw std::invalid_argument("window does not contain the origin");
  std::vector<Point> pts;
  pts.reserve(base.size() + 1);
  pts.push_back(Point{0.0, 0.0, 0.0});
  pts.insert(pts.end(), base.points().begin(), base.points().end());
  return MarkedPointSet(window, std::move(pts), {}, true, base.provenance(), cell_size);
}

// ---------------------------------------------------------------------------

namespace {

double unit_ball_volume(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return std::numbers::pi;
    default: return 4.0 / 3.0 * std::numbers::pi;
  }
}

// int_{R^d} e^{-|x|} dx = |S^{d-1}| (d-1)!
double exp_decay_integral(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    default: return 8.0 * std::numbers::pi;
  }
}

// h(xi) where f(x, xi) = e^{-|x|} h(xi); `centre` plays the role of 0 after the shift.
double campbell_factor(CampbellFunctional f, const MarkedPointSet& cfg, const Point& centre) {
  switch (f) {
    case CampbellFunctional::exp_decay: return 1.0;
    case CampbellFunctional::exp_decay_ball: {
      double count = 0.0;
      cfg.index().visit_within(cfg.window(), cfg.points(), centre, 1.0,
                               [&](std::uint32_t, const Point&, double) { count += 1.0; });
      return count;
    }
    case CampbellFunctional::exp_decay_isolated: {
      int within = 0;
      cfg.index().visit_within(cfg.window(), cfg.points(), centre, 0.5,
                               [&](std::uint32_t, const Point&, double) { ++within; });
      return within <= 1 ? 1.0 : 0.0;  // the centre itself is always counted
    }
  }
  return 0.0;
}

}  // namespace

CampbellResult campbell_check(CampbellFunctional f, double density, int dim, std::size_t replicas,
                              std::uint64_t seed, double half_side, double margin) {
  if (!(density > 0.0)) throw std::invalid_argument("density must be positive");
  if (replicas < 2) throw std::invalid_argument("campbell_check needs at least two replicas");
  if (!(half_side > margin)) throw std::invalid_argument("margin exceeds window");
  WindowSpec window{dim, half_side, Boundary::free, 0.0};
  const double Z = exp_decay_integral(dim);
  Rng master(seed);

  stats::Running left, right;
  for (std::size_t r = 0; r < replicas; ++r) {
    // Left: Palm configuration.
    // The x-integral factors out as Z since h does not depend on x.
    Rng lrng = master.split(2 * r);
    const MarkedPointSet palm = palmify(ProcessKind::ppp, density, window, lrng(), 1.0);
    left.add(Z * campbell_factor(f, palm, Point{0.0, 0.0, 0.0}));

    // Right: stationary configuration, sum over base points away from the edge.
    Rng rrng = master.split(2 * r + 1);
    const MarkedPointSet plain = sample_ppp(density, window, rrng(), 1.0);
    double s = 0.0;
    for (const Point& p : plain.points()) {
      if (plain.window().edge_distance(p) < margin) continue;
      s += std::exp(-std::sqrt(norm2(p, dim))) * campbell_factor(f, plain, p);
    }
    right.add(s);
  }

  CampbellResult res;
  res.left = left.mean();
  res.left_se = left.std_error();
  res.right_raw = right.mean();
  res.right = right.mean() / density;
  res.right_se = right.std_error() / density;
  switch (f) {
    case CampbellFunctional::exp_decay: res.exact = Z; break;
    case CampbellFunctional::exp_decay_ball: res.exact = Z * (1.0 + density * unit_ball_volume(dim)); break;
    case CampbellFunctional::exp_decay_isolated:
      res.exact = Z * std::exp(-density * unit_ball_volume(dim) * std::pow(0.5, dim));
      break;
  }
  const double combined = std::sqrt(res.left_se * res.left_se + res.right_se * res.right_se);
  res.consistent = std::fabs(res.left - res.right) <= 3.0 * combined + 1e-12 * std::fabs(res.left);
  return res;
}

}  // namespace vrh
