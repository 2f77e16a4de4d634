#include "vrh/walk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vrh {

std::string to_string(WalkBoundary b) { return b == WalkBoundary::wrap ? "wrap" : "absorb"; }

WalkBoundary walk_boundary_from_string(const std::string& s) {
  if (s == "wrap") return WalkBoundary::wrap;
  if (s == "absorb") return WalkBoundary::absorb;
  throw std::invalid_argument("unknown walk boundary '" + s + "' (expected wrap|absorb)");
}

void WalkConfig::validate() const {
  if (record_every == 0) throw std::invalid_argument("record_every must be positive");
  if (!(record_dt > 0.0)) throw std::invalid_argument("record_dt must be positive");
  if (!(t_max >= 0.0)) throw std::invalid_argument("t_max must be nonnegative");
  if (!(absorb_margin >= 0.0)) throw std::invalid_argument("absorb_margin must be nonnegative");
}

namespace {

void check_start(std::size_t x0, const MarkedPointSet& env, const JumpTable& table) {
  if (x0 >= env.size()) throw std::out_of_range("start index out of range");
  if (table.size() != env.size()) throw std::invalid_argument("jump table does not match environment");
}

void check_boundary(const MarkedPointSet& env, const WalkConfig& cfg) {
  const bool torus = env.window().boundary == Boundary::torus;
  if (cfg.boundary == WalkBoundary::wrap && !torus)
    throw std::invalid_argument("wrap boundary requires a torus environment");
}

bool absorbed_at(const MarkedPointSet& env, const WalkConfig& cfg, std::uint32_t x) {
  return cfg.boundary == WalkBoundary::absorb && env.window().edge_distance(env.point(x)) < cfg.absorb_margin;
}

void add_displacement(Point& pos, const MarkedPointSet& env, std::uint32_t from, std::uint32_t to) {
  const Point d = env.window().displacement(env.point(from), env.point(to));
  for (int k = 0; k < env.window().dim; ++k) pos[k] += d[k];
}

void record(Trajectory& tr, std::uint32_t x, const Point& pos, double t, std::uint64_t jumps) {
  tr.index.push_back(x);
  tr.position.push_back(pos);
  tr.time.push_back(t);
  tr.jumps.push_back(jumps);
}

}  // namespace

Trajectory run_dtrw(std::size_t x0, const MarkedPointSet& env, const JumpTable& table, const WalkConfig& cfg,
                    std::uint64_t seed) {
  check_start(x0, env, table);
  cfg.validate();
  check_boundary(env, cfg);
  Trajectory tr;
  tr.seed = seed;
  Rng rng = Rng(seed).split(kJumpStream);
  auto x = static_cast<std::uint32_t>(x0);
  Point pos = env.point(x0);
  tr.index.reserve(cfg.steps / cfg.record_every + 1);
  tr.position.reserve(cfg.steps / cfg.record_every + 1);
  record(tr, x, pos, 0.0, 0);
  tr.absorbed = absorbed_at(env, cfg, x);
  std::uint64_t n = 0;
  while (!tr.absorbed && n < cfg.steps) {
    const std::uint32_t y = table.sample(x, rng);
    add_displacement(pos, env, x, y);
    x = y;
    ++n;
    if (n % cfg.record_every == 0) record(tr, x, pos, static_cast<double>(n), n);
    tr.absorbed = absorbed_at(env, cfg, x);
  }
  tr.total_jumps = n;
  tr.t_end = static_cast<double>(n);
  return tr;
}

Trajectory run_ctrw(std::size_t x0, const MarkedPointSet& env, const JumpTable& table, const WalkConfig& cfg,
                    std::uint64_t seed) {
  check_start(x0, env, table);
  cfg.validate();
  check_boundary(env, cfg);
  Trajectory tr;
  tr.seed = seed;
  const Rng base(seed);
  Rng jump_rng = base.split(kJumpStream);
  Rng hold_rng = base.split(kHoldStream);
  auto x = static_cast<std::uint32_t>(x0);
  Point pos = env.point(x0);
  record(tr, x, pos, 0.0, 0);
  tr.absorbed = absorbed_at(env, cfg, x);
  std::uint64_t jumps = 0;
  std::uint64_t next_record = 1;
  double t = 0.0;
  while (!tr.absorbed) {
    const double w = table.weight(x);
    const double t_next = t + hold_rng.exponential() / w;
    // Record the grid times that fall inside this holding interval.
    while (static_cast<double>(next_record) * cfg.record_dt <= std::min(t_next, cfg.t_max)) {
      record(tr, x, pos, static_cast<double>(next_record) * cfg.record_dt, jumps);
      ++next_record;
    }
    if (t_next > cfg.t_max) {
      t = cfg.t_max;
      break;
    }
    t = t_next;
    const std::uint32_t y = table.sample(x, jump_rng);
    add_displacement(pos, env, x, y);
    x = y;
    ++jumps;
    if (cfg.keep_events) {
      tr.event_index.push_back(x);
      tr.event_time.push_back(t);
    }
    tr.absorbed = absorbed_at(env, cfg, x);
  }
  tr.total_jumps = jumps;
  tr.t_end = t;
  return tr;
}

// ---------------------------------------------------------------------------

RestrictedWalker::RestrictedWalker(const MarkedPointSet& env, const JumpTable& table,
                                   const EnvironmentGeometry& geom, std::size_t x0, std::uint64_t seed,
                                   std::uint64_t step_cap, bool track_dbar)
    : env_(&env),
      table_(&table),
      geom_(&geom),
      rng_(Rng(seed).split(kJumpStream)),
      x_(static_cast<std::uint32_t>(x0)),
      pos_(env.point(x0)),
      cap_(step_cap),
      track_dbar_(track_dbar) {
  check_start(x0, env, table);
  if (geom.good_point.size() != env.size()) throw std::invalid_argument("geometry does not match environment");
  if (!geom.good_point[x0]) throw std::invalid_argument("restricted walk must start at a good point");
  if (step_cap == 0) throw std::invalid_argument("step cap must be positive");
}

Excursion RestrictedWalker::next() {
  Excursion ex;
  const std::uint32_t start = x_;
  const Point start_pos = pos_;
  const std::int32_t start_box = static_cast<std::int32_t>(geom_->point_box[start]);
  std::vector<std::int32_t> dbar_map;
  if (track_dbar_) dbar_map = dbar_from(geom_->fields.grid, geom_->holes, static_cast<std::size_t>(start_box));
  std::int32_t prev_class = -1;
  const int dim = env_->window().dim;
  while (true) {
    if (ex.length >= cap_) {
      ex.truncated = true;
      return ex;
    }
    const std::uint32_t y = table_->sample(x_, rng_);
    add_displacement(pos_, *env_, x_, y);
    x_ = y;
    ++steps_;
    ++ex.length;
    if (path_ != nullptr) path_->push_back(y);
    Point rel{0.0, 0.0, 0.0};
    for (int k = 0; k < dim; ++k) rel[k] = pos_[k] - start_pos[k];
    ex.sup_dist = std::max(ex.sup_dist, std::sqrt(norm2(rel, dim)));
    if (track_dbar_) ex.sup_dbar = std::max(ex.sup_dbar, static_cast<double>(dbar_map[geom_->point_box[y]]));
    if (geom_->good_point[y]) break;
    const std::int32_t cls = geom_->hole_class_of_point(y);
    if (cls != prev_class) ++ex.gamma;
    prev_class = cls;
  }
  ++visits_;
  return ex;
}

RestrictedTrajectory run_restricted(std::size_t x0, std::uint64_t visits, const MarkedPointSet& env,
                                    const JumpTable& table, const EnvironmentGeometry& geom, std::uint64_t seed,
                                    std::uint64_t step_cap, bool keep_path, bool track_dbar) {
  RestrictedWalker walker(env, table, geom, x0, seed, step_cap, track_dbar);
  RestrictedTrajectory rt;
  rt.seed = seed;
  if (keep_path) {
    rt.path.push_back(static_cast<std::uint32_t>(x0));
    walker.record_path(&rt.path);
  }
  rt.visit.push_back(static_cast<std::uint32_t>(x0));
  rt.position.push_back(env.point(x0));
  rt.visit_step.push_back(0);
  rt.gamma_cumulative.push_back(0);
  for (std::uint64_t n = 0; n < visits; ++n) {
    const Excursion ex = walker.next();
    rt.excursions.push_back(ex);
    if (ex.truncated) {
      rt.truncated = true;
      break;
    }
    rt.visit.push_back(walker.current());
    rt.position.push_back(walker.position());
    rt.visit_step.push_back(walker.steps());
    rt.gamma_cumulative.push_back(rt.gamma_cumulative.back() + ex.gamma);
  }
  return rt;
}

std::vector<std::uint32_t> gamma_counts(std::span<const std::uint32_t> path, const EnvironmentGeometry& geom) {
  std::vector<std::uint32_t> out;
  if (path.empty()) return out;
  out.reserve(path.size());
  out.push_back(0);
  for (std::size_t i = 1; i < path.size(); ++i) {
    std::uint32_t g = out.back();
    if (!geom.good_point[path[i]]) {
      const std::int32_t cls = geom.hole_class_of_point(path[i]);
      const std::int32_t prev = geom.good_point[path[i - 1]] ? -1 : geom.hole_class_of_point(path[i - 1]);
      if (cls != prev) ++g;
    }
    out.push_back(g);
  }
  return out;
}

PoissonizedSample poissonize(const RestrictedTrajectory& y, std::span<const double> t_grid, std::uint64_t seed) {
  if (y.visit.empty()) throw std::invalid_argument("poissonize: empty trajectory");
  PoissonizedSample s;
  Rng rng(seed);
  std::uint64_t n = 0;
  double prev = 0.0;
  for (double t : t_grid) {
    if (!(t >= prev)) throw std::invalid_argument("poissonize: time grid must be nondecreasing and nonnegative");
    if (t > prev) n += sample_poisson(rng, t - prev);
    prev = t;
    s.count.push_back(n);
    if (n >= y.visit.size()) {
      s.undercovered = true;
      s.index.push_back(y.visit.back());
    } else {
      s.index.push_back(y.visit[n]);
    }
  }
  return s;
}

stats::Estimate jump_rate_lln(const Trajectory& ctrw, std::size_t batches) {
  stats::Estimate e;
  if (ctrw.time.size() < 2 || !(ctrw.t_end > 0.0)) return e;
  std::vector<double> rates;
  for (std::size_t k = 1; k < ctrw.time.size(); ++k) {
    const double dt = ctrw.time[k] - ctrw.time[k - 1];
    rates.push_back(static_cast<double>(ctrw.jumps[k] - ctrw.jumps[k - 1]) / dt);
  }
  e = stats::batch_means(rates, batches);
  e.value = static_cast<double>(ctrw.total_jumps) / ctrw.t_end;
  return e;
}

ExcursionMoments excursion_moments(std::span<const Excursion> excursions) {
  ExcursionMoments m;
  std::vector<double> d1, d2, r1, r2;
  for (const Excursion& e : excursions) {
    if (e.truncated) {
      ++m.truncated;
      continue;
    }
    d1.push_back(e.sup_dbar);
    d2.push_back(e.sup_dbar * e.sup_dbar);
    r1.push_back(e.sup_dist);
    r2.push_back(e.sup_dist * e.sup_dist);
  }
  m.excursions = d1.size();
  m.dbar1 = stats::mean_se(d1);
  m.dbar2 = stats::mean_se(d2);
  m.dist1 = stats::mean_se(r1);
  m.dist2 = stats::mean_se(r2);
  return m;
}

}  // namespace vrh
