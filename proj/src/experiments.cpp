#include "vrh/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vrh/parallel.hpp"

namespace vrh {

namespace {

// Child seed k of `seed`; the first output of the substream.
std::uint64_t derive(std::uint64_t seed, std::uint64_t k) { return Rng(seed).split(k)(); }

constexpr std::uint64_t kMarkSalt = 0x4d41524bULL;

double mean_diag(const DiffusionEstimate& d) {
  double s = 0.0;
  for (int a = 0; a < d.dim; ++a) s += d.at(a, a);
  return s / d.dim;
}

}  // namespace

MarkedPointSet make_env(const EnvSpec& spec, std::uint64_t seed) {
  spec.window.validate();
  MarkedPointSet env;
  if (spec.palm)
    env = palmify(spec.kind, spec.intensity, spec.window, seed, spec.cell_size);
  else if (spec.kind == ProcessKind::ppp)
    env = sample_ppp(spec.intensity, spec.window, seed, spec.cell_size);
  else
    env = sample_diluted_lattice(spec.intensity, spec.window, seed, spec.cell_size);
  if (spec.marks) env = sample_marks(env, MarkLaw{spec.gamma}, derive(seed, kMarkSalt));
  return env;
}

std::uint64_t env_seed(std::uint64_t seed, std::size_t e) { return derive(seed, 2 * e); }
std::uint64_t walk_base_seed(std::uint64_t seed, std::size_t e) { return derive(seed, 2 * e + 1); }

WalkStart walk_start(std::uint64_t walk_base, std::size_t r, std::size_t n) {
  Rng pick = Rng(walk_base).split(2 * r);
  return {static_cast<std::size_t>(pick.below(n)), derive(walk_base, 2 * r + 1)};
}

std::vector<double> geometric_grid(double t0, double ratio, double t_max) {
  if (!(t0 > 0.0) || !(ratio > 1.0)) throw std::invalid_argument("geometric_grid: need t0 > 0 and ratio > 1");
  std::vector<double> out;
  for (double t = t0; t <= t_max * (1.0 + 1e-12); t *= ratio) out.push_back(t);
  return out;
}

WalkEnsemble run_walk_ensemble(const EnvSpec& spec, const RateModel& model, const TruncationPolicy& trunc,
                               WalkMode mode, std::size_t envs, std::size_t per_env, const WalkConfig& cfg,
                               std::uint64_t seed, unsigned workers) {
  model.validate();
  trunc.validate();
  cfg.validate();
  struct Slot {
    std::vector<Trajectory> tr;
    std::uint64_t env_seed = 0;
    TruncationCertificate cert;
  };
  std::vector<Slot> slots(envs);
  parallel_for(envs, workers, [&](std::size_t e) {
    Slot& s = slots[e];
    s.env_seed = env_seed(seed, e);
    const MarkedPointSet env = make_env(spec, s.env_seed);
    if (env.size() == 0) throw std::runtime_error("empty environment");
    const JumpTable table(env, model, trunc);
    s.cert = table.certificate();
    const std::uint64_t walk_base = walk_base_seed(seed, e);
    for (std::size_t r = 0; r < per_env; ++r) {
      const WalkStart st = walk_start(walk_base, r, env.size());
      s.tr.push_back(mode == WalkMode::dtrw ? run_dtrw(st.x0, env, table, cfg, st.seed)
                                            : run_ctrw(st.x0, env, table, cfg, st.seed));
    }
  });
  WalkEnsemble out;
  out.paths.dim = spec.window.dim;
  for (Slot& s : slots) {
    out.env_seeds.push_back(s.env_seed);
    if (s.cert.bound >= out.worst_certificate.bound) out.worst_certificate = s.cert;
    for (const Trajectory& tr : s.tr) {
      out.seeds.push_back(tr.seed);
      if (tr.absorbed) {
        ++out.absorbed;
        continue;
      }
      out.paths.add(tr);
      out.jump_rate.push_back(tr.t_end > 0.0 ? static_cast<double>(tr.total_jumps) / tr.t_end : 0.0);
    }
  }
  return out;
}

stats::Estimate palm_w0(double density, int dim, const RateModel& model, const TruncationPolicy& trunc,
                        bool marks, std::size_t replicas, std::uint64_t seed, unsigned workers) {
  EnvSpec spec;
  spec.kind = ProcessKind::ppp;
  spec.intensity = density;
  spec.window = WindowSpec{dim, trunc.r_cut + 1.0, Boundary::free, 0.0};
  spec.marks = marks;
  spec.gamma = model.gamma;
  spec.palm = true;
  std::vector<double> w(replicas);
  parallel_for(replicas, workers, [&](std::size_t r) {
    const MarkedPointSet env = make_env(spec, derive(seed, r));
    w[r] = local_weight(0, env, model, trunc).w;
  });
  return stats::mean_se(w);
}

// ---------------------------------------------------------------------------

RestrictedStudy run_restricted_study(const EnvSpec& spec, const RateModel& model, const TruncationPolicy& trunc,
                                     const RestrictedPlan& plan, std::uint64_t seed, unsigned workers) {
  model.validate();
  trunc.validate();
  if (plan.t_grid.empty()) throw std::invalid_argument("restricted study needs a time grid");
  struct EnvData {
    MarkedPointSet env;
    JumpTable table;
    EnvironmentGeometry geom;
    std::vector<std::uint32_t> good;
    std::uint64_t walk_base = 0;
  };
  std::vector<EnvData> data(plan.envs);
  parallel_for(plan.envs, workers, [&](std::size_t e) {
    EnvData& d = data[e];
    d.env = make_env(spec, env_seed(seed, e));
    d.table = JumpTable(d.env, model, trunc);
    d.geom = build_geometry(d.env, plan.K, plan.t0, model.alpha);
    for (std::size_t i = 0; i < d.env.size(); ++i)
      if (d.geom.good_point[i]) d.good.push_back(static_cast<std::uint32_t>(i));
    d.walk_base = walk_base_seed(seed, e);
  });

  constexpr std::size_t kChunk = 1000;
  const std::size_t chunks_per_env = (plan.replicas_per_env + kChunk - 1) / kChunk;
  const std::size_t tasks = plan.envs * chunks_per_env;
  struct Part {
    ReturnTally tally;
    std::vector<std::uint64_t> hist;
    std::size_t truncated = 0;
  };
  std::vector<Part> parts(tasks);
  parallel_for(tasks, workers, [&](std::size_t task) {
    const std::size_t e = task / chunks_per_env;
    const std::size_t lo = (task % chunks_per_env) * kChunk;
    const std::size_t hi = std::min(plan.replicas_per_env, lo + kChunk);
    const EnvData& d = data[e];
    Part& part = parts[task];
    part.tally = ReturnTally(plan.t_grid);
    if (d.good.empty()) return;
    const int dim = d.env.window().dim;
    std::vector<std::uint32_t> idx(plan.t_grid.size());
    std::vector<Point> pos(plan.t_grid.size());
    for (std::size_t r = lo; r < hi; ++r) {
      Rng aux = Rng(d.walk_base).split(2 * r);
      const std::uint32_t x0 = d.good[aux.below(d.good.size())];
      RestrictedWalker walker(d.env, d.table, d.geom, x0, derive(d.walk_base, 2 * r + 1), plan.step_cap);
      std::uint64_t target = 0;
      double prev = 0.0;
      bool ok = true;
      for (std::size_t k = 0; k < plan.t_grid.size() && ok; ++k) {
        const double t = plan.t_grid[k];
        if (t > prev) target += sample_poisson(aux, t - prev);
        prev = t;
        while (walker.visits() < target) {
          const Excursion ex = walker.next();
          if (ex.truncated) {
            ok = false;
            break;
          }
          if (part.hist.size() <= ex.gamma) part.hist.resize(ex.gamma + 1, 0);
          ++part.hist[ex.gamma];
        }
        idx[k] = walker.current();
        pos[k] = walker.position();
      }
      if (!ok) {
        ++part.truncated;
        continue;
      }
      part.tally.add(idx, pos, x0, d.env.point(x0), dim);
    }
  });

  RestrictedStudy out;
  out.tally = ReturnTally(plan.t_grid);
  for (const Part& p : parts) {
    out.tally.merge(p.tally);
    if (out.gamma_hist.size() < p.hist.size()) out.gamma_hist.resize(p.hist.size(), 0);
    for (std::size_t k = 0; k < p.hist.size(); ++k) out.gamma_hist[k] += p.hist[k];
    out.truncated += p.truncated;
  }
  for (const EnvData& d : data) {
    out.good_fraction += d.env.size() ? static_cast<double>(d.geom.good_points) / d.env.size() : 0.0;
    out.white_fraction += d.geom.fields.white_fraction();
  }
  if (plan.envs > 0) {
    out.good_fraction /= static_cast<double>(plan.envs);
    out.white_fraction /= static_cast<double>(plan.envs);
  }

  // Excursion records with dbar tracking come from separate walkers, since
  // each tracked excursion costs a search over the whole box grid.
  if (plan.keep_excursions > 0) {
    const std::size_t per = (plan.keep_excursions + plan.envs - 1) / plan.envs;
    std::vector<std::vector<Excursion>> kept(plan.envs);
    parallel_for(plan.envs, workers, [&](std::size_t e) {
      const EnvData& d = data[e];
      if (d.good.empty()) return;
      Rng aux = Rng(d.walk_base).split(~std::uint64_t{0});
      const std::uint32_t x0 = d.good[aux.below(d.good.size())];
      RestrictedWalker walker(d.env, d.table, d.geom, x0, aux(), plan.step_cap, plan.track_dbar);
      for (std::size_t i = 0; i < per; ++i) {
        kept[e].push_back(walker.next());
        if (kept[e].back().truncated) break;
      }
    });
    for (auto& k : kept)
      for (const Excursion& ex : k)
        if (out.sample_excursions.size() < plan.keep_excursions) out.sample_excursions.push_back(ex);
  }
  return out;
}

// ---------------------------------------------------------------------------

MarkedPointSet restrict_window(const MarkedPointSet& env, double half_side) {
  const int dim = env.window().dim;
  WindowSpec w{dim, half_side, Boundary::free, 0.0};
  std::vector<Point> pts;
  std::vector<double> marks;
  bool origin = false;
  for (std::size_t i = 0; i < env.size(); ++i) {
    const Point& p = env.point(i);
    if (!w.contains(p)) continue;
    if (i == 0 && env.origin_pinned()) origin = true;
    pts.push_back(p);
    if (env.has_marks()) marks.push_back(env.mark(i));
  }
  return MarkedPointSet(w, std::move(pts), std::move(marks), origin, env.provenance(), env.index().cell_size());
}

std::vector<SublinearityRow> sublinearity_profile(const MarkedPointSet& env, const RateModel& model,
                                                  const TruncationPolicy& trunc, std::span<const double> ns,
                                                  const SolverOptions& opts) {
  std::vector<SublinearityRow> rows;
  for (double n : ns) {
    const MarkedPointSet sub = restrict_window(env, n);
    const JumpTable table(sub, model, trunc);
    const HarmonicField field = solve_harmonic(sub, table, trunc.r_cut, opts);
    rows.push_back(sublinearity(sub, field, n));
  }
  return rows;
}

VariationalStudy run_variational_study(const EnvSpec& spec, const RateModel& model, const TruncationPolicy& trunc,
                                       std::size_t envs, double central_half_side, const SolverOptions& opts,
                                       std::uint64_t seed, unsigned workers) {
  if (spec.window.boundary != Boundary::free) throw std::invalid_argument("variational study needs a free window");
  EnvSpec palm = spec;
  palm.palm = true;
  struct Slot {
    VariationalSample sample;
    std::size_t iterations = 0, pinned = 0;
    double residual = 0.0;
  };
  std::vector<Slot> slots(envs);
  parallel_for(envs, workers, [&](std::size_t e) {
    const MarkedPointSet env = make_env(palm, env_seed(seed, e));
    const JumpTable table(env, model, trunc);
    const HarmonicField field = solve_harmonic(env, table, trunc.r_cut, opts);
    slots[e] = {variational_sample(env, table, field, central_half_side), field.iterations, field.pinned_count,
                field.residual};
  });
  VariationalStudy out;
  for (const Slot& s : slots) {
    out.samples.push_back(s.sample);
    out.max_iterations = std::max(out.max_iterations, s.iterations);
    out.worst_residual = std::max(out.worst_residual, s.residual);
    out.pinned += s.pinned;
  }
  out.result = variational_d(out.samples, spec.window.dim);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<MottRow> mott_scan(const EnvSpec& spec, const RateModel& base, const TruncationPolicy& trunc,
                               std::span<const double> betas, std::size_t envs, std::size_t per_env,
                               const WalkConfig& cfg, std::size_t lag, std::uint64_t seed, unsigned workers) {
  if (!spec.marks) throw std::invalid_argument("mott scan needs marked environments");
  std::vector<MottRow> rows;
  // per_env_diag[b][e]: mean over the trajectories of environment e of the averaged diagonal.
  std::vector<std::vector<double>> per_env_diag;
  for (double beta : betas) {
    RateModel model = base;
    model.beta = beta;
    model.validate();
    const WalkEnsemble ens = run_walk_ensemble(spec, model, trunc, WalkMode::ctrw, envs, per_env, cfg, seed, workers);
    if (ens.absorbed > 0) throw std::runtime_error("mott scan requires a wrapping boundary");
    MottRow row;
    row.beta = beta;
    row.d = diffusion_matrix(ens.paths, lag);
    std::vector<double> diag(envs, 0.0);
    for (std::size_t e = 0; e < envs; ++e) {
      PathSet one;
      one.dim = ens.paths.dim;
      one.times = ens.paths.times;
      for (std::size_t r = 0; r < per_env; ++r) one.paths.push_back(ens.paths.paths[e * per_env + r]);
      diag[e] = mean_diag(diffusion_matrix(one, lag));
    }
    row.mean_diag = stats::mean_se(diag);
    per_env_diag.push_back(std::move(diag));
    rows.push_back(row);
  }
  for (std::size_t b = 0; b + 1 < rows.size(); ++b) {
    std::vector<double> diff(envs);
    for (std::size_t e = 0; e < envs; ++e) diff[e] = per_env_diag[b][e] - per_env_diag[b + 1][e];
    rows[b].drop_to_next = stats::mean_se(diff);
  }
  return rows;
}

}  // namespace vrh
