#include "vrh/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "vrh/corrector.hpp"
#include "vrh/estimators.hpp"
#include "vrh/experiments.hpp"
#include "vrh/parallel.hpp"
#include "vrh/simd.hpp"
#include "vrh/walk.hpp"

namespace vrh {

using nlohmann::json;

std::string to_string(Profile p) { return p == Profile::quick ? "quick" : "full"; }

Profile profile_from_string(const std::string& s) {
  if (s == "quick") return Profile::quick;
  if (s == "full") return Profile::full;
  throw std::invalid_argument("unknown profile '" + s + "' (expected quick|full)");
}

bool AcceptanceReport::all_pass() const {
  return std::all_of(results.begin(), results.end(), [](const CriterionResult& r) { return r.informational || r.pass; });
}

json AcceptanceReport::to_json() const {
  json j;
  j["profile"] = vrh::to_string(profile);
  j["seed"] = seed;
  j["seconds"] = seconds;
  j["kernels"] = std::string(simd::isa_name(simd::active().isa));
  j["pass"] = all_pass();
  json rows = json::array();
  for (const auto& r : results) {
    json s = json::array();
    for (const auto& [label, v] : r.seeds) s.push_back({{"label", label}, {"seed", v}});
    rows.push_back({{"id", r.id},
                    {"name", r.name},
                    {"pass", r.pass},
                    {"informational", r.informational},
                    {"seconds", r.seconds},
                    {"measured", r.measured},
                    {"seeds", s}});
  }
  j["criteria"] = rows;
  return j;
}

namespace {

constexpr double kZ95 = 1.959963984540054;
constexpr double kZ95OneSided = 1.6448536269514722;

std::uint64_t derive(std::uint64_t seed, std::uint64_t k) { return Rng(seed).split(k)(); }

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

json estimate_json(const stats::Estimate& e) { return {{"value", e.value}, {"se", e.std_error}}; }

json matrix_json(const DiffusionEstimate& d) {
  json v = json::array(), s = json::array();
  for (int i = 0; i < d.dim; ++i) {
    json rv = json::array(), rs = json::array();
    for (int j = 0; j < d.dim; ++j) {
      rv.push_back(d.at(i, j));
      rs.push_back(d.se(i, j));
    }
    v.push_back(rv);
    s.push_back(rs);
  }
  return {{"value", v}, {"se", s}, {"samples", d.samples}, {"method", d.method}};
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Budgets. The full profile uses the sizes stated with each criterion; the
// quick profile is a smoke run of the same code paths.
struct Budget {
  std::size_t einstein_envs, einstein_per_env;
  std::uint64_t einstein_steps;
  std::size_t palm_replicas;
  std::size_t lattice_traj;
  std::uint64_t lattice_steps;
  std::size_t var_envs;
  double var_half_side, var_central;
  std::size_t sub_envs;
  std::size_t lattice_replicas, ppp_envs, ppp_replicas_per_env;
  std::size_t lln_envs;
  double lln_t;
  std::size_t mott_envs, mott_per_env;
  double mott_t;
  std::size_t chi2_samples, omega_walkers, campbell_replicas;
};

Budget budget_for(Profile p) {
  if (p == Profile::full)
    return {100, 20, 100000, 20000, 1000, 10000, 8, 64.0, 32.0, 20, 100000, 10, 10000, 20, 1e5, 20, 10, 2000.0,
            1000000, 1000000, 10000};
  return {20, 10, 20000, 4000, 200, 5000, 2, 40.0, 16.0, 5, 20000, 4, 5000, 5, 2e4, 8, 5, 1000.0, 200000, 200000,
          2000};
}

constexpr int kDim = 2;
constexpr double kAlpha = 1.0;
constexpr double kHalfSide = 64.0;
// Geometry used by the good-set criteria; see the notes in the README.
constexpr double kK = 2.0;
constexpr double kT0 = 12.0;

EnvSpec ppp_torus(double half_side = kHalfSide) {
  EnvSpec s;
  s.kind = ProcessKind::ppp;
  s.intensity = 1.0;
  s.window = WindowSpec{kDim, half_side, Boundary::torus, 0.0};
  return s;
}

EnvSpec lattice(double half_side, Boundary b) {
  EnvSpec s;
  s.kind = ProcessKind::diluted;
  s.intensity = 1.0;
  s.window = WindowSpec{kDim, half_side, b, 0.5};
  return s;
}

struct Context {
  AcceptanceOptions opts;
  Budget budget;
  RateModel model{kAlpha, 0.0, 0.0};
  TruncationPolicy trunc{8.0, 1e-2};

  // Shared between criteria and computed on first use.
  std::optional<stats::Estimate> ew0;
  std::optional<WalkEnsemble> dtrw;
  std::optional<RestrictedStudy> restricted_lattice, restricted_ppp;

  std::uint64_t seed_for(std::uint64_t id) const { return derive(opts.seed, id); }

  const stats::Estimate& palm_ew0() {
    if (!ew0) ew0 = palm_w0(1.0, kDim, model, trunc, false, budget.palm_replicas, seed_for(100), opts.workers);
    return *ew0;
  }

  WalkConfig dtrw_config() const {
    WalkConfig c;
    c.steps = budget.einstein_steps;
    c.record_every = budget.einstein_steps / 100;
    return c;
  }

  const WalkEnsemble& dtrw_ensemble() {
    if (!dtrw)
      dtrw = run_walk_ensemble(ppp_torus(), model, trunc, WalkMode::dtrw, budget.einstein_envs,
                               budget.einstein_per_env, dtrw_config(), seed_for(101), opts.workers);
    return *dtrw;
  }

  std::vector<double> restricted_grid() const { return geometric_grid(1.0, 1.5, 512.0); }

  const RestrictedStudy& lattice_study() {
    if (!restricted_lattice) {
      RestrictedPlan plan;
      plan.K = 3.0;  // 129 sites per side on the torus
      plan.t0 = kT0;
      plan.envs = 1;
      plan.replicas_per_env = budget.lattice_replicas;
      plan.t_grid = restricted_grid();
      restricted_lattice = run_restricted_study(lattice(kHalfSide, Boundary::torus), model, trunc, plan,
                                                seed_for(106), opts.workers);
    }
    return *restricted_lattice;
  }

  const RestrictedStudy& ppp_study() {
    if (!restricted_ppp) {
      RestrictedPlan plan;
      plan.K = kK;
      plan.t0 = kT0;
      plan.envs = budget.ppp_envs;
      plan.replicas_per_env = budget.ppp_replicas_per_env;
      plan.t_grid = restricted_grid();
      restricted_ppp = run_restricted_study(ppp_torus(), model, trunc, plan, seed_for(107), opts.workers);
    }
    return *restricted_ppp;
  }
};

// ---------------------------------------------------------------------------

CriterionResult c1_einstein(Context& ctx) {
  CriterionResult r{"C1", "Einstein relation D_CTRW = E0 w(0) D_DTRW"};
  const stats::Estimate& ew0 = ctx.palm_ew0();
  const WalkEnsemble& dt = ctx.dtrw_ensemble();
  WalkConfig cc;
  cc.t_max = static_cast<double>(ctx.budget.einstein_steps) / ew0.value;
  cc.record_dt = cc.t_max / 100.0;
  const WalkEnsemble ct = run_walk_ensemble(ppp_torus(), ctx.model, ctx.trunc, WalkMode::ctrw, ctx.budget.einstein_envs,
                                            ctx.budget.einstein_per_env, cc, ctx.seed_for(102), ctx.opts.workers);
  const DiffusionEstimate d_dt = diffusion_matrix(dt.paths, 10);
  const DiffusionEstimate d_ct = diffusion_matrix(ct.paths, 10);
  const auto entries = einstein_check(d_ct, d_dt, ew0);
  r.pass = true;
  int diag = 0;
  json rows = json::array();
  for (const auto& e : entries) {
    rows.push_back({{"i", e.i}, {"j", e.j}, {"ratio", e.ratio}, {"se", e.std_error}, {"ci", {e.ci.lo, e.ci.hi}},
                    {"rel_half_width", e.rel_half_width}});
    if (e.i != e.j) continue;
    ++diag;
    r.pass = r.pass && e.contains_one && e.rel_half_width <= 0.10;
  }
  r.pass = r.pass && diag == kDim;
  r.measured = {{"ew0", estimate_json(ew0)},
                {"trajectories_per_mode", dt.paths.paths.size()},
                {"dtrw_steps", ctx.budget.einstein_steps},
                {"ctrw_t_max", cc.t_max},
                {"d_dtrw", matrix_json(d_dt)},
                {"d_ctrw", matrix_json(d_ct)},
                {"entries", rows},
                {"truncation_bound", std::max(dt.worst_certificate.bound, ct.worst_certificate.bound)}};
  r.seeds = {{"palm", ctx.seed_for(100)}, {"dtrw", ctx.seed_for(101)}, {"ctrw", ctx.seed_for(102)}};
  return r;
}

CriterionResult c2_msd(Context& ctx) {
  CriterionResult r{"C2", "Diffusive MSD and positive D"};
  const WalkEnsemble& dt = ctx.dtrw_ensemble();
  const MsdCurve curve = msd(dt.paths, FitWindow{0.2});
  const DiffusionEstimate d = diffusion_matrix(dt.paths, 10);
  bool positive = true;
  json diag = json::array();
  for (int a = 0; a < kDim; ++a) {
    const double lo = d.at(a, a) - kZ95 * d.se(a, a);
    positive = positive && lo > 0.0;
    diag.push_back({{"value", d.at(a, a)}, {"ci_lo", lo}, {"ci_hi", d.at(a, a) + kZ95 * d.se(a, a)}});
  }
  r.pass = curve.fit.r2 >= 0.99 && positive;
  r.measured = {{"r2", curve.fit.r2}, {"slope", curve.fit.slope}, {"fit_from_step", curve.time[curve.fit_from]},
                {"diag", diag}, {"trajectories", dt.paths.paths.size()}};
  r.seeds = {{"dtrw", ctx.seed_for(101)}};
  return r;
}

CriterionResult c3_variational(Context& ctx) {
  CriterionResult r{"C3", "Variational vs Monte Carlo D_DTRW"};
  const Budget& b = ctx.budget;
  SolverOptions so;
  // Full lattice: the corrector vanishes, so one Palm window gives the exact value.
  const VariationalStudy lat_var =
      run_variational_study(lattice(32.0, Boundary::free), ctx.model, ctx.trunc, 1, -1.0, so, ctx.seed_for(103), 1);
  WalkConfig lc;
  lc.steps = b.lattice_steps;
  lc.record_every = b.lattice_steps / 10;
  const WalkEnsemble lat_mc = run_walk_ensemble(lattice(kHalfSide, Boundary::torus), ctx.model, ctx.trunc,
                                                WalkMode::dtrw, 1, b.lattice_traj, lc, ctx.seed_for(104), ctx.opts.workers);
  const DiffusionEstimate lat_d = diffusion_matrix(lat_mc.paths, 1);
  bool lattice_ok = true;
  json lat_rows = json::array();
  for (int a = 0; a < kDim; ++a) {
    const double v = lat_var.result.dtrw.at(a, a), m = lat_d.at(a, a);
    const double sig = std::hypot(lat_var.result.dtrw.se(a, a), lat_d.se(a, a));
    const double rel = std::fabs(m - v) / v;
    const bool ok = std::fabs(m - v) <= 3.0 * sig && rel <= 0.05;
    lattice_ok = lattice_ok && ok;
    lat_rows.push_back({{"variational", v}, {"mc", m}, {"mc_se", lat_d.se(a, a)}, {"rel", rel}, {"ok", ok}});
  }
  // PPP: Dirichlet solves on Palm windows against the Monte Carlo of C1.
  EnvSpec pspec;
  pspec.window = WindowSpec{kDim, b.var_half_side, Boundary::free, 0.0};
  const VariationalStudy ppp_var =
      run_variational_study(pspec, ctx.model, ctx.trunc, b.var_envs, b.var_central, so, ctx.seed_for(105), ctx.opts.workers);
  const DiffusionEstimate ppp_mc = diffusion_matrix(ctx.dtrw_ensemble().paths, 10);
  bool ppp_ok = true;
  json ppp_rows = json::array();
  for (int a = 0; a < kDim; ++a) {
    const double v = ppp_var.result.dtrw.at(a, a), m = ppp_mc.at(a, a);
    const double rel = std::fabs(m - v) / m;
    ppp_ok = ppp_ok && rel <= 0.15;
    ppp_rows.push_back({{"variational", v}, {"variational_se", ppp_var.result.dtrw.se(a, a)}, {"mc", m},
                        {"mc_se", ppp_mc.se(a, a)}, {"rel", rel}});
  }
  r.pass = lattice_ok && ppp_ok;
  r.measured = {{"lattice", lat_rows},
                {"ppp", ppp_rows},
                {"ppp_envs", b.var_envs},
                {"ppp_window_half_side", b.var_half_side},
                {"ppp_solver_worst_residual", ppp_var.worst_residual},
                {"ppp_solver_max_iterations", ppp_var.max_iterations},
                {"ppp_pinned_points", ppp_var.pinned}};
  r.seeds = {{"lattice_var", ctx.seed_for(103)}, {"lattice_mc", ctx.seed_for(104)},
             {"ppp_var", ctx.seed_for(105)}, {"ppp_mc", ctx.seed_for(101)}};
  return r;
}

CriterionResult c4_lattice_corrector(Context& ctx) {
  CriterionResult r{"C4", "Full-lattice corrector vanishes"};
  const EnvSpec spec = lattice(32.0, Boundary::free);
  const MarkedPointSet env = make_env(spec, ctx.seed_for(108));
  const TruncationPolicy tp{6.0, ctx.trunc.budget};
  const JumpTable table(env, ctx.model, tp);
  const HarmonicField f = solve_harmonic(env, table, tp.r_cut, SolverOptions{});
  double worst = 0.0;
  for (std::size_t i = 0; i < env.size(); ++i) {
    const Point c = f.chi(env, i);
    for (int a = 0; a < kDim; ++a) worst = std::max(worst, std::fabs(c[a]));
  }
  r.pass = worst <= 1e-8 && f.converged;
  r.measured = {{"max_abs_chi", worst}, {"residual", f.residual}, {"interior", f.interior_count}};
  r.seeds = {{"lattice", ctx.seed_for(108)}};
  return r;
}

CriterionResult c5_sublinearity(Context& ctx) {
  CriterionResult r{"C5", "Corrector sublinearity s(64) <= 0.7 s(8)"};
  const std::vector<double> ns{8, 16, 32, 64};
  // The interior margin equals the cutoff, so n = 8 needs r_cut < 8.
  const TruncationPolicy tp{4.0, ctx.trunc.budget};
  EnvSpec spec;
  spec.window = WindowSpec{kDim, 64.0, Boundary::free, 0.0};
  const std::size_t envs = ctx.budget.sub_envs;
  std::vector<std::vector<SublinearityRow>> rows(envs);
  const std::uint64_t seed = ctx.seed_for(109);
  parallel_for(envs, ctx.opts.workers, [&](std::size_t e) {
    rows[e] = sublinearity_profile(make_env(spec, derive(seed, e)), ctx.model, tp, ns, SolverOptions{});
  });
  json med = json::object();
  std::vector<double> medians;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    std::vector<double> s;
    for (const auto& row : rows) s.push_back(row[k].s);
    medians.push_back(median(s));
    med[std::to_string(static_cast<int>(ns[k]))] = medians.back();
  }
  r.pass = medians.back() <= 0.7 * medians.front();
  r.measured = {{"median_s", med}, {"ratio", medians.back() / medians.front()}, {"envs", envs}, {"r_cut", tp.r_cut}};
  r.seeds = {{"envs", seed}};
  return r;
}

json restricted_json(const RestrictedStudy& s, const HeatKernelCurve& hk, const DistanceRatioCurve& dr) {
  return {{"replicas", s.tally.replicas},
          {"slope", hk.fit.slope},
          {"slope_se", hk.fit.slope_se},
          {"fit_range", {hk.fit_lo, hk.fit_hi}},
          {"fit_points", hk.fit_points},
          {"flatness", dr.variation},
          {"flat_range", {dr.flat_lo, dr.flat_hi}},
          {"truncated", s.truncated},
          {"good_fraction", s.good_fraction},
          {"white_fraction", s.white_fraction}};
}

CriterionResult c6_heat_kernel(Context& ctx) {
  CriterionResult r{"C6", "Restricted-walk return probability decays like 1/t"};
  const RestrictedStudy& lat = ctx.lattice_study();
  const RestrictedStudy& ppp = ctx.ppp_study();
  const HeatKernelCurve hl = heat_kernel_return(lat.tally), hp = heat_kernel_return(ppp.tally);
  const bool lat_ok = hl.fit_points >= 2 && hl.fit.slope >= -1.2 && hl.fit.slope <= -0.8;
  const bool ppp_ok = hp.fit_points >= 2 && hp.fit.slope <= -0.8;
  r.pass = lat_ok && ppp_ok;
  r.measured = {{"lattice", restricted_json(lat, hl, distance_ratio(lat.tally))},
                {"ppp", restricted_json(ppp, hp, distance_ratio(ppp.tally))},
                {"K", kK},
                {"T0", kT0}};
  r.seeds = {{"lattice", ctx.seed_for(106)}, {"ppp", ctx.seed_for(107)}};
  return r;
}

CriterionResult c7_distance(Context& ctx) {
  CriterionResult r{"C7", "E|Y_t - x| / sqrt(t) flat over the top decade"};
  const DistanceRatioCurve dl = distance_ratio(ctx.lattice_study().tally);
  const DistanceRatioCurve dp = distance_ratio(ctx.ppp_study().tally);
  r.pass = dl.variation <= 0.25 && dp.variation <= 0.25;
  auto curve = [](const DistanceRatioCurve& c) {
    json j = json::array();
    for (std::size_t k = 0; k < c.time.size(); ++k) j.push_back({c.time[k], c.ratio[k]});
    return j;
  };
  r.measured = {{"lattice_variation", dl.variation}, {"ppp_variation", dp.variation},
                {"range", {dp.flat_lo, dp.flat_hi}}, {"lattice_curve", curve(dl)}, {"ppp_curve", curve(dp)}};
  r.seeds = {{"lattice", ctx.seed_for(106)}, {"ppp", ctx.seed_for(107)}};
  return r;
}

CriterionResult c8_gamma(Context& ctx) {
  CriterionResult r{"C8", "Geometric tail of Gamma"};
  const RestrictedStudy& s = ctx.ppp_study();
  const GeometricFit g = geometric_tail_fit_histogram(s.gamma_hist, 100);
  // A two-point fit has R^2 = 1 by construction, so at least three k are required.
  r.pass = g.k.size() >= 3 && g.tail.r2 >= 0.95 && g.tail.slope < 0.0;
  json tail = json::array();
  for (std::size_t i = 0; i < g.k.size(); ++i) tail.push_back({g.k[i], g.at_least[i]});

  // Gamma >= 2 needs a jump between two hole classes inside one excursion.
  // Report how much one-step probability such jumps carry in the first environment.
  const MarkedPointSet env = make_env(ppp_torus(), env_seed(ctx.seed_for(107), 0));
  const EnvironmentGeometry geom = build_geometry(env, kK, kT0, kAlpha);
  const JumpTable table(env, ctx.model, ctx.trunc);
  std::set<std::int32_t> classes;
  double cross = 0.0;
  for (std::size_t x = 0; x < env.size(); ++x) {
    if (geom.good_point[x]) continue;
    const std::int32_t cx = geom.hole_class_of_point(x);
    classes.insert(cx);
    const auto nb = table.neighbours(x);
    const auto c = table.neighbour_conductances(x);
    double p = 0.0;
    for (std::size_t k = 0; k < nb.size(); ++k)
      if (!geom.good_point[nb[k]] && geom.hole_class_of_point(nb[k]) != cx) p += c[k] / table.weight(x);
    cross = std::max(cross, p);
  }
  r.measured = {{"excursions", g.samples},
                {"delta_mle", g.delta},
                {"delta_se", g.delta_se},
                {"slope", g.tail.slope},
                {"r2", g.tail.r2},
                {"tail", tail},
                {"env0_hole_classes_with_points", classes.size()},
                {"env0_max_cross_class_probability", cross}};
  r.seeds = {{"ppp", ctx.seed_for(107)}};
  return r;
}

CriterionResult c9_jump_rate(Context& ctx) {
  CriterionResult r{"C9", "CTRW jump rate n*(t)/t -> E0 w(0)"};
  const stats::Estimate& ew0 = ctx.palm_ew0();
  WalkConfig cfg;
  cfg.t_max = ctx.budget.lln_t;
  cfg.record_dt = cfg.t_max / 100.0;
  const WalkEnsemble ens = run_walk_ensemble(ppp_torus(), ctx.model, ctx.trunc, WalkMode::ctrw, ctx.budget.lln_envs,
                                             1, cfg, ctx.seed_for(110), ctx.opts.workers);
  const stats::Estimate rate = stats::mean_se(ens.jump_rate);
  const double sig = std::hypot(rate.std_error, ew0.std_error);
  r.pass = std::fabs(rate.value - ew0.value) <= 3.0 * sig;
  r.measured = {{"jump_rate", estimate_json(rate)}, {"ew0", estimate_json(ew0)},
                {"z", (rate.value - ew0.value) / sig}, {"t", cfg.t_max}, {"envs", ctx.budget.lln_envs}};
  r.seeds = {{"ctrw", ctx.seed_for(110)}, {"palm", ctx.seed_for(100)}};
  return r;
}

CriterionResult c10_white_weight(Context& ctx) {
  CriterionResult r{"C10", "Max weight over white points stable in L"};
  const std::vector<double> Ls{16, 32, 64};
  std::vector<double> maxima(Ls.size());
  json rows = json::array();
  for (std::size_t k = 0; k < Ls.size(); ++k) {
    const MarkedPointSet env = make_env(ppp_torus(Ls[k]), derive(ctx.seed_for(111), k));
    const JumpTable table(env, ctx.model, ctx.trunc);
    const BoxFields f = box_fields(env, kK, kT0, kAlpha);
    const WhiteWeightAudit a = white_weight_audit(env, f, table.weights());
    maxima[k] = a.max_w;
    rows.push_back({{"L", Ls[k]}, {"max_w", a.max_w}, {"mean_w", a.mean_w}, {"q99", a.q99}, {"white_points", a.points}});
  }
  r.pass = true;
  json ratios = json::array();
  for (std::size_t k = 1; k < Ls.size(); ++k) {
    const double q = maxima[k] / maxima[k - 1];
    ratios.push_back(q);
    r.pass = r.pass && q >= 0.8 && q <= 1.25 && maxima[k - 1] > 0.0;
  }
  r.measured = {{"windows", rows}, {"ratios", ratios}};
  r.seeds = {{"envs", ctx.seed_for(111)}};
  return r;
}

CriterionResult c11_micro(Context& ctx) {
  CriterionResult r{"C11", "Exact micro-oracles"};
  const std::uint64_t seed = ctx.seed_for(112);
  json m;
  bool ok = true;

  // Detailed balance and normalization on a marked PPP window.
  {
    EnvSpec s;
    s.window = WindowSpec{kDim, 10.0, Boundary::free, 0.0};
    s.marks = true;
    const MarkedPointSet env = make_env(s, derive(seed, 0));
    const RateModel mm{kAlpha, 1.0, 0.0};
    double norm_err = 0.0, db_err = 0.0;
    std::vector<Transition> t(env.size());
    for (std::size_t x = 0; x < env.size(); ++x) {
      t[x] = transition_probs(x, env, mm, ctx.trunc);
      norm_err = std::max(norm_err, std::fabs(std::accumulate(t[x].probs.begin(), t[x].probs.end(), 0.0) - 1.0));
    }
    for (std::size_t x = 0; x < env.size(); ++x)
      for (std::size_t k = 0; k < t[x].targets.size(); ++k) {
        const std::uint32_t y = t[x].targets[k];
        const auto& ty = t[y];
        const auto it = std::find(ty.targets.begin(), ty.targets.end(), static_cast<std::uint32_t>(x));
        const double back = it == ty.targets.end() ? 0.0 : ty.probs[static_cast<std::size_t>(it - ty.targets.begin())];
        const double lhs = t[x].w * t[x].probs[k], rhs = ty.w * back;
        db_err = std::max(db_err, std::fabs(lhs - rhs) / std::max(lhs, rhs));
      }
    const bool pass = norm_err <= 1e-12 && db_err <= 1e-12;
    ok = ok && pass;
    m["normalization_error"] = norm_err;
    m["detailed_balance_rel_error"] = db_err;
  }

  // Alias sampler against exact enumeration on five ten-point configurations.
  {
    json rows = json::array();
    for (std::uint64_t c = 0; c < 5; ++c) {
      Rng g(derive(seed, 10 + c));
      std::vector<Point> pts;
      std::vector<double> marks;
      for (int i = 0; i < 10; ++i) {
        pts.push_back({-3.0 + 6.0 * g.uniform(), -3.0 + 6.0 * g.uniform(), 0.0});
        marks.push_back(2.0 * g.uniform() - 1.0);
      }
      const MarkedPointSet env(WindowSpec{kDim, 3.0, Boundary::free, 0.0}, pts, marks, false);
      const RateModel mm{kAlpha, 0.5, 0.0};
      const JumpTable table(env, mm, ctx.trunc);
      const Transition tr = transition_probs(0, env, mm, ctx.trunc);
      std::vector<std::uint64_t> obs(env.size(), 0);
      Rng walk(derive(seed, 20 + c));
      for (std::size_t n = 0; n < ctx.budget.chi2_samples; ++n) ++obs[table.sample(0, walk)];
      std::vector<double> probs(env.size(), 0.0);
      for (std::size_t k = 0; k < tr.targets.size(); ++k) probs[tr.targets[k]] = tr.probs[k];
      const stats::Chi2Result chi = stats::chi2_gof(obs, probs);
      ok = ok && chi.p_value >= 0.01;
      rows.push_back({{"statistic", chi.statistic}, {"dof", chi.dof}, {"p", chi.p_value}});
    }
    m["alias_chi2"] = rows;
  }

  // Restricted-walk transition matrix against the absorbing-chain solve.
  {
    const MarkedPointSet env = omega_fixture();
    const TruncationPolicy tp{8.0, ctx.trunc.budget};
    const JumpTable table(env, ctx.model, tp);
    const EnvironmentGeometry geom = build_geometry(env, 1.0, 100.0, kAlpha);
    std::vector<std::uint32_t> good;
    const auto omega = restricted_transition_matrix(env, ctx.model, tp, geom, good);
    double rev = 0.0;
    for (std::size_t a = 0; a < good.size(); ++a)
      for (std::size_t b = 0; b < good.size(); ++b) {
        const double lhs = table.weight(good[a]) * omega[a][b], rhs = table.weight(good[b]) * omega[b][a];
        rev = std::max(rev, std::fabs(lhs - rhs));
      }
    const std::size_t start = 0;  // first good point
    const std::size_t n = ctx.budget.omega_walkers;
    std::vector<std::uint64_t> hits(env.size(), 0);
    const std::uint64_t wseed = derive(seed, 30);
    for (std::size_t i = 0; i < n; ++i) {
      RestrictedWalker w(env, table, geom, good[start], derive(wseed, i));
      w.next();
      ++hits[w.current()];
    }
    // Entries with n p >= 5 are checked individually; the rest are pooled.
    double worst_z = 0.0;
    double pooled_p = 0.0;
    std::uint64_t pooled_hits = 0;
    bool pass = true;
    for (std::size_t b = 0; b < good.size(); ++b) {
      const double p = omega[start][b];
      if (p * static_cast<double>(n) < 5.0) {
        pooled_p += p;
        pooled_hits += hits[good[b]];
        continue;
      }
      const double sd = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
      const double z = std::fabs(static_cast<double>(hits[good[b]]) / static_cast<double>(n) - p) / sd;
      worst_z = std::max(worst_z, z);
      pass = pass && z <= 3.0;
    }
    if (pooled_p > 0.0) {
      const double sd = std::sqrt(pooled_p * (1.0 - pooled_p) / static_cast<double>(n));
      const double z = std::fabs(static_cast<double>(pooled_hits) / static_cast<double>(n) - pooled_p) / sd;
      worst_z = std::max(worst_z, z);
      pass = pass && z <= 3.0;
    }
    std::uint64_t outside = 0;
    for (std::size_t i = 0; i < env.size(); ++i)
      if (!geom.good_point[i]) outside += hits[i];
    pass = pass && outside == 0 && rev <= 1e-9;
    ok = ok && pass;
    m["omega"] = {{"good_points", good.size()}, {"walkers", n}, {"worst_z", worst_z}, {"reversibility_error", rev},
                  {"pass", pass}};
  }

  // Poisson tail inequalities.
  {
    bool pass = true;
    std::size_t rows = 0;
    for (double lambda : {0.5, 1.0, 2.0, 5.0}) {
      std::vector<double> ts;
      for (double f : {1.0, 1.5, 2.0, 3.0}) ts.push_back(std::exp(2.0) * lambda * f);
      const double lam[] = {lambda};
      for (const auto& row : poisson_tail_check(lam, ts)) {
        pass = pass && row.ok;
        ++rows;
      }
    }
    ok = ok && pass;
    m["poisson_tail"] = {{"rows", rows}, {"pass", pass}};
  }

  // Campbell identity for each built-in functional.
  {
    json rows = json::array();
    int k = 0;
    for (auto f : {CampbellFunctional::exp_decay, CampbellFunctional::exp_decay_ball,
                   CampbellFunctional::exp_decay_isolated}) {
      const CampbellResult c = campbell_check(f, 1.0, kDim, ctx.budget.campbell_replicas, derive(seed, 40 + k++));
      ok = ok && c.consistent;
      rows.push_back({{"left", c.left}, {"left_se", c.left_se}, {"right", c.right}, {"right_se", c.right_se},
                      {"exact", std::isnan(c.exact) ? json(nullptr) : json(c.exact)}, {"consistent", c.consistent}});
    }
    m["campbell"] = rows;
  }
  r.pass = ok;
  r.measured = m;
  r.seeds = {{"micro", seed}};
  return r;
}

CriterionResult c12_mott(Context& ctx) {
  CriterionResult r{"C12", "Mott scan: D decreasing in beta"};
  EnvSpec spec = ppp_torus();
  spec.marks = true;
  spec.gamma = 0.0;
  WalkConfig cfg;
  cfg.t_max = ctx.budget.mott_t;
  cfg.record_dt = cfg.t_max / 100.0;
  const std::vector<double> betas{0, 1, 2, 4};
  const auto rows = mott_scan(spec, ctx.model, ctx.trunc, betas, ctx.budget.mott_envs, ctx.budget.mott_per_env, cfg, 10,
                              ctx.seed_for(113), ctx.opts.workers);
  r.pass = true;
  json out = json::array();
  for (std::size_t b = 0; b < rows.size(); ++b) {
    json row = {{"beta", rows[b].beta}, {"mean_diag", estimate_json(rows[b].mean_diag)}};
    if (b + 1 < rows.size()) {
      const double lo = rows[b].drop_to_next.value - kZ95OneSided * rows[b].drop_to_next.std_error;
      row["drop_to_next"] = estimate_json(rows[b].drop_to_next);
      row["drop_lower_95"] = lo;
      r.pass = r.pass && lo > 0.0;
    }
    out.push_back(row);
  }
  r.measured = {{"rows", out}, {"t_max", cfg.t_max}, {"envs", ctx.budget.mott_envs}, {"per_env", ctx.budget.mott_per_env}};
  r.seeds = {{"scan", ctx.seed_for(113)}};
  return r;
}

CriterionResult i1_white_fraction(Context& ctx) {
  CriterionResult r{"I1", "White fraction at K=4, T0=20 (informational)"};
  r.informational = true;
  r.pass = true;
  const MarkedPointSet env = make_env(ppp_torus(), ctx.seed_for(114));
  const BoxFields f4 = box_fields(env, 4.0, 20.0, kAlpha);
  const BoxFields f2 = box_fields(env, kK, kT0, kAlpha);
  r.measured = {{"white_fraction_K4_T20", f4.white_fraction()}, {"white_fraction_K2_T12", f2.white_fraction()}};
  r.seeds = {{"env", ctx.seed_for(114)}};
  return r;
}

}  // namespace

std::string summary_line(const CriterionResult& r) {
  std::ostringstream s;
  s << (r.informational ? "INFO" : r.pass ? "PASS" : "FAIL") << ' ' << r.id << ' ' << r.name << " | ";
  const json& m = r.measured;
  auto get = [&](const json& j, const char* key) { return j.contains(key) ? j.at(key) : json(); };
  if (m.is_object() && m.contains("error")) {
    s << "error: " << m["error"].get<std::string>();
  } else if (r.id == "C1") {
    for (const auto& e : m["entries"])
      if (e["i"] == e["j"])
        s << "R" << e["i"].get<int>() << e["j"].get<int>() << "=" << fmt(e["ratio"].get<double>()) << " ["
          << fmt(e["ci"][0].get<double>()) << "," << fmt(e["ci"][1].get<double>()) << "] hw="
          << fmt(e["rel_half_width"].get<double>(), 3) << "  ";
  } else if (r.id == "C2") {
    s << "R2=" << fmt(m["r2"].get<double>(), 6) << " D11=" << fmt(m["diag"][0]["value"].get<double>())
      << " D22=" << fmt(m["diag"][1]["value"].get<double>());
  } else if (r.id == "C3") {
    s << "lattice rel=" << fmt(m["lattice"][0]["rel"].get<double>(), 3) << "," << fmt(m["lattice"][1]["rel"].get<double>(), 3)
      << " ppp rel=" << fmt(m["ppp"][0]["rel"].get<double>(), 3) << "," << fmt(m["ppp"][1]["rel"].get<double>(), 3);
  } else if (r.id == "C4") {
    s << "max|chi|=" << fmt(m["max_abs_chi"].get<double>(), 3);
  } else if (r.id == "C5") {
    s << "s(8)=" << fmt(m["median_s"]["8"].get<double>()) << " s(64)=" << fmt(m["median_s"]["64"].get<double>())
      << " ratio=" << fmt(m["ratio"].get<double>(), 3);
  } else if (r.id == "C6") {
    s << "lattice slope=" << fmt(m["lattice"]["slope"].get<double>()) << " ppp slope=" << fmt(m["ppp"]["slope"].get<double>());
  } else if (r.id == "C7") {
    s << "lattice var=" << fmt(m["lattice_variation"].get<double>(), 3)
      << " ppp var=" << fmt(m["ppp_variation"].get<double>(), 3);
  } else if (r.id == "C8") {
    s << "slope=" << fmt(m["slope"].get<double>()) << " R2=" << fmt(m["r2"].get<double>()) << " k_max="
      << (m["tail"].empty() ? -1 : m["tail"].back()[0].get<int>()) << " classes="
      << m["env0_hole_classes_with_points"].get<std::size_t>()
      << " cross=" << fmt(m["env0_max_cross_class_probability"].get<double>(), 3);
  } else if (r.id == "C9") {
    s << "rate=" << fmt(m["jump_rate"]["value"].get<double>(), 6) << " Ew0=" << fmt(m["ew0"]["value"].get<double>(), 6)
      << " z=" << fmt(m["z"].get<double>(), 3);
  } else if (r.id == "C10") {
    s << "ratios=" << fmt(m["ratios"][0].get<double>()) << "," << fmt(m["ratios"][1].get<double>());
  } else if (r.id == "C11") {
    s << "omega z=" << fmt(m["omega"]["worst_z"].get<double>(), 3) << " db=" << fmt(m["detailed_balance_rel_error"].get<double>(), 2);
  } else if (r.id == "C12") {
    for (const auto& row : m["rows"])
      if (row.contains("drop_lower_95")) s << "lo" << row["beta"].get<double>() << "=" << fmt(row["drop_lower_95"].get<double>(), 3) << " ";
  } else if (r.id == "I1") {
    s << "K4/T20=" << fmt(get(m, "white_fraction_K4_T20").get<double>(), 3)
      << " K2/T12=" << fmt(get(m, "white_fraction_K2_T12").get<double>(), 3);
  }
  s << " (" << fmt(r.seconds, 3) << " s)";
  return s.str();
}

AcceptanceReport run_acceptance(const AcceptanceOptions& opts,
                                const std::function<void(const CriterionResult&)>& on_result) {
  using Clock = std::chrono::steady_clock;
  const auto t_start = Clock::now();
  Context ctx;
  ctx.opts = opts;
  ctx.budget = budget_for(opts.profile);
  AcceptanceReport report;
  report.profile = opts.profile;
  report.seed = opts.seed;
  using Fn = CriterionResult (*)(Context&);
  const std::pair<const char*, Fn> table[] = {
      {"C1", c1_einstein},     {"C2", c2_msd},       {"C3", c3_variational}, {"C4", c4_lattice_corrector},
      {"C5", c5_sublinearity}, {"C6", c6_heat_kernel}, {"C7", c7_distance},  {"C8", c8_gamma},
      {"C9", c9_jump_rate},    {"C10", c10_white_weight}, {"C11", c11_micro}, {"C12", c12_mott},
      {"I1", i1_white_fraction}};
  for (const auto& [id, fn] : table) {
    if (!opts.only.empty() && std::find(opts.only.begin(), opts.only.end(), id) == opts.only.end()) continue;
    const auto t0 = Clock::now();
    CriterionResult res;
    try {
      res = fn(ctx);
    } catch (const std::exception& e) {
      res.id = id;
      res.name = "error";
      res.pass = false;
      res.measured = {{"error", e.what()}};
    }
    res.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (on_result) on_result(res);
    report.results.push_back(std::move(res));
  }
  report.seconds = std::chrono::duration<double>(Clock::now() - t_start).count();
  return report;
}

// ---------------------------------------------------------------------------

MarkedPointSet omega_fixture() {
  // Box (i, j) covers [-2.5 + i, -1.5 + i) x [-2.5 + j, -1.5 + j).
  std::vector<Point> pts;
  auto empty = [](int i, int j) {
    return (i == 0 && j == 0) || (std::abs(i - 2) + std::abs(j - 2) == 1);
  };
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i) {
      if (empty(i, j) || (i == 2 && j == 2)) continue;
      pts.push_back({i - 2.0, j - 2.0, 0.0});
    }
  pts.push_back({-0.2, 0.1, 0.0});
  pts.push_back({0.25, -0.15, 0.0});
  return MarkedPointSet(WindowSpec{2, 2.5, Boundary::free, 0.0}, std::move(pts), {}, false);
}

std::vector<std::vector<double>> restricted_transition_matrix(const MarkedPointSet& env, const RateModel& model,
                                                              const TruncationPolicy& trunc,
                                                              const EnvironmentGeometry& geom,
                                                              std::vector<std::uint32_t>& good_points) {
  const std::size_t n = env.size();
  std::vector<std::uint32_t> hole;
  good_points.clear();
  std::vector<Eigen::Index> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    auto& list = geom.good_point[i] ? good_points : hole;
    slot[i] = static_cast<Eigen::Index>(list.size());
    list.push_back(static_cast<std::uint32_t>(i));
  }
  const auto g = static_cast<Eigen::Index>(good_points.size()), h = static_cast<Eigen::Index>(hole.size());
  Eigen::MatrixXd pgg = Eigen::MatrixXd::Zero(g, g), pgh = Eigen::MatrixXd::Zero(g, h);
  Eigen::MatrixXd phg = Eigen::MatrixXd::Zero(h, g), ihh = Eigen::MatrixXd::Identity(h, h);
  for (std::size_t x = 0; x < n; ++x) {
    const Transition t = transition_probs(x, env, model, trunc);
    const Eigen::Index sx = slot[x];
    for (std::size_t k = 0; k < t.targets.size(); ++k) {
      const std::uint32_t y = t.targets[k];
      const Eigen::Index sy = slot[y];
      const bool gx = geom.good_point[x], gy = geom.good_point[y];
      if (gx && gy) pgg(sx, sy) += t.probs[k];
      else if (gx) pgh(sx, sy) += t.probs[k];
      else if (gy) phg(sx, sy) += t.probs[k];
      else ihh(sx, sy) -= t.probs[k];
    }
  }
  Eigen::MatrixXd omega = pgg;
  if (h > 0) omega += pgh * ihh.partialPivLu().solve(phg);
  std::vector<std::vector<double>> out(good_points.size(), std::vector<double>(good_points.size()));
  for (Eigen::Index a = 0; a < g; ++a)
    for (Eigen::Index b = 0; b < g; ++b) out[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = omega(a, b);
  return out;
}

}  // namespace vrh
