// Command-line driver: environment generation, walks, restricted walks,
// corrector solves, analysis and the acceptance suite.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vrh/acceptance.hpp"
#include "vrh/config.hpp"
#include "vrh/envio.hpp"
#include "vrh/estimators.hpp"
#include "vrh/experiments.hpp"
#include "vrh/manifest.hpp"
#include "vrh/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using vrh::format_double;

namespace {

enum Exit { kOk = 0, kValidation = 2, kRuntime = 3, kAcceptance = 4 };

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out_dir = "out";
};

class ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

vrh::ExperimentConfig resolve(const Common& c) {
  vrh::ExperimentConfig cfg = c.config_path.empty() ? vrh::parse_config(json::object()) : vrh::load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (c.workers) cfg.workers = *c.workers;
  return cfg;
}

struct Run {
  vrh::ExperimentConfig cfg;
  vrh::RunManifest manifest;
  std::string dir;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  Run(const Common& c, const std::string& command) : cfg(resolve(c)), dir(c.out_dir) {
    fs::create_directories(dir);
    manifest.command = command;
    manifest.set_config(vrh::to_json(cfg));
    manifest.master_seed = cfg.seed;
    manifest.workers = cfg.resolved_workers();
  }

  std::ofstream open(const std::string& name) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    return out;
  }

  void output(const std::string& name) { manifest.add_output(dir, name); }

  void finish() {
    manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest.write((fs::path(dir) / "manifest.json").string());
  }
};

std::string env_name(std::size_t e) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "env_%04zu.txt", e);
  return buf;
}

std::string csv_point(const vrh::Point& p, int dim) {
  std::string s;
  for (int k = 0; k < dim; ++k) {
    s += ',';
    s += format_double(p[k]);
  }
  return s;
}

// ---------------------------------------------------------------------------

int cmd_gen_env(const Common& c) {
  Run run(c, "gen-env");
  const vrh::EnvSpec spec = run.cfg.environment.spec();
  const std::size_t n = run.cfg.environment.count;
  std::vector<vrh::MarkedPointSet> envs(n);
  vrh::EnvSpec s = spec;
  s.gamma = run.cfg.model.gamma;
  vrh::parallel_for(n, run.cfg.resolved_workers(),
                    [&](std::size_t e) { envs[e] = vrh::make_env(s, vrh::env_seed(run.cfg.seed, e)); });
  for (std::size_t e = 0; e < n; ++e) {
    vrh::save_env((fs::path(run.dir) / env_name(e)).string(), envs[e]);
    run.output(env_name(e));
    run.manifest.seeds.emplace_back(env_name(e), vrh::env_seed(run.cfg.seed, e));
  }
  run.finish();
  std::cout << "wrote " << n << " environment(s) to " << run.dir << "\n";
  return kOk;
}

// Trajectory archive: one CSV row per recorded sample.
int cmd_simulate(const Common& c, const std::vector<std::string>& env_files) {
  Run run(c, "simulate");
  if (env_files.empty()) throw ValidationError("simulate: no environment files given (use --env)");
  std::vector<vrh::MarkedPointSet> envs;
  for (const auto& f : env_files) {
    if (!fs::exists(f)) throw std::runtime_error("missing environment file: " + f);
    envs.push_back(vrh::load_env(f));
  }
  const vrh::WalkConfig wc = run.cfg.walk.config();
  const std::string mode = run.cfg.walk.mode;
  std::vector<std::string> modes;
  if (mode == "dtrw" || mode == "both") modes.push_back("dtrw");
  if (mode == "ctrw" || mode == "both") modes.push_back("ctrw");
  const std::size_t per = run.cfg.walk.per_env;
  for (const std::string& m : modes) {
    std::vector<std::string> chunks(envs.size());
    std::vector<std::size_t> absorbed(envs.size(), 0);
    vrh::parallel_for(envs.size(), run.cfg.resolved_workers(), [&](std::size_t e) {
      const vrh::MarkedPointSet& env = envs[e];
      const vrh::JumpTable table(env, run.cfg.model, run.cfg.truncation);
      const int dim = env.window().dim;
      std::string out;
      for (std::size_t r = 0; r < per; ++r) {
        const vrh::WalkStart st = vrh::walk_start(vrh::walk_base_seed(run.cfg.seed, e), r, env.size());
        const vrh::Trajectory tr = m == "dtrw" ? vrh::run_dtrw(st.x0, env, table, wc, st.seed)
                                               : vrh::run_ctrw(st.x0, env, table, wc, st.seed);
        absorbed[e] += tr.absorbed;
        for (std::size_t k = 0; k < tr.time.size(); ++k) {
          out += std::to_string(e) + ',' + std::to_string(r) + ',' + std::to_string(st.seed) + ',' +
                 format_double(tr.time[k]) + ',' + std::to_string(tr.jumps[k]) + ',' + std::to_string(tr.index[k]) +
                 csv_point(tr.position[k], dim) + ',' + (tr.absorbed ? '1' : '0') + '\n';
        }
      }
      chunks[e] = std::move(out);
    });
    const std::string name = "trajectories_" + m + ".csv";
    {
      auto out = run.open(name);
      const int dim = envs.front().window().dim;
      out << "env,replica,seed,time,jumps,index";
      for (int k = 0; k < dim; ++k) out << ",x" << k + 1;
      out << ",absorbed\n";
      for (const auto& ch : chunks) out << ch;
    }
    run.output(name);
    std::size_t total_absorbed = 0;
    for (std::size_t a : absorbed) total_absorbed += a;
    if (total_absorbed > 0)
      run.manifest.warnings.push_back(m + ": " + std::to_string(total_absorbed) + " trajectories absorbed at the boundary");
  }
  for (std::size_t e = 0; e < envs.size(); ++e) run.manifest.seeds.emplace_back(env_files[e], vrh::walk_base_seed(run.cfg.seed, e));
  run.finish();
  std::cout << "simulated " << envs.size() * per << " trajectories per mode into " << run.dir << "\n";
  return kOk;
}

struct Archive {
  int dim = 0;
  std::vector<vrh::Trajectory> tr;
};

Archive read_archive(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open archive " + path);
  Archive a;
  std::string line;
  if (!std::getline(in, line)) return a;
  {
    std::stringstream hs(line);
    for (std::string col; std::getline(hs, col, ',');)
      if (col.size() >= 2 && col[0] == 'x' && std::isdigit(static_cast<unsigned char>(col[1]))) ++a.dim;
  }
  std::map<std::pair<long, long>, std::size_t> slot;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string tok; std::getline(ss, tok, ',');) f.push_back(tok);
    if (f.size() != static_cast<std::size_t>(7 + a.dim)) throw std::runtime_error(path + ": malformed row '" + line + "'");
    const auto key = std::make_pair(std::stol(f[0]), std::stol(f[1]));
    auto [it, fresh] = slot.try_emplace(key, a.tr.size());
    if (fresh) a.tr.emplace_back();
    vrh::Trajectory& t = a.tr[it->second];
    t.seed = std::stoull(f[2]);
    t.time.push_back(std::stod(f[3]));
    t.jumps.push_back(std::stoull(f[4]));
    t.index.push_back(static_cast<std::uint32_t>(std::stoul(f[5])));
    vrh::Point p{0.0, 0.0, 0.0};
    for (int k = 0; k < a.dim; ++k) p[k] = std::stod(f[6 + k]);
    t.position.push_back(p);
    t.absorbed = f[6 + a.dim] == "1";
  }
  for (auto& t : a.tr) {
    t.t_end = t.time.back();
    t.total_jumps = t.jumps.back();
  }
  return a;
}

int cmd_analyze(const Common& c, const std::vector<std::string>& archives) {
  Run run(c, "analyze");
  if (archives.empty()) throw ValidationError("analyze: no archives given (use --archive)");
  json summary = json::array();
  for (std::size_t i = 0; i < archives.size(); ++i) {
    const Archive a = read_archive(archives[i]);
    run.manifest.extra["inputs"].push_back({{"path", archives[i]}, {"sha256", vrh::file_sha256(archives[i])}});
    // Keep complete trajectories that share the longest grid.
    std::size_t len = 0;
    for (const auto& t : a.tr)
      if (!t.absorbed) len = std::max(len, t.time.size());
    vrh::PathSet ps;
    ps.dim = a.dim;
    std::size_t dropped = 0;
    for (const auto& t : a.tr) {
      if (t.absorbed || t.time.size() < len) {
        ++dropped;
        continue;
      }
      ps.add(t);
    }
    const std::size_t lag = run.cfg.estimators.lag;
    const std::string tag = "archive" + std::to_string(i);
    json entry = {{"archive", archives[i]}, {"trajectories", ps.paths.size()}, {"dropped", dropped}};
    if (ps.paths.size() < 2 || ps.times.size() <= lag) {
      entry["status"] = "insufficient data";
      summary.push_back(entry);
      run.manifest.warnings.push_back(archives[i] + ": insufficient data");
      continue;
    }
    const vrh::MsdCurve curve = vrh::msd(ps, vrh::FitWindow{run.cfg.estimators.skip_fraction});
    {
      auto out = run.open(tag + "_msd.csv");
      out << "time,msd,se\n";
      for (std::size_t k = 0; k < curve.time.size(); ++k)
        out << format_double(curve.time[k]) << ',' << format_double(curve.msd[k]) << ','
            << format_double(curve.std_error[k]) << '\n';
    }
    run.output(tag + "_msd.csv");
    const vrh::DiffusionEstimate d = vrh::diffusion_matrix(ps, lag);
    {
      auto out = run.open(tag + "_diffusion.csv");
      out << "i,j,value,se\n";
      for (int x = 0; x < d.dim; ++x)
        for (int y = 0; y < d.dim; ++y)
          out << x << ',' << y << ',' << format_double(d.at(x, y)) << ',' << format_double(d.se(x, y)) << '\n';
    }
    run.output(tag + "_diffusion.csv");
    std::vector<double> rates;
    for (const auto& t : a.tr)
      if (t.t_end > 0.0) rates.push_back(static_cast<double>(t.total_jumps) / t.t_end);
    const vrh::stats::Estimate jr = vrh::stats::mean_se(rates);
    entry["status"] = curve.low_r2 ? "ok (msd fit R^2 < 0.99)" : "ok";
    entry["msd_fit"] = {{"slope", curve.fit.slope}, {"r2", curve.fit.r2}};
    entry["jump_rate"] = {{"value", jr.value}, {"se", jr.std_error}};
    if (curve.low_r2) run.manifest.warnings.push_back(archives[i] + ": MSD fit R^2 below 0.99");
    summary.push_back(entry);
  }
  {
    auto out = run.open("analysis.json");
    out << summary.dump(2) << '\n';
  }
  run.output("analysis.json");
  run.finish();
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

int cmd_einstein(const Common& c) {
  Run run(c, "einstein");
  const auto& cfg = run.cfg;
  const vrh::EnvSpec spec = cfg.environment.spec();
  const unsigned w = cfg.resolved_workers();
  const vrh::Rng master(cfg.seed);
  const std::uint64_t s_palm = master.split(0)(), s_dtrw = master.split(1)(), s_ctrw = master.split(2)();
  const vrh::stats::Estimate ew0 = vrh::palm_w0(cfg.environment.intensity, cfg.environment.dim, cfg.model,
                                                 cfg.truncation, cfg.environment.marks, cfg.estimators.palm_replicas,
                                                 s_palm, w);
  vrh::WalkConfig dc = cfg.walk.config();
  const vrh::WalkEnsemble dt = vrh::run_walk_ensemble(spec, cfg.model, cfg.truncation, vrh::WalkMode::dtrw,
                                                      cfg.environment.count, cfg.walk.per_env, dc, s_dtrw, w);
  vrh::WalkConfig cc = dc;
  cc.t_max = static_cast<double>(dc.steps) / ew0.value;
  cc.record_dt = cc.t_max * static_cast<double>(dc.record_every) / static_cast<double>(dc.steps);
  const vrh::WalkEnsemble ct = vrh::run_walk_ensemble(spec, cfg.model, cfg.truncation, vrh::WalkMode::ctrw,
                                                      cfg.environment.count, cfg.walk.per_env, cc, s_ctrw, w);
  const auto ddt = vrh::diffusion_matrix(dt.paths, cfg.estimators.lag);
  const auto dct = vrh::diffusion_matrix(ct.paths, cfg.estimators.lag);
  const auto rows = vrh::einstein_check(dct, ddt, ew0);
  {
    auto out = run.open("einstein.csv");
    out << "i,j,d_ctrw,d_ctrw_se,d_dtrw,d_dtrw_se,ew0,ew0_se,ratio,ratio_se,ci_lo,ci_hi,contains_one\n";
    for (const auto& r : rows)
      out << r.i << ',' << r.j << ',' << format_double(dct.at(r.i, r.j)) << ',' << format_double(dct.se(r.i, r.j))
          << ',' << format_double(ddt.at(r.i, r.j)) << ',' << format_double(ddt.se(r.i, r.j)) << ','
          << format_double(ew0.value) << ',' << format_double(ew0.std_error) << ',' << format_double(r.ratio) << ','
          << format_double(r.std_error) << ',' << format_double(r.ci.lo) << ',' << format_double(r.ci.hi) << ','
          << (r.contains_one ? 1 : 0) << '\n';
  }
  run.output("einstein.csv");
  for (const auto& r : rows)
    if (!r.contains_one)
      run.manifest.warnings.push_back("ratio CI for entry (" + std::to_string(r.i) + "," + std::to_string(r.j) +
                                      ") excludes 1");
  run.manifest.seeds = {{"palm", s_palm}, {"dtrw", s_dtrw}, {"ctrw", s_ctrw}};
  run.finish();
  std::cout << "einstein table written to " << run.dir << "/einstein.csv\n";
  return kOk;
}

int cmd_restricted(const Common& c) {
  Run run(c, "restricted");
  const auto& cfg = run.cfg;
  vrh::RestrictedPlan plan;
  plan.K = cfg.geometry.K;
  plan.t0 = cfg.geometry.t0;
  plan.envs = cfg.environment.count;
  plan.replicas_per_env = cfg.restricted.replicas_per_env;
  plan.t_grid = vrh::geometric_grid(cfg.restricted.t_min, cfg.restricted.t_ratio, cfg.restricted.t_max);
  plan.step_cap = cfg.restricted.step_cap;
  plan.keep_excursions = cfg.restricted.keep_excursions;
  plan.track_dbar = plan.keep_excursions > 0;
  vrh::EnvSpec spec = cfg.environment.spec();
  spec.gamma = cfg.model.gamma;
  const vrh::RestrictedStudy st =
      vrh::run_restricted_study(spec, cfg.model, cfg.truncation, plan, cfg.seed, cfg.resolved_workers());
  const vrh::HeatKernelCurve hk = vrh::heat_kernel_return(st.tally, cfg.estimators.min_returns);
  const vrh::DistanceRatioCurve dr = vrh::distance_ratio(st.tally);
  {
    auto out = run.open("heat_kernel.csv");
    out << "time,returns,replicas,probability,ci_lo,ci_hi,mean_distance,distance_se,distance_ratio\n";
    for (std::size_t k = 0; k < hk.time.size(); ++k)
      out << format_double(hk.time[k]) << ',' << hk.returns[k] << ',' << st.tally.replicas << ','
          << format_double(hk.probability[k]) << ',' << format_double(hk.ci[k].lo) << ','
          << format_double(hk.ci[k].hi) << ',' << format_double(st.tally.distance[k].mean()) << ','
          << format_double(st.tally.distance[k].std_error()) << ','
          << format_double(st.tally.distance[k].mean() / std::sqrt(hk.time[k])) << '\n';
  }
  run.output("heat_kernel.csv");
  const vrh::GeometricFit g = vrh::geometric_tail_fit_histogram(st.gamma_hist, cfg.estimators.gamma_min_count);
  {
    auto out = run.open("gamma_tail.csv");
    out << "k,count,at_least\n";
    std::uint64_t tail = 0;
    std::vector<std::uint64_t> at_least(st.gamma_hist.size());
    for (std::size_t k = st.gamma_hist.size(); k-- > 0;) at_least[k] = tail += st.gamma_hist[k];
    for (std::size_t k = 0; k < st.gamma_hist.size(); ++k)
      out << k << ',' << st.gamma_hist[k] << ',' << at_least[k] << '\n';
  }
  run.output("gamma_tail.csv");
  json s = {{"replicas", st.tally.replicas},
            {"truncated", st.truncated},
            {"good_fraction", st.good_fraction},
            {"white_fraction", st.white_fraction},
            {"heat_kernel", {{"slope", hk.fit.slope}, {"slope_se", hk.fit.slope_se}, {"r2", hk.fit.r2},
                             {"fit_range", {hk.fit_lo, hk.fit_hi}}}},
            {"distance_ratio_variation", dr.variation},
            {"gamma", {{"excursions", g.samples}, {"delta_mle", g.delta}, {"delta_se", g.delta_se},
                       {"no_holes", g.no_holes}, {"tail_slope", g.tail.slope}, {"tail_r2", g.tail.r2}}}};
  if (!st.sample_excursions.empty()) {
    const vrh::ExcursionMoments m = vrh::excursion_moments(st.sample_excursions);
    s["excursion_moments"] = {{"excursions", m.excursions},
                              {"dbar1", {m.dbar1.value, m.dbar1.std_error}},
                              {"dbar2", {m.dbar2.value, m.dbar2.std_error}},
                              {"dist1", {m.dist1.value, m.dist1.std_error}},
                              {"dist2", {m.dist2.value, m.dist2.std_error}},
                              {"truncated", m.truncated}};
  }
  {
    auto out = run.open("restricted.json");
    out << s.dump(2) << '\n';
  }
  run.output("restricted.json");
  if (st.truncated > 0)
    run.manifest.warnings.push_back(std::to_string(st.truncated) + " replicas hit the excursion step cap");
  for (std::size_t e = 0; e < plan.envs; ++e) run.manifest.seeds.emplace_back(env_name(e), vrh::env_seed(cfg.seed, e));
  run.finish();
  std::cout << s.dump(2) << "\n";
  return kOk;
}

int cmd_corrector(const Common& c) {
  Run run(c, "corrector");
  const auto& cfg = run.cfg;
  vrh::EnvSpec spec = cfg.environment.spec();
  spec.gamma = cfg.model.gamma;
  if (spec.window.boundary != vrh::Boundary::free)
    throw ValidationError("environment.boundary: corrector solves need a free window");
  vrh::TruncationPolicy trunc = cfg.truncation;
  const vrh::SolverOptions so = cfg.corrector.options();
  const double layer = cfg.corrector.layer > 0.0 ? cfg.corrector.layer : trunc.r_cut;
  const unsigned w = cfg.resolved_workers();
  const std::size_t n = cfg.environment.count;

  std::vector<std::vector<vrh::SublinearityRow>> prof(n);
  std::vector<vrh::VariationalSample> samples(n);
  std::vector<std::size_t> iters(n);
  std::vector<double> resid(n);
  vrh::EnvSpec palm = spec;
  palm.palm = true;
  std::string field0;
  vrh::parallel_for(n, w, [&](std::size_t e) {
    const vrh::MarkedPointSet env = vrh::make_env(palm, vrh::env_seed(cfg.seed, e));
    const vrh::JumpTable table(env, cfg.model, trunc);
    const vrh::HarmonicField f = vrh::solve_harmonic(env, table, layer, so);
    iters[e] = f.iterations;
    resid[e] = f.residual;
    samples[e] = vrh::variational_sample(env, table, f, cfg.corrector.central_half_side);
    for (double s : cfg.corrector.sublinearity_n)
      if (s <= env.window().half_side && s > layer) {
        const vrh::MarkedPointSet sub = vrh::restrict_window(env, s);
        const vrh::JumpTable st(sub, cfg.model, trunc);
        prof[e].push_back(vrh::sublinearity(sub, vrh::solve_harmonic(sub, st, layer, so), s));
      }
    if (e == 0) {
      const int dim = env.window().dim;
      std::string out = "index";
      for (int k = 0; k < dim; ++k) out += ",x" + std::to_string(k + 1);
      for (int k = 0; k < dim; ++k) out += ",phi" + std::to_string(k + 1);
      out += ",interior,pinned\n";
      for (std::size_t i = 0; i < env.size(); ++i)
        out += std::to_string(i) + csv_point(env.point(i), dim) + csv_point(f.phi[i], dim) + ',' +
               std::to_string(f.interior[i]) + ',' + std::to_string(f.pinned[i]) + '\n';
      field0 = std::move(out);
    }
  });
  {
    auto out = run.open("harmonic_env0.csv");
    out << field0;
  }
  run.output("harmonic_env0.csv");
  {
    auto out = run.open("sublinearity.csv");
    out << "env,n,s,argmax,points\n";
    for (std::size_t e = 0; e < n; ++e)
      for (const auto& r : prof[e])
        out << e << ',' << format_double(r.n) << ',' << format_double(r.s) << ',' << r.argmax << ',' << r.points << '\n';
  }
  run.output("sublinearity.csv");
  const vrh::VariationalD vd = vrh::variational_d(samples, spec.window.dim);
  {
    auto out = run.open("variational.csv");
    out << "kind,i,j,value,se\n";
    for (const auto* d : {&vd.dtrw, &vd.ctrw})
      for (int i = 0; i < d->dim; ++i)
        for (int j = 0; j < d->dim; ++j)
          out << (d == &vd.dtrw ? "dtrw" : "ctrw") << ',' << i << ',' << j << ',' << format_double(d->at(i, j)) << ','
              << format_double(d->se(i, j)) << '\n';
    out << "ew0,0,0," << format_double(vd.ew0.value) << ',' << format_double(vd.ew0.std_error) << '\n';
  }
  run.output("variational.csv");
  // A sub-window no wider than the layer has no interior to solve on.
  for (double s : cfg.corrector.sublinearity_n)
    if (s <= layer || s > spec.window.half_side)
      run.manifest.warnings.push_back("sublinearity n = " + format_double(s) + " skipped: needs layer < n <= half_side");
  for (std::size_t e = 0; e < n; ++e) {
    run.manifest.seeds.emplace_back(env_name(e), vrh::env_seed(cfg.seed, e));
    if (resid[e] > so.tol)
      run.manifest.warnings.push_back(env_name(e) + ": solver stopped at residual " + format_double(resid[e]));
  }
  run.finish();
  std::cout << "corrector results written to " << run.dir << "\n";
  return kOk;
}

int cmd_mott(const Common& c) {
  Run run(c, "mott-scan");
  const auto& cfg = run.cfg;
  vrh::EnvSpec spec = cfg.environment.spec();
  spec.marks = true;
  spec.gamma = cfg.mott_scan.gamma;
  vrh::RateModel base = cfg.model;
  base.gamma = cfg.mott_scan.gamma;
  const auto rows = vrh::mott_scan(spec, base, cfg.truncation, cfg.mott_scan.betas, cfg.environment.count,
                                   cfg.walk.per_env, cfg.walk.config(), cfg.estimators.lag, cfg.seed,
                                   cfg.resolved_workers());
  {
    auto out = run.open("mott_scan.csv");
    out << "beta,d11,d11_se,mean_diag,mean_diag_se,drop_to_next,drop_se\n";
    for (std::size_t b = 0; b < rows.size(); ++b) {
      const auto& r = rows[b];
      out << format_double(r.beta) << ',' << format_double(r.d.at(0, 0)) << ',' << format_double(r.d.se(0, 0)) << ','
          << format_double(r.mean_diag.value) << ',' << format_double(r.mean_diag.std_error) << ',';
      if (b + 1 < rows.size())
        out << format_double(r.drop_to_next.value) << ',' << format_double(r.drop_to_next.std_error);
      else
        out << ',';
      out << '\n';
    }
  }
  run.output("mott_scan.csv");
  // Every beta reuses the same environments and walk seeds.
  for (std::size_t e = 0; e < cfg.environment.count; ++e) {
    run.manifest.seeds.emplace_back(env_name(e), vrh::env_seed(cfg.seed, e));
    run.manifest.seeds.emplace_back("walks_" + std::to_string(e), vrh::walk_base_seed(cfg.seed, e));
  }
  run.finish();
  std::cout << "mott scan written to " << run.dir << "/mott_scan.csv\n";
  return kOk;
}

int cmd_diagnose(const Common& c) {
  Run run(c, "diagnose");
  const auto& cfg = run.cfg;
  vrh::EnvSpec spec = cfg.environment.spec();
  spec.gamma = cfg.model.gamma;
  const std::size_t n = cfg.environment.count;
  json envs = json::array();
  for (std::size_t e = 0; e < n; ++e) {
    const vrh::MarkedPointSet env = vrh::make_env(spec, vrh::env_seed(cfg.seed, e));
    const vrh::JumpTable table(env, cfg.model, cfg.truncation);
    const vrh::EnvironmentGeometry g = vrh::build_geometry(env, cfg.geometry.K, cfg.geometry.t0, cfg.model.alpha);
    const vrh::WhiteWeightAudit a = vrh::white_weight_audit(env, g.fields, table.weights());
    const auto& cert = table.certificate();
    envs.push_back({{"env", e},
                    {"points", env.size()},
                    {"white_fraction", g.fields.white_fraction()},
                    {"good_points", g.good_points},
                    {"holes", g.holes.holes.size()},
                    {"hole_classes", g.holes.classes},
                    {"white_w", {{"max", a.max_w}, {"mean", a.mean_w}, {"q99", a.q99}}},
                    {"certificate", {{"r_cut", cert.r_cut}, {"bound", cert.bound}, {"budget", cert.budget},
                                     {"ok", cert.ok}, {"max_bucket", cert.max_bucket}}}});
    run.manifest.seeds.emplace_back(env_name(e), vrh::env_seed(cfg.seed, e));
    if (!cert.ok)
      run.manifest.warnings.push_back(env_name(e) + ": truncation bound " + format_double(cert.bound) +
                                      " exceeds the budget");
  }
  {
    auto out = run.open("diagnose.json");
    out << envs.dump(2) << '\n';
  }
  run.output("diagnose.json");
  if (spec.kind == vrh::ProcessKind::ppp) {
    const auto rows = vrh::dist0_probe(cfg.diagnose.envs, cfg.environment.intensity, cfg.environment.dim,
                                       cfg.environment.half_side, cfg.geometry.K, cfg.geometry.t0, cfg.model.alpha,
                                       cfg.diagnose.distances, vrh::Rng(cfg.seed).split(99)());
    run.manifest.seeds.emplace_back("dist0", vrh::Rng(cfg.seed).split(99)());
    auto out = run.open("dist0.csv");
    out << "d1,samples,hits,ci_lo,ci_hi\n";
    for (const auto& r : rows)
      out << r.d1 << ',' << r.samples << ',' << r.hits << ',' << format_double(r.ci.lo) << ','
          << format_double(r.ci.hi) << '\n';
    out.close();
    run.output("dist0.csv");
  }
  run.finish();
  std::cout << envs.dump(2) << "\n";
  return kOk;
}

int cmd_acceptance(const Common& c, const std::string& profile, const std::vector<std::string>& only) {
  vrh::AcceptanceOptions o;
  o.profile = vrh::profile_from_string(profile);
  if (c.seed) o.seed = *c.seed;
  o.workers = c.workers ? *c.workers : std::max(1u, std::thread::hardware_concurrency());
  o.only = only;
  fs::create_directories(c.out_dir);
  const vrh::AcceptanceReport rep = vrh::run_acceptance(o, [](const vrh::CriterionResult& r) {
    std::cout << vrh::summary_line(r) << std::endl;
  });
  const std::string path = (fs::path(c.out_dir) / "acceptance.json").string();
  std::ofstream(path) << rep.to_json().dump(2) << '\n';
  std::cout << (rep.all_pass() ? "ALL PASS" : "FAILURES") << " (" << rep.seconds << " s); report: " << path << "\n";
  return rep.all_pass() ? kOk : kAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable-range hopping random walks: simulation and analysis"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Master seed (overrides the config)");
    sub->add_option("--workers", common.workers, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", common.out_dir, "Output directory")->capture_default_str();
  };
  std::vector<std::string> env_files, archives, only;
  std::string profile = "full";

  auto* gen = app.add_subcommand("gen-env", "Sample environments");
  auto* sim = app.add_subcommand("simulate", "Run DTRW/CTRW trajectories on environment files");
  sim->add_option("--env", env_files, "Environment files")->take_all();
  auto* res = app.add_subcommand("restricted", "Poissonized restricted walks: heat kernel, distances, Gamma tail");
  auto* cor = app.add_subcommand("corrector", "Harmonic coordinates, sublinearity and variational D");
  auto* ana = app.add_subcommand("analyze", "MSD and diffusion tables from trajectory archives");
  ana->add_option("--archive", archives, "Trajectory CSV archives")->take_all();
  auto* ein = app.add_subcommand("einstein", "Einstein-relation table");
  auto* mot = app.add_subcommand("mott-scan", "Diffusion against beta");
  auto* dia = app.add_subcommand("diagnose", "Geometry probes and truncation certificates");
  auto* acc = app.add_subcommand("acceptance", "Run the acceptance criteria");
  acc->add_option("--profile", profile, "quick|full")->check(CLI::IsMember({"quick", "full"}))->capture_default_str();
  acc->add_option("--only", only, "Criterion ids to run (e.g. C1 C11)")->take_all();
  for (auto* s : {gen, sim, res, cor, ana, ein, mot, dia, acc}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }
  try {
    if (*gen) return cmd_gen_env(common);
    if (*sim) return cmd_simulate(common, env_files);
    if (*res) return cmd_restricted(common);
    if (*cor) return cmd_corrector(common);
    if (*ana) return cmd_analyze(common, archives);
    if (*ein) return cmd_einstein(common);
    if (*mot) return cmd_mott(common);
    if (*dia) return cmd_diagnose(common);
    if (*acc) return cmd_acceptance(common, profile, only);
  } catch (const vrh::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
