#include "vrh/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <thread>
#include <type_traits>
#include <vector>

namespace vrh {

using nlohmann::json;

// Each section lists its fields once; the same list drives parsing and
// serialization.

template <class V>
void fields(V& v, EnvironmentSection& s) {
  v("kind", s.kind);
  v("intensity", s.intensity);
  v("dim", s.dim);
  v("half_side", s.half_side);
  v("boundary", s.boundary);
  v("cell_size", s.cell_size);
  v("marks", s.marks);
  v("count", s.count);
}

template <class V>
void fields(V& v, RateModel& s) {
  v("alpha", s.alpha);
  v("beta", s.beta);
  v("gamma", s.gamma);
}

template <class V>
void fields(V& v, TruncationPolicy& s) {
  v("r_cut", s.r_cut);
  v("budget", s.budget);
}

template <class V>
void fields(V& v, GeometrySection& s) {
  v("K", s.K);
  v("t0", s.t0);
}

template <class V>
void fields(V& v, WalkSection& s) {
  v("mode", s.mode);
  v("steps", s.steps);
  v("t_max", s.t_max);
  v("record_every", s.record_every);
  v("record_dt", s.record_dt);
  v("boundary", s.boundary);
  v("absorb_margin", s.absorb_margin);
  v("per_env", s.per_env);
}

template <class V>
void fields(V& v, RestrictedSection& s) {
  v("replicas_per_env", s.replicas_per_env);
  v("t_min", s.t_min);
  v("t_ratio", s.t_ratio);
  v("t_max", s.t_max);
  v("step_cap", s.step_cap);
  v("keep_excursions", s.keep_excursions);
}

template <class V>
void fields(V& v, CorrectorSection& s) {
  v("layer", s.layer);
  v("tol", s.tol);
  v("max_iter", s.max_iter);
  v("method", s.method);
  v("damping", s.damping);
  v("central_half_side", s.central_half_side);
  v("sublinearity_n", s.sublinearity_n);
}

template <class V>
void fields(V& v, EstimatorSection& s) {
  v("lag", s.lag);
  v("skip_fraction", s.skip_fraction);
  v("min_returns", s.min_returns);
  v("gamma_min_count", s.gamma_min_count);
  v("palm_replicas", s.palm_replicas);
}

template <class V>
void fields(V& v, MottSection& s) {
  v("betas", s.betas);
  v("gamma", s.gamma);
}

template <class V>
void fields(V& v, DiagnoseSection& s) {
  v("distances", s.distances);
  v("envs", s.envs);
}

namespace {

template <class T>
const char* type_name() {
  if constexpr (std::is_same_v<T, bool>) return "a boolean";
  else if constexpr (std::is_same_v<T, std::string>) return "a string";
  else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) return "a nonnegative integer";
  else if constexpr (std::is_integral_v<T>) return "an integer";
  else if constexpr (std::is_floating_point_v<T>) return "a number";
  else return "an array";
}

// Literals built in code arrive as signed integers even when nonnegative.
bool nonneg_integer(const json& j) {
  return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}

template <class T>
bool matches(const json& j) {
  if constexpr (std::is_same_v<T, bool>) return j.is_boolean();
  else if constexpr (std::is_same_v<T, std::string>) return j.is_string();
  else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) return nonneg_integer(j);
  else if constexpr (std::is_integral_v<T>) return j.is_number_integer();
  else if constexpr (std::is_floating_point_v<T>) return j.is_number();
  else {
    if (!j.is_array()) return false;
    using E = typename T::value_type;
    return std::all_of(j.begin(), j.end(), [](const json& e) { return matches<E>(e); });
  }
}

template <class T>
struct is_vector : std::false_type {};
template <class E>
struct is_vector<std::vector<E>> : std::true_type {};

struct Reader {
  const json& obj;
  std::string prefix;
  std::set<std::string> known;

  template <class T>
  void operator()(const char* key, T& out) {
    known.insert(key);
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if constexpr (is_vector<T>::value) {
      if (!v.is_array()) throw ConfigError(prefix + key, "expected an array");
      using E = typename T::value_type;
      for (std::size_t i = 0; i < v.size(); ++i)
        if (!matches<E>(v[i]))
          throw ConfigError(prefix + key + "[" + std::to_string(i) + "]", std::string("expected ") + type_name<E>());
    }
    if (!matches<T>(v)) throw ConfigError(prefix + key, std::string("expected ") + type_name<T>());
    out = v.get<T>();
  }

  void finish() const {
    for (const auto& [k, _] : obj.items())
      if (!known.count(k)) throw ConfigError(prefix + k, "unknown key");
  }
};

struct Writer {
  json& obj;
  template <class T>
  void operator()(const char* key, T& v) {
    obj[key] = v;
  }
};

template <class S>
void read_section(const json& root, const char* name, S& s) {
  if (!root.contains(name)) return;
  const json& obj = root.at(name);
  if (!obj.is_object()) throw ConfigError(name, "expected an object");
  Reader r{obj, std::string(name) + ".", {}};
  fields(r, s);
  r.finish();
}

template <class S>
json write_section(const S& s) {
  json j = json::object();
  Writer w{j};
  fields(w, const_cast<S&>(s));
  return j;
}

void require(bool ok, const char* path, const char* msg) {
  if (!ok) throw ConfigError(path, msg);
}

}  // namespace

EnvSpec EnvironmentSection::spec() const {
  EnvSpec s;
  s.kind = process_kind_from_string(kind);
  s.intensity = intensity;
  const double pad = s.kind == ProcessKind::diluted ? 0.5 : 0.0;
  s.window = WindowSpec{dim, half_side, boundary_from_string(boundary), pad};
  s.marks = marks;
  s.cell_size = cell_size;
  return s;
}

WalkConfig WalkSection::config() const {
  WalkConfig c;
  c.steps = steps;
  c.t_max = t_max;
  c.record_every = record_every;
  c.record_dt = record_dt;
  c.boundary = walk_boundary_from_string(boundary);
  c.absorb_margin = absorb_margin;
  return c;
}

SolverOptions CorrectorSection::options() const {
  SolverOptions o;
  o.tol = tol;
  o.max_iter = max_iter;
  o.method = solver_method_from_string(method);
  o.damping = damping;
  return o;
}

void ExperimentConfig::validate() const {
  const auto& e = environment;
  require(e.kind == "ppp" || e.kind == "diluted", "environment.kind", "expected ppp or diluted");
  if (e.kind == "ppp")
    require(e.intensity > 0.0, "environment.intensity", "PPP intensity must be positive");
  else
    require(e.intensity > 0.0 && e.intensity <= 1.0, "environment.intensity", "retention must lie in (0, 1]");
  require(e.dim >= 1 && e.dim <= 3, "environment.dim", "must be 1, 2 or 3");
  require(e.half_side > 0.0, "environment.half_side", "must be positive");
  if (e.kind == "diluted")
    require(e.half_side == std::floor(e.half_side), "environment.half_side", "must be an integer for lattices");
  require(e.boundary == "free" || e.boundary == "torus", "environment.boundary", "expected free or torus");
  require(e.cell_size > 0.0, "environment.cell_size", "must be positive");

  require(model.alpha > 0.0, "model.alpha", "must be positive");
  require(model.beta >= 0.0, "model.beta", "must be nonnegative");
  require(model.gamma >= 0.0, "model.gamma", "must be nonnegative");
  require(truncation.r_cut > 0.0, "truncation.r_cut", "must be positive");
  require(truncation.budget > 0.0, "truncation.budget", "must be positive");
  require(geometry.K > 0.0, "geometry.K", "must be positive");
  require(geometry.t0 >= 2.0, "geometry.t0", "must be at least 2");

  require(walk.mode == "dtrw" || walk.mode == "ctrw" || walk.mode == "both", "walk.mode",
          "expected dtrw, ctrw or both");
  require(walk.record_every > 0, "walk.record_every", "must be positive");
  require(walk.record_dt > 0.0, "walk.record_dt", "must be positive");
  require(walk.t_max >= 0.0, "walk.t_max", "must be nonnegative");
  require(walk.boundary == "wrap" || walk.boundary == "absorb", "walk.boundary", "expected wrap or absorb");
  require(walk.boundary != "wrap" || e.boundary == "torus", "walk.boundary", "wrap requires a torus environment");
  require(walk.absorb_margin >= 0.0, "walk.absorb_margin", "must be nonnegative");

  require(restricted.t_min > 0.0, "restricted.t_min", "must be positive");
  require(restricted.t_ratio > 1.0, "restricted.t_ratio", "must exceed 1");
  require(restricted.t_max >= restricted.t_min, "restricted.t_max", "must be at least t_min");
  require(restricted.step_cap > 0, "restricted.step_cap", "must be positive");

  require(corrector.layer >= 0.0, "corrector.layer", "must be nonnegative");
  require(corrector.tol > 0.0, "corrector.tol", "must be positive");
  require(corrector.method == "cg" || corrector.method == "jacobi", "corrector.method", "expected cg or jacobi");
  require(corrector.damping > 0.0 && corrector.damping <= 1.0, "corrector.damping", "must lie in (0, 1]");
  for (double n : corrector.sublinearity_n) require(n > 0.0, "corrector.sublinearity_n", "entries must be positive");

  require(estimators.lag > 0, "estimators.lag", "must be positive");
  require(estimators.skip_fraction >= 0.0 && estimators.skip_fraction < 1.0, "estimators.skip_fraction",
          "must lie in [0, 1)");
  for (double b : mott_scan.betas) require(b >= 0.0, "mott_scan.betas", "entries must be nonnegative");
  require(mott_scan.gamma >= 0.0, "mott_scan.gamma", "must be nonnegative");
  for (int d : diagnose.distances) require(d > 0, "diagnose.distances", "entries must be positive");
}

unsigned ExperimentConfig::resolved_workers() const {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("$", "config must be a JSON object");
  ExperimentConfig c;
  static const std::set<std::string> sections{"seed",       "workers",    "environment", "model",
                                              "truncation", "geometry",   "walk",        "restricted",
                                              "corrector",  "estimators", "mott_scan",   "diagnose"};
  for (const auto& [k, _] : j.items())
    if (!sections.count(k)) throw ConfigError(k, "unknown key");
  if (j.contains("seed")) {
    if (!nonneg_integer(j["seed"])) throw ConfigError("seed", "expected a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("workers")) {
    if (!nonneg_integer(j["workers"])) throw ConfigError("workers", "expected a nonnegative integer");
    c.workers = j["workers"].get<unsigned>();
  }
  read_section(j, "environment", c.environment);
  read_section(j, "model", c.model);
  read_section(j, "truncation", c.truncation);
  read_section(j, "geometry", c.geometry);
  read_section(j, "walk", c.walk);
  read_section(j, "restricted", c.restricted);
  read_section(j, "corrector", c.corrector);
  read_section(j, "estimators", c.estimators);
  read_section(j, "mott_scan", c.mott_scan);
  read_section(j, "diagnose", c.diagnose);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["environment"] = write_section(c.environment);
  j["model"] = write_section(c.model);
  j["truncation"] = write_section(c.truncation);
  j["geometry"] = write_section(c.geometry);
  j["walk"] = write_section(c.walk);
  j["restricted"] = write_section(c.restricted);
  j["corrector"] = write_section(c.corrector);
  j["estimators"] = write_section(c.estimators);
  j["mott_scan"] = write_section(c.mott_scan);
  j["diagnose"] = write_section(c.diagnose);
  return j;
}

}  // namespace vrh
