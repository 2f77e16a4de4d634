#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vrh/corrector.hpp"
#include "vrh/experiments.hpp"
#include "vrh/rates.hpp"
#include "vrh/walk.hpp"

namespace vrh {

/// Schema violation; `path()` is the dotted field path, e.g. "model.alpha".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& msg)
      : std::runtime_error(path + ": " + msg), path_(std::move(path)) {}
  [[nodiscard]] const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct EnvironmentSection {
  std::string kind = "ppp";  // ppp | diluted
  double intensity = 1.0;
  int dim = 2;
  double half_side = 64.0;
  std::string boundary = "torus";
  double cell_size = 1.0;
  bool marks = false;
  std::uint64_t count = 1;  // environments per run

  [[nodiscard]] EnvSpec spec() const;
};

struct GeometrySection {
  double K = 2.0;
  double t0 = 12.0;
};

struct WalkSection {
  std::string mode = "dtrw";  // dtrw | ctrw | both
  std::uint64_t steps = 100000;
  double t_max = 10000.0;
  std::uint64_t record_every = 1000;
  double record_dt = 100.0;
  std::string boundary = "wrap";
  double absorb_margin = 0.0;
  std::uint64_t per_env = 10;

  [[nodiscard]] WalkConfig config() const;
};

struct RestrictedSection {
  std::uint64_t replicas_per_env = 1000;
  double t_min = 1.0;
  double t_ratio = 1.5;
  double t_max = 512.0;
  std::uint64_t step_cap = 1000000;
  std::uint64_t keep_excursions = 0;
};

struct CorrectorSection {
  double layer = 0.0;  // 0 means the truncation cutoff
  double tol = 1e-8;
  std::uint64_t max_iter = 100000;
  std::string method = "cg";
  double damping = 1.0;
  double central_half_side = -1.0;
  std::vector<double> sublinearity_n{8, 16, 32, 64};

  [[nodiscard]] SolverOptions options() const;
};

struct EstimatorSection {
  std::uint64_t lag = 10;
  double skip_fraction = 0.2;
  std::uint64_t min_returns = 50;
  std::uint64_t gamma_min_count = 100;
  std::uint64_t palm_replicas = 20000;
};

struct MottSection {
  std::vector<double> betas{0, 1, 2, 4};
  double gamma = 0.0;
};

struct DiagnoseSection {
  std::vector<int> distances{4, 8, 16};
  std::uint64_t envs = 20;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0: hardware concurrency
  EnvironmentSection environment;
  RateModel model;
  TruncationPolicy truncation{8.0, 1e-6};
  GeometrySection geometry;
  WalkSection walk;
  RestrictedSection restricted;
  CorrectorSection corrector;
  EstimatorSection estimators;
  MottSection mott_scan;
  DiagnoseSection diagnose;

  /// Cross-field checks; throws ConfigError with the offending field path.
  void validate() const;
  [[nodiscard]] unsigned resolved_workers() const;
};

/// Parses and validates; unknown keys and type mismatches are ConfigErrors.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Canonical form with every field present (defaults filled in).
nlohmann::json to_json(const ExperimentConfig& c);

}  // namespace vrh
