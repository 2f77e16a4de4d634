#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vrh/geometry.hpp"
#include "vrh/pointproc.hpp"
#include "vrh/rates.hpp"

namespace vrh {

enum class Profile { quick, full };

std::string to_string(Profile p);
Profile profile_from_string(const std::string& s);

struct CriterionResult {
  CriterionResult() = default;
  CriterionResult(std::string id_, std::string name_) : id(std::move(id_)), name(std::move(name_)) {}

  std::string id;  // "C1" .. "C12", or "I1" for informational lines
  std::string name;
  bool pass = false;
  bool informational = false;  // never affects the verdict
  nlohmann::json measured = nlohmann::json::object();
  std::vector<std::pair<std::string, std::uint64_t>> seeds;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  Profile profile = Profile::full;
  std::uint64_t seed = 20240601;
  unsigned workers = 1;
  std::vector<std::string> only;  // empty: every criterion
};

struct AcceptanceReport {
  Profile profile = Profile::full;
  std::uint64_t seed = 0;
  std::vector<CriterionResult> results;
  double seconds = 0.0;

  [[nodiscard]] bool all_pass() const;
  [[nodiscard]] nlohmann::json to_json() const;
};

/// One line: "PASS C1 <name> | <key measurements>".
std::string summary_line(const CriterionResult& r);

/// Runs the criteria in order; `on_result` sees each one as it finishes.
AcceptanceReport run_acceptance(const AcceptanceOptions& opts,
                                const std::function<void(const CriterionResult&)>& on_result = {});

/// Small hand-built environment for the restricted-chain oracle: a 5x5 grid
/// of unit boxes with one point per box, except an occupied centre box with
/// two points, four empty boxes around it and one empty corner. With K = 1
/// the centre box is an isolated white box, so its points lie in a hole.
MarkedPointSet omega_fixture();

/// omega = P_GG + P_GH (I - P_HH)^{-1} P_HG over good points (rows and
/// columns in increasing point order), by LU factorization.
std::vector<std::vector<double>> restricted_transition_matrix(const MarkedPointSet& env, const RateModel& model,
                                                              const TruncationPolicy& trunc,
                                                              const EnvironmentGeometry& geom,
                                                              std::vector<std::uint32_t>& good_points);

}  // namespace vrh
