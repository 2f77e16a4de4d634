// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.

#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "vrh/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string profile = "full", out;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::uint64_t seed = vrh::AcceptanceOptions{}.seed;
  app.add_option("--profile", profile)->check(CLI::IsMember({"quick", "full"}));
  app.add_option("--out", out, "JSON report path");
  app.add_option("--workers", workers);
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);

  vrh::AcceptanceOptions opts;
  opts.profile = vrh::profile_from_string(profile);
  opts.workers = workers;
  opts.seed = seed;
  const auto report = vrh::run_acceptance(opts, [](const vrh::CriterionResult& r) {
    std::cout << vrh::summary_line(r) << std::endl;
  });
  if (!out.empty()) std::ofstream(out) << report.to_json().dump(2) << '\n';
  std::cout << (report.all_pass() ? "ALL PASS" : "FAILURES") << " (" << report.seconds << " s)" << std::endl;
  return report.all_pass() ? 0 : 1;
}
