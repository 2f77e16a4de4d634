#include "vrh/rng.hpp"

#include <random>

namespace vrh {

std::uint64_t sample_poisson(Rng& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(rng);
}

double sample_normal(Rng& rng) {
  // Fresh distribution per draw: no cached second variate leaks across callers.
  std::normal_distribution<double> dist;
  return dist(rng);
}

}  // namespace vrh
