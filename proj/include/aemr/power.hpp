#pragma once

// Repeated simulate-and-test experiments: rejection frequencies of several
// statistics over a grid of hypothesised effects.

#include <cstdint>
#include <vector>

#include "aemr/randtest.hpp"
#include "aemr/simgen.hpp"

namespace aemr {

struct PowerRequest {
  SimParams params = default_params();
  std::vector<StatisticKind> kinds{StatisticKind::PlainF, StatisticKind::CleverF};
  std::vector<double> beta0s{0.0};
  std::size_t replications = 100;
  std::size_t draws = 500;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  Tail tail = Tail::Upper;
};

struct PowerRow {
  StatisticKind kind = StatisticKind::CleverF;
  double beta0 = 0.0;
  std::size_t rejections = 0;
  std::size_t replications = 0;
  double rate() const {
    return replications ? static_cast<double>(rejections) / static_cast<double>(replications)
                        : 0.0;
  }
};

struct PowerStudy {
  std::vector<PowerRow> rows;  // kind-major, like run_randomization
  // results[rep] holds every (kind, beta0) test of that replicate.
  std::vector<std::vector<RandomizationResult>> results;

  // Corrected p-values of one (kind, beta0) cell across replicates.
  std::vector<double> pvalues(std::size_t cell) const;
};

// Replicate r simulates from seed (seed, replicate, r) and tests all
// instruments of the simulated adjustment set jointly. A replicate rejects
// when the corrected p-value is at most alpha. Replicates run in parallel;
// the draws inside each run sequentially.
PowerStudy run_power(const PowerRequest& request);

}  // namespace aemr
