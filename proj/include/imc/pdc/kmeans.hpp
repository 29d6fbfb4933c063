#pragma once

#include <cstdint>
#include <vector>

#include "imc/common/defaults.hpp"
#include "imc/pdc/types.hpp"

namespace imc::pdc {

struct KMeansOptions {
  std::size_t max_iters = defaults::kKMeansMaxIters;
  double tolerance = defaults::kKMeansTolerance;  // max center movement
  std::size_t restarts = defaults::kKMeansRestarts;
};

struct KMeansResult {
  std::vector<Vec> centers;
  std::vector<std::size_t> assignment;  // point index -> cluster
  double sse = 0.0;                     // of the final partition about its means
  std::vector<double> objective;        // per Lloyd iteration, then per Hartigan pass
  std::size_t restart = 0;              // index of the kept restart
};

// k-means++ seeding, Lloyd iterations, then Hartigan single-point moves
// until none lowers the SSE. The restart with the lowest SSE
// wins (earliest on ties). Empty clusters take the point farthest from its
// center. Throws invalid-input if points.size() < k or k == 0.
KMeansResult kmeans(const std::vector<Vec>& points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options = {});

// Sum of squared distances of each point to the mean of its cluster.
double partition_sse(const std::vector<Vec>& points, const std::vector<std::size_t>& assignment, std::size_t k);

}  // namespace imc::pdc
