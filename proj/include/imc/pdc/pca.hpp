#pragma once

#include <vector>

#include "imc/common/defaults.hpp"
#include "imc/pdc/types.hpp"

namespace imc::pdc {

struct PcaOptions {
  double tolerance = defaults::kPcaTolerance;
  std::size_t max_iters = defaults::kPcaMaxIters;
};

// Unit leading eigenvector of the covariance of the mean-centered inputs,
// by power iteration on the implicit covariance. The iteration starts from
// the direction of the raw mean, so when the covariance has no preferred
// direction the raw mean direction is returned. Sign: dot with the raw mean
// is non-negative.
// Throws invalid-input for fewer than 2 vectors or mixed dimensions, and
// degenerate-input when all vectors are identical (to rounding).
Vec pca_first_component(const std::vector<Vec>& vectors, const PcaOptions& options = {});

}  // namespace imc::pdc
