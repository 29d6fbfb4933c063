#pragma once

#include <map>
#include <optional>
#include <vector>

#include "imc/common/defaults.hpp"
#include "imc/pdc/pca.hpp"
#include "imc/pdc/pool.hpp"

namespace imc::pdc {

struct CalibrationVector {
  Vec direction;            // unit norm unless degenerate
  bool degenerate = false;  // zero vector: calibration is a no-op here
  std::size_t support = 0;  // number of pairs that produced it
  bool operator==(const CalibrationVector&) const = default;
};

struct CalibrationSet {
  double alpha = defaults::kCalibrationAlpha;
  std::size_t k = 0;
  std::size_t layers = 0;
  std::size_t dim = 0;
  // Noisy conditions only; [layer][cluster].
  std::map<StateKey, std::vector<std::vector<CalibrationVector>>> vectors;

  // Throws missing-vector naming the triple if absent.
  const CalibrationVector& at(const StateKey& key, std::size_t layer, std::size_t cluster) const;
  bool operator==(const CalibrationSet&) const = default;
};

void validate(const CalibrationSet& cal);

struct CalibrationPair {
  EmbeddingStack clean;
  EmbeddingStack noisy;  // labelled with the noisy condition
};

// For each noisy condition of the pool, layer and cluster: the leading
// principal direction of clean-minus-noisy differences over the pairs whose
// noisy embedding belongs to that cluster. Membership comes from the pool's
// recorded members, or the nearest center for samples the pool has not seen.
// One pair gives its normalized difference; an empty cluster inherits the
// layer-wide direction; a zero difference gives a degenerate zero vector.
// Throws invalid-input when a noisy condition of the pool has no pairs.
CalibrationSet compute_calibration(const std::vector<CalibrationPair>& pairs, const PrototypePool& pool,
                                   double alpha = defaults::kCalibrationAlpha, const PcaOptions& options = {});

// Per layer, picks the nearest cluster of result.final and adds
// alpha * direction (alpha defaults to cal.alpha). Throws invalid-input if
// result.final is normal and missing-vector if a vector is absent.
EmbeddingStack calibrate(const EmbeddingStack& stack, const ClassificationResult& result, const CalibrationSet& cal,
                         const PrototypePool& pool, std::optional<double> alpha = std::nullopt);

struct PipelineResult {
  EmbeddingStack stack;
  ClassificationResult classification;
  bool calibrated = false;
};

// classify, then calibrate unless the stack is judged normal.
PipelineResult pipeline(const EmbeddingStack& stack, const PrototypePool& pool, const CalibrationSet& cal,
                        std::optional<double> alpha = std::nullopt);

}  // namespace imc::pdc
