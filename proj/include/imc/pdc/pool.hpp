#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "imc/common/defaults.hpp"
#include "imc/pdc/kmeans.hpp"
#include "imc/pdc/types.hpp"

namespace imc::pdc {

// K-means result of one (condition, layer).
struct LayerPrototypes {
  std::vector<Vec> centers;                       // exactly K
  std::vector<std::vector<std::string>> members;  // sample ids per cluster
};

struct PrototypePool {
  std::size_t k = 0;
  std::size_t layers = 0;
  std::size_t dim = 0;
  std::map<StateKey, std::vector<LayerPrototypes>> conditions;  // one entry per layer

  const LayerPrototypes& at(const StateKey& key, std::size_t layer) const;
  // Cluster recorded for sample_id, if it was part of the training set.
  std::optional<std::size_t> member_cluster(const StateKey& key, std::size_t layer, const std::string& sample_id) const;
  bool operator==(const PrototypePool&) const = default;
};

// Throws invalid-input if the pool breaks its shape invariants.
void validate(const PrototypePool& pool);

// Clusters every (condition, layer) independently and in parallel. Each
// training stack must carry both labels. Throws invalid-input naming the
// condition when it has fewer than k samples.
PrototypePool build_pool(const std::vector<EmbeddingStack>& training, std::size_t k, std::uint64_t seed,
                         const KMeansOptions& options = {});

// Index of the nearest center (lowest index on ties).
std::size_t nearest_center(const std::vector<Vec>& centers, const Vec& v);

struct LayerVote {
  StateKey key;
  std::size_t cluster = 0;
  double distance = 0.0;
};

struct ClassificationResult {
  std::vector<LayerVote> per_layer;
  StateKey final;
  std::map<StateKey, std::size_t> vote_counts;
};

// Nearest prototype per layer over every condition and cluster, then a
// majority vote. Vote ties go to the smaller total winning-layer distance,
// then to the smaller key name. Throws invalid-input on shape mismatch.
ClassificationResult classify(const EmbeddingStack& stack, const PrototypePool& pool);

}  // namespace imc::pdc
