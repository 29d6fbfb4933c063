#pragma once

#include <cstdint>
#include <vector>

#include "imc/pdc/pool.hpp"

namespace imc::pdc {

// Gaussian-blob stand-in for encoder embeddings. With one mode per
// (condition, layer) the condition means sit pairwise `spacing` apart.
// With several modes, each condition is a mixture of blobs scattered on a
// sphere of radius `spacing` and the conditions interleave, so a single
// prototype per condition cannot separate them.
struct BlobConfig {
  std::vector<StateKey> keys;  // empty: normal/CT plus the six artifacts
  std::size_t layers = 3;
  std::size_t dim = 16;
  double sigma = 0.1;
  double spacing = 5.0;
  std::size_t modes = 1;
  std::uint64_t seed = 0;
};

class BlobBenchmark {
 public:
  explicit BlobBenchmark(BlobConfig config);

  const BlobConfig& config() const { return config_; }
  const std::vector<StateKey>& keys() const { return config_.keys; }
  // Mean of mode m for key index i at layer l.
  const Vec& mode_mean(std::size_t key, std::size_t layer, std::size_t mode) const;
  // Mean of the whole mixture for key index i at layer l.
  Vec condition_mean(std::size_t key, std::size_t layer) const;

  // One labelled draw. Deterministic in (config seed, stream, index); each
  // layer picks its own mode.
  EmbeddingStack sample(std::size_t key, std::uint64_t stream, std::uint64_t index) const;
  // per_key labelled stacks per condition, ids "<key name>#<stream>.<n>".
  std::vector<EmbeddingStack> training_set(std::size_t per_key, std::uint64_t stream) const;
  // count stacks with a uniformly drawn condition each.
  std::vector<EmbeddingStack> heldout_set(std::size_t count, std::uint64_t stream) const;

 private:
  BlobConfig config_;
  std::vector<std::vector<std::vector<Vec>>> modes_;  // [key][layer][mode]
};

// Fraction of stacks whose classified condition equals their label.
double classification_accuracy(const std::vector<EmbeddingStack>& stacks, const PrototypePool& pool);

}  // namespace imc::pdc
