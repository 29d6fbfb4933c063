#include "imc/pdc/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "imc/common/error.hpp"
#include "imc/common/rng.hpp"

namespace imc::pdc {

namespace {

std::vector<StateKey> default_keys() {
  std::vector<StateKey> keys = {{NoiseState::normal, Modality::ct}};
  for (auto kind : kAllArtifactKinds) keys.push_back({state_of(kind), modality_of(kind)});
  return keys;
}

Vec random_direction(CounterRng& rng, std::size_t dim) {
  Vec v(dim);
  double n = 0.0;
  do {
    for (auto& x : v) x = sample_normal(rng);
    n = norm(v);
  } while (n == 0.0);
  for (auto& x : v) x /= n;
  return v;
}

}  // namespace

BlobBenchmark::BlobBenchmark(BlobConfig config) : config_(std::move(config)) {
  if (config_.keys.empty()) config_.keys = default_keys();
  for (const auto& k : config_.keys) validate(k);
  require(config_.layers >= 1 && config_.dim >= 1 && config_.modes >= 1, "blob benchmark needs a non-empty shape");
  require(config_.sigma >= 0.0 && config_.spacing > 0.0, "blob benchmark needs sigma >= 0 and spacing > 0");
  const std::size_t n_keys = config_.keys.size();

  modes_.assign(n_keys, std::vector<std::vector<Vec>>(config_.layers));
  if (config_.modes == 1) {
    require(config_.dim >= n_keys, "single-mode blobs need dim >= number of conditions");
    // Scaled basis vectors sit exactly `spacing` apart; each layer uses its
    // own cyclic shift of the basis plus a random offset.
    const double scale = config_.spacing / std::numbers::sqrt2;
    for (std::size_t l = 0; l < config_.layers; ++l) {
      CounterRng rng(derive_key({config_.seed, hash_string("blob.offset"), l}));
      Vec offset(config_.dim);
      for (auto& x : offset) x = rng.uniform(-1.0, 1.0);
      for (std::size_t i = 0; i < n_keys; ++i) {
        Vec mean = offset;
        mean[(i + l) % config_.dim] += scale;
        modes_[i][l].push_back(std::move(mean));
      }
    }
  } else {
    for (std::size_t i = 0; i < n_keys; ++i) {
      for (std::size_t l = 0; l < config_.layers; ++l) {
        for (std::size_t m = 0; m < config_.modes; ++m) {
          CounterRng rng(derive_key({config_.seed, hash_string("blob.mode"), i, l, m}));
          auto dir = random_direction(rng, config_.dim);
          for (auto& x : dir) x *= config_.spacing;
          modes_[i][l].push_back(std::move(dir));
        }
      }
    }
  }
}

const Vec& BlobBenchmark::mode_mean(std::size_t key, std::size_t layer, std::size_t mode) const {
  return modes_.at(key).at(layer).at(mode);
}

Vec BlobBenchmark::condition_mean(std::size_t key, std::size_t layer) const {
  Vec mean(config_.dim, 0.0);
  for (const auto& m : modes_.at(key).at(layer))
    for (std::size_t d = 0; d < config_.dim; ++d) mean[d] += m[d] / static_cast<double>(config_.modes);
  return mean;
}

EmbeddingStack BlobBenchmark::sample(std::size_t key, std::uint64_t stream, std::uint64_t index) const {
  const auto& k = config_.keys.at(key);
  EmbeddingStack s;
  s.sample_id = k.name() + "#" + std::to_string(stream) + "." + std::to_string(index);
  s.state = k.state;
  s.modality = k.modality;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    CounterRng rng(derive_key({config_.seed, hash_string("blob.sample"), stream, key, index, l}));
    Vec v = modes_[key][l][rng.below(config_.modes)];
    for (auto& x : v) x += config_.sigma * sample_normal(rng);
    s.layers.push_back(std::move(v));
  }
  return s;
}

std::vector<EmbeddingStack> BlobBenchmark::training_set(std::size_t per_key, std::uint64_t stream) const {
  std::vector<EmbeddingStack> out;
  for (std::size_t k = 0; k < config_.keys.size(); ++k)
    for (std::size_t i = 0; i < per_key; ++i) out.push_back(sample(k, stream, i));
  return out;
}

std::vector<EmbeddingStack> BlobBenchmark::heldout_set(std::size_t count, std::uint64_t stream) const {
  std::vector<EmbeddingStack> out;
  CounterRng pick(derive_key({config_.seed, hash_string("blob.heldout"), stream}));
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample(pick.below(config_.keys.size()), stream, i));
  return out;
}

double classification_accuracy(const std::vector<EmbeddingStack>& stacks, const PrototypePool& pool) {
  require(!stacks.empty(), "no stacks to score");
  std::size_t correct = 0;
  for (const auto& s : stacks) correct += classify(s, pool).final == label_of(s);
  return static_cast<double>(correct) / static_cast<double>(stacks.size());
}

}  // namespace imc::pdc
