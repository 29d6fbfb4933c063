#include "imc/pdc/pool.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "imc/common/error.hpp"
#include "imc/common/parallel.hpp"
#include "imc/common/rng.hpp"

namespace imc::pdc {

const LayerPrototypes& PrototypePool::at(const StateKey& key, std::size_t layer) const {
  const auto it = conditions.find(key);
  require(it != conditions.end(), "prototype pool has no condition " + key.name());
  require(layer < it->second.size(), "prototype pool has no layer " + std::to_string(layer));
  return it->second[layer];
}

std::optional<std::size_t> PrototypePool::member_cluster(const StateKey& key, std::size_t layer,
                                                         const std::string& sample_id) const {
  const auto& protos = at(key, layer);
  for (std::size_t c = 0; c < protos.members.size(); ++c) {
    const auto& ids = protos.members[c];
    if (std::binary_search(ids.begin(), ids.end(), sample_id)) return c;
  }
  return std::nullopt;
}

void validate(const PrototypePool& pool) {
  require(pool.k >= 1 && pool.layers >= 1 && pool.dim >= 1, "prototype pool has an empty shape");
  require(!pool.conditions.empty(), "prototype pool has no conditions");
  for (const auto& [key, layers] : pool.conditions) {
    validate(key);
    require(layers.size() == pool.layers, "condition " + key.name() + " has the wrong number of layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& p = layers[l];
      const std::string where = key.name() + " layer " + std::to_string(l);
      require(p.centers.size() == pool.k, where + " does not have exactly k centers");
      require(p.members.size() == pool.k, where + " does not have k member lists");
      for (const auto& c : p.centers) require(c.size() == pool.dim, where + " has a center of the wrong dimension");
    }
  }
}

PrototypePool build_pool(const std::vector<EmbeddingStack>& training, std::size_t k, std::uint64_t seed,
                         const KMeansOptions& options) {
  require(k >= 1, "prototype count must be at least 1");
  require(!training.empty(), "no training stacks");
  for (const auto& s : training) validate(s);

  PrototypePool pool;
  pool.k = k;
  pool.layers = training.front().layer_count();
  pool.dim = training.front().dim();

  std::map<StateKey, std::vector<const EmbeddingStack*>> by_key;
  for (const auto& s : training) {
    require(s.layer_count() == pool.layers && s.dim() == pool.dim,
            "training stack '" + s.sample_id + "' does not match the first stack's shape");
    by_key[label_of(s)].push_back(&s);
  }
  for (auto& [key, members] : by_key) {
    require(members.size() >= k, "condition " + key.name() + " has " + std::to_string(members.size()) +
                                     " samples, fewer than k = " + std::to_string(k));
    // Clustering sees samples in id order so the pool does not depend on
    // the order of the training file.
    std::sort(members.begin(), members.end(),
              [](const EmbeddingStack* a, const EmbeddingStack* b) { return a->sample_id < b->sample_id; });
    for (std::size_t i = 1; i < members.size(); ++i)
      require(members[i]->sample_id != members[i - 1]->sample_id,
              "duplicate sample id '" + members[i]->sample_id + "' in condition " + key.name());
  }

  std::vector<std::pair<StateKey, std::size_t>> jobs;
  for (const auto& [key, members] : by_key)
    for (std::size_t l = 0; l < pool.layers; ++l) jobs.emplace_back(key, l);
  std::vector<LayerPrototypes> results(jobs.size());

  parallel_for(jobs.size(), [&](std::size_t j) {
    const auto& [key, layer] = jobs[j];
    const auto& members = by_key.at(key);
    std::vector<Vec> points;
    points.reserve(members.size());
    for (const auto* s : members) points.push_back(s->layers[layer]);
    const auto km = kmeans(points, k, derive_key({seed, hash_string(key.name()), layer}), options);
    auto& out = results[j];
    out.centers = km.centers;
    out.members.assign(k, {});
    for (std::size_t i = 0; i < members.size(); ++i) out.members[km.assignment[i]].push_back(members[i]->sample_id);
  });

  for (std::size_t j = 0; j < jobs.size(); ++j) {
    auto& layers = pool.conditions[jobs[j].first];
    layers.resize(pool.layers);
    layers[jobs[j].second] = std::move(results[j]);
  }
  return pool;
}

std::size_t nearest_center(const std::vector<Vec>& centers, const Vec& v) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = squared_distance(v, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

ClassificationResult classify(const EmbeddingStack& stack, const PrototypePool& pool) {
  validate(stack);
  require(stack.layer_count() == pool.layers, "stack '" + stack.sample_id + "' has " +
                                                  std::to_string(stack.layer_count()) + " layers, pool has " +
                                                  std::to_string(pool.layers));
  require(stack.dim() == pool.dim, "stack '" + stack.sample_id + "' has dimension " + std::to_string(stack.dim()) +
                                       ", pool has " + std::to_string(pool.dim));

  ClassificationResult result;
  std::map<StateKey, double> winning_distance;
  for (std::size_t l = 0; l < pool.layers; ++l) {
    LayerVote best;
    double best_d2 = std::numeric_limits<double>::infinity();
    // Conditions iterate in key order, clusters in index order; the first
    // minimum wins.
    for (const auto& [key, layers] : pool.conditions) {
      const auto& centers = layers[l].centers;
      for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d2 = squared_distance(stack.layers[l], centers[c]);
        if (d2 < best_d2) {
          best_d2 = d2;
          best = {key, c, 0.0};
        }
      }
    }
    best.distance = std::sqrt(best_d2);
    result.per_layer.push_back(best);
    ++result.vote_counts[best.key];
    winning_distance[best.key] += best.distance;
  }

  auto better = [&](const StateKey& a, const StateKey& b) {
    const auto va = result.vote_counts.at(a), vb = result.vote_counts.at(b);
    if (va != vb) return va > vb;
    const double da = winning_distance.at(a), db = winning_distance.at(b);
    if (da != db) return da < db;
    return a < b;
  };
  auto it = result.vote_counts.begin();
  result.final = it->first;
  for (++it; it != result.vote_counts.end(); ++it)
    if (better(it->first, result.final)) result.final = it->first;
  return result;
}

}  // namespace imc::pdc
