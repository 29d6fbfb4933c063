#include "imc/pdc/calibration.hpp"

#include <cmath>

#include "imc/common/error.hpp"
#include "imc/common/parallel.hpp"

namespace imc::pdc {

namespace {

std::string triple(const StateKey& key, std::size_t layer, std::size_t cluster) {
  return "(" + key.name() + ", layer " + std::to_string(layer) + ", cluster " + std::to_string(cluster) + ")";
}

// Normalized mean of the directions; degenerate when the mean is zero.
CalibrationVector mean_direction(const std::vector<Vec>& dirs) {
  CalibrationVector out;
  out.support = dirs.size();
  out.direction.assign(dirs.front().size(), 0.0);
  for (const auto& d : dirs)
    for (std::size_t i = 0; i < d.size(); ++i) out.direction[i] += d[i] / static_cast<double>(dirs.size());
  const double n = norm(out.direction);
  if (n > 0.0) {
    for (auto& x : out.direction) x /= n;
  } else {
    out.degenerate = true;
    std::fill(out.direction.begin(), out.direction.end(), 0.0);
  }
  return out;
}

CalibrationVector principal_direction(const std::vector<Vec>& dirs, const PcaOptions& options) {
  if (dirs.size() < 2) return mean_direction(dirs);
  try {
    CalibrationVector out;
    out.direction = pca_first_component(dirs, options);
    out.support = dirs.size();
    return out;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::degenerate_input) throw;
    return mean_direction(dirs);
  }
}

}  // namespace

const CalibrationVector& CalibrationSet::at(const StateKey& key, std::size_t layer, std::size_t cluster) const {
  const auto it = vectors.find(key);
  if (it == vectors.end() || layer >= it->second.size() || cluster >= it->second[layer].size())
    fail(ErrorCode::missing_vector, "no calibration vector for " + triple(key, layer, cluster));
  return it->second[layer][cluster];
}

void validate(const CalibrationSet& cal) {
  require(std::isfinite(cal.alpha) && cal.alpha >= 0.0, "calibration weight must be finite and >= 0");
  require(cal.k >= 1 && cal.layers >= 1 && cal.dim >= 1, "calibration set has an empty shape");
  for (const auto& [key, layers] : cal.vectors) {
    validate(key);
    require(!key.is_normal(), "calibration set holds a vector for the normal state");
    require(layers.size() == cal.layers, "calibration condition " + key.name() + " has the wrong number of layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      require(layers[l].size() == cal.k, "calibration " + key.name() + " layer " + std::to_string(l) +
                                             " does not have k vectors");
      for (std::size_t c = 0; c < layers[l].size(); ++c) {
        const auto& v = layers[l][c];
        require(v.direction.size() == cal.dim, "calibration vector " + triple(key, l, c) + " has the wrong dimension");
        if (!v.degenerate)
          require(std::fabs(norm(v.direction) - 1.0) <= 1e-9, "calibration vector " + triple(key, l, c) +
                                                                  " is not unit length");
      }
    }
  }
}

CalibrationSet compute_calibration(const std::vector<CalibrationPair>& pairs, const PrototypePool& pool, double alpha,
                                   const PcaOptions& options) {
  validate(pool);
  require(std::isfinite(alpha) && alpha >= 0.0, "calibration weight must be finite and >= 0");

  std::map<StateKey, std::vector<const CalibrationPair*>> by_key;
  for (const auto& p : pairs) {
    validate(p.clean);
    validate(p.noisy);
    const auto key = label_of(p.noisy);
    require(!key.is_normal(), "pair '" + p.noisy.sample_id + "' has a normal noisy side");
    require(p.clean.layer_count() == pool.layers && p.noisy.layer_count() == pool.layers &&
                p.clean.dim() == pool.dim && p.noisy.dim() == pool.dim,
            "pair '" + p.noisy.sample_id + "' does not match the pool's shape");
    by_key[key].push_back(&p);
  }

  CalibrationSet cal;
  cal.alpha = alpha;
  cal.k = pool.k;
  cal.layers = pool.layers;
  cal.dim = pool.dim;

  std::vector<std::pair<StateKey, std::size_t>> jobs;
  for (const auto& [key, layers] : pool.conditions) {
    if (key.is_normal()) continue;
    require(by_key.count(key), "no calibration pairs for condition " + key.name());
    for (std::size_t l = 0; l < pool.layers; ++l) jobs.emplace_back(key, l);
  }
  std::vector<std::vector<CalibrationVector>> results(jobs.size());

  parallel_for(jobs.size(), [&](std::size_t j) {
    const auto& [key, layer] = jobs[j];
    const auto& protos = pool.at(key, layer);
    std::vector<std::vector<Vec>> groups(pool.k);
    std::vector<Vec> all;
    for (const auto* p : by_key.at(key)) {
      const auto& noisy = p->noisy.layers[layer];
      const auto cluster = pool.member_cluster(key, layer, p->noisy.sample_id)
                               .value_or(nearest_center(protos.centers, noisy));
      Vec dir(pool.dim);
      for (std::size_t d = 0; d < pool.dim; ++d) dir[d] = p->clean.layers[layer][d] - noisy[d];
      groups[cluster].push_back(dir);
      all.push_back(std::move(dir));
    }
    const auto layer_wide = principal_direction(all, options);
    auto& out = results[j];
    for (std::size_t c = 0; c < pool.k; ++c) {
      if (groups[c].empty()) {
        out.push_back(layer_wide);
        out.back().support = 0;
      } else {
        out.push_back(principal_direction(groups[c], options));
      }
    }
  });

  for (std::size_t j = 0; j < jobs.size(); ++j) {
    auto& layers = cal.vectors[jobs[j].first];
    layers.resize(cal.layers);
    layers[jobs[j].second] = std::move(results[j]);
  }
  return cal;
}

EmbeddingStack calibrate(const EmbeddingStack& stack, const ClassificationResult& result, const CalibrationSet& cal,
                         const PrototypePool& pool, std::optional<double> alpha) {
  validate(stack);
  require(!result.final.is_normal(), "stack '" + stack.sample_id + "' is classified normal; nothing to calibrate");
  require(stack.layer_count() == pool.layers && stack.dim() == pool.dim,
          "stack '" + stack.sample_id + "' does not match the pool's shape");
  const double weight = alpha.value_or(cal.alpha);
  require(std::isfinite(weight) && weight >= 0.0, "calibration weight must be finite and >= 0");

  EmbeddingStack out = stack;
  for (std::size_t l = 0; l < stack.layer_count(); ++l) {
    const auto cluster = nearest_center(pool.at(result.final, l).centers, stack.layers[l]);
    const auto& v = cal.at(result.final, l, cluster);
    require(v.direction.size() == stack.dim(), "calibration vector " + triple(result.final, l, cluster) +
                                                   " has the wrong dimension");
    // Skipping a zero weight keeps the output bit-identical (-0.0 + 0.0 is +0.0).
    if (weight == 0.0) continue;
    for (std::size_t d = 0; d < stack.dim(); ++d) out.layers[l][d] += weight * v.direction[d];
  }
  return out;
}

PipelineResult pipeline(const EmbeddingStack& stack, const PrototypePool& pool, const CalibrationSet& cal,
                        std::optional<double> alpha) {
  PipelineResult r;
  r.classification = classify(stack, pool);
  if (r.classification.final.is_normal()) {
    r.stack = stack;
    return r;
  }
  r.stack = calibrate(stack, r.classification, cal, pool, alpha);
  r.calibrated = true;
  return r;
}

}  // namespace imc::pdc
