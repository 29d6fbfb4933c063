#include "imc/pdc/types.hpp"

#include <algorithm>
#include <cmath>

#include "imc/common/error.hpp"

namespace imc::pdc {

std::string_view to_string(NoiseState s) {
  if (auto kind = artifact_of(s)) return imc::to_string(*kind);
  return "normal";
}

std::optional<NoiseState> parse_noise_state(std::string_view s) {
  if (s == "normal") return NoiseState::normal;
  if (auto kind = parse_artifact_kind(s)) return state_of(*kind);
  return std::nullopt;
}

NoiseState state_of(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::ct_sparse_view: return NoiseState::ct_sparse_view;
    case ArtifactKind::ct_low_dose: return NoiseState::ct_low_dose;
    case ArtifactKind::mri_motion: return NoiseState::mri_motion;
    case ArtifactKind::mri_aliasing: return NoiseState::mri_aliasing;
    case ArtifactKind::mri_banding: return NoiseState::mri_banding;
    case ArtifactKind::xray_motion: return NoiseState::xray_motion;
  }
  return NoiseState::normal;
}

std::optional<ArtifactKind> artifact_of(NoiseState s) {
  switch (s) {
    case NoiseState::normal: return std::nullopt;
    case NoiseState::ct_sparse_view: return ArtifactKind::ct_sparse_view;
    case NoiseState::ct_low_dose: return ArtifactKind::ct_low_dose;
    case NoiseState::mri_motion: return ArtifactKind::mri_motion;
    case NoiseState::mri_aliasing: return ArtifactKind::mri_aliasing;
    case NoiseState::mri_banding: return ArtifactKind::mri_banding;
    case NoiseState::xray_motion: return ArtifactKind::xray_motion;
  }
  return std::nullopt;
}

std::string StateKey::name() const {
  return std::string(to_string(state)) + "/" + std::string(imc::to_string(modality));
}

std::strong_ordering StateKey::operator<=>(const StateKey& other) const {
  const auto c = name().compare(other.name());
  return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
}

void validate(const StateKey& key) {
  if (auto kind = artifact_of(key.state))
    require(modality_of(*kind) == key.modality,
            "state " + std::string(to_string(key.state)) + " does not occur in modality " +
                std::string(imc::to_string(key.modality)));
}

std::vector<StateKey> all_state_keys() {
  std::vector<StateKey> keys;
  for (auto m : kAllModalities) keys.push_back({NoiseState::normal, m});
  for (auto kind : kAllArtifactKinds) keys.push_back({state_of(kind), modality_of(kind)});
  std::sort(keys.begin(), keys.end());
  return keys;
}

void validate(const EmbeddingStack& stack) {
  const std::string who = "stack '" + stack.sample_id + "'";
  require(!stack.layers.empty(), who + " has no layers");
  const auto d = stack.layers.front().size();
  require(d > 0, who + " has empty layer vectors");
  for (std::size_t l = 0; l < stack.layers.size(); ++l) {
    require(stack.layers[l].size() == d, who + " layer " + std::to_string(l) + " has dimension " +
                                             std::to_string(stack.layers[l].size()) + ", expected " +
                                             std::to_string(d));
    require(std::all_of(stack.layers[l].begin(), stack.layers[l].end(), [](double v) { return std::isfinite(v); }),
            who + " layer " + std::to_string(l) + " contains a non-finite value");
  }
}

StateKey label_of(const EmbeddingStack& stack) {
  require(stack.state.has_value(), "stack '" + stack.sample_id + "' has no state label");
  require(stack.modality.has_value(), "stack '" + stack.sample_id + "' has no modality label");
  StateKey key{*stack.state, *stack.modality};
  validate(key);
  return key;
}

double squared_distance(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double distance(const Vec& a, const Vec& b) { return std::sqrt(squared_distance(a, b)); }

double norm(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace imc::pdc
