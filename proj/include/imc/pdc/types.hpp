#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "imc/common/taxonomy.hpp"

namespace imc::pdc {

using Vec = std::vector<double>;

// Image state: clean, or one of the six simulated artifacts.
enum class NoiseState { normal, ct_sparse_view, ct_low_dose, mri_motion, mri_aliasing, mri_banding, xray_motion };

inline constexpr std::array<NoiseState, 7> kAllNoiseStates = {
    NoiseState::normal,       NoiseState::ct_sparse_view, NoiseState::ct_low_dose, NoiseState::mri_motion,
    NoiseState::mri_aliasing, NoiseState::mri_banding,    NoiseState::xray_motion};

std::string_view to_string(NoiseState s);
std::optional<NoiseState> parse_noise_state(std::string_view s);
NoiseState state_of(ArtifactKind kind);
std::optional<ArtifactKind> artifact_of(NoiseState s);

struct StateKey {
  NoiseState state = NoiseState::normal;
  Modality modality = Modality::ct;

  bool is_normal() const { return state == NoiseState::normal; }
  // "state/modality", e.g. "ct_low_dose/CT". Keys order by this name.
  std::string name() const;

  bool operator==(const StateKey&) const = default;
  std::strong_ordering operator<=>(const StateKey& other) const;
};

// Throws invalid-input if a noisy state is paired with the wrong modality.
void validate(const StateKey& key);

// All valid keys: normal for each modality plus each artifact with its own
// modality, in name order.
std::vector<StateKey> all_state_keys();

// Per-sample stack of pooled per-layer embeddings.
struct EmbeddingStack {
  std::string sample_id;
  std::optional<Modality> modality;
  std::optional<NoiseState> state;
  std::vector<Vec> layers;

  std::size_t layer_count() const { return layers.size(); }
  std::size_t dim() const { return layers.empty() ? 0 : layers.front().size(); }
  bool operator==(const EmbeddingStack&) const = default;
};

// Throws invalid-input unless L >= 1, every layer has the same D >= 1 and
// every entry is finite.
void validate(const EmbeddingStack& stack);

// The stack's labelled condition. Throws invalid-input if either hint is
// missing or the pair is inconsistent.
StateKey label_of(const EmbeddingStack& stack);

double squared_distance(const Vec& a, const Vec& b);
double distance(const Vec& a, const Vec& b);
double norm(const Vec& v);

}  // namespace imc::pdc
