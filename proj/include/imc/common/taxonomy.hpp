#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace imc {

enum class Modality { ct, mri, xray };

inline constexpr std::array<Modality, 3> kAllModalities = {Modality::ct, Modality::mri, Modality::xray};

// The six simulated acquisition artifacts. Each implies one modality.
enum class ArtifactKind {
  ct_sparse_view,
  ct_low_dose,
  mri_motion,
  mri_aliasing,
  mri_banding,
  xray_motion,
};

inline constexpr std::array<ArtifactKind, 6> kAllArtifactKinds = {
    ArtifactKind::ct_sparse_view, ArtifactKind::ct_low_dose,  ArtifactKind::mri_motion,
    ArtifactKind::mri_aliasing,   ArtifactKind::mri_banding,  ArtifactKind::xray_motion,
};

std::string_view to_string(Modality m);
std::string_view to_string(ArtifactKind k);

// Accepts "CT", "MRI", "X-ray" (case-insensitive; "xray" also accepted).
std::optional<Modality> parse_modality(std::string_view s);
std::optional<ArtifactKind> parse_artifact_kind(std::string_view s);

constexpr Modality modality_of(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::ct_sparse_view:
    case ArtifactKind::ct_low_dose: return Modality::ct;
    case ArtifactKind::mri_motion:
    case ArtifactKind::mri_aliasing:
    case ArtifactKind::mri_banding: return Modality::mri;
    case ArtifactKind::xray_motion: return Modality::xray;
  }
  return Modality::ct;
}

}  // namespace imc
