#include "imc/common/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace imc {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::ct: return "CT";
    case Modality::mri: return "MRI";
    case Modality::xray: return "X-ray";
  }
  return "?";
}

std::string_view to_string(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::ct_sparse_view: return "ct_sparse_view";
    case ArtifactKind::ct_low_dose: return "ct_low_dose";
    case ArtifactKind::mri_motion: return "mri_motion";
    case ArtifactKind::mri_aliasing: return "mri_aliasing";
    case ArtifactKind::mri_banding: return "mri_banding";
    case ArtifactKind::xray_motion: return "xray_motion";
  }
  return "?";
}

std::optional<Modality> parse_modality(std::string_view s) {
  const auto l = lower(s);
  if (l == "ct") return Modality::ct;
  if (l == "mri") return Modality::mri;
  if (l == "x-ray" || l == "xray") return Modality::xray;
  return std::nullopt;
}

std::optional<ArtifactKind> parse_artifact_kind(std::string_view s) {
  const auto l = lower(s);
  for (auto k : kAllArtifactKinds) {
    if (to_string(k) == l) return k;
  }
  return std::nullopt;
}

}  // namespace imc
