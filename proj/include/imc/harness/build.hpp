#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "imc/common/taxonomy.hpp"
#include "imc/harness/dataset.hpp"
#include "imc/textnoise/textnoise.hpp"

namespace imc::harness {

struct ImagePolicy {
  ArtifactKind kind = ArtifactKind::ct_sparse_view;
  std::optional<int> severity = 2;  // nullopt: drawn per sample from {1,2,3}
};

struct TextPolicy {
  textnoise::TextKind kind = textnoise::TextKind::swap;
  double rate = 0.25;
};

struct BuildOptions {
  std::optional<ImagePolicy> image;
  std::optional<TextPolicy> text;
  std::uint64_t seed = 0;
  std::string base_dir;  // resolves relative image paths of the input
  std::string out_dir;
};

enum class EntryStatus { ok, skipped, failed };
std::string_view to_string(EntryStatus s);

// One line of the manifest: what was done to one output of one sample.
struct ManifestEntry {
  std::string id;
  std::string kind;               // artifact or text kind, "copy" for untouched images
  std::optional<int> severity;    // image entries
  std::optional<double> rate;     // character-level text entries
  std::uint64_t seed = 0;
  std::string output_path;        // relative to out_dir
  EntryStatus status = EntryStatus::ok;
  std::string message;            // why it was skipped or failed
};

struct BuildResult {
  std::vector<VqaSample> samples;  // the corrupted dataset, image paths relative to out_dir
  std::vector<ManifestEntry> manifest;
};

// Per-sample seed shared by the image and text corruption of that sample.
std::uint64_t sample_seed(std::uint64_t seed, std::string_view id);

// Writes <out>/images/<id>.<ext>, <out>/dataset.jsonl and <out>/manifest.jsonl.
// Images are re-encoded only when corrupted and copied byte-for-byte
// otherwise; input files are never written. An image kind whose modality
// differs from the sample's is recorded as skipped and the image is copied.
// Samples whose image cannot be read are recorded as failed and left out.
BuildResult build_noisy_dataset(const std::vector<VqaSample>& samples, const BuildOptions& options);

std::string dump_manifest(const std::vector<ManifestEntry>& manifest);
std::vector<ManifestEntry> load_manifest(const std::string& path);

}  // namespace imc::harness
