#pragma once

#include <cstdint>
#include <vector>

#include "imc/common/taxonomy.hpp"
#include "imc/imgnoise/image.hpp"
#include "imc/imgnoise/severity.hpp"

namespace imc::imgnoise {

struct CorruptionSpec {
  ArtifactKind kind = ArtifactKind::ct_sparse_view;
  int severity = 2;
  std::uint64_t seed = 0;
};

// ---- CT -------------------------------------------------------------------

GrayImage ct_sparse_view(const GrayImage& img, const SparseViewParams& params);
GrayImage ct_sparse_view(const GrayImage& img, const CorruptionSpec& spec,
                         const SeverityTable& table = SeverityTable::builtin());

GrayImage ct_low_dose(const GrayImage& img, const LowDoseParams& params, std::uint64_t seed);
GrayImage ct_low_dose(const GrayImage& img, const CorruptionSpec& spec,
                      const SeverityTable& table = SeverityTable::builtin());

// ---- MRI ------------------------------------------------------------------

// Rigid translation applied to a contiguous block of phase-encode lines.
// Lines are numbered in acquisition order, i.e. by signed frequency from
// -height/2 upward.
struct MotionSegment {
  std::size_t first_line = 0;
  std::size_t end_line = 0;  // exclusive
  double dx = 0.0;
  double dy = 0.0;
};

std::vector<MotionSegment> random_motion_schedule(std::size_t height, const MotionParams& params,
                                                  std::uint64_t seed);

// Applies the k-space phase ramp of each segment's translation, inverse
// transforms, takes the magnitude and rescales into [0, 1].
GrayImage apply_kspace_motion(const GrayImage& img, const std::vector<MotionSegment>& schedule);

GrayImage mri_motion(const GrayImage& img, const MotionParams& params, std::uint64_t seed);
GrayImage mri_motion(const GrayImage& img, const CorruptionSpec& spec,
                     const SeverityTable& table = SeverityTable::builtin());

// Keeps every r-th phase-encode line. The result is the mean of r copies of
// the image shifted by multiples of height/r (exact when r divides height).
GrayImage mri_aliasing(const GrayImage& img, const AliasingParams& params);
GrayImage mri_aliasing(const GrayImage& img, const CorruptionSpec& spec,
                       const SeverityTable& table = SeverityTable::builtin());

GrayImage apply_banding(const GrayImage& img, const BandingParams& params, double phase);
GrayImage mri_banding(const GrayImage& img, const BandingParams& params, std::uint64_t seed);
GrayImage mri_banding(const GrayImage& img, const CorruptionSpec& spec,
                      const SeverityTable& table = SeverityTable::builtin());

// ---- X-ray ----------------------------------------------------------------

struct Kernel {
  std::size_t size = 1;  // odd; weights are size x size, row-major
  std::vector<double> weights;
};

// Line of `length` unit-spaced samples through the kernel center at
// `angle` radians, bilinearly splatted and normalized to sum 1.
Kernel motion_kernel(std::size_t length, double angle);

// Periodic-boundary convolution followed by contrast compression about 0.5.
GrayImage apply_xray_motion(const GrayImage& img, std::size_t length, double angle, double contrast);
GrayImage xray_motion(const GrayImage& img, const XrayMotionParams& params, std::uint64_t seed);
GrayImage xray_motion(const GrayImage& img, const CorruptionSpec& spec,
                      const SeverityTable& table = SeverityTable::builtin());

// ---- dispatch -------------------------------------------------------------

GrayImage corrupt_image(const GrayImage& img, const CorruptionSpec& spec,
                        const SeverityTable& table = SeverityTable::builtin());

}  // namespace imc::imgnoise
