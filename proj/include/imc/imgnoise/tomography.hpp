#pragma once

#include <cstddef>
#include <vector>

#include "imc/imgnoise/image.hpp"

namespace imc::imgnoise {

// Parallel-beam projections; values is angles.size() x detector_bins,
// row-major. Detector bin b sits at offset b - (detector_bins - 1) / 2
// pixels from the rotation center.
struct Sinogram {
  std::vector<double> angles;
  std::size_t detector_bins = 0;
  std::vector<double> values;

  double at(std::size_t angle, std::size_t bin) const { return values[angle * detector_bins + bin]; }
};

// ceil(sqrt(2) * max(width, height)).
std::size_t detector_bins_for(std::size_t width, std::size_t height);

// k * pi / n for k = 0 .. n-1.
std::vector<double> projection_angles(std::size_t n_angles);

// Line integrals at angles k*pi/n_angles. Each pixel is split into 3x3
// sub-pixels whose mass is shared linearly between the two detector bins
// they project between, so every projection carries exactly the image mass.
Sinogram radon(const GrayImage& img, std::size_t n_angles);

// Ramp-filtered back-projection, clamped to [0, 1]. The ramp filter is the
// discrete Ram-Lak kernel applied per projection in the frequency domain
// with zero-padding to a power of two.
GrayImage fbp(const Sinogram& sino, std::size_t out_w, std::size_t out_h);

void validate(const Sinogram& sino);

}  // namespace imc::imgnoise
