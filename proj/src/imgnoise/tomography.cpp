#include "imc/imgnoise/tomography.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "fft.hpp"
#include "imc/common/error.hpp"
#include "imc/common/parallel.hpp"

namespace imc::imgnoise {

namespace {

constexpr std::size_t kSplat = 3;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Frequency response of the spatial Ram-Lak kernel (h[0] = 1/4,
// h[odd n] = -1/(pi n)^2). Building the ramp from the spatial kernel avoids
// the DC offset of sampling |f| directly.
std::vector<double> ramp_response(std::size_t padded) {
  std::vector<detail::Complex> kernel(padded);
  kernel[0] = 0.25;
  for (std::size_t n = 1; n <= padded / 2; n += 2) {
    const double v = -1.0 / std::pow(std::numbers::pi * static_cast<double>(n), 2);
    kernel[n] = v;
    kernel[padded - n] = v;
  }
  detail::fft(kernel, false);
  std::vector<double> response(padded);
  for (std::size_t i = 0; i < padded; ++i) response[i] = 2.0 * kernel[i].real();
  return response;
}

}  // namespace

std::size_t detector_bins_for(std::size_t width, std::size_t height) {
  return static_cast<std::size_t>(
      std::ceil(std::numbers::sqrt2 * static_cast<double>(std::max(width, height))));
}

std::vector<double> projection_angles(std::size_t n_angles) {
  std::vector<double> angles(n_angles);
  for (std::size_t k = 0; k < n_angles; ++k)
    angles[k] = static_cast<double>(k) * std::numbers::pi / static_cast<double>(n_angles);
  return angles;
}

void validate(const Sinogram& sino) {
  require(!sino.angles.empty(), "sinogram has no projection angles");
  require(sino.detector_bins > 0, "sinogram has no detector bins");
  require(sino.values.size() == sino.angles.size() * sino.detector_bins,
          "sinogram value count does not match angles x bins");
  for (std::size_t i = 0; i < sino.angles.size(); ++i) {
    const double a = sino.angles[i];
    require(std::isfinite(a) && a >= 0.0 && a < std::numbers::pi,
            "projection angle outside [0, pi)");
    require(i == 0 || a > sino.angles[i - 1], "projection angles must be strictly increasing");
  }
  require(std::all_of(sino.values.begin(), sino.values.end(), [](double v) { return std::isfinite(v); }),
          "sinogram contains non-finite values");
}

Sinogram radon(const GrayImage& img, std::size_t n_angles) {
  validate(img);
  require(n_angles >= 2, "radon needs at least 2 angles");

  Sinogram sino;
  sino.angles = projection_angles(n_angles);
  sino.detector_bins = detector_bins_for(img.width, img.height);
  sino.values.assign(n_angles * sino.detector_bins, 0.0);

  const double cx = (static_cast<double>(img.width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(img.height) - 1.0) / 2.0;
  const double det_center = (static_cast<double>(sino.detector_bins) - 1.0) / 2.0;
  const std::size_t bins = sino.detector_bins;

  // Sub-pixel offsets: each pixel is split into kSplat x kSplat equal parts.
  std::array<double, kSplat> offsets{};
  for (std::size_t i = 0; i < kSplat; ++i)
    offsets[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(kSplat) - 0.5;
  // Corner sub-pixels can overhang the outermost bin by a fraction of a
  // pixel; clamping keeps their full mass on the detector.
  const double max_bin = static_cast<double>(bins - 1);
  constexpr double part = 1.0 / (kSplat * kSplat);

  parallel_for(n_angles, [&](std::size_t a) {
    const double c = std::cos(sino.angles[a]), s = std::sin(sino.angles[a]);
    double* proj = sino.values.data() + a * bins;
    for (std::size_t y = 0; y < img.height; ++y) {
      for (std::size_t x = 0; x < img.width; ++x) {
        const double v = img.at(x, y) * part;
        if (v == 0.0) continue;
        const double base = (static_cast<double>(x) - cx) * c + (static_cast<double>(y) - cy) * s + det_center;
        for (double oy : offsets) {
          for (double ox : offsets) {
            const double t = std::clamp(base + ox * c + oy * s, 0.0, max_bin);
            const double lo = std::floor(t);
            const double frac = t - lo;
            const auto b = static_cast<std::size_t>(lo);
            proj[b] += v * (1.0 - frac);
            if (frac > 0.0) proj[b + 1] += v * frac;
          }
        }
      }
    }
  });
  return sino;
}

GrayImage fbp(const Sinogram& sino, std::size_t out_w, std::size_t out_h) {
  validate(sino);
  require(out_w >= kMinImageSide && out_h >= kMinImageSide, "fbp output must be at least 8x8");

  const std::size_t n_angles = sino.angles.size();
  const std::size_t bins = sino.detector_bins;
  const std::size_t padded = std::max<std::size_t>(64, next_pow2(2 * bins));
  const auto response = ramp_response(padded);

  std::vector<double> filtered(n_angles * bins);
  parallel_for(n_angles, [&](std::size_t a) {
    std::vector<detail::Complex> buf(padded);
    for (std::size_t b = 0; b < bins; ++b) buf[b] = sino.at(a, b);
    detail::fft(buf, false);
    for (std::size_t i = 0; i < padded; ++i) buf[i] *= response[i];
    detail::fft(buf, true);
    for (std::size_t b = 0; b < bins; ++b) filtered[a * bins + b] = buf[b].real();
  });

  std::vector<double> cosines(n_angles), sines(n_angles);
  for (std::size_t a = 0; a < n_angles; ++a) {
    cosines[a] = std::cos(sino.angles[a]);
    sines[a] = std::sin(sino.angles[a]);
  }

  GrayImage out(out_w, out_h);
  const double cx = (static_cast<double>(out_w) - 1.0) / 2.0;
  const double cy = (static_cast<double>(out_h) - 1.0) / 2.0;
  const double det_center = (static_cast<double>(bins) - 1.0) / 2.0;
  const double scale = std::numbers::pi / (2.0 * static_cast<double>(n_angles));

  parallel_for(out_h, [&](std::size_t y) {
    const double dy = static_cast<double>(y) - cy;
    for (std::size_t x = 0; x < out_w; ++x) {
      const double dx = static_cast<double>(x) - cx;
      double sum = 0.0;
      for (std::size_t a = 0; a < n_angles; ++a) {
        const double t = dx * cosines[a] + dy * sines[a] + det_center;
        if (t < 0.0 || t > static_cast<double>(bins - 1)) continue;
        const double lo = std::floor(t);
        const double frac = t - lo;
        const auto b = static_cast<std::size_t>(lo);
        const double* proj = filtered.data() + a * bins;
        sum += frac > 0.0 ? proj[b] * (1.0 - frac) + proj[b + 1] * frac : proj[b];
      }
      out.at(x, y) = sum * scale;
    }
  });
  clamp_unit(out);
  return out;
}

}  // namespace imc::imgnoise
