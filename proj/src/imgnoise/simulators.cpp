#include "imc/imgnoise/simulators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "fft.hpp"
#include "imc/common/defaults.hpp"
#include "imc/common/error.hpp"
#include "imc/common/parallel.hpp"
#include "imc/common/rng.hpp"
#include "imc/imgnoise/tomography.hpp"

namespace imc::imgnoise {

namespace {

using detail::Complex;

void check_kind(const CorruptionSpec& spec, ArtifactKind expected) {
  require(spec.kind == expected, "corruption spec kind '" + std::string(to_string(spec.kind)) +
                                     "' passed to the " + std::string(to_string(expected)) + " simulator");
}

std::uint64_t stream_key(std::uint64_t seed, ArtifactKind kind, std::uint64_t index = 0) {
  return derive_key({seed, hash_string(to_string(kind)), index});
}

std::vector<Complex> to_complex(const GrayImage& img) {
  return {img.pixels.begin(), img.pixels.end()};
}

// Magnitude of an inverse transform, scaled down only if it exceeds 1.
GrayImage magnitude_image(const std::vector<Complex>& data, std::size_t w, std::size_t h) {
  GrayImage out(w, h);
  double peak = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.pixels[i] = std::abs(data[i]);
    peak = std::max(peak, out.pixels[i]);
  }
  if (peak > 1.0) {
    for (auto& v : out.pixels) v /= peak;
  }
  clamp_unit(out);
  return out;
}

// FFT row holding acquisition line `line` (lines ordered by signed frequency).
std::size_t fft_row_of_line(std::size_t line, std::size_t height) {
  const long freq = static_cast<long>(line) - static_cast<long>(height / 2);
  const long h = static_cast<long>(height);
  return static_cast<std::size_t>((freq % h + h) % h);
}

}  // namespace

// ---- CT -------------------------------------------------------------------

GrayImage ct_sparse_view(const GrayImage& img, const SparseViewParams& params) {
  return fbp(radon(img, params.n_angles), img.width, img.height);
}

GrayImage ct_sparse_view(const GrayImage& img, const CorruptionSpec& spec, const SeverityTable& table) {
  check_kind(spec, ArtifactKind::ct_sparse_view);
  return ct_sparse_view(img, table.sparse_view(spec.severity));
}

GrayImage ct_low_dose(const GrayImage& img, const LowDoseParams& params, std::uint64_t seed) {
  require(params.i0 > 0.0, "photon budget must be positive");
  auto sino = radon(img, defaults::kDenseViewAngles);
  if (std::isinf(params.i0)) return fbp(sino, img.width, img.height);

  const double peak = *std::max_element(sino.values.begin(), sino.values.end());
  // Strongest attenuation along any ray is exactly 1e-3.
  const double mu = peak > 0.0 ? std::log(1e3) / peak : 1.0;
  const std::size_t bins = sino.detector_bins;

  parallel_for(sino.angles.size(), [&](std::size_t a) {
    for (std::size_t b = 0; b < bins; ++b) {
      const std::size_t index = a * bins + b;
      double& value = sino.values[index];
      CounterRng rng(stream_key(seed, ArtifactKind::ct_low_dose, index));
      const double expected = params.i0 * std::exp(-mu * value);
      const auto counts = static_cast<double>(sample_poisson(rng, expected));
      value = -std::log(std::max(counts, 1.0) / params.i0) / mu;
    }
  });
  return fbp(sino, img.width, img.height);
}

GrayImage ct_low_dose(const GrayImage& img, const CorruptionSpec& spec, const SeverityTable& table) {
  check_kind(spec, ArtifactKind::ct_low_dose);
  return ct_low_dose(img, table.low_dose(spec.severity), spec.seed);
}

// ---- MRI ------------------------------------------------------------------

std::vector<MotionSegment> random_motion_schedule(std::size_t height, const MotionParams& params,
                                                  std::uint64_t seed) {
  require(params.n_events >= 1, "motion needs at least one event");
  require(params.max_shift >= 0.0, "motion shift bound must be non-negative");
  const std::size_t events = std::min(params.n_events, height);
  CounterRng rng(stream_key(seed, ArtifactKind::mri_motion));

  // events-1 distinct cut points from 1..height-1 (partial Fisher-Yates).
  std::vector<std::size_t> candidates(height - 1);
  std::iota(candidates.begin(), candidates.end(), std::size_t{1});
  for (std::size_t i = 0; i + 1 < events; ++i) {
    const auto j = i + rng.below(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
  }
  std::vector<std::size_t> cuts(candidates.begin(), candidates.begin() + static_cast<long>(events - 1));
  std::sort(cuts.begin(), cuts.end());
  cuts.insert(cuts.begin(), 0);
  cuts.push_back(height);

  std::vector<MotionSegment> schedule;
  for (std::size_t e = 0; e < events; ++e) {
    const double radius = params.max_shift * std::sqrt(rng.uniform());
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    schedule.push_back({cuts[e], cuts[e + 1], radius * std::cos(theta), radius * std::sin(theta)});
  }
  return schedule;
}

GrayImage apply_kspace_motion(const GrayImage& img, const std::vector<MotionSegment>& schedule) {
  validate(img);
  const std::size_t w = img.width, h = img.height;
  auto kspace = to_complex(img);
  detail::fft2(kspace, w, h, false);

  for (const auto& seg : schedule) {
    require(seg.first_line <= seg.end_line && seg.end_line <= h, "motion segment outside k-space");
    for (std::size_t line = seg.first_line; line < seg.end_line; ++line) {
      const std::size_t row = fft_row_of_line(line, h);
      const double fy = static_cast<double>(detail::signed_frequency(row, h)) / static_cast<double>(h);
      for (std::size_t col = 0; col < w; ++col) {
        const double fx = static_cast<double>(detail::signed_frequency(col, w)) / static_cast<double>(w);
        const double phase = -2.0 * std::numbers::pi * (fx * seg.dx + fy * seg.dy);
        kspace[row * w + col] *= std::polar(1.0, phase);
      }
    }
  }
  detail::fft2(kspace, w, h, true);
  return magnitude_image(kspace, w, h);
}

GrayImage mri_motion(const GrayImage& img, const MotionParams& params, std::uint64_t seed) {
  validate(img);
  return apply_kspace_motion(img, random_motion_schedule(img.height, params, seed));
}

GrayImage mri_motion(const GrayImage& img, const CorruptionSpec& spec, const SeverityTable& table) {
  check_kind(spec, ArtifactKind::mri_motion);
  return mri_motion(img, table.motion(spec.severity), spec.seed);
}

GrayImage mri_aliasing(const GrayImage& img, const AliasingParams& params) {
  validate(img);
  require(params.r >= 1, "undersampling factor must be at least 1");
  const std::size_t w = img.width, h = img.height;
  auto kspace = to_complex(img);
  detail::fft2(kspace, w, h, false);
  // Lines are kept by signed frequency so the mask is symmetric about DC.
  const long r = static_cast<long>(params.r);
  for (std::size_t row = 0; row < h; ++row) {
    if (detail::signed_frequency(row, h) % r == 0) continue;
    std::fill_n(kspace.begin() + static_cast<long>(row * w), w, Complex{});
  }
  detail::fft2(kspace, w, h, true);
  return magnitude_image(kspace, w, h);
}

GrayImage mri_aliasing(const GrayImage& img, const CorruptionSpec& spec, const SeverityTable& table) {
  check_kind(spec, ArtifactKind::mri_aliasing);
  return mri_aliasing(img, table.aliasing(spec.severity));
}

GrayImage apply_banding(const GrayImage& img, const BandingParams& params, double phase) {
  validate(img);
  GrayImage out = img;
  const double h = static_cast<double>(img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    const double gain =
        1.0 + params.amplitude * std::sin(2.0 * std::numbers::pi * params.stripes * static_cast<double>(y) / h + phase);
    for (std::size_t x = 0; x < img.width; ++x) out.at(x, y) *= gain;
  }
  clamp_unit(out);
  return out;
}

GrayImage mri_banding(const GrayImage& img, const BandingParams& params, std::uint64_t seed) {
  CounterRng rng(stream_key(seed, ArtifactKind::mri_banding));
  return apply_banding(img, params, rng.uniform(0.0, 2.0 * std::numbers::pi));
}

GrayImage mri_banding(const GrayImage& img, const CorruptionSpec& spec, const SeverityTable& table) {
  check_kind(spec, ArtifactKind::mri_banding);
  return mri_banding(img, table.banding(spec.severity), spec.seed);
}

// ---- X-ray ----------------------------------------------------------------

Kernel motion_kernel(std::size_t length, double angle) {
  require(length >= 1, "motion kernel length must be at least 1");
  Kernel k;
  k.size = length % 2 == 1 ? length : length + 1;
  k.weights.assign(k.size * k.size, 0.0);
  const double center = (static_cast<double>(k.size) - 1.0) / 2.0;
  const double c = std::cos(angle), s = std::sin(angle);
  const double max_index = static_cast<double>(k.size - 1);

  for (std::size_t i = 0; i < length; ++i) {
    const double t = static_cast<double>(i) - (static_cast<double>(length) - 1.0) / 2.0;
    const double x = std::clamp(center + t * c, 0.0, max_index);
    const double y = std::clamp(center + t * s, 0.0, max_index);
    const double x0 = std::floor(x), y0 = std::floor(y);
    const double fx = x - x0, fy = y - y0;
    const auto ix = static_cast<std::size_t>(x0), iy = static_cast<std::size_t>(y0);
    auto splat = [&](std::size_t px, std::size_t py, double weight) {
      if (weight > 0.0) k.weights[py * k.size + px] += weight;
    };
    splat(ix, iy, (1 - fx) * (1 - fy));
    if (fx > 0) splat(ix + 1, iy, fx * (1 - fy));
    if (fy > 0) splat(ix, iy + 1, (1 - fx) * fy);
    if (fx > 0 && fy > 0) splat(ix + 1, iy + 1, fx * fy);
  }
  const double total = std::accumulate(k.weights.begin(), k.weights.end(), 0.0);
  for (auto& v : k.weights) v /= total;
  return k;
}

GrayImage apply_xray_motion(const GrayImage& img, std::size_t length, double angle, double contrast) {
  validate(img);
  const Kernel k = motion_kernel(length, angle);
  const long w = static_cast<long>(img.width), h = static_cast<long>(img.height);
  const long half = static_cast<long>(k.size / 2);

  GrayImage out(img.width, img.height);
  parallel_for(img.height, [&](std::size_t yy) {
    const long y = static_cast<long>(yy);
    for (long x = 0; x < w; ++x) {
      double sum = 0.0;
      for (long j = 0; j < static_cast<long>(k.size); ++j) {
        const long sy = ((y + j - half) % h + h) % h;
        for (long i = 0; i < static_cast<long>(k.size); ++i) {
          const double wt = k.weights[static_cast<std::size_t>(j) * k.size + static_cast<std::size_t>(i)];
          if (wt == 0.0) continue;
          const long sx = ((x + i - half) % w + w) % w;
          sum += wt * img.pixels[static_cast<std::size_t>(sy * w + sx)];
        }
      }
      out.pixels[static_cast<std::size_t>(y * w + x)] = 0.5 + contrast * (sum - 0.5);
    }
  });
  clamp_unit(out);
  return out;
}

GrayImage xray_motion(const GrayImage& img, const XrayMotionParams& params, std::uint64_t seed) {
  CounterRng rng(stream_key(seed, ArtifactKind::xray_motion));
  return apply_xray_motion(img, params.length, rng.uniform(0.0, std::numbers::pi), params.contrast);
}

GrayImage xray_motion(const GrayImage& img, const CorruptionSpec& spec, const SeverityTable& table) {
  check_kind(spec, ArtifactKind::xray_motion);
  return xray_motion(img, table.xray_motion(spec.severity), spec.seed);
}

// ---- dispatch -------------------------------------------------------------

GrayImage corrupt_image(const GrayImage& img, const CorruptionSpec& spec, const SeverityTable& table) {
  switch (spec.kind) {
    case ArtifactKind::ct_sparse_view: return ct_sparse_view(img, spec, table);
    case ArtifactKind::ct_low_dose: return ct_low_dose(img, spec, table);
    case ArtifactKind::mri_motion: return mri_motion(img, spec, table);
    case ArtifactKind::mri_aliasing: return mri_aliasing(img, spec, table);
    case ArtifactKind::mri_banding: return mri_banding(img, spec, table);
    case ArtifactKind::xray_motion: return xray_motion(img, spec, table);
  }
  fail(ErrorCode::invalid_input, "unknown corruption kind");
}

}  // namespace imc::imgnoise
