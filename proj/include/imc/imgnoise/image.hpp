#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace imc::imgnoise {

inline constexpr std::size_t kMinImageSide = 8;

// Row-major grayscale intensities, nominally in [0, 1].
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, double fill = 0.0)
      : width(w), height(h), pixels(w * h, fill) {}

  double& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }

  std::span<const double> row(std::size_t y) const { return {pixels.data() + y * width, width}; }

  bool operator==(const GrayImage&) const = default;
};

// Throws invalid-input unless the image is at least 8x8, the buffer matches
// the dimensions and every pixel is finite.
void validate(const GrayImage& img);

void clamp_unit(GrayImage& img);

double mean(const GrayImage& img);

// Peak signal-to-noise ratio in dB for peak 1. Identical images give +inf.
double psnr(const GrayImage& reference, const GrayImage& test);

// Mean structural similarity over 7x7 windows (K1 = 0.01, K2 = 0.03, L = 1).
double ssim(const GrayImage& reference, const GrayImage& test);

}  // namespace imc::imgnoise
