#include "imc/imgnoise/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "imc/common/error.hpp"

namespace imc::imgnoise {

void validate(const GrayImage& img) {
  require(img.width >= kMinImageSide && img.height >= kMinImageSide,
          "image must be at least 8x8, got " + std::to_string(img.width) + "x" +
              std::to_string(img.height));
  require(img.pixels.size() == img.width * img.height, "pixel buffer does not match dimensions");
  require(std::all_of(img.pixels.begin(), img.pixels.end(), [](double v) { return std::isfinite(v); }),
          "image contains non-finite pixels");
}

void clamp_unit(GrayImage& img) {
  for (auto& v : img.pixels) v = std::clamp(v, 0.0, 1.0);
}

double mean(const GrayImage& img) {
  if (img.pixels.empty()) return 0.0;
  return std::accumulate(img.pixels.begin(), img.pixels.end(), 0.0) /
         static_cast<double>(img.pixels.size());
}

double psnr(const GrayImage& reference, const GrayImage& test) {
  require(reference.width == test.width && reference.height == test.height,
          "psnr: image dimensions differ");
  double mse = 0.0;
  for (std::size_t i = 0; i < reference.pixels.size(); ++i) {
    const double d = reference.pixels[i] - test.pixels[i];
    mse += d * d;
  }
  mse /= static_cast<double>(reference.pixels.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const GrayImage& reference, const GrayImage& test) {
  require(reference.width == test.width && reference.height == test.height,
          "ssim: image dimensions differ");
  constexpr std::size_t win = 7;
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const std::size_t w = reference.width, h = reference.height;
  if (w < win || h < win) return reference == test ? 1.0 : 0.0;

  constexpr double n = win * win;
  constexpr double cov_norm = n / (n - 1.0);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t y0 = 0; y0 + win <= h; ++y0) {
    for (std::size_t x0 = 0; x0 + win <= w; ++x0) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (std::size_t y = y0; y < y0 + win; ++y) {
        for (std::size_t x = x0; x < x0 + win; ++x) {
          const double a = reference.at(x, y), b = test.at(x, y);
          sa += a;
          sb += b;
          saa += a * a;
          sbb += b * b;
          sab += a * b;
        }
      }
      const double ma = sa / n, mb = sb / n;
      const double va = cov_norm * (saa / n - ma * ma);
      const double vb = cov_norm * (sbb / n - mb * mb);
      const double cab = cov_norm * (sab / n - ma * mb);
      total += ((2 * ma * mb + c1) * (2 * cab + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace imc::imgnoise
