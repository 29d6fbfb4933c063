#pragma once

// Reference discrete Radon / FBP used only by tests. It takes a different
// route from the library on purpose: ray-driven bilinear sampling instead of
// pixel splatting, and direct spatial convolution with the Ram-Lak kernel
// instead of frequency-domain filtering.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "imc/imgnoise/image.hpp"

namespace oracle {

struct Projections {
  std::vector<double> angles;
  std::size_t bins = 0;
  std::vector<double> values;  // angles x bins
};

inline double bilinear(const imc::imgnoise::GrayImage& img, double x, double y) {
  const double x0 = std::floor(x), y0 = std::floor(y);
  double sum = 0.0;
  for (int dy = 0; dy <= 1; ++dy) {
    for (int dx = 0; dx <= 1; ++dx) {
      const double px = x0 + dx, py = y0 + dy;
      if (px < 0 || py < 0 || px >= static_cast<double>(img.width) || py >= static_cast<double>(img.height))
        continue;
      const double w = (1.0 - std::fabs(x - px)) * (1.0 - std::fabs(y - py));
      sum += w * img.at(static_cast<std::size_t>(px), static_cast<std::size_t>(py));
    }
  }
  return sum;
}

// Integrates the bilinear interpolant along each ray with step `step`.
inline Projections ray_radon(const imc::imgnoise::GrayImage& img, std::size_t n_angles, double step = 0.25) {
  Projections p;
  p.bins = static_cast<std::size_t>(std::ceil(std::sqrt(2.0) * std::max(img.width, img.height)));
  p.values.assign(n_angles * p.bins, 0.0);
  const double cx = (img.width - 1.0) / 2.0, cy = (img.height - 1.0) / 2.0;
  const double dc = (p.bins - 1.0) / 2.0;
  const double half = p.bins / 2.0 + 1.0;
  for (std::size_t a = 0; a < n_angles; ++a) {
    const double th = a * std::numbers::pi / n_angles;
    p.angles.push_back(th);
    const double c = std::cos(th), s = std::sin(th);
    for (std::size_t b = 0; b < p.bins; ++b) {
      const double sd = b - dc;
      double sum = 0.0;
      for (double t = -half; t <= half; t += step) sum += bilinear(img, cx + sd * c - t * s, cy + sd * s + t * c);
      p.values[a * p.bins + b] = sum * step;
    }
  }
  return p;
}

inline imc::imgnoise::GrayImage conv_fbp(const Projections& p, std::size_t w, std::size_t h) {
  const std::size_t n = p.angles.size();
  const long bins = static_cast<long>(p.bins);
  std::vector<double> filtered(p.values.size(), 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (long b = 0; b < bins; ++b) {
      double sum = 0.0;
      for (long j = 0; j < bins; ++j) {
        const long d = b - j;
        double k = 0.0;
        if (d == 0) k = 0.25;
        else if (d % 2 != 0) k = -1.0 / std::pow(std::numbers::pi * d, 2);
        sum += k * p.values[a * p.bins + j];
      }
      filtered[a * p.bins + b] = sum;
    }
  }
  imc::imgnoise::GrayImage out(w, h);
  const double cx = (w - 1.0) / 2.0, cy = (h - 1.0) / 2.0, dc = (p.bins - 1.0) / 2.0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double sum = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        const double t = (x - cx) * std::cos(p.angles[a]) + (y - cy) * std::sin(p.angles[a]) + dc;
        const long b0 = static_cast<long>(std::floor(t));
        const double f = t - b0;
        auto at = [&](long b) { return (b < 0 || b >= bins) ? 0.0 : filtered[a * p.bins + b]; };
        sum += (1 - f) * at(b0) + f * at(b0 + 1);
      }
      // Kak & Slaney normalization for unit detector spacing.
      out.at(x, y) = std::clamp(sum * std::numbers::pi / n, 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace oracle
