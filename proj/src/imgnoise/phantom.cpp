#include "imc/imgnoise/phantom.hpp"

#include <cmath>
#include <numbers>

#include "imc/common/rng.hpp"

namespace imc::imgnoise {

namespace {

struct Ellipse {
  double cx, cy, rx, ry, angle, value;
};

constexpr int kSubsamples = 8;

// Fraction of the pixel's area covered by the ellipse, from a regular
// kSubsamples x kSubsamples grid of sample points.
double coverage(const Ellipse& e, double c, double s, std::size_t x, std::size_t y) {
  int inside = 0;
  for (int j = 0; j < kSubsamples; ++j) {
    for (int i = 0; i < kSubsamples; ++i) {
      const double px = static_cast<double>(x) - 0.5 + (i + 0.5) / kSubsamples;
      const double py = static_cast<double>(y) - 0.5 + (j + 0.5) / kSubsamples;
      const double dx = px - e.cx, dy = py - e.cy;
      const double u = (dx * c + dy * s) / e.rx, v = (-dx * s + dy * c) / e.ry;
      if (u * u + v * v <= 1.0) ++inside;
    }
  }
  return static_cast<double>(inside) / (kSubsamples * kSubsamples);
}

// replace: blend toward e.value by coverage; otherwise add e.value * coverage.
void add_ellipse(GrayImage& img, const Ellipse& e, bool replace) {
  const double c = std::cos(e.angle), s = std::sin(e.angle);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      const double f = coverage(e, c, s, x, y);
      if (f == 0.0) continue;
      double& v = img.at(x, y);
      v = replace ? v * (1.0 - f) + e.value * f : v + e.value * f;
    }
  }
}

}  // namespace

GrayImage disk_phantom(std::size_t size, double radius_fraction, double value) {
  GrayImage img(size, size);
  const double center = (static_cast<double>(size) - 1.0) / 2.0;
  const double r = radius_fraction * static_cast<double>(size);
  add_ellipse(img, {center, center, r, r, 0.0, value}, true);
  return img;
}

GrayImage random_phantom(std::size_t size, std::uint64_t seed) {
  CounterRng rng(derive_key({seed, hash_string("phantom")}));
  const double n = static_cast<double>(size);
  const double center = (n - 1.0) / 2.0;
  GrayImage img(size, size);

  // Body outline, then internal structures that add or remove intensity.
  add_ellipse(img,
              {center, center, n * rng.uniform(0.30, 0.42), n * rng.uniform(0.30, 0.42),
               rng.uniform(0.0, std::numbers::pi), rng.uniform(0.35, 0.6)},
              true);
  const int structures = 3 + static_cast<int>(rng.below(4));
  for (int i = 0; i < structures; ++i) {
    add_ellipse(img,
                {center + n * rng.uniform(-0.18, 0.18), center + n * rng.uniform(-0.18, 0.18),
                 n * rng.uniform(0.04, 0.14), n * rng.uniform(0.04, 0.14),
                 rng.uniform(0.0, std::numbers::pi), rng.uniform(-0.3, 0.4)},
                false);
  }
  clamp_unit(img);
  return img;
}

std::vector<GrayImage> phantom_suite(std::size_t count, std::size_t size, std::uint64_t seed) {
  std::vector<GrayImage> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_phantom(size, hash_combine(seed, i)));
  return out;
}

}  // namespace imc::imgnoise
