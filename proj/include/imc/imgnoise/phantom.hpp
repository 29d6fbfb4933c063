#pragma once

#include <cstdint>
#include <vector>

#include "imc/imgnoise/image.hpp"

namespace imc::imgnoise {

// Centered disk on a zero background. Pixels hold the covered area
// fraction times value, so the edge is antialiased.
GrayImage disk_phantom(std::size_t size, double radius_fraction = 0.35, double value = 1.0);

// A handful of random overlapping ellipses inside a body outline, values
// in [0, 1]. Deterministic in seed.
GrayImage random_phantom(std::size_t size, std::uint64_t seed);

std::vector<GrayImage> phantom_suite(std::size_t count, std::size_t size, std::uint64_t seed);

}  // namespace imc::imgnoise
