#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace imc::imgnoise::detail {

using Complex = std::complex<double>;

// Unnormalized forward transform; the inverse divides by the length.
void fft(std::vector<Complex>& data, bool inverse);

// 2-D transform of a row-major height x width grid.
void fft2(std::vector<Complex>& data, std::size_t width, std::size_t height, bool inverse);

// Signed frequency index of FFT bin j for a transform of length n.
inline long signed_frequency(std::size_t j, std::size_t n) {
  return j < (n + 1) / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(n);
}

}  // namespace imc::imgnoise::detail
