#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <memory>
#include <mutex>

namespace imc::imgnoise::detail {

namespace {

// FFTW's planner is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};

void run(std::vector<Complex>& data, int rank, const int* dims, bool inverse) {
  const std::size_t n = data.size();
  std::unique_ptr<fftw_complex, FftwFree> buffer(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft(rank, dims, buffer.get(), buffer.get(),
                         inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
  }
  std::copy(data.begin(), data.end(), reinterpret_cast<Complex*>(buffer.get()));
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  const auto* out = reinterpret_cast<const Complex*>(buffer.get());
  const double scale = inverse ? 1.0 / static_cast<double>(n) : 1.0;
  for (std::size_t i = 0; i < n; ++i) data[i] = out[i] * scale;
}

}  // namespace

void fft(std::vector<Complex>& data, bool inverse) {
  if (data.empty()) return;
  const int dims[1] = {static_cast<int>(data.size())};
  run(data, 1, dims, inverse);
}

void fft2(std::vector<Complex>& data, std::size_t width, std::size_t height, bool inverse) {
  if (data.empty()) return;
  const int dims[2] = {static_cast<int>(height), static_cast<int>(width)};
  run(data, 2, dims, inverse);
}

}  // namespace imc::imgnoise::detail
