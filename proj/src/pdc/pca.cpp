#include "imc/pdc/pca.hpp"

#include <algorithm>
#include <cmath>

#include "imc/common/error.hpp"

namespace imc::pdc {

namespace {

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool normalize(Vec& v) {
  const double n = norm(v);
  if (!(n > 0.0)) return false;
  for (auto& x : v) x /= n;
  return true;
}

}  // namespace

Vec pca_first_component(const std::vector<Vec>& vectors, const PcaOptions& options) {
  require(vectors.size() >= 2, "PCA needs at least 2 vectors");
  const std::size_t dim = vectors.front().size();
  require(dim > 0, "PCA vectors are empty");
  for (const auto& v : vectors) require(v.size() == dim, "PCA vectors have mixed dimensions");

  const double n = static_cast<double>(vectors.size());
  Vec mean(dim, 0.0);
  for (const auto& v : vectors)
    for (std::size_t d = 0; d < dim; ++d) mean[d] += v[d] / n;

  std::vector<Vec> centered(vectors.size(), Vec(dim));
  double spread = 0.0;
  std::size_t widest = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t d = 0; d < dim; ++d) centered[i][d] = vectors[i][d] - mean[d];
    const double r = norm(centered[i]);
    if (r > spread) {
      spread = r;
      widest = i;
    }
  }
  // Identical inputs leave only rounding noise after centering.
  const double scale = std::max(norm(mean), 1.0);
  if (spread <= 1e-12 * scale) fail(ErrorCode::degenerate_input, "PCA inputs are all identical");

  // Start at the raw mean direction, tilted slightly toward the widest
  // centered sample so the start is never orthogonal to every component.
  Vec v = mean;
  const bool has_mean = normalize(v);
  Vec tilt = centered[widest];
  normalize(tilt);
  for (std::size_t d = 0; d < dim; ++d) v[d] = (has_mean ? v[d] : 0.0) + 1e-2 * tilt[d];
  normalize(v);

  Vec next(dim);
  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (const auto& c : centered) {
      const double proj = dot(c, v);
      for (std::size_t d = 0; d < dim; ++d) next[d] += proj * c[d];
    }
    if (!normalize(next)) break;  // v lies in the null space; nothing better exists
    // Fix the sign before comparing so a flip is not mistaken for movement.
    if (dot(next, v) < 0.0)
      for (auto& x : next) x = -x;
    double moved = 0.0;
    for (std::size_t d = 0; d < dim; ++d) moved = std::max(moved, std::fabs(next[d] - v[d]));
    v.swap(next);
    if (moved < options.tolerance) break;
  }

  if (dot(v, mean) < 0.0)
    for (auto& x : v) x = -x;
  return v;
}

}  // namespace imc::pdc
