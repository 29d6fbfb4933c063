#include "imc/pdc/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "imc/common/error.hpp"
#include "imc/common/rng.hpp"

namespace imc::pdc {

namespace {

std::size_t nearest(const std::vector<Vec>& centers, const Vec& p, double* best_d2) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = squared_distance(p, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (best_d2) *best_d2 = best_d;
  return best;
}

std::vector<Vec> plus_plus_seed(const std::vector<Vec>& points, std::size_t k, CounterRng& rng) {
  std::vector<Vec> centers;
  centers.push_back(points[rng.below(points.size())]);
  std::vector<double> d2(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) d2[i] = squared_distance(points[i], centers.back());
  while (centers.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = rng.below(points.size());
    if (total > 0.0) {
      double target = rng.uniform() * total;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        target -= d2[i];
        if (target < 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    centers.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i) d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
  }
  return centers;
}

std::vector<Vec> cluster_means(const std::vector<Vec>& points, const std::vector<std::size_t>& assignment,
                               std::vector<Vec> centers) {
  const std::size_t dim = points.front().size();
  std::vector<std::size_t> counts(centers.size(), 0);
  for (auto& c : centers) std::fill(c.begin(), c.end(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& c = centers[assignment[i]];
    for (std::size_t d = 0; d < dim; ++d) c[d] += points[i][d];
    ++counts[assignment[i]];
  }
  for (std::size_t c = 0; c < centers.size(); ++c)
    for (auto& v : centers[c]) v /= static_cast<double>(counts[c]);
  return centers;
}

// Gives every empty cluster the point farthest from its current center,
// taken from a cluster that keeps at least one member.
void reseed_empty(const std::vector<Vec>& points, std::vector<Vec>& centers, std::vector<std::size_t>& assignment,
                  std::vector<double>& d2) {
  std::vector<std::size_t> counts(centers.size(), 0);
  for (auto a : assignment) ++counts[a];
  for (std::size_t c = 0; c < centers.size(); ++c) {
    if (counts[c] > 0) continue;
    std::size_t far = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (counts[assignment[i]] < 2) continue;
      if (far == points.size() || d2[i] > d2[far]) far = i;
    }
    if (far == points.size()) continue;  // cannot happen when points >= k
    --counts[assignment[far]];
    assignment[far] = c;
    ++counts[c];
    centers[c] = points[far];
    d2[far] = 0.0;
  }
}

// Hartigan single-point moves: relocate a point when doing so lowers the
// SSE, accounting for both means shifting. Lloyd fixed points that are not
// locally optimal under single moves get improved here. Returns true if any
// point moved.
bool hartigan_pass(const std::vector<Vec>& points, std::vector<Vec>& centers, std::vector<std::size_t>& assignment) {
  const std::size_t dim = points.front().size();
  std::vector<std::size_t> counts(centers.size(), 0);
  for (auto a : assignment) ++counts[a];
  bool moved = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto from = assignment[i];
    if (counts[from] < 2) continue;
    const double nf = static_cast<double>(counts[from]);
    const double removal = nf / (nf - 1.0) * squared_distance(points[i], centers[from]);
    std::size_t to = from;
    double best_gain = 0.0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (c == from) continue;
      const double nt = static_cast<double>(counts[c]);
      const double gain = removal - nt / (nt + 1.0) * squared_distance(points[i], centers[c]);
      // Relative margin so rounding noise cannot cause endless swaps.
      if (gain > best_gain + 1e-12 * removal) {
        best_gain = gain;
        to = c;
      }
    }
    if (to == from) continue;
    const double nt = static_cast<double>(counts[to]);
    for (std::size_t d = 0; d < dim; ++d) {
      centers[from][d] = (centers[from][d] * nf - points[i][d]) / (nf - 1.0);
      centers[to][d] = (centers[to][d] * nt + points[i][d]) / (nt + 1.0);
    }
    --counts[from];
    ++counts[to];
    assignment[i] = to;
    moved = true;
  }
  return moved;
}

KMeansResult lloyd(const std::vector<Vec>& points, std::size_t k, CounterRng& rng, const KMeansOptions& options) {
  KMeansResult r;
  r.centers = plus_plus_seed(points, k, rng);
  r.assignment.assign(points.size(), 0);
  std::vector<double> d2(points.size());
  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    for (std::size_t i = 0; i < points.size(); ++i) r.assignment[i] = nearest(r.centers, points[i], &d2[i]);
    reseed_empty(points, r.centers, r.assignment, d2);
    double sse = 0.0;
    for (double v : d2) sse += v;
    r.objective.push_back(sse);

    auto updated = cluster_means(points, r.assignment, r.centers);
    double movement = 0.0;
    for (std::size_t c = 0; c < k; ++c) movement = std::max(movement, distance(updated[c], r.centers[c]));
    r.centers = std::move(updated);
    if (movement < options.tolerance) break;
  }
  // Centers are now the means of the last assignment.
  r.sse = partition_sse(points, r.assignment, k);
  r.objective.push_back(r.sse);
  for (std::size_t pass = 0; pass < options.max_iters && hartigan_pass(points, r.centers, r.assignment); ++pass) {
    // Recompute exactly rather than trusting the incremental means.
    r.centers = cluster_means(points, r.assignment, r.centers);
    r.sse = partition_sse(points, r.assignment, k);
    r.objective.push_back(r.sse);
  }
  return r;
}

}  // namespace

double partition_sse(const std::vector<Vec>& points, const std::vector<std::size_t>& assignment, std::size_t k) {
  if (points.empty()) return 0.0;
  std::vector<Vec> centers(k, Vec(points.front().size(), 0.0));
  std::vector<std::size_t> counts(k, 0);
  for (auto a : assignment) ++counts[a];
  centers = cluster_means(points, assignment, std::move(centers));
  double sse = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (counts[assignment[i]] > 0) sse += squared_distance(points[i], centers[assignment[i]]);
  return sse;
}

KMeansResult kmeans(const std::vector<Vec>& points, std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
  require(k >= 1, "k-means needs k >= 1");
  require(points.size() >= k, "k-means needs at least k = " + std::to_string(k) + " points, got " +
                                  std::to_string(points.size()));
  const auto dim = points.front().size();
  for (const auto& p : points) require(p.size() == dim, "k-means points have mixed dimensions");
  require(options.restarts >= 1 && options.max_iters >= 1, "k-means needs at least one restart and iteration");

  KMeansResult best;
  for (std::size_t restart = 0; restart < options.restarts; ++restart) {
    CounterRng rng(derive_key({seed, hash_string("kmeans"), restart}));
    auto r = lloyd(points, k, rng, options);
    r.restart = restart;
    if (restart == 0 || r.sse < best.sse) best = std::move(r);
  }
  return best;
}

}  // namespace imc::pdc
