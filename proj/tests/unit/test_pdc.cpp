#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>

#include "doctest.h"
#include "imc/common/defaults.hpp"
#include "imc/common/error.hpp"
#include "imc/pdc/calibration.hpp"
#include "imc/pdc/io.hpp"
#include "imc/pdc/kmeans.hpp"
#include "imc/pdc/pca.hpp"
#include "imc/pdc/pool.hpp"
#include "imc/pdc/synthetic.hpp"
#include "oracles/eigen_oracle.hpp"
#include "oracles/kmeans_oracle.hpp"
#include "support/pdc_cases.hpp"

using namespace imc;
using namespace imc::pdc;
using testsupport::cosine;

namespace {

const StateKey kNormal{NoiseState::normal, Modality::ct};
const StateKey kSparse{NoiseState::ct_sparse_view, Modality::ct};
const StateKey kBanding{NoiseState::mri_banding, Modality::mri};

EmbeddingStack make_stack(std::string id, const StateKey& key, std::vector<Vec> layers) {
  EmbeddingStack s;
  s.sample_id = std::move(id);
  s.state = key.state;
  s.modality = key.modality;
  s.layers = std::move(layers);
  return s;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an imc::Error");
  return ErrorCode::io_error;
}

Vec scaled(const Vec& v, double s) {
  Vec out = v;
  for (auto& x : out) x *= s;
  return out;
}

Vec plus(const Vec& a, const Vec& b) {
  Vec out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += b[i];
  return out;
}

// Every center of `a` has a partner in `b` within tol, and vice versa.
bool same_center_sets(const std::vector<Vec>& a, const std::vector<Vec>& b, double tol) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (const auto& c : a) {
    bool found = false;
    for (std::size_t j = 0; j < b.size() && !found; ++j)
      if (!used[j] && distance(c, b[j]) <= tol) found = used[j] = true;
    if (!found) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("pdc.kmeans") {
  TEST_CASE("k = 1 gives the coordinate-wise mean") {
    const std::vector<Vec> pts = {{1, 2}, {3, -2}, {5, 6}};
    const auto r = kmeans(pts, 1, 7);
    CHECK(r.centers[0][0] == doctest::Approx(3.0));
    CHECK(r.centers[0][1] == doctest::Approx(2.0));
  }

  TEST_CASE("two obvious pairs") {
    const std::vector<Vec> pts = {{0, 0}, {0, 1}, {10, 0}, {10, 1}};
    const auto r = kmeans(pts, 2, 3);
    CHECK(same_center_sets(r.centers, {{0, 0.5}, {10, 0.5}}, 1e-12));
    CHECK(r.sse == doctest::Approx(1.0));
    CHECK(r.sse == doctest::Approx(oracle::brute_force_sse(pts, 2)));
  }

  TEST_CASE("identical points") {
    const std::vector<Vec> pts(5, Vec{1.5, -2.0, 0.25});
    const auto r = kmeans(pts, 3, 11);
    for (const auto& c : r.centers) CHECK(c == pts[0]);
    CHECK(r.sse == 0.0);
  }

  TEST_CASE("objective never increases") {
    for (std::uint64_t s = 0; s < 40; ++s) {
      CounterRng rng(derive_key({0x6f626a, s}));
      std::vector<Vec> pts(60, Vec(4));
      for (auto& p : pts)
        for (auto& x : p) x = rng.uniform(-1.0, 1.0) + (rng.below(3) * 2.0);
      const auto r = kmeans(pts, 5, s);
      REQUIRE(r.objective.size() >= 2);
      for (std::size_t i = 1; i < r.objective.size(); ++i)
        CHECK(r.objective[i] <= r.objective[i - 1] + 1e-12 * (1.0 + r.objective[i - 1]));
      CHECK(r.objective.back() == doctest::Approx(r.sse));
    }
  }

  TEST_CASE("matches the brute-force optimum on the fixture set") {
    const auto fixtures = testsupport::kmeans_fixture_set();
    std::size_t misses = 0;
    for (std::size_t i = 0; i < fixtures.size(); ++i) {
      const auto& f = fixtures[i];
      const auto r = kmeans(f.points, f.k, i);
      const double best = oracle::brute_force_sse(f.points, f.k);
      if (std::fabs(r.sse - best) > 1e-9) {
        ++misses;
        MESSAGE("instance " << i << " sse " << r.sse << " optimum " << best);
      }
    }
    CHECK(misses == 0);
  }

  TEST_CASE("deterministic and assignment consistent") {
    const auto f = testsupport::kmeans_fixture_set(10)[4];
    const auto a = kmeans(f.points, f.k, 99), b = kmeans(f.points, f.k, 99);
    CHECK(a.centers == b.centers);
    CHECK(a.assignment == b.assignment);
    CHECK(partition_sse(f.points, a.assignment, f.k) == doctest::Approx(a.sse));
  }

  TEST_CASE("errors") {
    CHECK(code_of([] { kmeans({{0.0}, {1.0}}, 3, 0); }) == ErrorCode::invalid_input);
    CHECK(code_of([] { kmeans({{0.0}, {1.0}}, 0, 0); }) == ErrorCode::invalid_input);
    CHECK(code_of([] { kmeans({{0.0}, {1.0, 2.0}}, 1, 0); }) == ErrorCode::invalid_input);
  }
}

TEST_SUITE("pdc.pca") {
  TEST_CASE("jittered copies of one vector give its direction") {
    // +-eps along every axis: the centered covariance is isotropic, so the
    // only preferred direction left is the raw mean.
    const Vec v = {3, -1, 2, 0.5};
    std::vector<Vec> rows;
    for (std::size_t d = 0; d < v.size(); ++d)
      for (double eps : {1e-3, -1e-3}) {
        Vec r = v;
        r[d] += eps;
        rows.push_back(r);
      }
    const auto p = pca_first_component(rows);
    CHECK(cosine(p, v) >= 0.99);
  }

  TEST_CASE("points on y = x") {
    // Symmetric about the origin, then nudged into the positive quadrant.
    std::vector<Vec> rows;
    for (double t : {-2.0, -1.0, 1.0, 2.0}) rows.push_back({t + 0.01, t + 0.01});
    const auto p = pca_first_component(rows);
    CHECK(p[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
    CHECK(p[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  }

  TEST_CASE("unit norm and sign toward the raw mean") {
    for (std::uint64_t s = 0; s < 50; ++s) {
      const auto rows = testsupport::random_pca_problem(1000 + s, 12, 6);
      const auto p = pca_first_component(rows);
      CHECK(std::fabs(norm(p) - 1.0) <= 1e-9);
      Vec mean(6, 0.0);
      for (const auto& r : rows) mean = plus(mean, r);
      double dot = 0.0;
      for (std::size_t i = 0; i < 6; ++i) dot += p[i] * mean[i];
      CHECK(dot >= 0.0);
    }
  }

  TEST_CASE("agrees with a dense eigendecomposition") {
    for (std::uint64_t s = 0; s < 100; ++s) {
      const auto rows = testsupport::random_pca_problem(s);
      const auto p = pca_first_component(rows);
      const auto ref = oracle::leading_component(rows);
      CHECK(std::fabs(cosine(p, ref)) >= 1.0 - 1e-6);
    }
  }

  TEST_CASE("errors") {
    CHECK(code_of([] { pca_first_component({{1.0, 2.0}}); }) == ErrorCode::invalid_input);
    CHECK(code_of([] { pca_first_component({{1.0, 2.0}, {1.0}}); }) == ErrorCode::invalid_input);
    CHECK(code_of([] { pca_first_component({{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}}); }) ==
          ErrorCode::degenerate_input);
  }
}

TEST_SUITE("pdc.pool") {
  TEST_CASE("single center is the condition mean") {
    std::vector<EmbeddingStack> training = {make_stack("a", kSparse, {{1, 0}}), make_stack("b", kSparse, {{3, 4}}),
                                            make_stack("c", kSparse, {{2, 2}})};
    const auto pool = build_pool(training, 1, 5);
    const auto& p = pool.at(kSparse, 0);
    CHECK(p.centers[0][0] == doctest::Approx(2.0));
    CHECK(p.centers[0][1] == doctest::Approx(2.0));
    CHECK(p.members[0] == std::vector<std::string>{"a", "b", "c"});
  }

  TEST_CASE("blob centers sit near their blob means") {
    BlobConfig cfg;
    cfg.keys = {kNormal, kSparse, kBanding};
    BlobBenchmark bench(cfg);
    const auto pool = build_pool(bench.training_set(60, 0), 2, 17);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t l = 0; l < cfg.layers; ++l)
        for (const auto& c : pool.at(cfg.keys[i], l).centers) CHECK(distance(c, bench.mode_mean(i, l, 0)) < 0.5);
  }

  TEST_CASE("every training sample belongs to exactly one cluster") {
    BlobBenchmark bench({});
    const auto training = bench.training_set(20, 0);
    const auto pool = build_pool(training, 4, 3);
    for (const auto& s : training)
      for (std::size_t l = 0; l < pool.layers; ++l) {
        std::size_t hits = 0;
        for (const auto& ids : pool.at(label_of(s), l).members) hits += std::count(ids.begin(), ids.end(), s.sample_id);
        CHECK(hits == 1);
      }
  }

  TEST_CASE("training order does not matter") {
    BlobConfig cfg;
    cfg.modes = 3;
    BlobBenchmark bench(cfg);
    auto training = bench.training_set(30, 0);
    const auto a = build_pool(training, 4, 21);
    std::mt19937_64 g(5);
    std::shuffle(training.begin(), training.end(), g);
    const auto b = build_pool(training, 4, 21);
    for (const auto& [key, layers] : a.conditions)
      for (std::size_t l = 0; l < layers.size(); ++l)
        CHECK(same_center_sets(layers[l].centers, b.at(key, l).centers, 1e-6));
  }

  TEST_CASE("too few samples names the condition") {
    std::vector<EmbeddingStack> training = {make_stack("a", kSparse, {{1.0}}), make_stack("b", kSparse, {{2.0}}),
                                            make_stack("c", kBanding, {{3.0}})};
    try {
      build_pool(training, 2, 0);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_input);
      CHECK(std::string(e.what()).find("mri_banding/MRI") != std::string::npos);
    }
  }

  TEST_CASE("unlabelled or duplicate training samples are rejected") {
    auto s = make_stack("a", kSparse, {{1.0}});
    s.state.reset();
    CHECK(code_of([&] { build_pool({s}, 1, 0); }) == ErrorCode::invalid_input);
    CHECK(code_of([] {
            build_pool({make_stack("a", kSparse, {{1.0}}), make_stack("a", kSparse, {{2.0}})}, 1, 0);
          }) == ErrorCode::invalid_input);
  }
}

TEST_SUITE("pdc.classify") {
  PrototypePool two_condition_pool() {
    PrototypePool pool;
    pool.k = 2;
    pool.layers = 3;
    pool.dim = 2;
    for (std::size_t l = 0; l < 3; ++l) {
      pool.conditions[kNormal].push_back({{{0, 0}, {0, 1}}, {{}, {}}});
      pool.conditions[kSparse].push_back({{{5, 0}, {5, 1}}, {{}, {}}});
    }
    return pool;
  }

  TEST_CASE("a stack sitting on prototypes") {
    const auto pool = two_condition_pool();
    const auto r = classify(make_stack("q", kNormal, {{5, 1}, {5, 0}, {5, 1}}), pool);
    CHECK(r.final == kSparse);
    REQUIRE(r.per_layer.size() == 3);
    for (const auto& v : r.per_layer) {
      CHECK(v.key == kSparse);
      CHECK(v.distance == 0.0);
    }
    CHECK(r.per_layer[1].cluster == 0);
    CHECK(r.per_layer[2].cluster == 1);
  }

  TEST_CASE("majority over layers") {
    const auto pool = two_condition_pool();
    const auto r = classify(make_stack("q", kNormal, {{0.2, 0}, {0.1, 1}, {4.9, 0}}), pool);
    CHECK(r.final == kNormal);
    CHECK(r.vote_counts.at(kNormal) == 2);
    CHECK(r.vote_counts.at(kSparse) == 1);
  }

  TEST_CASE("vote ties go to the smaller winning distance, then the key name") {
    PrototypePool pool;
    pool.k = 1;
    pool.layers = 2;
    pool.dim = 1;
    pool.conditions[kNormal] = {{{{0.0}}, {{}}}, {{{0.0}}, {{}}}};
    pool.conditions[kSparse] = {{{{10.0}}, {{}}}, {{{10.0}}, {{}}}};
    // Layer 0 votes normal at 1.0, layer 1 votes sparse at 2.0.
    auto r = classify(make_stack("q", kNormal, {{1.0}, {8.0}}), pool);
    CHECK(r.final == kNormal);
    r = classify(make_stack("q", kNormal, {{3.0}, {9.0}}), pool);
    CHECK(r.final == kSparse);
    // Equal votes and distances: "ct_sparse_view/CT" < "normal/CT".
    r = classify(make_stack("q", kNormal, {{2.0}, {8.0}}), pool);
    CHECK(r.final == kSparse);
  }

  TEST_CASE("blob benchmark accuracy") {
    BlobBenchmark bench({});
    REQUIRE(bench.keys().size() == 7);
    const auto pool = build_pool(bench.training_set(defaults::kPoolSamples, 0), defaults::kPrototypeClusters, 1);
    CHECK(classification_accuracy(bench.heldout_set(200, 1), pool) >= 0.95);
  }

  TEST_CASE("scaling centers and query together changes nothing") {
    BlobConfig cfg;
    cfg.modes = 2;
    BlobBenchmark bench(cfg);
    const auto pool = build_pool(bench.training_set(20, 0), 3, 2);
    for (double s : {0.01, 3.0, 250.0}) {
      PrototypePool big = pool;
      for (auto& [key, layers] : big.conditions)
        for (auto& p : layers)
          for (auto& c : p.centers) c = scaled(c, s);
      for (const auto& q : bench.heldout_set(25, 4)) {
        auto qs = q;
        for (auto& l : qs.layers) l = scaled(l, s);
        const auto a = classify(q, pool), b = classify(qs, big);
        CHECK(a.final == b.final);
        for (std::size_t l = 0; l < a.per_layer.size(); ++l) {
          CHECK(a.per_layer[l].key == b.per_layer[l].key);
          CHECK(a.per_layer[l].cluster == b.per_layer[l].cluster);
        }
      }
    }
  }

  TEST_CASE("vote counts sum to the layer count") {
    BlobConfig cfg;
    cfg.modes = 3;
    cfg.layers = 5;
    BlobBenchmark bench(cfg);
    const auto pool = build_pool(bench.training_set(15, 0), 2, 8);
    for (const auto& q : bench.heldout_set(40, 2)) {
      const auto r = classify(q, pool);
      CHECK(r.per_layer.size() == 5);
      std::size_t total = 0;
      for (const auto& [key, n] : r.vote_counts) total += n;
      CHECK(total == 5);
      CHECK(r.vote_counts.at(r.final) == std::max_element(r.vote_counts.begin(), r.vote_counts.end(),
                                                          [](auto& a, auto& b) { return a.second < b.second; })
                                              ->second);
    }
  }

  TEST_CASE("shape mismatch") {
    const auto pool = two_condition_pool();
    CHECK(code_of([&] { classify(make_stack("q", kNormal, {{0, 0}, {0, 0}}), pool); }) == ErrorCode::invalid_input);
    CHECK(code_of([&] { classify(make_stack("q", kNormal, {{0}, {0}, {0}}), pool); }) == ErrorCode::invalid_input);
  }

  TEST_CASE("more prototypes never hurt on multi-mode blobs") {
    BlobConfig cfg;
    cfg.modes = 4;
    cfg.sigma = 0.5;
    BlobBenchmark bench(cfg);
    const auto training = bench.training_set(defaults::kPoolSamples, 0);
    const auto heldout = bench.heldout_set(200, 1);
    double previous = 0.0;
    for (std::size_t k : {1, 2, 4, 8}) {
      const double acc = classification_accuracy(heldout, build_pool(training, k, 1));
      MESSAGE("K=" << k << " accuracy " << acc);
      CHECK(acc >= previous);
      previous = acc;
    }
    CHECK(previous >= 0.95);
  }
}

TEST_SUITE("pdc.calibration") {
  // Clean stacks scattered around a base point; the noisy side adds a
  // per-sample multiple of w plus optional isotropic jitter.
  std::vector<CalibrationPair> offset_pairs(const Vec& base, const Vec& w, std::size_t n, double jitter,
                                            std::uint64_t seed, const StateKey& key = kSparse,
                                            const std::string& prefix = "p") {
    CounterRng rng(derive_key({0x63616c, seed}));
    std::vector<CalibrationPair> pairs;
    for (std::size_t i = 0; i < n; ++i) {
      Vec clean = base;
      for (auto& x : clean) x += 0.3 * sample_normal(rng);
      const double scale = jitter > 0.0 ? rng.uniform(0.5, 1.5) : 1.0;
      Vec noisy = plus(clean, scaled(w, scale));
      for (auto& x : noisy) x += jitter * sample_normal(rng);
      const auto id = prefix + std::to_string(i);
      pairs.push_back({make_stack(id, kNormal, {clean}), make_stack(id, key, {noisy})});
    }
    return pairs;
  }

  std::vector<EmbeddingStack> noisy_side(const std::vector<CalibrationPair>& pairs) {
    std::vector<EmbeddingStack> out;
    for (const auto& p : pairs) out.push_back(p.noisy);
    return out;
  }

  TEST_CASE("constant offset gives the clean-ward direction") {
    const Vec w = {0.5, -1.0, 2.0, 0.0};
    const auto pairs = offset_pairs({1, 1, 1, 1}, w, 20, 0.0, 1);
    const auto pool = build_pool(noisy_side(pairs), 1, 0);
    const auto cal = compute_calibration(pairs, pool);
    const auto& v = cal.at(kSparse, 0, 0);
    CHECK_FALSE(v.degenerate);
    CHECK(v.support == 20);
    CHECK(cosine(v.direction, scaled(w, -1.0)) >= 0.99);
    CHECK(cal.alpha == defaults::kCalibrationAlpha);
  }

  TEST_CASE("jittered offsets") {
    const Vec w = {0.0, 3.0, -1.0, 1.0, 0.5};
    const auto pairs = offset_pairs({0, 0, 2, 0, 0}, w, 100, 0.05, 2);
    const auto cal = compute_calibration(pairs, build_pool(noisy_side(pairs), 1, 0));
    CHECK(cosine(cal.at(kSparse, 0, 0).direction, scaled(w, -1.0)) >= 0.99);
  }

  TEST_CASE("clean equals noisy gives a flagged zero vector") {
    std::vector<CalibrationPair> pairs;
    for (int i = 0; i < 4; ++i) {
      const Vec v = {double(i), 1.0};
      pairs.push_back({make_stack(std::to_string(i), kNormal, {v}), make_stack(std::to_string(i), kSparse, {v})});
    }
    const auto pool = build_pool(noisy_side(pairs), 1, 0);
    const auto cal = compute_calibration(pairs, pool);
    const auto& v = cal.at(kSparse, 0, 0);
    CHECK(v.degenerate);
    CHECK(v.direction == Vec{0.0, 0.0});
    const auto stack = make_stack("q", kSparse, {{0.5, 0.5}});
    const auto out = calibrate(stack, classify(stack, pool), cal, pool, 1.0);
    CHECK(out.layers == stack.layers);
  }

  TEST_CASE("two clusters recover their own offsets") {
    const Vec w1 = {1.0, 0.0, 0.0}, w2 = {0.0, 0.0, -2.0};
    auto pairs = offset_pairs({0, 0, 0}, w1, 40, 0.05, 3, kSparse, "a");
    const auto b = offset_pairs({20, 20, 20}, w2, 40, 0.05, 4, kSparse, "b");
    pairs.insert(pairs.end(), b.begin(), b.end());
    const auto pool = build_pool(noisy_side(pairs), 2, 9);
    const auto cal = compute_calibration(pairs, pool);
    const auto near_a = nearest_center(pool.at(kSparse, 0).centers, {1, 0, 0});
    const auto near_b = 1 - near_a;
    CHECK(cosine(cal.at(kSparse, 0, near_a).direction, scaled(w1, -1.0)) >= 0.99);
    CHECK(cosine(cal.at(kSparse, 0, near_b).direction, scaled(w2, -1.0)) >= 0.99);
  }

  TEST_CASE("unseen samples fall back to the nearest center; empty clusters inherit") {
    const auto train = offset_pairs({0, 0}, {1, 0}, 10, 0.0, 5, kSparse, "t");
    auto far = noisy_side(train);
    for (int i = 0; i < 3; ++i) far.push_back(make_stack("f" + std::to_string(i), kSparse, {{50.0 + i, 50.0}}));
    const auto pool = build_pool(far, 2, 0);
    // Pairs with ids the pool never saw all land near the first group.
    const auto pairs = offset_pairs({0, 0}, {1, 0}, 10, 0.0, 6, kSparse, "u");
    const auto cal = compute_calibration(pairs, pool);
    const auto near = nearest_center(pool.at(kSparse, 0).centers, {1, 0});
    CHECK(cal.at(kSparse, 0, near).support == 10);
    CHECK(cal.at(kSparse, 0, 1 - near).support == 0);
    CHECK(cal.at(kSparse, 0, 1 - near).direction == cal.at(kSparse, 0, near).direction);
  }

  TEST_CASE("stored vectors are unit length") {
    BlobConfig cfg;
    cfg.keys = {kNormal, kSparse, kBanding};
    cfg.modes = 2;
    BlobBenchmark bench(cfg);
    std::vector<CalibrationPair> pairs;
    for (std::size_t i = 1; i < 3; ++i)
      for (std::size_t n = 0; n < 30; ++n) pairs.push_back({bench.sample(0, 0, n), bench.sample(i, 0, n)});
    const auto pool = build_pool(bench.training_set(30, 0), 3, 4);
    const auto cal = compute_calibration(pairs, pool);
    CHECK(cal.vectors.size() == 2);
    for (const auto& [key, layers] : cal.vectors)
      for (const auto& clusters : layers)
        for (const auto& v : clusters)
          if (!v.degenerate) CHECK(std::fabs(norm(v.direction) - 1.0) <= 1e-9);
  }

  TEST_CASE("a noisy condition without pairs is an error") {
    BlobConfig cfg;
    cfg.keys = {kNormal, kSparse, kBanding};
    BlobBenchmark bench(cfg);
    const auto pool = build_pool(bench.training_set(10, 0), 2, 4);
    std::vector<CalibrationPair> pairs;
    for (std::size_t n = 0; n < 10; ++n) pairs.push_back({bench.sample(0, 0, n), bench.sample(1, 0, n)});
    CHECK(code_of([&] { compute_calibration(pairs, pool); }) == ErrorCode::invalid_input);
  }

  TEST_CASE("zero weight is the identity, bit for bit") {
    const auto pairs = offset_pairs({0.1, -0.2, 0.3}, {1, 2, 3}, 10, 0.1, 7);
    const auto pool = build_pool(noisy_side(pairs), 2, 0);
    const auto cal = compute_calibration(pairs, pool);
    auto q = make_stack("q", kSparse, {{-0.0, 1e-300, 7.25}});
    const auto out = calibrate(q, classify(q, pool), cal, pool, 0.0);
    CHECK(std::memcmp(out.layers[0].data(), q.layers[0].data(), 3 * sizeof(double)) == 0);
    CHECK(out.sample_id == "q");
  }

  TEST_CASE("one pair is recovered exactly with alpha = |w|") {
    const Vec clean = {1.0, 2.0, -3.0}, w = {0.3, -0.4, 1.2};
    const Vec noisy = plus(clean, scaled(w, -1.0));
    const std::vector<CalibrationPair> pairs = {{make_stack("x", kNormal, {clean, clean}),
                                                 make_stack("x", kSparse, {noisy, noisy})}};
    const auto pool = build_pool({pairs[0].noisy}, 1, 0);
    const auto cal = compute_calibration(pairs, pool);
    CHECK(cosine(cal.at(kSparse, 1, 0).direction, w) >= 1.0 - 1e-12);
    const auto out = calibrate(pairs[0].noisy, classify(pairs[0].noisy, pool), cal, pool, norm(w));
    for (const auto& layer : out.layers) CHECK(distance(layer, clean) < 1e-6 * norm(w));
  }

  TEST_CASE("calibrating twice shifts by twice the step") {
    const auto pairs = offset_pairs({0, 0}, {0, 1}, 10, 0.05, 8);
    const auto pool = build_pool(noisy_side(pairs), 1, 0);
    const auto cal = compute_calibration(pairs, pool);
    const auto q = make_stack("q", kSparse, {{0.3, 0.9}});
    const auto r = classify(q, pool);
    const double a = 0.2;
    const auto twice = calibrate(calibrate(q, r, cal, pool, a), r, cal, pool, a);
    const auto& p = cal.at(kSparse, 0, 0).direction;
    for (std::size_t d = 0; d < 2; ++d) CHECK(twice.layers[0][d] == doctest::Approx(q.layers[0][d] + 2 * a * p[d]));
  }

  TEST_CASE("calibrate errors") {
    const auto pairs = offset_pairs({0, 0}, {0, 1}, 5, 0.0, 9);
    const auto pool = build_pool(noisy_side(pairs), 1, 0);
    auto cal = compute_calibration(pairs, pool);
    const auto q = make_stack("q", kSparse, {{0.0, 0.0}});
    auto r = classify(q, pool);
    cal.vectors.clear();
    try {
      calibrate(q, r, cal, pool);
      FAIL("expected missing-vector");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::missing_vector);
      CHECK(std::string(e.what()).find("ct_sparse_view/CT, layer 0, cluster 0") != std::string::npos);
    }
    r.final = kNormal;
    CHECK(code_of([&] { calibrate(q, r, cal, pool); }) == ErrorCode::invalid_input);
  }
}

TEST_SUITE("pdc.pipeline") {
  // Clean prototype at the origin, noisy one `gap` along +x.
  struct Geometry {
    PrototypePool pool;
    CalibrationSet cal;
  };

  Geometry line_geometry(double gap) {
    Geometry g;
    g.pool.k = 1;
    g.pool.layers = 1;
    g.pool.dim = 2;
    g.pool.conditions[kNormal] = {{{{0.0, 0.0}}, {{}}}};
    g.pool.conditions[kSparse] = {{{{gap, 0.0}}, {{}}}};
    std::vector<CalibrationPair> pairs;
    for (int i = 0; i < 3; ++i) {
      const double y = i - 1.0;
      pairs.push_back({make_stack(std::to_string(i), kNormal, {{0.0, y}}),
                       make_stack(std::to_string(i), kSparse, {{gap, y}})});
    }
    g.cal = compute_calibration(pairs, g.pool);
    return g;
  }

  TEST_CASE("normal stacks pass through") {
    const auto g = line_geometry(4.0);
    const auto q = make_stack("q", kSparse, {{0.5, 0.1}});
    const auto r = pipeline(q, g.pool, g.cal, 1.0);
    CHECK_FALSE(r.calibrated);
    CHECK(r.classification.final == kNormal);
    CHECK(r.stack == q);
  }

  TEST_CASE("a noisy stack moves toward the clean prototype") {
    const double gap = 4.0;
    const auto g = line_geometry(gap);
    const auto q = make_stack("q", kSparse, {{gap, 0.0}});
    for (double alpha : {0.05, 1.0, gap, 1.99 * gap}) {
      const auto r = pipeline(q, g.pool, g.cal, alpha);
      CHECK(r.calibrated);
      CHECK(norm(r.stack.layers[0]) < gap);
    }
  }

  TEST_CASE("end to end on blobs") {
    BlobBenchmark bench({});
    const auto training = bench.training_set(defaults::kPoolSamples, 0);
    const auto pool = build_pool(training, defaults::kPrototypeClusters, 3);
    std::vector<CalibrationPair> pairs;
    for (std::size_t i = 1; i < bench.keys().size(); ++i)
      for (std::size_t n = 0; n < defaults::kPoolSamples; ++n)
        pairs.push_back({bench.sample(0, 0, n), bench.sample(i, 0, n)});
    const auto cal = compute_calibration(pairs, pool);

    double before = 0.0, after = 0.0;
    std::size_t count = 0;
    for (const auto& q : bench.heldout_set(100, 5)) {
      if (label_of(q).is_normal()) continue;
      const auto r = pipeline(q, pool, cal, 1.0);
      for (std::size_t l = 0; l < q.layers.size(); ++l) {
        const auto clean = bench.condition_mean(0, l);
        before += distance(q.layers[l], clean);
        after += distance(r.stack.layers[l], clean);
      }
      ++count;
    }
    REQUIRE(count > 50);
    CHECK(after < before);
  }
}

TEST_SUITE("pdc.io") {
  TEST_CASE("interchange round trip") {
    auto a = make_stack("s1", kBanding, {{0.1, 1.0 / 3.0}, {-2.5e-7, 4.0}});
    EmbeddingStack b;
    b.sample_id = "s2";
    b.layers = {{1, 2}, {3, 4}};
    std::stringstream io;
    write_stack(io, a);
    write_stack(io, b);
    const auto back = parse_stacks(io);
    REQUIRE(back.size() == 2);
    CHECK(back[0] == a);
    CHECK(back[1] == b);
    CHECK_FALSE(back[1].state.has_value());
  }

  TEST_CASE("labels may be absent, blank lines skipped") {
    std::istringstream in(
        "{\"sample_id\":\"x\",\"layers\":[[1,2]]}\n\n"
        "{\"sample_id\":\"y\",\"modality\":\"MRI\",\"state\":\"mri_motion\",\"layers\":[[3,4]]}\n");
    const auto s = parse_stacks(in);
    REQUIRE(s.size() == 2);
    CHECK_FALSE(s[0].modality.has_value());
    CHECK(label_of(s[1]) == StateKey{NoiseState::mri_motion, Modality::mri});
  }

  TEST_CASE("errors name the line") {
    const auto message = [](const std::string& text) {
      std::istringstream in(text);
      try {
        parse_stacks(in, "emb.jsonl");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse_error);
        return std::string(e.what());
      }
      return std::string("no error");
    };
    const std::string ok = "{\"sample_id\":\"a\",\"layers\":[[1,2],[3,4]]}\n";
    CHECK(message(ok + "{oops\n").find("emb.jsonl:2") != std::string::npos);
    CHECK(message(ok + "{\"sample_id\":\"b\",\"layers\":[[1,2,3],[3,4,5]]}\n").find("emb.jsonl:2") !=
          std::string::npos);
    CHECK(message(ok + "\n{\"sample_id\":\"b\",\"layers\":[[1,2]]}\n").find("emb.jsonl:3") != std::string::npos);
    CHECK(message("{\"sample_id\":\"a\",\"layers\":[[1,2],[3]]}\n").find("emb.jsonl:1") != std::string::npos);
    CHECK(message("{\"sample_id\":\"a\",\"state\":\"mri_motion\",\"modality\":\"CT\",\"layers\":[[1]]}\n")
              .find("emb.jsonl:1") != std::string::npos);
    CHECK(message("{\"layers\":[[1]]}\n").find("sample_id") != std::string::npos);
  }

  TEST_CASE("pool and calibration files round trip") {
    BlobConfig cfg;
    cfg.keys = {kNormal, kSparse};
    BlobBenchmark bench(cfg);
    const auto pool = build_pool(bench.training_set(12, 0), 2, 0);
    const auto back = parse_pool(dump_pool(pool));
    CHECK(back.k == pool.k);
    for (const auto& [key, layers] : pool.conditions)
      for (std::size_t l = 0; l < layers.size(); ++l) {
        CHECK(back.at(key, l).members == layers[l].members);
        for (std::size_t c = 0; c < pool.k; ++c)
          for (std::size_t d = 0; d < pool.dim; ++d)
            CHECK(back.at(key, l).centers[c][d] == round9(layers[l].centers[c][d]));
      }
    CHECK(dump_pool(back) == dump_pool(pool));

    std::vector<CalibrationPair> pairs;
    for (std::size_t n = 0; n < 12; ++n) pairs.push_back({bench.sample(0, 0, n), bench.sample(1, 0, n)});
    const auto cal = compute_calibration(pairs, pool, 0.125);
    const auto cal_back = parse_calibration(dump_calibration(cal));
    CHECK(cal_back.alpha == 0.125);
    for (const auto& [key, layers] : cal.vectors)
      for (std::size_t l = 0; l < layers.size(); ++l)
        for (std::size_t c = 0; c < layers[l].size(); ++c) {
          const auto& v = cal_back.at(key, l, c);
          CHECK(std::fabs(norm(v.direction) - 1.0) <= 1e-9);
          CHECK(cosine(v.direction, layers[l][c].direction) >= 1.0 - 1e-12);
          CHECK(v.support == layers[l][c].support);
        }
  }

  TEST_CASE("version and format checks") {
    PrototypePool pool;
    pool.k = 1;
    pool.layers = 1;
    pool.dim = 1;
    pool.conditions[kSparse] = {{{{1.0}}, {{"a"}}}};
    auto text = dump_pool(pool);
    const auto at = text.find("\"version\": 1");
    REQUIRE(at != std::string::npos);
    auto bumped = text;
    bumped.replace(at, 12, "\"version\": 2");
    CHECK(code_of([&] { parse_pool(bumped); }) == ErrorCode::parse_error);
    CHECK(code_of([] { parse_pool("not json"); }) == ErrorCode::parse_error);
    CHECK(code_of([&] { parse_calibration(text); }) == ErrorCode::parse_error);
    CHECK(code_of([] { load_pool("/nonexistent/pool.json"); }) == ErrorCode::io_error);
  }
}
