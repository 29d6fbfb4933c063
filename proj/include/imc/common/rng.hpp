#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace imc {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ (mix64(b) + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

// FNV-1a followed by a mix; stable across platforms and runs.
constexpr std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

constexpr std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x51ed270b27bd1f5dULL;
  for (auto p : parts) h = hash_combine(h, p);
  return h;
}

// Counter-based generator: draw i is a pure function of (key, i), so
// results never depend on evaluation order or thread count.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(mix64(key)) {}

  constexpr std::uint64_t at(std::uint64_t index) const noexcept {
    return mix64(key_ + index * 0x9e3779b97f4a7c15ULL);
  }

  constexpr std::uint64_t next_u64() noexcept { return at(counter_++); }

  // Uniform in [0, 1) with 53 bits of resolution.
  constexpr double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n) noexcept;

  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Poisson(lambda) draw. Multiplication method below lambda = 10, Hormann's
// transformed rejection (PTRS) above. Consumes a variable number of draws.
std::uint64_t sample_poisson(CounterRng& rng, double lambda);

// Standard normal draw (Box-Muller, two uniforms per call).
double sample_normal(CounterRng& rng);

}  // namespace imc
