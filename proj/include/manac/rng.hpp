#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>

namespace manac {

// Deterministic, platform-independent random stream built on splitmix64.
// Every stochastic component takes an explicit Rng so runs replay exactly;
// named substreams keep environment draws independent of algorithm choices.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  // Independent substream keyed by label; derived from the original seed,
  // unaffected by how much the parent has drawn.
  Rng derive(std::string_view label) const {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (char c : label) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    return Rng(mix(seed_ ^ h));
  }

  Rng derive(std::uint64_t salt) const { return Rng(mix(seed_ ^ (salt * 0x9e3779b97f4a7c15ull))); }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    const int k = static_cast<int>(uniform() * n);
    return k >= n ? n - 1 : k;
  }

  // Binomial(n, p) by CDF inversion; intended for small n*p (arrival counts).
  long binomial(long n, double p) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("binomial: p outside [0,1]");
    if (n < 0) throw std::invalid_argument("binomial: n negative");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    const double u = uniform();
    double pmf = std::exp(static_cast<double>(n) * std::log1p(-p));
    double cdf = pmf;
    long k = 0;
    const double odds = p / (1.0 - p);
    while (u > cdf && k < n) {
      ++k;
      pmf *= (static_cast<double>(n - k + 1) / static_cast<double>(k)) * odds;
      cdf += pmf;
    }
    return k;
  }

  // Index sampled proportionally to nonnegative weights (need not sum to 1).
  int categorical(const double* w, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += w[i];
    if (!(total > 0.0)) throw std::invalid_argument("categorical: weights must have positive sum");
    double u = uniform() * total;
    for (int i = 0; i < n; ++i) {
      u -= w[i];
      if (u < 0.0) return i;
    }
    return n - 1;
  }

  std::uint64_t seed() const { return seed_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace manac
