#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <vector>

namespace ktl {

/// Counter-based SplitMix64 generator.
///
/// Output i is mix64(key + i * golden), so a stream is fully described by its
/// key and counter. Streams for sub-tasks are derived by hashing the parent
/// seed with task indices; this keeps results independent of execution order.
///
/// All distributions are implemented here rather than through <random>, whose
/// distribution algorithms are implementation-defined.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : key_(mix64(seed)) {}

  // Seed for a sub-stream identified by `path`.
  static std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path);
  static Rng derived(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return Rng(derive(seed, path));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }
  std::uint64_t next() { return mix64(key_ + (++counter_) * kGolden); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n); n > 0.
  std::uint64_t index(std::uint64_t n);
  double normal();
  double exponential();
  bool bernoulli(double p) { return uniform() < p; }

  // First m entries of a uniform random permutation of 0..n-1 (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m);
  void shuffle(std::vector<std::size_t>& v);

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ktl
