#include "ktl/rng.hpp"

#include <cmath>
#include <numeric>
#include <utility>

namespace ktl {

std::uint64_t Rng::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t p : path) {
    h = mix64(h + kGolden + mix64(p + 0x3c6ef372fe94f82bULL));
  }
  return h;
}

std::uint64_t Rng::index(std::uint64_t n) {
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t r;
  do {
    r = next();
  } while (r >= limit);
  return r % n;
}

double Rng::normal() {
  // Box-Muller; one draw per call keeps the stream position simple.
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::exponential() {
  double u;
  do {
    u = uniform();
  } while (u <= 0.0);
  return -std::log(u);
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t m) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < m && i + 1 < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(index(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  return idx;
}

void Rng::shuffle(std::vector<std::size_t>& v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(index(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace ktl
