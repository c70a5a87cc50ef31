#pragma once

// Seeded generators with known posteriors and Bayes errors. Every generator is
// a pure function of its parameters and seed.

#include <cstdint>
#include <span>
#include <utility>

#include "ktl/dataset.hpp"
#include "ktl/finite_dist.hpp"

namespace ktl {

// X uniform on [0,1]^D, eta(x) = clamp(1/2 + (L / sqrt(D)) sum_i (x_i - 1/2), 0, 1).
class LipschitzTask {
 public:
  LipschitzTask(double lipschitz, std::size_t dim, std::uint64_t seed);

  std::size_t dim() const { return dim_; }
  double lipschitz_constant() const { return lipschitz_; }
  double bayes_error() const { return bayes_error_; }
  std::uint64_t seed() const { return seed_; }

  double posterior(std::span<const double> x) const;
  // n points from stream `stream` of the task seed.
  LabeledDataset sample(std::size_t n, std::uint64_t stream = 0) const;

 private:
  double lipschitz_;
  std::size_t dim_;
  std::uint64_t seed_;
  double bayes_error_;
};

LipschitzTask gen_lipschitz_task(double lipschitz, std::size_t dim, std::uint64_t seed);

// E[min(eta, 1 - eta)] for the task above, integrating the exact piecewise
// polynomial density of sum_i x_i.
double lipschitz_task_bayes_error(double lipschitz, std::size_t dim);

// Samples from the two-point distribution with payloads -1 (eta = 1/2 - delta)
// and +1 (eta = 1/2 + delta), each of mass 1/2. The transformed copy maps both
// payloads to 0.
std::pair<LabeledDataset, LabeledDataset> gen_tightness_samples(double delta, std::size_t n,
                                                                std::uint64_t seed);

// Symmetric Dirichlet(1) masses over all cells. With payload_dim > 0 each
// support point carries a payload uniform in [0,1]^payload_dim.
FiniteJointDistribution gen_random_finite(std::size_t x_size, std::size_t y_size, std::uint64_t seed,
                                          std::size_t payload_dim = 0);

struct ShiftedPair {
  FiniteJointDistribution source;
  FiniteJointDistribution target;
  double mix = 0.0;      // target = (1 - mix) source + mix q
  double kl_bits = 0.0;  // D_KL(source || target)
};

// Source from gen_random_finite; target mixes in an independent Dirichlet draw
// q with weight chosen by bisection so that D_KL(source || target) lies in
// [0.5, 1] eps^2 / (8 ln 2). When the full proposal (mix = 1) is already below
// the upper end, mix saturates at 1.
ShiftedPair gen_shifted_pair(double eps, std::size_t x_size, std::size_t y_size, std::uint64_t seed);

// Each source point maps to a uniformly drawn codomain point t0..t{m-1}.
FiniteMap gen_random_map(const FiniteJointDistribution& p, std::size_t codomain_size, std::uint64_t seed);

// Scores drawn uniformly in [0, 1] per codomain point.
Scorer gen_random_scorer(const FiniteMap& f, std::uint64_t seed);

// v -> clamp(c + a . (v - 1/2), 0, 1) with ||a||_2 = lipschitz and c uniform
// in [0, 1]; Lipschitz with the given constant.
Scorer gen_linear_scorer(std::size_t dim, double lipschitz, std::uint64_t seed);

}  // namespace ktl
