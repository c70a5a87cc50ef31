#pragma once

// Exact k-nearest-neighbor classification under Euclidean distance.
//
// Tie policy: neighbors at equal distance are ordered by ascending training
// index; label votes that tie go to the smallest label.

#include <cstdint>
#include <span>
#include <vector>

#include "ktl/dataset.hpp"

namespace ktl {

struct KnnConfig {
  std::size_t k = 1;
};

// Indices of the k nearest training points, nearest first.
std::vector<std::size_t> nearest_neighbors(const LabeledDataset& train, std::span<const double> query,
                                           std::size_t k);

std::int32_t knn_classify(const LabeledDataset& train, std::span<const double> query,
                          const KnnConfig& cfg);
// Fraction of each label among the k nearest.
std::vector<double> knn_posterior(const LabeledDataset& train, std::span<const double> query,
                                  const KnnConfig& cfg);
// Fraction of misclassified test points.
double error_rate(const LabeledDataset& train, const LabeledDataset& test, const KnnConfig& cfg);

struct CurvePoint {
  std::size_t size = 0;
  double mean = 0.0;
  double sd = 0.0;    // sample standard deviation over runs
  double ci95 = 0.0;  // 1.96 sd / sqrt(runs)
  std::size_t runs = 0;
};

struct ConvergenceCurve {
  std::vector<CurvePoint> points;
};

// For each size m, `runs` uniform subsamples of `data` without replacement,
// each evaluated on `test`. Run r at size index s draws from stream
// derive(seed, {s, r}).
ConvergenceCurve convergence_curve(const LabeledDataset& data, const LabeledDataset& test,
                                   const KnnConfig& cfg, std::span<const std::size_t> sizes,
                                   std::size_t runs, std::uint64_t seed);

// `count` sizes spaced linearly from lo to hi inclusive (rounded).
std::vector<std::size_t> linear_sizes(std::size_t lo, std::size_t hi, std::size_t count);

struct BestK {
  std::size_t k = 1;
  double error = 0.0;
  std::vector<double> errors;  // errors[k - 1] for k = 1..k_max
};

// k in [1, k_max] with the lowest test error, smallest k on ties.
BestK best_k_search(const LabeledDataset& train, const LabeledDataset& test, std::size_t k_max);

}  // namespace ktl
