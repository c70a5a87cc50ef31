#include "ktl/knn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ktl/error.hpp"
#include "ktl/parallel.hpp"
#include "ktl/rng.hpp"

namespace ktl {
namespace {

struct Neighbor {
  double dist2;
  std::size_t index;
  bool operator<(const Neighbor& o) const {
    return dist2 < o.dist2 || (dist2 == o.dist2 && index < o.index);
  }
};

void check_query(const LabeledDataset& train, std::size_t query_dim, std::size_t k) {
  if (train.empty()) throw ValidationError("training set is empty");
  if (query_dim != train.dim()) {
    throw ValidationError("query dimension " + std::to_string(query_dim) +
                          " does not match training dimension " + std::to_string(train.dim()));
  }
  if (k == 0) throw ValidationError("k must be >= 1");
  if (k > train.size()) {
    throw ValidationError("k = " + std::to_string(k) + " exceeds training size " +
                          std::to_string(train.size()));
  }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::vector<std::size_t> neighbors_unchecked(const LabeledDataset& train,
                                             std::span<const double> query, std::size_t k) {
  const std::size_t n = train.size();
  std::vector<Neighbor> best;
  best.reserve(k + 1);
  if (k <= 64) {
    // Sorted buffer of the k best seen so far.
    for (std::size_t i = 0; i < n; ++i) {
      const Neighbor cand{squared_distance(train.point(i), query), i};
      if (best.size() == k && !(cand < best.back())) continue;
      auto pos = std::upper_bound(best.begin(), best.end(), cand);
      best.insert(pos, cand);
      if (best.size() > k) best.pop_back();
    }
  } else {
    best.resize(n);
    for (std::size_t i = 0; i < n; ++i) best[i] = {squared_distance(train.point(i), query), i};
    std::partial_sort(best.begin(), best.begin() + static_cast<std::ptrdiff_t>(k), best.end());
    best.resize(k);
  }
  std::vector<std::size_t> out(best.size());
  for (std::size_t i = 0; i < best.size(); ++i) out[i] = best[i].index;
  return out;
}

std::int32_t vote(const LabeledDataset& train, std::span<const std::size_t> neighbors) {
  std::vector<std::size_t> counts(train.num_classes(), 0);
  for (std::size_t i : neighbors) ++counts[static_cast<std::size_t>(train.label(i))];
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return static_cast<std::int32_t>(best);
}

void check_pair(const LabeledDataset& train, const LabeledDataset& test, std::size_t k) {
  if (test.empty()) throw ValidationError("test set is empty");
  check_query(train, test.dim(), k);
}

}  // namespace

std::vector<std::size_t> nearest_neighbors(const LabeledDataset& train, std::span<const double> query,
                                           std::size_t k) {
  check_query(train, query.size(), k);
  return neighbors_unchecked(train, query, k);
}

std::int32_t knn_classify(const LabeledDataset& train, std::span<const double> query,
                          const KnnConfig& cfg) {
  return vote(train, nearest_neighbors(train, query, cfg.k));
}

std::vector<double> knn_posterior(const LabeledDataset& train, std::span<const double> query,
                                  const KnnConfig& cfg) {
  const auto nn = nearest_neighbors(train, query, cfg.k);
  std::vector<double> frac(train.num_classes(), 0.0);
  for (std::size_t i : nn) frac[static_cast<std::size_t>(train.label(i))] += 1.0;
  for (auto& f : frac) f /= static_cast<double>(cfg.k);
  return frac;
}

double error_rate(const LabeledDataset& train, const LabeledDataset& test, const KnnConfig& cfg) {
  check_pair(train, test, cfg.k);
  std::vector<unsigned char> wrong(test.size(), 0);
  parallel_for(test.size(), [&](std::size_t i) {
    const auto nn = neighbors_unchecked(train, test.point(i), cfg.k);
    wrong[i] = vote(train, nn) != test.label(i);
  });
  std::size_t errors = 0;
  for (auto w : wrong) errors += w;
  return static_cast<double>(errors) / static_cast<double>(test.size());
}

ConvergenceCurve convergence_curve(const LabeledDataset& data, const LabeledDataset& test,
                                   const KnnConfig& cfg, std::span<const std::size_t> sizes,
                                   std::size_t runs, std::uint64_t seed) {
  if (runs == 0) throw ValidationError("runs must be >= 1");
  if (sizes.empty()) throw ValidationError("sizes must not be empty");
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    if (sizes[s] > data.size()) {
      throw ValidationError("subsample size " + std::to_string(sizes[s]) + " exceeds data size " +
                            std::to_string(data.size()));
    }
    if (sizes[s] < cfg.k) {
      throw ValidationError("subsample size " + std::to_string(sizes[s]) + " is smaller than k");
    }
    if (s > 0 && sizes[s] <= sizes[s - 1]) throw ValidationError("sizes must be strictly increasing");
  }
  check_pair(data, test, cfg.k);

  ConvergenceCurve curve;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    std::vector<double> errs(runs);
    for (std::size_t r = 0; r < runs; ++r) {
      Rng rng = Rng::derived(seed, {s, r});
      auto rows = rng.sample_without_replacement(data.size(), sizes[s]);
      std::sort(rows.begin(), rows.end());
      errs[r] = error_rate(data.subset(rows), test, cfg);
    }
    CurvePoint pt;
    pt.size = sizes[s];
    pt.runs = runs;
    double sum = 0.0;
    for (double e : errs) sum += e;
    pt.mean = sum / static_cast<double>(runs);
    if (runs > 1) {
      double ss = 0.0;
      for (double e : errs) ss += (e - pt.mean) * (e - pt.mean);
      pt.sd = std::sqrt(ss / static_cast<double>(runs - 1));
    }
    pt.ci95 = 1.96 * pt.sd / std::sqrt(static_cast<double>(runs));
    curve.points.push_back(pt);
  }
  return curve;
}

std::vector<std::size_t> linear_sizes(std::size_t lo, std::size_t hi, std::size_t count) {
  if (count == 0 || lo == 0 || hi < lo) throw ValidationError("invalid size range");
  if (count == 1) return {hi};
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    const auto v = static_cast<std::size_t>(std::llround(static_cast<double>(lo) +
                                                         t * static_cast<double>(hi - lo)));
    if (out.empty() || v > out.back()) out.push_back(v);
  }
  return out;
}

BestK best_k_search(const LabeledDataset& train, const LabeledDataset& test, std::size_t k_max) {
  check_pair(train, test, k_max);
  const std::size_t c = train.num_classes();
  // wrong[i * k_max + (k-1)]: test point i misclassified at k.
  std::vector<unsigned char> wrong(test.size() * k_max, 0);
  parallel_for(test.size(), [&](std::size_t i) {
    const auto nn = neighbors_unchecked(train, test.point(i), k_max);
    std::vector<std::size_t> counts(c, 0);
    std::size_t leader = 0;
    for (std::size_t k = 1; k <= k_max; ++k) {
      const auto l = static_cast<std::size_t>(train.label(nn[k - 1]));
      ++counts[l];
      if (counts[l] > counts[leader] || (counts[l] == counts[leader] && l < leader)) leader = l;
      wrong[i * k_max + (k - 1)] = static_cast<std::int32_t>(leader) != test.label(i);
    }
  });
  BestK out;
  out.errors.assign(k_max, 0.0);
  for (std::size_t i = 0; i < test.size(); ++i) {
    for (std::size_t k = 0; k < k_max; ++k) out.errors[k] += wrong[i * k_max + k];
  }
  for (auto& e : out.errors) e /= static_cast<double>(test.size());
  out.k = 1;
  out.error = out.errors[0];
  for (std::size_t k = 2; k <= k_max; ++k) {
    if (out.errors[k - 1] < out.error) {
      out.k = k;
      out.error = out.errors[k - 1];
    }
  }
  return out;
}

}  // namespace ktl
