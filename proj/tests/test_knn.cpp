#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ktl/dataset.hpp"
#include "ktl/dataset_io.hpp"
#include "ktl/error.hpp"
#include "ktl/knn.hpp"
#include "ktl/rng.hpp"
#include "ktl/synthetic.hpp"
#include "oracles.hpp"

using namespace ktl;

namespace {

LabeledDataset random_dataset(std::size_t n, std::size_t dim, std::size_t classes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n * dim);
  for (auto& x : v) x = rng.normal();
  std::vector<std::int32_t> y(n);
  for (auto& l : y) l = static_cast<std::int32_t>(rng.index(classes));
  return LabeledDataset(std::move(v), dim, std::move(y), classes);
}

LabeledDataset corners() { return LabeledDataset({0, 0, 1, 1}, 2, {0, 1}); }

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("ktl_test_" + name);
}

}  // namespace

TEST(KnnClassify, UniqueNearest) {
  const std::vector<double> q{0.1, 0.1};
  EXPECT_EQ(knn_classify(corners(), q, {1}), 0);
}

TEST(KnnClassify, VoteTieGoesToSmallestLabel) {
  const std::vector<double> q{0.5, 0.5};
  EXPECT_EQ(knn_classify(corners(), q, {2}), 0);
}

TEST(KnnClassify, DistanceTieGoesToLowerIndex) {
  const LabeledDataset train({1, -1}, 1, {1, 0});
  const std::vector<double> q{0.0};
  EXPECT_EQ(knn_classify(train, q, {1}), 1);
  EXPECT_EQ(nearest_neighbors(train, q, 2), (std::vector<std::size_t>{0, 1}));
}

TEST(KnnClassify, MatchesFullSortOracle) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto train = random_dataset(50 + 7 * s, 3, 2 + s % 3, s);
    const auto test = random_dataset(30, 3, 2 + s % 3, s + 100);
    for (std::size_t k : {1u, 3u, 5u, 10u}) {
      for (std::size_t i = 0; i < test.size(); ++i) {
        const auto o = oracle::knn_full_sort(train, test.point(i), k);
        EXPECT_EQ(nearest_neighbors(train, test.point(i), k), o.order);
        EXPECT_EQ(knn_classify(train, test.point(i), {k}), o.label);
        EXPECT_EQ(knn_posterior(train, test.point(i), {k}), o.fractions);
      }
    }
  }
}

TEST(KnnClassify, ValidationErrors) {
  const std::vector<double> q3{0, 0, 0};
  const std::vector<double> q2{0, 0};
  EXPECT_THROW(knn_classify(corners(), q3, {1}), ValidationError);
  EXPECT_THROW(knn_classify(corners(), q2, {3}), ValidationError);
  EXPECT_THROW(knn_classify(corners(), q2, {0}), ValidationError);
}

TEST(KnnPosterior, KOneIsOneHot) {
  const auto train = random_dataset(40, 2, 3, 4);
  const std::vector<double> q{0.3, -0.2};
  const auto post = knn_posterior(train, q, {1});
  const auto nn = nearest_neighbors(train, q, 1)[0];
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(post[c], c == static_cast<std::size_t>(train.label(nn)) ? 1.0 : 0.0);
}

TEST(KnnPosterior, KEqualsNIsLabelFrequency) {
  const auto train = random_dataset(40, 2, 3, 5);
  const std::vector<double> q{1.0, 1.0};
  const auto post = knn_posterior(train, q, {40});
  const auto freq = train.label_frequencies();
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(post[c], freq[c], 1e-15);
  const auto modal = std::max_element(freq.begin(), freq.end()) - freq.begin();
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto q2 = random_dataset(1, 2, 1, s);
    EXPECT_EQ(knn_classify(train, q2.point(0), {40}), modal);
  }
}

TEST(ErrorRate, TrainEqualsTestIsZero) {
  const auto d = random_dataset(100, 4, 3, 6);
  EXPECT_EQ(error_rate(d, d, {1}), 0.0);
}

TEST(ErrorRate, SingleCorrectPoint) {
  const LabeledDataset test({0.1, 0.1}, 2, {0}, 2);
  EXPECT_EQ(error_rate(corners(), test, {1}), 0.0);
}

TEST(ErrorRate, MatchesLoopOracle) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto train = random_dataset(150, 2, 2, s);
    const auto test = random_dataset(100, 2, 2, s + 50);
    for (std::size_t k : {1u, 4u, 9u}) EXPECT_EQ(error_rate(train, test, {k}), oracle::knn_error_loop(train, test, k));
  }
}

TEST(ErrorRate, EmptyTestRejected) {
  EXPECT_THROW(error_rate(corners(), LabeledDataset({}, 2, {}, 2), {1}), ValidationError);
}

TEST(KnnInvariants, PermutationInvariance) {
  const auto train = random_dataset(120, 3, 3, 8);
  const auto test = random_dataset(60, 3, 3, 9);
  std::vector<std::size_t> perm(train.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  Rng(10).shuffle(perm);
  const auto shuffled = train.subset(perm);
  for (std::size_t i = 0; i < test.size(); ++i) {
    for (std::size_t k : {1u, 5u}) {
      EXPECT_EQ(knn_classify(train, test.point(i), {k}), knn_classify(shuffled, test.point(i), {k}));
    }
  }
}

TEST(KnnInvariants, ScaleCovariance) {
  const auto train = random_dataset(120, 3, 2, 11);
  const auto test = random_dataset(60, 3, 2, 12);
  for (double c : {0.5, 3.0}) {
    auto tv = train.values();
    for (auto& x : tv) x *= c;
    const LabeledDataset scaled(tv, 3, train.labels(), 2);
    for (std::size_t i = 0; i < test.size(); ++i) {
      std::vector<double> q(test.point(i).begin(), test.point(i).end());
      for (auto& x : q) x *= c;
      EXPECT_EQ(knn_classify(train, test.point(i), {3}), knn_classify(scaled, q, {3}));
    }
  }
}

TEST(Convergence, FullSizeSingleRunEqualsErrorRate) {
  const auto data = random_dataset(200, 2, 2, 13);
  const auto test = random_dataset(80, 2, 2, 14);
  const std::vector<std::size_t> sizes{200};
  const auto curve = convergence_curve(data, test, {3}, sizes, 1, 0);
  ASSERT_EQ(curve.points.size(), 1u);
  EXPECT_EQ(curve.points[0].mean, error_rate(data, test, {3}));
  EXPECT_EQ(curve.points[0].sd, 0.0);
  EXPECT_EQ(curve.points[0].runs, 1u);
}

TEST(Convergence, Deterministic) {
  const auto data = random_dataset(300, 2, 2, 15);
  const auto test = random_dataset(50, 2, 2, 16);
  const auto sizes = linear_sizes(10, 300, 5);
  const auto a = convergence_curve(data, test, {1}, sizes, 7, 42);
  const auto b = convergence_curve(data, test, {1}, sizes, 7, 42);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i].mean, b.points[i].mean);
    EXPECT_EQ(a.points[i].sd, b.points[i].sd);
    EXPECT_EQ(a.points[i].ci95, 1.96 * a.points[i].sd / std::sqrt(7.0));
  }
}

TEST(Convergence, RejectsOversizedSubsample) {
  const auto data = random_dataset(20, 2, 2, 17);
  const std::vector<std::size_t> sizes{21};
  EXPECT_THROW(convergence_curve(data, data, {1}, sizes, 1, 0), ValidationError);
}

TEST(Convergence, LipschitzTaskErrorDecreases) {
  const auto task = gen_lipschitz_task(1.0, 2, 3);
  const auto pool = task.sample(5000, 0);
  const auto test = task.sample(1000, 1);
  const auto sizes = linear_sizes(50, 5000, 11);
  const auto curve = convergence_curve(pool, test, {1}, sizes, 10, 5);
  int ok = 0;
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    const auto& a = curve.points[i];
    const auto& b = curve.points[i + 1];
    if (b.mean <= a.mean + std::max(a.ci95, b.ci95)) ++ok;
  }
  EXPECT_GE(ok, 9);
}

TEST(LinearSizes, EndpointsAndCount) {
  const auto s = linear_sizes(100, 10000, 10);
  ASSERT_EQ(s.size(), 10u);
  EXPECT_EQ(s.front(), 100u);
  EXPECT_EQ(s.back(), 10000u);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
}

TEST(BestK, KMaxOneMatchesErrorRate) {
  const auto train = random_dataset(100, 2, 2, 18);
  const auto test = random_dataset(50, 2, 2, 19);
  const auto r = best_k_search(train, test, 1);
  EXPECT_EQ(r.k, 1u);
  EXPECT_EQ(r.error, error_rate(train, test, {1}));
}

TEST(BestK, MatchesPerKErrorRates) {
  const auto train = random_dataset(80, 2, 3, 20);
  const auto test = random_dataset(40, 2, 3, 21);
  const auto r = best_k_search(train, test, 25);
  ASSERT_EQ(r.errors.size(), 25u);
  for (std::size_t k = 1; k <= 25; ++k) EXPECT_EQ(r.errors[k - 1], error_rate(train, test, {k}));
  EXPECT_EQ(r.error, *std::min_element(r.errors.begin(), r.errors.end()));
  EXPECT_EQ(r.errors[r.k - 1], r.error);
}

TEST(BestK, SeparableClusters) {
  // Clusters of diameter < 0.2 centred 10 apart.
  Rng rng(22);
  std::vector<double> tv, sv;
  std::vector<std::int32_t> ty, sy;
  for (int i = 0; i < 60; ++i) {
    const int c = i % 3;
    tv.insert(tv.end(), {10.0 * c + rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05)});
    ty.push_back(c);
    sv.insert(sv.end(), {10.0 * c + rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05)});
    sy.push_back(c);
  }
  const auto r = best_k_search(LabeledDataset(tv, 2, ty, 3), LabeledDataset(sv, 2, sy, 3), 20);
  EXPECT_EQ(r.k, 1u);
  EXPECT_EQ(r.error, 0.0);
}

TEST(BestK, PureNoiseApproachesMajorityRate) {
  const auto train = random_dataset(600, 2, 2, 23);
  const auto test = random_dataset(600, 2, 2, 24);
  const auto freq = test.label_frequencies();
  const double majority_error = 1.0 - std::max(freq[0], freq[1]);
  const auto r = best_k_search(train, test, 600);
  EXPECT_NEAR(r.error, majority_error, 0.06);
  EXPECT_LE(r.error, r.errors.back());
}

TEST(BestK, KMaxAboveNRejected) {
  EXPECT_THROW(best_k_search(corners(), corners(), 3), ValidationError);
}

TEST(DatasetIo, CsvRoundTrip) {
  const auto d = random_dataset(25, 3, 4, 25);
  std::stringstream ss;
  write_csv(ss, d);
  EXPECT_EQ(read_csv(ss), d);
}

TEST(DatasetIo, BinaryRoundTripAndCrossFormat) {
  const auto d = random_dataset(25, 3, 4, 26);
  const auto bin = temp_path("cross.bin");
  const auto csv = temp_path("cross.csv");
  write_dataset(bin, d, DatasetFormat::kBinary);
  write_dataset(csv, d, DatasetFormat::kCsv);
  EXPECT_EQ(read_dataset(bin), d);
  EXPECT_EQ(read_dataset(bin), read_dataset(csv));
  std::filesystem::remove(bin);
  std::filesystem::remove(csv);
}

TEST(DatasetIo, HeaderDetected) {
  std::stringstream ss("label,a,b\n0,1.5,2\n1,3,4\n");
  const auto d = read_csv(ss);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.point(1)[0], 3.0);
}

TEST(DatasetIo, NanRowNamed) {
  std::stringstream ss("0,1,2\n1,nan,4\n");
  try {
    read_csv(ss, "bad.csv");
    FAIL() << "expected an ingestion error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.csv:2: row 1"), std::string::npos) << e.what();
  }
}

TEST(DatasetIo, RaggedRowsAndBadLabelsRejected) {
  std::stringstream ragged("0,1,2\n1,3\n");
  EXPECT_THROW(read_csv(ragged), ValidationError);
  std::stringstream label("0.5,1,2\n1,3,4\n0.5,1,1\n");
  EXPECT_THROW(read_csv(label), ValidationError);
  std::stringstream magic("KTL2garbage");
  EXPECT_THROW(read_binary(magic), ValidationError);
}

TEST(Dataset, RejectsLabelOutOfRange) {
  EXPECT_THROW(LabeledDataset({0, 1}, 1, {0, 2}, 2), ValidationError);
  EXPECT_THROW(LabeledDataset({0, 1}, 1, {0, -1}), ValidationError);
}
