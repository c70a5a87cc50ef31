#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ktl/error.hpp"
#include "ktl/finite_dist.hpp"
#include "ktl/knn.hpp"
#include "ktl/rng.hpp"
#include "ktl/synthetic.hpp"

using namespace ktl;

TEST(LipschitzTask, ZeroSlopeIsCoinFlip) {
  EXPECT_EQ(lipschitz_task_bayes_error(0.0, 3), 0.5);
  const auto task = gen_lipschitz_task(0.0, 2, 1);
  const std::vector<double> x{0.9, 0.1};
  EXPECT_EQ(task.posterior(x), 0.5);
}

TEST(LipschitzTask, OneDimensionalQuarter) {
  EXPECT_NEAR(lipschitz_task_bayes_error(1.0, 1), 0.25, 1e-12);
  const auto task = gen_lipschitz_task(1.0, 1, 2);
  const std::vector<double> x{0.3};
  EXPECT_NEAR(task.posterior(x), 0.3, 1e-15);
}

TEST(LipschitzTask, TwoDimensionalClosedForm) {
  // U = |X1 + X2 - 1| has density 2(1 - u) on [0, 1] and eta saturates past u0.
  const double c = 1.0 / std::sqrt(2.0);
  const double u0 = 0.5 / c;
  const double margin = 2.0 * c * (u0 * u0 / 2.0 - u0 * u0 * u0 / 3.0) + 0.5 * (1.0 - u0) * (1.0 - u0);
  EXPECT_NEAR(lipschitz_task_bayes_error(1.0, 2), 0.5 - margin, 1e-12);
}

TEST(LipschitzTask, PosteriorIsLipschitzOnSampledPairs) {
  for (auto [L, dim] : std::vector<std::pair<double, std::size_t>>{{1.0, 1}, {1.0, 4}, {3.0, 2}, {0.5, 8}}) {
    const auto task = gen_lipschitz_task(L, dim, 3);
    Rng rng(4);
    std::vector<double> x(dim), z(dim);
    double worst = -1.0;
    for (int i = 0; i < 100000; ++i) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        x[j] = rng.uniform();
        z[j] = rng.uniform();
        d2 += (x[j] - z[j]) * (x[j] - z[j]);
      }
      worst = std::max(worst, std::abs(task.posterior(x) - task.posterior(z)) - L * std::sqrt(d2));
    }
    EXPECT_LE(worst, 1e-12) << "L " << L << " dim " << dim;
  }
}

TEST(LipschitzTask, BayesErrorMatchesMonteCarlo) {
  for (auto [L, dim] : std::vector<std::pair<double, std::size_t>>{{1.0, 2}, {1.0, 4}, {2.0, 3}, {4.0, 1}, {1.5, 10}}) {
    const auto task = gen_lipschitz_task(L, dim, 5);
    const auto data = task.sample(1000000, 7);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double eta = task.posterior(data.point(i));
      const double m = std::min(eta, 1.0 - eta);
      sum += m;
      sum2 += m * m;
    }
    const double n = static_cast<double>(data.size());
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    EXPECT_NEAR(task.bayes_error(), mean, 3 * se) << "L " << L << " dim " << dim;
  }
}

TEST(LipschitzTask, SamplesAreDeterministicAndInCube) {
  const auto task = gen_lipschitz_task(1.0, 3, 9);
  const auto a = task.sample(500, 2);
  EXPECT_EQ(a, gen_lipschitz_task(1.0, 3, 9).sample(500, 2));
  EXPECT_NE(a, task.sample(500, 3));
  for (double v : a.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_THROW(gen_lipschitz_task(-1.0, 3, 0), ValidationError);
  EXPECT_THROW(gen_lipschitz_task(1.0, 0, 0), ValidationError);
}

TEST(TightnessSamples, NearlyDeterministicLabels) {
  const double eps = 0.01;
  const auto [train, train_t] = gen_tightness_samples(0.5 - eps, 5000, 1);
  const auto [test, test_t] = gen_tightness_samples(0.5 - eps, 5000, 2);
  // Two well separated points: the 1NN error is 2 eta (1 - eta) ~ 2 eps.
  EXPECT_LE(error_rate(train, test, {1}), 3 * eps);
}

TEST(TightnessSamples, CollapsedFeaturesCarryNoSignal) {
  const auto [train, train_t] = gen_tightness_samples(0.3, 4000, 3);
  const auto [test, test_t] = gen_tightness_samples(0.3, 4000, 4);
  EXPECT_EQ(train.labels(), train_t.labels());
  for (double v : train_t.values()) EXPECT_EQ(v, 0.0);
  for (double v : train.values()) EXPECT_EQ(std::abs(v), 1.0);
  const double noise = 3.0 * 0.5 / std::sqrt(4000.0);
  EXPECT_GE(error_rate(train_t, test_t, {1}), 0.5 - noise);
  EXPECT_GE(error_rate(train_t, test_t, {101}), 0.5 - noise);
  EXPECT_THROW(gen_tightness_samples(0.5, 10, 0), ValidationError);
}

TEST(ShiftedPair, SatisfiesKlWindowAndNormalization) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const double eps = 0.05 + 0.01 * static_cast<double>(s % 20);
    const auto pair = gen_shifted_pair(eps, 2 + s % 9, 2 + s % 3, s);
    const double budget = eps * eps / (8.0 * std::numbers::ln2);
    const double kl = joint_kl(pair.source, pair.target);
    EXPECT_NEAR(kl, pair.kl_bits, 1e-12);
    EXPECT_LE(kl, budget * (1 + 1e-9));
    if (pair.mix < 1.0) {
      EXPECT_GE(kl, 0.5 * budget);
    }
    double total = 0.0;
    for (double m : pair.target.masses()) total += m;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(ShiftedPair, LargeEpsilonSaturates) {
  const auto pair = gen_shifted_pair(100.0, 5, 2, 1);
  EXPECT_EQ(pair.mix, 1.0);
  EXPECT_THROW(gen_shifted_pair(0.0, 5, 2, 1), ValidationError);
}

TEST(RandomFinite, NormalizedAndDeterministic) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto p = gen_random_finite(1 + s % 10, 2 + s % 4, s, s % 3);
    double total = 0.0;
    for (double m : p.masses()) total += m;
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_EQ(p, gen_random_finite(1 + s % 10, 2 + s % 4, s, s % 3));
    EXPECT_EQ(p.payload_dim(), s % 3);
  }
}

TEST(RandomFinite, CellMeansMatchDirichlet) {
  const std::size_t draws = 100000;
  std::vector<double> mean(6, 0.0);
  for (std::uint64_t s = 0; s < draws; ++s) {
    const auto p = gen_random_finite(3, 2, s);
    for (std::size_t c = 0; c < 6; ++c) mean[c] += p.masses()[c] / static_cast<double>(draws);
  }
  for (double m : mean) EXPECT_NEAR(m, 1.0 / 6.0, 0.01 / 6.0);
}

TEST(RandomMap, CoversRequestedCodomain) {
  const auto p = gen_random_finite(10, 2, 1);
  const auto f = gen_random_map(p, 4, 2);
  EXPECT_EQ(f.codomain_size(), 4u);
  EXPECT_EQ(f.source_size(), 10u);
  EXPECT_EQ(f.codomain()[3].id, "t3");
}

TEST(Scorers, RandomLookupAndLinearStayInUnitInterval) {
  const auto p = gen_random_finite(6, 2, 3, 3);
  const auto f = gen_random_map(p, 3, 4);
  const auto g = gen_random_scorer(f, 5);
  for (const auto& t : f.codomain()) {
    EXPECT_GE(g(t), 0.0);
    EXPECT_LE(g(t), 1.0);
  }
  const auto lin = gen_linear_scorer(3, 2.0, 6);
  EXPECT_EQ(lin.lipschitz_constant(), 2.0);
  for (const auto& x : p.x_support()) {
    const double v = lin(x);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}
