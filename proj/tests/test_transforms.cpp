#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "ktl/error.hpp"
#include "ktl/knn.hpp"
#include "ktl/rng.hpp"
#include "ktl/transforms.hpp"

using namespace ktl;

namespace {

LabeledDataset gaussian_cloud(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n * dim);
  for (auto& x : v) x = rng.normal();
  return LabeledDataset(std::move(v), dim, std::vector<std::int32_t>(n, 0), 1);
}

double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// x uniform on [-1, 1] with label 1{x > 0}.
LabeledDataset signed_line(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  std::vector<std::int32_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = rng.uniform(-1.0, 1.0);
    y[i] = v[i] > 0.0;
  }
  return LabeledDataset(v, 1, y, 2);
}

}  // namespace

TEST(Transforms, IdentityUnchanged) {
  const auto d = gaussian_cloud(20, 3, 1);
  EXPECT_EQ(apply(VectorTransform::identity(), d), d);
}

TEST(Transforms, CreluLayout) {
  const std::vector<double> x{-2.0, 3.0};
  EXPECT_EQ(VectorTransform::crelu()(x), (std::vector<double>{0.0, 3.0, 2.0, 0.0}));
  EXPECT_EQ(VectorTransform::crelu().output_dim(2), 4u);
}

TEST(Transforms, RadialIndicator) {
  const auto r = VectorTransform::radial_indicator(1.0);
  const std::vector<double> inside{0.6, 0.6}, edge{1.0, 0.0}, outside{1.0, 1.0};
  EXPECT_EQ(r(inside), std::vector<double>{0.0});
  EXPECT_EQ(r(edge), std::vector<double>{1.0});
  EXPECT_EQ(r(outside), std::vector<double>{1.0});
  EXPECT_THROW(VectorTransform::radial_indicator(-1.0), ValidationError);
}

TEST(Transforms, QuantizerBoundaries) {
  const auto q = VectorTransform::quantizer(4, 0.0, 1.0);
  const std::vector<double> x{0.0, 0.25, 0.2499, 1.0, 1.7, -3.0};
  EXPECT_EQ(q(x), (std::vector<double>{0.125, 0.375, 0.125, 0.875, 0.875, 0.125}));
  EXPECT_THROW(VectorTransform::quantizer(0, 0.0, 1.0), ValidationError);
  EXPECT_THROW(VectorTransform::quantizer(2, 1.0, 1.0), ValidationError);
}

TEST(Transforms, AbsValue) {
  const std::vector<double> x{-2.5, 0.0, 1.0};
  EXPECT_EQ(VectorTransform::abs_value()(x), (std::vector<double>{2.5, 0.0, 1.0}));
}

TEST(Transforms, LinearWithCenter) {
  Eigen::MatrixXd m(1, 2);
  m << 1.0, -1.0;
  const auto t = VectorTransform::linear(m, Eigen::Vector2d(1.0, 1.0));
  const std::vector<double> x{3.0, 0.5};
  EXPECT_EQ(t(x), std::vector<double>{2.5});
  EXPECT_EQ(t.input_dim(), 2u);
  EXPECT_THROW(t.output_dim(3), ValidationError);
}

TEST(Transforms, DimensionMismatchRejected) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 3);
  EXPECT_THROW(apply(VectorTransform::linear(m), gaussian_cloud(5, 2, 2)), ValidationError);
  EXPECT_THROW(VectorTransform::compose({VectorTransform::linear(m), VectorTransform::linear(m)}), ValidationError);
  EXPECT_THROW(apply(VectorTransform::crelu(), LabeledDataset({}, 2, {}, 2)), ValidationError);
}

TEST(Transforms, CreluIsCollisionFree) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(s);
    const std::size_t dim = 2 + s % 3;
    // Small integer grid so distinct inputs often share coordinates and signs.
    std::set<std::vector<double>> inputs;
    while (inputs.size() < 40) {
      std::vector<double> x(dim);
      for (auto& c : x) c = static_cast<double>(static_cast<int>(rng.index(7)) - 3);
      inputs.insert(x);
    }
    std::set<std::vector<double>> outputs;
    for (const auto& x : inputs) outputs.insert(VectorTransform::crelu()(x));
    EXPECT_EQ(outputs.size(), inputs.size());
  }
}

TEST(Transforms, AbsValueRaisesNearestNeighborError) {
  const auto train = signed_line(2000, 3);
  const auto test = signed_line(1000, 4);
  const double raw = error_rate(train, test, {1});
  const double folded = error_rate(apply(VectorTransform::abs_value(), train),
                                   apply(VectorTransform::abs_value(), test), {1});
  EXPECT_LT(raw, 0.02);
  EXPECT_GT(folded, 0.4);
}

TEST(Transforms, OrthonormalProjectionNonExpansive) {
  const auto d = gaussian_cloud(60, 5, 5);
  const auto pca = fit_pca(d, 3);
  const auto projected = apply(pca.transform(), d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = i + 1; j < d.size(); ++j) {
      EXPECT_LE(dist(projected.point(i), projected.point(j)), dist(d.point(i), d.point(j)) + 1e-10);
    }
  }
}

TEST(Transforms, CompositionIsAssociative) {
  const auto d = gaussian_cloud(30, 2, 6);
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 2.0, -0.5, 0.3;
  const auto a = VectorTransform::linear(m);
  const auto b = VectorTransform::crelu();
  const auto c = VectorTransform::quantizer(5, -1.0, 1.0);
  const auto left = VectorTransform::compose({VectorTransform::compose({a, b}), c});
  const auto right = VectorTransform::compose({a, VectorTransform::compose({b, c})});
  const auto stepwise = apply(c, apply(b, apply(a, d)));
  EXPECT_EQ(apply(left, d), stepwise);
  EXPECT_EQ(apply(right, d), stepwise);
  EXPECT_EQ(apply(VectorTransform::compose({a, b}), d), apply(b, apply(a, d)));
}

TEST(Pca, SubspaceRecovered) {
  Rng rng(7);
  std::vector<double> v;
  for (int i = 0; i < 50; ++i) {
    const double s = rng.normal(), t = rng.normal();
    v.insert(v.end(), {s + t, s - t, 2 * s, 0.5 * t});
  }
  const LabeledDataset d(v, 4, std::vector<std::int32_t>(50, 0), 1);
  const auto model = fit_pca(d, 2);
  EXPECT_LE(reconstruction_error(model, d), 1e-8);
  const Eigen::MatrixXd gram = model.components * model.components.transpose();
  EXPECT_LE((gram - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Pca, FullRankPreservesDistances) {
  const auto d = gaussian_cloud(40, 3, 8);
  const auto projected = apply(fit_pca(d, 3).transform(), d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = i + 1; j < d.size(); ++j) {
      EXPECT_NEAR(dist(projected.point(i), projected.point(j)), dist(d.point(i), d.point(j)), 1e-8);
    }
  }
}

TEST(Pca, AnisotropicLeadingDirection) {
  Rng rng(9);
  std::vector<double> v;
  const double c = std::cos(0.3), s = std::sin(0.3);
  for (int i = 0; i < 2000; ++i) {
    const double a = 10.0 * rng.normal(), b = rng.normal();
    v.insert(v.end(), {c * a - s * b, s * a + c * b});
  }
  const LabeledDataset d(v, 2, std::vector<std::int32_t>(2000, 0), 1);
  const auto model = fit_pca(d, 1);
  EXPECT_GE(std::abs(model.components(0, 0) * c + model.components(0, 1) * s), 0.99);
}

TEST(Pca, SignConventionAndOrdering) {
  const auto d = gaussian_cloud(100, 4, 10);
  const auto model = fit_pca(d, 4);
  for (Eigen::Index r = 0; r < 4; ++r) {
    Eigen::Index arg = 0;
    model.components.row(r).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(model.components(r, arg), 0.0);
    if (r > 0) {
      EXPECT_LE(model.eigenvalues[r], model.eigenvalues[r - 1]);
    }
    EXPECT_GE(model.eigenvalues[r], -1e-10);
  }
}

TEST(Pca, ReconstructionErrorNonIncreasing) {
  const auto d = gaussian_cloud(80, 6, 11);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= 6; ++k) {
    const double e = reconstruction_error(fit_pca(d, k), d);
    EXPECT_LE(e, previous + 1e-12);
    previous = e;
  }
  EXPECT_LE(previous, 1e-20);
}

TEST(Pca, JsonRoundTrip) {
  const auto d = gaussian_cloud(30, 3, 12);
  const auto model = fit_pca(d, 2);
  const auto back = pca_from_json(to_json(model));
  EXPECT_EQ(back.mean, model.mean);
  EXPECT_EQ(back.components, model.components);
  EXPECT_EQ(back.eigenvalues, model.eigenvalues);
  EXPECT_THROW(pca_from_json(nlohmann::json{{"mean", {1.0}}}), ValidationError);
}

TEST(Pca, TooManyComponentsRejected) {
  EXPECT_THROW(fit_pca(gaussian_cloud(5, 3, 13), 4), ValidationError);
  EXPECT_THROW(fit_pca(gaussian_cloud(2, 3, 13), 3), ValidationError);
}

TEST(Ingest, RoundTripAndNanRejected) {
  const auto path = std::filesystem::temp_directory_path() / "ktl_ingest.csv";
  const auto d = gaussian_cloud(10, 2, 14);
  write_dataset(path, d, DatasetFormat::kCsv);
  EXPECT_EQ(ingest_embeddings(path), d);
  {
    std::ofstream out(path);
    out << "0,1.0,2.0\n1,inf,3.0\n";
  }
  EXPECT_THROW(ingest_embeddings(path), IngestionError);
  std::filesystem::remove(path);
  EXPECT_THROW(ingest_embeddings(path), IngestionError);
}
