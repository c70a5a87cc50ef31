#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "ktl/analytics.hpp"
#include "ktl/error.hpp"
#include "ktl/rng.hpp"
#include "oracles.hpp"

using namespace ktl;

namespace {

std::vector<double> normal_series(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

// Multiple correlation of y on the columns of B (with intercept).
double multiple_correlation(const Eigen::VectorXd& y, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd design(b.rows(), b.cols() + 1);
  design << Eigen::VectorXd::Ones(b.rows()), b;
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd fitted = design * coef;
  const std::vector<double> fy(fitted.data(), fitted.data() + fitted.size());
  const std::vector<double> yy(y.data(), y.data() + y.size());
  return oracle::pearson_cov(fy, yy);
}

TransformationRecord record(const std::string& name, std::size_t dim, double err, double mse, double norm) {
  TransformationRecord r;
  r.name = name;
  r.dim = dim;
  r.train_size = 1000;
  r.knn_error[1] = err;
  r.mse = mse;
  r.frobenius_norm = norm;
  return r;
}

}  // namespace

TEST(Pearson, ExactLinearRelations) {
  const std::vector<double> a{1, 2, 3}, b{2, 4, 6}, c{-1, -2, -3};
  EXPECT_NEAR(pearson_r(a, b), 1.0, 1e-15);
  EXPECT_NEAR(pearson_r(a, c), -1.0, 1e-15);
}

TEST(Pearson, MatchesCovarianceOracle) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto a = normal_series(5 + t, rng);
    auto b = normal_series(5 + t, rng);
    for (std::size_t i = 0; i < a.size(); ++i) b[i] += 0.5 * a[i];
    EXPECT_NEAR(pearson_r(a, b), oracle::pearson_cov(a, b), 1e-12);
  }
}

TEST(Pearson, PositiveAffineInvariance) {
  Rng rng(2);
  const auto a = normal_series(40, rng);
  const auto b = normal_series(40, rng);
  auto a2 = a;
  for (auto& x : a2) x = 3.5 * x - 7.0;
  EXPECT_NEAR(pearson_r(a2, b), pearson_r(a, b), 1e-12);
}

TEST(Pearson, Errors) {
  const std::vector<double> a{1, 2, 3}, flat{4, 4, 4}, short_{1, 2};
  EXPECT_THROW(pearson_r(a, flat), DegenerateInputError);
  EXPECT_THROW(pearson_r(a, short_), ValidationError);
  const std::vector<double> one{1};
  EXPECT_THROW(pearson_r(one, one), ValidationError);
}

TEST(Cca, SingleColumnsGiveCorrelationMagnitude) {
  Rng rng(3);
  const auto a = normal_series(30, rng);
  auto b = normal_series(30, rng);
  for (std::size_t i = 0; i < a.size(); ++i) b[i] -= a[i];
  const Eigen::MatrixXd va = Eigen::Map<const Eigen::VectorXd>(a.data(), 30);
  const Eigen::MatrixXd vb = Eigen::Map<const Eigen::VectorXd>(b.data(), 30);
  EXPECT_NEAR(cca_first_correlation(va, vb).correlation, std::abs(pearson_r(a, b)), 1e-9);
}

TEST(Cca, InvertibleMapGivesOne) {
  Rng rng(4);
  Eigen::MatrixXd a(40, 3);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  Eigen::Matrix3d m;
  m << 1, 2, 0, 0, 1, -1, 3, 0, 1;
  EXPECT_NEAR(cca_first_correlation(a, a * m).correlation, 1.0, 1e-6);
}

TEST(Cca, MatchesDirectionGridOracle) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    Rng rng(10 + s);
    Eigen::MatrixXd a(50, 2), b(50, 2);
    for (Eigen::Index i = 0; i < 50; ++i) {
      const double z = rng.normal();
      a(i, 0) = z + rng.normal();
      a(i, 1) = rng.normal();
      b(i, 0) = rng.normal() + 0.3 * a(i, 1);
      b(i, 1) = 0.5 * z + rng.normal();
    }
    double best = 0.0;
    for (int g = 0; g < 10000; ++g) {
      const double theta = std::numbers::pi * g / 10000.0;
      const Eigen::VectorXd y = a.col(0) * std::cos(theta) + a.col(1) * std::sin(theta);
      best = std::max(best, multiple_correlation(y, b));
    }
    const auto r = cca_first_correlation(a, b);
    EXPECT_NEAR(r.correlation, best, 1e-3) << "seed " << s;
  }
}

TEST(Cca, CorrelationEqualsPearsonOfProjections) {
  Rng rng(5);
  Eigen::MatrixXd a(60, 3), b(60, 2);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
  b.col(0) += a.col(2);
  const auto r = cca_first_correlation(a, b);
  auto standardize = [](Eigen::MatrixXd m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double mean = m.col(j).mean();
      m.col(j).array() -= mean;
      m.col(j) /= std::sqrt(m.col(j).squaredNorm() / static_cast<double>(m.rows() - 1));
    }
    return m;
  };
  const Eigen::VectorXd pa = standardize(a) * r.weights_a;
  const Eigen::VectorXd pb = standardize(b) * r.weights_b;
  const std::vector<double> va(pa.data(), pa.data() + pa.size()), vb(pb.data(), pb.data() + pb.size());
  EXPECT_NEAR(r.correlation, std::abs(oracle::pearson_cov(va, vb)), 1e-9);
}

TEST(Cca, DominatesSingleColumns) {
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXd a(30, 1), b(30, 3);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal() + 0.2 * a(i % 30, 0);
    const double c = cca_first_correlation(a, b).correlation;
    const std::vector<double> va(a.data(), a.data() + 30);
    for (Eigen::Index j = 0; j < 3; ++j) {
      const std::vector<double> vb(b.col(j).data(), b.col(j).data() + 30);
      EXPECT_GE(c, std::abs(pearson_r(va, vb)) - 1e-9);
    }
  }
}

TEST(Cca, Errors) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(4, 3), b = Eigen::MatrixXd::Random(4, 1);
  EXPECT_THROW(cca_first_correlation(a, b), ValidationError);
  Eigen::MatrixXd c = Eigen::MatrixXd::Ones(10, 1), d = Eigen::MatrixXd::Random(10, 1);
  EXPECT_THROW(cca_first_correlation(c, d), DegenerateInputError);
}

TEST(Surrogate, WorkedValue) {
  EXPECT_NEAR(bound_surrogate(1, 256, 2, 2.0, 0.0016), 1.325, 1e-12);
  EXPECT_NEAR(bound_surrogate(100, 100, 3, 0.0, 0.0), 0.1, 1e-15);
  EXPECT_NEAR(bound_surrogate(4, 16, 1, 0.0, 0.5, 1.0), 1.0, 1e-15);
}

TEST(Surrogate, Monotone) {
  double prev = 0.0;
  for (double mse : {0.0, 0.01, 0.1, 0.5, 1.0}) {
    const double v = bound_surrogate(3, 500, 4, 1.0, mse);
    EXPECT_GT(v, prev);
    prev = v;
  }
  for (std::size_t n : {10u, 100u, 1000u}) {
    EXPECT_LE(bound_surrogate(3, n * 10, 4, 1.0, 0.1), bound_surrogate(3, n, 4, 1.0, 0.1));
  }
  EXPECT_LE(bound_surrogate(3, 100, 4, 1.0, 0.1), bound_surrogate(3, 100, 4, 2.0, 0.1));
}

TEST(CorrelationReport, ErrorEqualsMse) {
  const std::vector<TransformationRecord> rs{record("a", 2, 0.1, 0.1, 1.0), record("b", 3, 0.3, 0.3, 2.5),
                                             record("c", 5, 0.2, 0.2, 0.7), record("d", 4, 0.4, 0.4, 1.9)};
  const auto rep = build_correlation_report(rs, 1);
  ASSERT_TRUE(rep.pearson_mse_vs_err.value.has_value());
  EXPECT_NEAR(*rep.pearson_mse_vs_err.value, 1.0, 1e-12);
  ASSERT_TRUE(rep.cca_msenorm_vs_err.value.has_value());
  EXPECT_GE(*rep.cca_msenorm_vs_err.value, *rep.pearson_mse_vs_err.value - 1e-9);
  EXPECT_EQ(rep.samples, 4u);
}

TEST(CorrelationReport, ConstantDimensionFlagged) {
  const std::vector<TransformationRecord> rs{record("a", 2, 0.1, 0.2, 1.0), record("b", 2, 0.3, 0.35, 2.0),
                                             record("c", 2, 0.2, 0.1, 0.5)};
  const auto rep = build_correlation_report(rs, 1);
  EXPECT_FALSE(rep.pearson_dim_vs_err.value.has_value());
  EXPECT_FALSE(rep.pearson_dim_vs_err.degenerate_reason.empty());
  EXPECT_TRUE(rep.pearson_mse_vs_err.value.has_value());
  const auto j = to_json(rep);
  EXPECT_TRUE(j.at("pearson_dim_vs_err").at("degenerate").get<bool>());
}

TEST(CorrelationReport, TooFewRecordsOrMissingK) {
  const std::vector<TransformationRecord> two{record("a", 2, 0.1, 0.2, 1.0), record("b", 3, 0.3, 0.35, 2.0)};
  EXPECT_THROW(build_correlation_report(two, 1), ValidationError);
  const std::vector<TransformationRecord> three{record("a", 2, 0.1, 0.2, 1.0), record("b", 3, 0.3, 0.35, 2.0),
                                                record("c", 4, 0.2, 0.1, 0.5)};
  EXPECT_THROW(build_correlation_report(three, 5), ValidationError);
}

TEST(CorrelationReport, SurrogateUsesHeadLipschitz) {
  auto r = record("a", 4, 0.1, 0.0625, 2.0);
  EXPECT_NEAR(r.surrogate(1), 1.0 + 0.5 * std::pow(1.0 / 1000.0, 0.25) + 0.5, 1e-12);
  r.lipschitz = 1.0;
  EXPECT_NEAR(r.surrogate(1, 1.0), 1.0 + std::pow(1.0 / 1000.0, 0.25) + 0.0625, 1e-12);
}

TEST(Records, JsonRoundTripAndCsv) {
  std::vector<TransformationRecord> rs{record("a", 2, 0.1, 0.2, 1.0), record("b", 3, 0.3, 0.35, 2.0)};
  rs[1].knn_error[5] = 0.25;
  rs[1].lipschitz = 0.3;
  const auto j = nlohmann::json{{"records", {to_json(rs[0]), to_json(rs[1])}}};
  const auto back = records_from_json(j);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].knn_error, rs[1].knn_error);
  EXPECT_EQ(back[1].lipschitz, rs[1].lipschitz);
  EXPECT_EQ(to_json(back[0]), to_json(rs[0]));
  std::ostringstream csv;
  write_records_csv(csv, rs, 1);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "name,dim,mse,norm,knn_err,surrogate");
  EXPECT_THROW(record_from_json(nlohmann::json{{"name", "x"}}), ValidationError);
}
