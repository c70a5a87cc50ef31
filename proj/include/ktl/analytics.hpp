#pragma once

// Correlation statistics used to compare feature transformations: Pearson's r,
// the first canonical correlation, and the computable kNN bound surrogate.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ktl/dataset.hpp"
#include "ktl/head.hpp"
#include "ktl/transforms.hpp"

namespace ktl {

// Sample Pearson coefficient. Throws ValidationError on length mismatch or
// fewer than 2 samples, DegenerateInputError on zero variance.
double pearson_r(std::span<const double> a, std::span<const double> b);

struct CcaResult {
  double correlation = 0.0;
  // Directions on the standardized columns of each view.
  Eigen::VectorXd weights_a;
  Eigen::VectorXd weights_b;
};

inline constexpr double kCcaRidge = 1e-8;

// First canonical pair of two views (n x p and n x q). Columns are
// standardized internally; constant columns become zero and are handled by the
// ridge on each covariance block. The returned correlation is the Pearson
// coefficient of the projected variates, made non-negative.
CcaResult cca_first_correlation(const Eigen::MatrixXd& view_a, const Eigen::MatrixXd& view_b);

// 1/sqrt(k) + lipschitz (k/n)^(1/d) + mse^exponent.
double bound_surrogate(std::size_t k, std::size_t n, std::size_t d, double lipschitz, double mse,
                       double mse_exponent = 0.25);

struct TransformationRecord {
  std::string name;
  std::size_t dim = 0;
  std::size_t train_size = 0;
  std::map<std::size_t, double> knn_error;  // by k
  double mse = 0.0;
  double frobenius_norm = 0.0;
  // Lipschitz constant of the head; frobenius_norm / 4 when not given.
  std::optional<double> lipschitz;

  double head_lipschitz() const { return lipschitz.value_or(frobenius_norm / 4.0); }
  double surrogate(std::size_t k, double mse_exponent = 0.25) const;
  void validate() const;
};

// A statistic that may be undefined on the given records.
struct Statistic {
  std::optional<double> value;
  std::string degenerate_reason;  // empty when value is set
};

struct CorrelationReport {
  std::size_t k = 1;
  std::size_t samples = 0;
  Statistic pearson_dim_vs_err;
  Statistic pearson_mse_vs_err;
  Statistic pearson_surrogate_vs_err;
  Statistic cca_msenorm_vs_err;
  // CCA of error against [k^-1/2, L (k/n)^(1/d), mse^exponent], pooling one
  // row per (record, k) so the k term can vary. Exploratory only.
  std::optional<Statistic> cca_surrogate_terms_vs_err;
  double surrogate_exponent = 0.25;
};

// Requires at least 3 records, each with an error at k.
CorrelationReport build_correlation_report(const std::vector<TransformationRecord>& records, std::size_t k,
                                           double surrogate_exponent = 0.25, bool surrogate_terms = false);

nlohmann::json to_json(const TransformationRecord& r);
TransformationRecord record_from_json(const nlohmann::json& j);
std::vector<TransformationRecord> records_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CorrelationReport& r);

// Columns: name, dim, mse, norm, knn_err, surrogate.
void write_records_csv(std::ostream& out, const std::vector<TransformationRecord>& records, std::size_t k,
                       double surrogate_exponent = 0.25);

struct TransformationEvaluation {
  TransformationRecord record;
  HeadReport head_report;
  LogisticHead head;
  double gradient_deviation = 0.0;  // gradient_check of the trained head on the first 32 train rows
};

// Applies `t` to both splits, runs kNN for each k on the transformed features,
// and trains a head on the normalized transformed features.
TransformationEvaluation evaluate_transformation(const std::string& name, const VectorTransform& t,
                                                 const LabeledDataset& train, const LabeledDataset& test,
                                                 std::span<const std::size_t> ks, const TrainConfig& cfg);

}  // namespace ktl
