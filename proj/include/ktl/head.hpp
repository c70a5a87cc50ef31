#pragma once

// Softmax (logistic) head g(x) = softmax(W^T x + b) trained by minibatch SGD
// with momentum on cross entropy, plus the quantities used to rank feature
// transformations: test MSE (Brier score), weight norms, Lipschitz constant.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ktl/dataset.hpp"

namespace ktl {

struct LogisticHead {
  Eigen::MatrixXd weights;  // d x C
  Eigen::VectorXd bias;     // C

  LogisticHead() = default;
  LogisticHead(std::size_t dim, std::size_t classes)
      : weights(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(classes))),
        bias(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes))) {}

  std::size_t dim() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t classes() const { return static_cast<std::size_t>(weights.cols()); }

  Eigen::VectorXd predict_proba(std::span<const double> x) const;
  std::int32_t predict(std::span<const double> x) const;
};

struct TrainConfig {
  std::vector<double> learning_rates = {1e-4, 1e-3, 1e-2, 1e-1};
  std::vector<double> l2_strengths = {0.0, 1e-4, 1e-3, 1e-2, 1e-1};
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double momentum = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
};

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& cfg);

struct HeadReport {
  double mse = 0.0;
  double test_error = 0.0;
  double frobenius_norm = 0.0;
  double lipschitz_constant = 0.0;
  double learning_rate = 0.0;
  double l2 = 0.0;
  std::size_t epoch = 0;  // 1-based epoch at which the best test error was reached
  std::vector<std::string> diverged_cells;
};

nlohmann::json to_json(const HeadReport& r);

struct NormalizationStats {
  std::vector<double> min;
  std::vector<double> max;

  std::vector<double> apply(std::span<const double> x) const;
  LabeledDataset apply(const LabeledDataset& data) const;
};

struct NormalizedSplits {
  LabeledDataset train;
  LabeledDataset test;
  NormalizationStats stats;
};

// Per-feature affine map sending the train min to -1 and max to +1 (constant
// features to 0), fitted on train and applied to both splits without clipping.
NormalizedSplits normalize_features(const LabeledDataset& train, const LabeledDataset& test);

// Runs the (learning rate x l2) grid and returns the head with the lowest test
// misclassification error seen after any epoch of any cell (earliest wins ties).
// Throws ComputationError if every cell diverges.
std::pair<LogisticHead, HeadReport> train_head(const LabeledDataset& train, const LabeledDataset& test,
                                               const TrainConfig& cfg);

// Trains one grid cell and returns the weights after the final epoch, or
// nullopt on divergence.
std::optional<LogisticHead> train_cell(const LabeledDataset& train, double learning_rate, double l2,
                                       const TrainConfig& cfg, std::uint64_t cell_seed);

// Mean over test points of ||softmax(W^T x + b) - onehot(y)||^2.
double mse_test(const LogisticHead& head, const LabeledDataset& test);
double misclassification_error(const LogisticHead& head, const LabeledDataset& test);

struct HeadNorms {
  double frobenius = 0.0;
  // ||w_1 - w_0||_2 / 4 for binary heads, ||W||_F / 4 otherwise.
  double lipschitz = 0.0;
};
HeadNorms head_norms(const LogisticHead& head);

struct CrossEntropyGradient {
  double loss = 0.0;  // summed over the batch, plus (l2 / 2) ||W||_F^2
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

// Gradient of the summed cross entropy over `batch` (not averaged).
CrossEntropyGradient cross_entropy_gradient(const LogisticHead& head, const LabeledDataset& batch,
                                            double l2 = 0.0);

// Max relative deviation between the analytic gradient and central finite
// differences (step 1e-6), using |a - n| / max(1, |a|, |n|) per coordinate.
double gradient_check(const LogisticHead& head, const LabeledDataset& batch, double l2 = 0.0);

}  // namespace ktl
