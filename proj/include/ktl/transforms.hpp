#pragma once

// Feature transformations f: R^D -> R^d applied row-wise to datasets.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ktl/dataset.hpp"
#include "ktl/dataset_io.hpp"

namespace ktl {

class VectorTransform;

namespace transform {

struct Identity {};

// x -> M (x - c); c defaults to 0.
struct LinearProjection {
  Eigen::MatrixXd matrix;  // d x D
  std::optional<Eigen::VectorXd> center;
};

// x -> (max(x, 0), max(-x, 0)): all positive parts first, then all negative parts.
struct CRelu {};

struct AbsValue {};

// x -> 1{||x||^2 >= r^2}, a single output coordinate.
struct RadialIndicator {
  double radius = 1.0;
};

// Each coordinate is clamped to [lo, hi], split into `bins` equal bins that are
// half-open [a, b) except the last, which is closed at hi, and replaced by the
// bin center.
struct Quantizer {
  std::size_t bins = 2;
  double lo = 0.0;
  double hi = 1.0;
};

// Applies steps in order: steps[0] first.
struct Composition {
  std::vector<VectorTransform> steps;
};

}  // namespace transform

class VectorTransform {
 public:
  using Variant = std::variant<transform::Identity, transform::LinearProjection, transform::CRelu,
                               transform::AbsValue, transform::RadialIndicator, transform::Quantizer,
                               transform::Composition>;

  VectorTransform() : v_(transform::Identity{}) {}

  static VectorTransform identity();
  static VectorTransform linear(Eigen::MatrixXd matrix, std::optional<Eigen::VectorXd> center = std::nullopt);
  static VectorTransform crelu();
  static VectorTransform abs_value();
  static VectorTransform radial_indicator(double radius);
  static VectorTransform quantizer(std::size_t bins, double lo, double hi);
  static VectorTransform compose(std::vector<VectorTransform> steps);

  const Variant& variant() const { return v_; }

  // Required input dimension, if the variant fixes one.
  std::optional<std::size_t> input_dim() const;
  // Output dimension for a given input dimension; throws ValidationError when
  // the input dimension is not accepted.
  std::size_t output_dim(std::size_t input_dim) const;

  std::vector<double> operator()(std::span<const double> x) const;

 private:
  explicit VectorTransform(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

// Labels unchanged, points mapped row-wise (parallel over rows).
LabeledDataset apply(const VectorTransform& t, const LabeledDataset& data);

struct PcaModel {
  Eigen::VectorXd mean;         // D
  Eigen::MatrixXd components;   // d x D, orthonormal rows
  Eigen::VectorXd eigenvalues;  // d, non-increasing

  std::size_t input_dim() const { return static_cast<std::size_t>(mean.size()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(components.rows()); }
  VectorTransform transform() const;
};

// Top-d principal directions of the train covariance (divisor n - 1). Each
// direction's largest-magnitude entry is made positive.
PcaModel fit_pca(const LabeledDataset& train, std::size_t d);

// Mean squared norm of the residual x - reconstruct(project(x)).
double reconstruction_error(const PcaModel& model, const LabeledDataset& data);

nlohmann::json to_json(const PcaModel& model);
PcaModel pca_from_json(const nlohmann::json& j);

// Reads externally produced embeddings (CSV or KTL1 binary).
LabeledDataset ingest_embeddings(const std::filesystem::path& path,
                                 DatasetFormat format = DatasetFormat::kAuto);

}  // namespace ktl
