#include "ktl/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ktl/error.hpp"
#include "ktl/parallel.hpp"

namespace ktl {
namespace {

using Eigen::Index;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string dim_message(std::size_t got, std::size_t want) {
  return "input dimension " + std::to_string(got) + " does not match expected " + std::to_string(want);
}

}  // namespace

VectorTransform VectorTransform::identity() { return VectorTransform(transform::Identity{}); }

VectorTransform VectorTransform::linear(Eigen::MatrixXd matrix, std::optional<Eigen::VectorXd> center) {
  if (matrix.rows() < 1 || matrix.cols() < 1) throw ValidationError("projection matrix must be non-empty");
  if (!matrix.allFinite()) throw ValidationError("projection matrix has non-finite entries");
  if (center) {
    if (center->size() != matrix.cols()) {
      throw ValidationError("centering vector has length " + std::to_string(center->size()) +
                            ", expected " + std::to_string(matrix.cols()));
    }
    if (!center->allFinite()) throw ValidationError("centering vector has non-finite entries");
  }
  return VectorTransform(transform::LinearProjection{std::move(matrix), std::move(center)});
}

VectorTransform VectorTransform::crelu() { return VectorTransform(transform::CRelu{}); }

VectorTransform VectorTransform::abs_value() { return VectorTransform(transform::AbsValue{}); }

VectorTransform VectorTransform::radial_indicator(double radius) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw ValidationError("radius must be finite and >= 0");
  return VectorTransform(transform::RadialIndicator{radius});
}

VectorTransform VectorTransform::quantizer(std::size_t bins, double lo, double hi) {
  if (bins < 1) throw ValidationError("quantizer needs at least one bin");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ValidationError("quantizer range must satisfy lo < hi");
  }
  return VectorTransform(transform::Quantizer{bins, lo, hi});
}

VectorTransform VectorTransform::compose(std::vector<VectorTransform> steps) {
  VectorTransform out(transform::Composition{std::move(steps)});
  // Check the chain wherever a step pins its input dimension.
  std::optional<std::size_t> current;
  for (const auto& step : std::get<transform::Composition>(out.v_).steps) {
    if (current) {
      current = step.output_dim(*current);
    } else if (auto in = step.input_dim()) {
      current = step.output_dim(*in);
    }
  }
  return out;
}

std::optional<std::size_t> VectorTransform::input_dim() const {
  return std::visit(Overloaded{
                        [](const transform::LinearProjection& t) -> std::optional<std::size_t> {
                          return static_cast<std::size_t>(t.matrix.cols());
                        },
                        [](const transform::Composition& t) -> std::optional<std::size_t> {
                          // Look through leading dimension-preserving steps.
                          for (const auto& step : t.steps) {
                            if (auto in = step.input_dim()) return in;
                            const auto& v = step.variant();
                            if (!std::holds_alternative<transform::Identity>(v) &&
                                !std::holds_alternative<transform::AbsValue>(v) &&
                                !std::holds_alternative<transform::Quantizer>(v)) {
                              return std::nullopt;
                            }
                          }
                          return std::nullopt;
                        },
                        [](const auto&) -> std::optional<std::size_t> { return std::nullopt; },
                    },
                    v_);
}

std::size_t VectorTransform::output_dim(std::size_t in) const {
  if (in == 0) throw ValidationError("input dimension must be >= 1");
  return std::visit(Overloaded{
                        [&](const transform::Identity&) { return in; },
                        [&](const transform::LinearProjection& t) {
                          if (in != static_cast<std::size_t>(t.matrix.cols())) {
                            throw ValidationError(dim_message(in, static_cast<std::size_t>(t.matrix.cols())));
                          }
                          return static_cast<std::size_t>(t.matrix.rows());
                        },
                        [&](const transform::CRelu&) { return 2 * in; },
                        [&](const transform::AbsValue&) { return in; },
                        [&](const transform::RadialIndicator&) { return std::size_t{1}; },
                        [&](const transform::Quantizer&) { return in; },
                        [&](const transform::Composition& t) {
                          std::size_t d = in;
                          for (const auto& step : t.steps) d = step.output_dim(d);
                          return d;
                        },
                    },
                    v_);
}

std::vector<double> VectorTransform::operator()(std::span<const double> x) const {
  return std::visit(
      Overloaded{
          [&](const transform::Identity&) { return std::vector<double>(x.begin(), x.end()); },
          [&](const transform::LinearProjection& t) {
            if (x.size() != static_cast<std::size_t>(t.matrix.cols())) {
              throw ValidationError(dim_message(x.size(), static_cast<std::size_t>(t.matrix.cols())));
            }
            Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Index>(x.size()));
            if (t.center) v -= *t.center;
            const Eigen::VectorXd y = t.matrix * v;
            return std::vector<double>(y.data(), y.data() + y.size());
          },
          [&](const transform::CRelu&) {
            std::vector<double> out(2 * x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
              out[i] = std::max(x[i], 0.0);
              out[x.size() + i] = std::max(-x[i], 0.0);
            }
            return out;
          },
          [&](const transform::AbsValue&) {
            std::vector<double> out(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::abs(x[i]);
            return out;
          },
          [&](const transform::RadialIndicator& t) {
            double s = 0.0;
            for (double v : x) s += v * v;
            return std::vector<double>{s >= t.radius * t.radius ? 1.0 : 0.0};
          },
          [&](const transform::Quantizer& t) {
            const double width = (t.hi - t.lo) / static_cast<double>(t.bins);
            std::vector<double> out(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
              const double v = std::clamp(x[i], t.lo, t.hi);
              auto bin = static_cast<std::size_t>(std::floor((v - t.lo) / width));
              bin = std::min(bin, t.bins - 1);
              out[i] = t.lo + (static_cast<double>(bin) + 0.5) * width;
            }
            return out;
          },
          [&](const transform::Composition& t) {
            std::vector<double> cur(x.begin(), x.end());
            for (const auto& step : t.steps) cur = step(cur);
            return cur;
          },
      },
      v_);
}

LabeledDataset apply(const VectorTransform& t, const LabeledDataset& data) {
  if (data.empty()) throw ValidationError("cannot transform an empty dataset");
  const std::size_t out_dim = t.output_dim(data.dim());
  std::vector<double> values(data.size() * out_dim);
  parallel_for(data.size(), [&](std::size_t i) {
    const auto row = t(data.point(i));
    std::copy(row.begin(), row.end(), values.begin() + static_cast<std::ptrdiff_t>(i * out_dim));
  });
  return LabeledDataset(std::move(values), out_dim, data.labels(), data.num_classes());
}

// --- PCA ---------------------------------------------------------------------

VectorTransform PcaModel::transform() const { return VectorTransform::linear(components, mean); }

PcaModel fit_pca(const LabeledDataset& train, std::size_t d) {
  const std::size_t n = train.size();
  const std::size_t dim = train.dim();
  if (n == 0) throw ValidationError("cannot fit PCA on an empty dataset");
  if (d < 1 || d > std::min(n, dim)) {
    throw ValidationError("PCA dimension " + std::to_string(d) + " must be in [1, min(n, D)] = [1, " +
                          std::to_string(std::min(n, dim)) + "]");
  }
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      train.values().data(), static_cast<Index>(n), static_cast<Index>(dim));
  PcaModel model;
  model.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - model.mean.transpose();
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw ComputationError("covariance eigendecomposition failed");
  // Eigen returns ascending eigenvalues.
  const auto D = static_cast<Index>(dim);
  const auto k = static_cast<Index>(d);
  model.components.resize(k, D);
  model.eigenvalues.resize(k);
  for (Index j = 0; j < k; ++j) {
    Eigen::VectorXd v = solver.eigenvectors().col(D - 1 - j);
    Index arg = 0;
    for (Index i = 1; i < D; ++i) {
      if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
    }
    if (v(arg) < 0.0) v = -v;
    model.components.row(j) = v.transpose();
    model.eigenvalues(j) = solver.eigenvalues()(D - 1 - j);
  }
  return model;
}

double reconstruction_error(const PcaModel& model, const LabeledDataset& data) {
  if (data.empty()) throw ValidationError("dataset is empty");
  if (data.dim() != model.input_dim()) throw ValidationError(dim_message(data.dim(), model.input_dim()));
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto p = data.point(i);
    const Eigen::VectorXd c =
        Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Index>(p.size())) - model.mean;
    const Eigen::VectorXd z = model.components * c;
    total += (c - model.components.transpose() * z).squaredNorm();
  }
  return total / static_cast<double>(data.size());
}

nlohmann::json to_json(const PcaModel& model) {
  nlohmann::json comps = nlohmann::json::array();
  for (Index r = 0; r < model.components.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(model.components.cols()));
    for (Index c = 0; c < model.components.cols(); ++c) row[static_cast<std::size_t>(c)] = model.components(r, c);
    comps.push_back(row);
  }
  return {{"mean", std::vector<double>(model.mean.data(), model.mean.data() + model.mean.size())},
          {"components", comps},
          {"eigenvalues",
           std::vector<double>(model.eigenvalues.data(), model.eigenvalues.data() + model.eigenvalues.size())}};
}

PcaModel pca_from_json(const nlohmann::json& j) {
  PcaModel m;
  try {
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto comps = j.at("components").get<std::vector<std::vector<double>>>();
    const auto eig = j.at("eigenvalues").get<std::vector<double>>();
    if (mean.empty()) throw ValidationError("PCA field 'mean' is empty");
    if (comps.empty() || comps.size() != eig.size()) {
      throw ValidationError("PCA fields 'components' and 'eigenvalues' must be non-empty and equally long");
    }
    m.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Index>(mean.size()));
    m.eigenvalues = Eigen::Map<const Eigen::VectorXd>(eig.data(), static_cast<Index>(eig.size()));
    m.components.resize(static_cast<Index>(comps.size()), static_cast<Index>(mean.size()));
    for (std::size_t r = 0; r < comps.size(); ++r) {
      if (comps[r].size() != mean.size()) {
        throw ValidationError("PCA field 'components' row " + std::to_string(r) + " has wrong length");
      }
      for (std::size_t c = 0; c < mean.size(); ++c) {
        m.components(static_cast<Index>(r), static_cast<Index>(c)) = comps[r][c];
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("PCA model: ") + e.what());
  }
  return m;
}

LabeledDataset ingest_embeddings(const std::filesystem::path& path, DatasetFormat format) {
  return read_dataset(path, format);
}

}  // namespace ktl
