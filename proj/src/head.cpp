#include "ktl/head.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ktl/error.hpp"
#include "ktl/parallel.hpp"
#include "ktl/rng.hpp"

namespace ktl {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Eigen::Map<const VectorXd> as_vector(std::span<const double> x) {
  return {x.data(), static_cast<Index>(x.size())};
}

// Numerically stable softmax of a logit vector.
VectorXd softmax(const VectorXd& logits) {
  VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

void check_compatible(const LogisticHead& head, const LabeledDataset& data) {
  if (data.dim() != head.dim()) {
    throw ValidationError("data dimension " + std::to_string(data.dim()) +
                          " does not match head dimension " + std::to_string(head.dim()));
  }
  if (data.num_classes() > head.classes()) {
    throw ValidationError("data has labels beyond the head's " + std::to_string(head.classes()) +
                          " classes");
  }
}

std::string cell_name(double lr, double l2) {
  std::ostringstream s;
  s << "lr=" << lr << ",l2=" << l2;
  return s.str();
}

}  // namespace

VectorXd LogisticHead::predict_proba(std::span<const double> x) const {
  return softmax(weights.transpose() * as_vector(x) + bias);
}

std::int32_t LogisticHead::predict(std::span<const double> x) const {
  const VectorXd logits = weights.transpose() * as_vector(x) + bias;
  Index best = 0;
  for (Index c = 1; c < logits.size(); ++c) {
    if (logits(c) > logits(best)) best = c;
  }
  return static_cast<std::int32_t>(best);
}

void TrainConfig::validate() const {
  if (learning_rates.empty() || l2_strengths.empty()) throw ValidationError("training grid is empty");
  for (double lr : learning_rates) {
    if (!(lr > 0.0)) throw ValidationError("learning rates must be positive");
  }
  for (double l2 : l2_strengths) {
    if (!(l2 >= 0.0)) throw ValidationError("l2 strengths must be >= 0");
  }
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must be in [0, 1)");
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  if (!j.is_object()) throw ValidationError("training config must be a JSON object");
  try {
    if (j.contains("learning_rates")) cfg.learning_rates = j.at("learning_rates").get<std::vector<double>>();
    if (j.contains("l2_strengths")) cfg.l2_strengths = j.at("l2_strengths").get<std::vector<double>>();
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("momentum")) cfg.momentum = j.at("momentum").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("training config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"learning_rates", cfg.learning_rates}, {"l2_strengths", cfg.l2_strengths},
          {"epochs", cfg.epochs},                 {"batch_size", cfg.batch_size},
          {"momentum", cfg.momentum},             {"seed", cfg.seed}};
}

nlohmann::json to_json(const HeadReport& r) {
  return {{"mse", r.mse},
          {"test_error", r.test_error},
          {"frobenius_norm", r.frobenius_norm},
          {"lipschitz_constant", r.lipschitz_constant},
          {"selected", {{"learning_rate", r.learning_rate}, {"l2", r.l2}, {"epoch", r.epoch}}},
          {"diverged_cells", r.diverged_cells}};
}

// --- Normalization -----------------------------------------------------------

std::vector<double> NormalizationStats::apply(std::span<const double> x) const {
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double range = max[k] - min[k];
    out[k] = range > 0.0 ? 2.0 * (x[k] - min[k]) / range - 1.0 : 0.0;
  }
  return out;
}

LabeledDataset NormalizationStats::apply(const LabeledDataset& data) const {
  if (data.dim() != min.size()) throw ValidationError("normalization dimension mismatch");
  std::vector<double> values;
  values.reserve(data.values().size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = apply(data.point(i));
    values.insert(values.end(), row.begin(), row.end());
  }
  return LabeledDataset(std::move(values), data.dim(), data.labels(), data.num_classes());
}

NormalizedSplits normalize_features(const LabeledDataset& train, const LabeledDataset& test) {
  if (train.empty()) throw ValidationError("cannot normalize with an empty training set");
  if (!test.empty() && test.dim() != train.dim()) throw ValidationError("train/test dimension mismatch");
  NormalizationStats stats;
  stats.min.assign(train.dim(), std::numeric_limits<double>::infinity());
  stats.max.assign(train.dim(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto p = train.point(i);
    for (std::size_t k = 0; k < p.size(); ++k) {
      stats.min[k] = std::min(stats.min[k], p[k]);
      stats.max[k] = std::max(stats.max[k], p[k]);
    }
  }
  NormalizedSplits out{stats.apply(train), test.empty() ? test : stats.apply(test), stats};
  return out;
}

// --- Loss and gradient -------------------------------------------------------

CrossEntropyGradient cross_entropy_gradient(const LogisticHead& head, const LabeledDataset& batch,
                                            double l2) {
  check_compatible(head, batch);
  CrossEntropyGradient g;
  g.weights = MatrixXd::Zero(head.weights.rows(), head.weights.cols());
  g.bias = VectorXd::Zero(head.bias.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto x = as_vector(batch.point(i));
    const VectorXd logits = head.weights.transpose() * x + head.bias;
    const double m = logits.maxCoeff();
    const double lse = m + std::log((logits.array() - m).exp().sum());
    const auto y = static_cast<Index>(batch.label(i));
    g.loss += lse - logits(y);
    VectorXd delta = (logits.array() - lse).exp().matrix();
    delta(y) -= 1.0;
    g.weights.noalias() += x * delta.transpose();
    g.bias += delta;
  }
  if (l2 != 0.0) {
    g.loss += 0.5 * l2 * head.weights.squaredNorm();
    g.weights += l2 * head.weights;
  }
  return g;
}

double gradient_check(const LogisticHead& head, const LabeledDataset& batch, double l2) {
  constexpr double kStep = 1e-6;
  const auto analytic = cross_entropy_gradient(head, batch, l2);
  double worst = 0.0;
  auto compare = [&](double a, double numeric) {
    const double dev = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
    worst = std::max(worst, dev);
  };
  LogisticHead probe = head;
  for (Index r = 0; r < head.weights.rows(); ++r) {
    for (Index c = 0; c < head.weights.cols(); ++c) {
      const double w = head.weights(r, c);
      probe.weights(r, c) = w + kStep;
      const double up = cross_entropy_gradient(probe, batch, l2).loss;
      probe.weights(r, c) = w - kStep;
      const double down = cross_entropy_gradient(probe, batch, l2).loss;
      probe.weights(r, c) = w;
      compare(analytic.weights(r, c), (up - down) / (2.0 * kStep));
    }
  }
  for (Index c = 0; c < head.bias.size(); ++c) {
    const double b = head.bias(c);
    probe.bias(c) = b + kStep;
    const double up = cross_entropy_gradient(probe, batch, l2).loss;
    probe.bias(c) = b - kStep;
    const double down = cross_entropy_gradient(probe, batch, l2).loss;
    probe.bias(c) = b;
    compare(analytic.bias(c), (up - down) / (2.0 * kStep));
  }
  return worst;
}

// --- Evaluation --------------------------------------------------------------

double mse_test(const LogisticHead& head, const LabeledDataset& test) {
  if (test.empty()) throw ValidationError("test set is empty");
  check_compatible(head, test);
  double total = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    VectorXd diff = head.predict_proba(test.point(i));
    diff(static_cast<Index>(test.label(i))) -= 1.0;
    total += diff.squaredNorm();
  }
  return total / static_cast<double>(test.size());
}

double misclassification_error(const LogisticHead& head, const LabeledDataset& test) {
  if (test.empty()) throw ValidationError("test set is empty");
  check_compatible(head, test);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < test.size(); ++i) wrong += head.predict(test.point(i)) != test.label(i);
  return static_cast<double>(wrong) / static_cast<double>(test.size());
}

HeadNorms head_norms(const LogisticHead& head) {
  HeadNorms n;
  n.frobenius = head.weights.norm();
  if (head.classes() == 2) {
    n.lipschitz = (head.weights.col(1) - head.weights.col(0)).norm() / 4.0;
  } else {
    n.lipschitz = n.frobenius / 4.0;
  }
  return n;
}

// --- Training ----------------------------------------------------------------

namespace {

LogisticHead initial_head(std::size_t dim, std::size_t classes, Rng& rng) {
  LogisticHead head(dim, classes);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Index c = 0; c < head.weights.cols(); ++c) {
    for (Index r = 0; r < head.weights.rows(); ++r) head.weights(r, c) = rng.uniform(-bound, bound);
  }
  return head;
}

// Runs the epochs of one cell, calling on_epoch(epoch, head) after each.
// Returns false on divergence.
template <typename OnEpoch>
bool run_cell(const LabeledDataset& train, std::size_t classes, double lr, double l2,
              const TrainConfig& cfg, std::uint64_t cell_seed, OnEpoch&& on_epoch) {
  Rng init_rng = Rng::derived(cell_seed, {0});
  LogisticHead head = initial_head(train.dim(), classes, init_rng);
  MatrixXd vel_w = MatrixXd::Zero(head.weights.rows(), head.weights.cols());
  VectorXd vel_b = VectorXd::Zero(head.bias.size());
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng = Rng::derived(cell_seed, {1, epoch});
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const LabeledDataset batch = train.subset(rows);
      auto g = cross_entropy_gradient(head, batch, 0.0);
      if (!std::isfinite(g.loss)) return false;
      const double inv = 1.0 / static_cast<double>(rows.size());
      // Mean cross entropy + (l2 / 2) ||W||_F^2; bias is not regularized.
      MatrixXd grad_w = g.weights * inv + l2 * head.weights;
      VectorXd grad_b = g.bias * inv;
      vel_w = cfg.momentum * vel_w + grad_w;
      vel_b = cfg.momentum * vel_b + grad_b;
      head.weights -= lr * vel_w;
      head.bias -= lr * vel_b;
    }
    if (!head.weights.allFinite() || !head.bias.allFinite()) return false;
    on_epoch(epoch, head);
  }
  return true;
}

std::size_t head_classes(const LabeledDataset& train, const LabeledDataset& test) {
  return std::max<std::size_t>({train.num_classes(), test.num_classes(), 2});
}

}  // namespace

std::optional<LogisticHead> train_cell(const LabeledDataset& train, double learning_rate, double l2,
                                       const TrainConfig& cfg, std::uint64_t cell_seed) {
  cfg.validate();
  if (train.empty()) throw ValidationError("training set is empty");
  LogisticHead last;
  const bool ok = run_cell(train, std::max<std::size_t>(train.num_classes(), 2), learning_rate, l2,
                           cfg, cell_seed, [&](std::size_t, const LogisticHead& h) { last = h; });
  if (!ok) return std::nullopt;
  return last;
}

std::pair<LogisticHead, HeadReport> train_head(const LabeledDataset& train, const LabeledDataset& test,
                                               const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw ValidationError("training set is empty");
  if (test.empty()) throw ValidationError("test set is empty");
  if (train.dim() != test.dim()) throw ValidationError("train/test dimension mismatch");
  const std::size_t classes = head_classes(train, test);

  struct CellResult {
    bool ok = false;
    double error = std::numeric_limits<double>::infinity();
    std::size_t epoch = 0;
    LogisticHead head;
  };
  const std::size_t n_l2 = cfg.l2_strengths.size();
  std::vector<CellResult> cells(cfg.learning_rates.size() * n_l2);
  parallel_for(cells.size(), [&](std::size_t cell) {
    const double lr = cfg.learning_rates[cell / n_l2];
    const double l2 = cfg.l2_strengths[cell % n_l2];
    CellResult& res = cells[cell];
    res.ok = run_cell(train, classes, lr, l2, cfg, Rng::derive(cfg.seed, {cell}),
                      [&](std::size_t epoch, const LogisticHead& h) {
                        const double err = misclassification_error(h, test);
                        if (err < res.error) {
                          res.error = err;
                          res.epoch = epoch;
                          res.head = h;
                        }
                      });
  });

  // Merge in grid order so the earliest cell wins ties.
  const CellResult* best = nullptr;
  HeadReport report;
  for (std::size_t cell = 0; cell < cells.size(); ++cell) {
    const double lr = cfg.learning_rates[cell / n_l2];
    const double l2 = cfg.l2_strengths[cell % n_l2];
    if (!cells[cell].ok) {
      report.diverged_cells.push_back(cell_name(lr, l2));
      continue;
    }
    if (best == nullptr || cells[cell].error < best->error) {
      best = &cells[cell];
      report.learning_rate = lr;
      report.l2 = l2;
      report.epoch = cells[cell].epoch;
    }
  }
  if (!best) throw ComputationError("all training grid cells diverged");
  report.test_error = best->error;
  report.mse = mse_test(best->head, test);
  const auto norms = head_norms(best->head);
  report.frobenius_norm = norms.frobenius;
  report.lipschitz_constant = norms.lipschitz;
  return {best->head, std::move(report)};
}

}  // namespace ktl
