#include "ktl/analytics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "ktl/error.hpp"
#include "ktl/knn.hpp"

namespace ktl {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd standardize(const MatrixXd& x) {
  const double denom = static_cast<double>(x.rows() - 1);
  MatrixXd out(x.rows(), x.cols());
  for (Index c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).mean();
    const VectorXd centered = x.col(c).array() - mean;
    const double sd = std::sqrt(centered.squaredNorm() / denom);
    if (sd > 0.0) {
      out.col(c) = centered / sd;
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

MatrixXd inverse_sqrt(const MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw DegenerateInputError("covariance eigendecomposition failed");
  const VectorXd& lambda = solver.eigenvalues();
  if (lambda.minCoeff() <= 0.0) throw DegenerateInputError("covariance block is not positive definite");
  return solver.eigenvectors() * lambda.cwiseSqrt().cwiseInverse().asDiagonal() *
         solver.eigenvectors().transpose();
}

Statistic guarded(const auto& compute) {
  Statistic s;
  try {
    s.value = compute();
  } catch (const DegenerateInputError& e) {
    s.degenerate_reason = e.what();
  }
  return s;
}

nlohmann::json to_json(const Statistic& s) {
  if (s.value) return {{"value", *s.value}, {"degenerate", false}};
  return {{"value", nullptr}, {"degenerate", true}, {"reason", s.degenerate_reason}};
}

}  // namespace

double pearson_r(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("pearson_r: series lengths differ");
  if (a.size() < 2) throw ValidationError("pearson_r: need at least 2 samples");
  const auto n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw DegenerateInputError("pearson_r: zero variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

CcaResult cca_first_correlation(const MatrixXd& view_a, const MatrixXd& view_b) {
  const Index n = view_a.rows();
  if (view_b.rows() != n) throw ValidationError("CCA views have different row counts");
  if (view_a.cols() < 1 || view_b.cols() < 1) throw ValidationError("CCA views need at least one column");
  if (n <= std::max(view_a.cols(), view_b.cols()) + 1) {
    throw ValidationError("CCA needs n > max(p, q) + 1 rows, got " + std::to_string(n));
  }
  if (!view_a.allFinite() || !view_b.allFinite()) throw ValidationError("CCA views have non-finite entries");

  const MatrixXd a = standardize(view_a);
  const MatrixXd b = standardize(view_b);
  if (a.isZero(0.0) || b.isZero(0.0)) throw DegenerateInputError("CCA view has no varying column");
  const double denom = static_cast<double>(n - 1);
  const MatrixXd caa = a.transpose() * a / denom + kCcaRidge * MatrixXd::Identity(a.cols(), a.cols());
  const MatrixXd cbb = b.transpose() * b / denom + kCcaRidge * MatrixXd::Identity(b.cols(), b.cols());
  const MatrixXd cab = a.transpose() * b / denom;
  const MatrixXd wa_half = inverse_sqrt(caa);
  const MatrixXd wb_half = inverse_sqrt(cbb);

  Eigen::JacobiSVD<MatrixXd> svd(wa_half * cab * wb_half, Eigen::ComputeThinU | Eigen::ComputeThinV);
  CcaResult out;
  out.weights_a = wa_half * svd.matrixU().col(0);
  out.weights_b = wb_half * svd.matrixV().col(0);
  const VectorXd za = a * out.weights_a;
  const VectorXd zb = b * out.weights_b;
  double r = 0.0;
  try {
    r = pearson_r(std::span<const double>(za.data(), static_cast<std::size_t>(n)),
                  std::span<const double>(zb.data(), static_cast<std::size_t>(n)));
  } catch (const DegenerateInputError&) {
    throw DegenerateInputError("canonical variates have zero variance (rank deficient views)");
  }
  if (r < 0.0) {
    r = -r;
    out.weights_b = -out.weights_b;
  }
  out.correlation = r;
  return out;
}

double bound_surrogate(std::size_t k, std::size_t n, std::size_t d, double lipschitz, double mse,
                       double mse_exponent) {
  if (k < 1 || k > n) throw ValidationError("bound_surrogate needs 1 <= k <= n");
  if (d < 1) throw ValidationError("bound_surrogate needs d >= 1");
  if (!(mse >= 0.0)) throw ValidationError("bound_surrogate needs mse >= 0");
  if (!(lipschitz >= 0.0)) throw ValidationError("bound_surrogate needs lipschitz >= 0");
  if (!(mse_exponent > 0.0)) throw ValidationError("bound_surrogate needs a positive exponent");
  const double ratio = static_cast<double>(k) / static_cast<double>(n);
  return 1.0 / std::sqrt(static_cast<double>(k)) + lipschitz * std::pow(ratio, 1.0 / static_cast<double>(d)) +
         std::pow(mse, mse_exponent);
}

double TransformationRecord::surrogate(std::size_t k, double mse_exponent) const {
  return bound_surrogate(k, train_size, dim, head_lipschitz(), mse, mse_exponent);
}

void TransformationRecord::validate() const {
  const std::string where = "record '" + name + "': ";
  if (dim < 1) throw ValidationError(where + "dim must be >= 1");
  if (train_size < 1) throw ValidationError(where + "train_size must be >= 1");
  for (const auto& [k, err] : knn_error) {
    if (k < 1) throw ValidationError(where + "k must be >= 1");
    if (!(err >= 0.0 && err <= 1.0)) throw ValidationError(where + "knn_error must be in [0, 1]");
  }
  if (!(mse >= 0.0 && mse <= 2.0)) throw ValidationError(where + "mse must be in [0, 2]");
  if (!(frobenius_norm >= 0.0) || !std::isfinite(frobenius_norm)) {
    throw ValidationError(where + "frobenius_norm must be finite and >= 0");
  }
  if (lipschitz && (!(*lipschitz >= 0.0) || !std::isfinite(*lipschitz))) {
    throw ValidationError(where + "lipschitz must be finite and >= 0");
  }
}

CorrelationReport build_correlation_report(const std::vector<TransformationRecord>& records, std::size_t k,
                                           double surrogate_exponent, bool surrogate_terms) {
  if (records.size() < 3) {
    throw ValidationError("correlation report needs at least 3 records, got " + std::to_string(records.size()));
  }
  const std::size_t n = records.size();
  std::vector<double> err(n);
  std::vector<double> dim(n);
  std::vector<double> mse(n);
  std::vector<double> sur(n);
  MatrixXd view_b(static_cast<Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[i];
    r.validate();
    const auto it = r.knn_error.find(k);
    if (it == r.knn_error.end()) {
      throw ValidationError("record '" + r.name + "' has no knn_error for k = " + std::to_string(k));
    }
    err[i] = it->second;
    dim[i] = static_cast<double>(r.dim);
    mse[i] = r.mse;
    sur[i] = r.surrogate(k, surrogate_exponent);
    view_b(static_cast<Index>(i), 0) = r.mse;
    view_b(static_cast<Index>(i), 1) = r.frobenius_norm;
  }

  CorrelationReport rep;
  rep.k = k;
  rep.samples = n;
  rep.surrogate_exponent = surrogate_exponent;
  rep.pearson_dim_vs_err = guarded([&] { return pearson_r(dim, err); });
  rep.pearson_mse_vs_err = guarded([&] { return pearson_r(mse, err); });
  rep.pearson_surrogate_vs_err = guarded([&] { return pearson_r(sur, err); });

  const MatrixXd view_a = Eigen::Map<const VectorXd>(err.data(), static_cast<Index>(n));
  if (n <= 3) {
    rep.cca_msenorm_vs_err.degenerate_reason = "CCA needs at least 4 records";
  } else {
    rep.cca_msenorm_vs_err = guarded([&] { return cca_first_correlation(view_a, view_b).correlation; });
  }

  if (surrogate_terms) {
    std::vector<double> pooled_err;
    std::vector<std::array<double, 3>> terms;
    for (const auto& r : records) {
      for (const auto& [kk, e] : r.knn_error) {
        if (kk > r.train_size) continue;
        pooled_err.push_back(e);
        terms.push_back({1.0 / std::sqrt(static_cast<double>(kk)),
                         r.head_lipschitz() *
                             std::pow(static_cast<double>(kk) / static_cast<double>(r.train_size),
                                      1.0 / static_cast<double>(r.dim)),
                         std::pow(r.mse, surrogate_exponent)});
      }
    }
    Statistic s;
    if (pooled_err.size() <= 4) {
      s.degenerate_reason = "surrogate-term CCA needs at least 5 (record, k) rows";
    } else {
      const auto m = static_cast<Index>(pooled_err.size());
      MatrixXd tb(m, 3);
      for (Index i = 0; i < m; ++i) {
        for (Index c = 0; c < 3; ++c) tb(i, c) = terms[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
      }
      const MatrixXd ta = Eigen::Map<const VectorXd>(pooled_err.data(), m);
      s = guarded([&] { return cca_first_correlation(ta, tb).correlation; });
    }
    rep.cca_surrogate_terms_vs_err = s;
  }
  return rep;
}

nlohmann::json to_json(const TransformationRecord& r) {
  nlohmann::json errs = nlohmann::json::object();
  for (const auto& [k, e] : r.knn_error) errs[std::to_string(k)] = e;
  nlohmann::json j = {{"name", r.name},     {"dim", r.dim}, {"train_size", r.train_size}, {"knn_error", errs},
                      {"mse", r.mse}, {"frobenius_norm", r.frobenius_norm}};
  if (r.lipschitz) j["lipschitz"] = *r.lipschitz;
  return j;
}

TransformationRecord record_from_json(const nlohmann::json& j) {
  TransformationRecord r;
  try {
    r.name = j.at("name").get<std::string>();
    r.dim = j.at("dim").get<std::size_t>();
    r.train_size = j.at("train_size").get<std::size_t>();
    r.mse = j.at("mse").get<double>();
    r.frobenius_norm = j.at("frobenius_norm").get<double>();
    if (j.contains("lipschitz")) r.lipschitz = j.at("lipschitz").get<double>();
    const auto& errs = j.at("knn_error");
    if (!errs.is_object()) throw ValidationError("field 'knn_error' must map k to an error rate");
    for (const auto& [key, value] : errs.items()) {
      std::size_t pos = 0;
      unsigned long k = 0;
      try {
        k = std::stoul(key, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != key.size() || key.empty()) throw ValidationError("field 'knn_error' key '" + key + "' is not an integer");
      r.knn_error[k] = value.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("record: ") + e.what());
  }
  r.validate();
  return r;
}

std::vector<TransformationRecord> records_from_json(const nlohmann::json& j) {
  const nlohmann::json* list = &j;
  if (j.is_object()) {
    if (!j.contains("records")) throw ValidationError("missing field 'records'");
    list = &j.at("records");
  }
  if (!list->is_array()) throw ValidationError("field 'records' must be an array");
  std::vector<TransformationRecord> out;
  for (const auto& item : *list) out.push_back(record_from_json(item));
  return out;
}

nlohmann::json to_json(const CorrelationReport& r) {
  nlohmann::json j = {{"k", r.k},
                      {"samples", r.samples},
                      {"surrogate_exponent", r.surrogate_exponent},
                      {"pearson_dim_vs_err", to_json(r.pearson_dim_vs_err)},
                      {"pearson_mse_vs_err", to_json(r.pearson_mse_vs_err)},
                      {"pearson_surrogate_vs_err", to_json(r.pearson_surrogate_vs_err)},
                      {"cca_msenorm_vs_err", to_json(r.cca_msenorm_vs_err)}};
  if (r.cca_surrogate_terms_vs_err) j["cca_surrogate_terms_vs_err"] = to_json(*r.cca_surrogate_terms_vs_err);
  return j;
}

void write_records_csv(std::ostream& out, const std::vector<TransformationRecord>& records, std::size_t k,
                       double surrogate_exponent) {
  std::ostringstream buf;
  buf.precision(std::numeric_limits<double>::max_digits10);
  buf << "name,dim,mse,norm,knn_err,surrogate\n";
  for (const auto& r : records) {
    const auto it = r.knn_error.find(k);
    if (it == r.knn_error.end()) {
      throw ValidationError("record '" + r.name + "' has no knn_error for k = " + std::to_string(k));
    }
    buf << r.name << ',' << r.dim << ',' << r.mse << ',' << r.frobenius_norm << ',' << it->second << ','
        << r.surrogate(k, surrogate_exponent) << '\n';
  }
  out << buf.str();
}

TransformationEvaluation evaluate_transformation(const std::string& name, const VectorTransform& t,
                                                 const LabeledDataset& train, const LabeledDataset& test,
                                                 std::span<const std::size_t> ks, const TrainConfig& cfg) {
  const LabeledDataset train_t = apply(t, train);
  const LabeledDataset test_t = apply(t, test);
  TransformationEvaluation ev;
  ev.record.name = name;
  ev.record.dim = train_t.dim();
  ev.record.train_size = train_t.size();
  for (std::size_t k : ks) ev.record.knn_error[k] = error_rate(train_t, test_t, KnnConfig{k});

  const auto splits = normalize_features(train_t, test_t);
  auto [head, report] = train_head(splits.train, splits.test, cfg);
  ev.record.mse = report.mse;
  ev.record.frobenius_norm = report.frobenius_norm;
  ev.record.lipschitz = report.lipschitz_constant;

  std::vector<std::size_t> rows(std::min<std::size_t>(32, splits.train.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  ev.gradient_deviation = gradient_check(head, splits.train.subset(rows));
  ev.head = std::move(head);
  ev.head_report = std::move(report);
  return ev;
}

}  // namespace ktl
