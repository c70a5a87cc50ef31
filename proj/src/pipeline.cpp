#include "ktl/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "ktl/error.hpp"
#include "ktl/parallel.hpp"
#include "ktl/rng.hpp"
#include "ktl/synthetic.hpp"

namespace ktl {

std::vector<FamilyMember> standard_family(const LabeledDataset& train) {
  const std::size_t dim = train.dim();
  if (dim < 3) throw ValidationError("the standard family needs dimension >= 3");
  const auto d = static_cast<Eigen::Index>(dim);
  const Eigen::VectorXd half = Eigen::VectorXd::Constant(d, 0.5);

  std::vector<double> radii(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    double s = 0.0;
    for (double v : train.point(i)) s += (v - 0.5) * (v - 0.5);
    radii[i] = std::sqrt(s);
  }
  std::nth_element(radii.begin(), radii.begin() + static_cast<std::ptrdiff_t>(radii.size() / 2), radii.end());
  const double median_radius = radii[radii.size() / 2];

  const Eigen::MatrixXd diag = Eigen::MatrixXd::Constant(1, d, 1.0 / std::sqrt(static_cast<double>(dim)));
  const auto center = VectorTransform::linear(Eigen::MatrixXd::Identity(d, d), half);

  std::vector<FamilyMember> out;
  out.push_back({"identity", VectorTransform::identity()});
  out.push_back({"pca3", fit_pca(train, 3).transform()});
  out.push_back({"pca1", fit_pca(train, 1).transform()});
  out.push_back({"crelu", VectorTransform::compose({center, VectorTransform::crelu()})});
  out.push_back({"diag", VectorTransform::linear(diag, half)});
  out.push_back({"quant8", VectorTransform::quantizer(8, 0.0, 1.0)});
  out.push_back({"quant4", VectorTransform::quantizer(4, 0.0, 1.0)});
  out.push_back({"quant2", VectorTransform::quantizer(2, 0.0, 1.0)});
  out.push_back({"abs", VectorTransform::compose({center, VectorTransform::abs_value()})});
  out.push_back({"radial", VectorTransform::compose({center, VectorTransform::radial_indicator(median_radius)})});
  return out;
}

void FamilyConfig::validate() const {
  if (!(lipschitz >= 0.0) || !std::isfinite(lipschitz)) throw ValidationError("lipschitz must be finite and >= 0");
  if (dim < 3) throw ValidationError("dim must be >= 3");
  if (train_size < 2 || test_size < 1) throw ValidationError("train_size must be >= 2 and test_size >= 1");
  if (ks.empty()) throw ValidationError("ks must not be empty");
  for (auto k : ks) {
    if (k < 1 || k > train_size) throw ValidationError("every k must lie in [1, train_size]");
  }
  train.validate();
}

FamilyConfig family_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("family config must be a JSON object");
  FamilyConfig cfg;
  try {
    if (j.contains("lipschitz")) cfg.lipschitz = j.at("lipschitz").get<double>();
    if (j.contains("dim")) cfg.dim = j.at("dim").get<std::size_t>();
    if (j.contains("train_size")) cfg.train_size = j.at("train_size").get<std::size_t>();
    if (j.contains("test_size")) cfg.test_size = j.at("test_size").get<std::size_t>();
    if (j.contains("ks")) cfg.ks = j.at("ks").get<std::vector<std::size_t>>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("train")) cfg.train = train_config_from_json(j.at("train"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("family config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const FamilyConfig& cfg) {
  return {{"lipschitz", cfg.lipschitz}, {"dim", cfg.dim}, {"train_size", cfg.train_size},
          {"test_size", cfg.test_size}, {"ks", cfg.ks},   {"seed", cfg.seed},
          {"train", to_json(cfg.train)}};
}

std::vector<TransformationRecord> FamilyRun::records() const {
  std::vector<TransformationRecord> out;
  out.reserve(evaluations.size());
  for (const auto& e : evaluations) out.push_back(e.record);
  return out;
}

FamilyRun run_family(const FamilyConfig& cfg) {
  cfg.validate();
  const auto task = gen_lipschitz_task(cfg.lipschitz, cfg.dim, cfg.seed);
  const LabeledDataset train = task.sample(cfg.train_size, 0);
  const LabeledDataset test = task.sample(cfg.test_size, 1);
  const auto family = standard_family(train);

  FamilyRun run;
  run.bayes_error = task.bayes_error();
  run.evaluations.resize(family.size());
  parallel_for(family.size(), [&](std::size_t i) {
    TrainConfig tc = cfg.train;
    tc.seed = Rng::derive(cfg.train.seed, {i});
    run.evaluations[i] = evaluate_transformation(family[i].name, family[i].transform, train, test, cfg.ks, tc);
  });
  return run;
}

}  // namespace ktl
