#pragma once

// End-to-end comparison of a family of transformations on a synthetic task:
// kNN errors, trained heads, and the resulting correlation report.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ktl/analytics.hpp"
#include "ktl/head.hpp"
#include "ktl/transforms.hpp"

namespace ktl {

struct FamilyMember {
  std::string name;
  VectorTransform transform;
};

// identity, pca3, pca1, crelu, diag (projection on the all-ones direction),
// quant8, quant4, quant2, abs (|x - 1/2|), radial (1{||x - 1/2|| >= r} with r
// the median train radius). PCA is fitted on `train`; needs dim >= 3.
std::vector<FamilyMember> standard_family(const LabeledDataset& train);

struct FamilyConfig {
  double lipschitz = 1.0;
  std::size_t dim = 4;
  std::size_t train_size = 2000;
  std::size_t test_size = 1000;
  std::vector<std::size_t> ks = {1};
  TrainConfig train;
  std::uint64_t seed = 0;

  void validate() const;
};

FamilyConfig family_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FamilyConfig& cfg);

struct FamilyRun {
  double bayes_error = 0.0;
  std::vector<TransformationEvaluation> evaluations;

  std::vector<TransformationRecord> records() const;
};

// Train split is stream 0 of gen_lipschitz_task(lipschitz, dim, seed), test is
// stream 1; member i trains its head with seed derive(train.seed, {i}).
FamilyRun run_family(const FamilyConfig& cfg);

}  // namespace ktl
