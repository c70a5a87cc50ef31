#pragma once

// Randomized property suites over finite distributions. Each trial draws an
// instance from its own derived seed, so a failing trial can be replayed alone.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ktl/finite_dist.hpp"

namespace ktl {

struct InstanceShape {
  std::size_t max_x = 20;
  std::size_t min_y = 2;
  std::size_t max_y = 5;
  std::size_t payload_dim = 0;  // 0: no payloads
};

struct RandomInstance {
  FiniteJointDistribution p;
  FiniteMap f;
};

// Random (p, f): |X| uniform in [1, max_x], |Y| in [min_y, max_y], Dirichlet
// masses with some cells zeroed in a fraction of trials, and a map that is a
// random permutation in a fraction of trials and otherwise uniform onto a
// random codomain size.
RandomInstance random_instance(std::uint64_t seed, const InstanceShape& shape = {});

struct SuiteResult {
  std::string suite;
  std::size_t trials = 0;
  std::size_t failures = 0;
  // Largest value of (left side - right side) of the checked inequality.
  double worst_margin = -std::numeric_limits<double>::infinity();
  std::optional<nlohmann::json> counterexample;  // first failing trial

  bool passed() const { return failures == 0; }
};

const std::vector<std::string>& suite_names();

// Throws ValidationError for an unknown suite or zero trials.
SuiteResult run_suite(const std::string& name, std::size_t trials, std::uint64_t seed);

nlohmann::json to_json(const SuiteResult& r);

}  // namespace ktl
