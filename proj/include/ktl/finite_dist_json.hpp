#pragma once

// JSON encodings of finite distributions and maps.
//
//   distribution: {"x": [{"id": "a", "vec": [..]}, ...], "y": ["0", "1"],
//                  "pxy": [[p(a,0), p(a,1)], ...]}
//   map:          {"f": {"a": "t0", ...}, "xt": [{"id": "t0", "vec": [..]}]}
//
// "xt" is optional; without it codomain points are created on first use.
// Ids may be given as strings or integers.

#include <nlohmann/json.hpp>

#include "ktl/finite_dist.hpp"

namespace ktl {

FiniteJointDistribution distribution_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FiniteJointDistribution& p);

FiniteMap map_from_json(const nlohmann::json& j, const FiniteJointDistribution& source);
nlohmann::json to_json(const FiniteMap& f, const FiniteJointDistribution& source);

nlohmann::json to_json(const SafetyReport& r);
nlohmann::json to_json(const PinskerCertificate& c);

}  // namespace ktl
