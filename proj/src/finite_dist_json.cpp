#include "ktl/finite_dist_json.hpp"

#include "ktl/error.hpp"

namespace ktl {
namespace {

using nlohmann::json;

std::string id_string(const json& v, const std::string& field) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ValidationError("field '" + field + "' must be a string or integer id");
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError("missing field '" + where + key + "'");
  }
  return j.at(key);
}

std::vector<SupportPoint> points_from_json(const json& arr, const std::string& field) {
  if (!arr.is_array()) throw ValidationError("field '" + field + "' must be an array");
  std::vector<SupportPoint> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = field + "[" + std::to_string(i) + "]";
    const json& e = arr[i];
    SupportPoint pt;
    if (e.is_object()) {
      pt.id = id_string(require(e, "id", where + "."), where + ".id");
      if (e.contains("vec")) {
        const json& v = e.at("vec");
        if (!v.is_array()) throw ValidationError("field '" + where + ".vec' must be an array");
        std::vector<double> vec;
        for (const auto& c : v) {
          if (!c.is_number()) throw ValidationError("field '" + where + ".vec' must hold numbers");
          vec.push_back(c.get<double>());
        }
        pt.vec = std::move(vec);
      }
    } else {
      pt.id = id_string(e, where);
    }
    out.push_back(std::move(pt));
  }
  return out;
}

json point_to_json(const SupportPoint& pt) {
  json e = {{"id", pt.id}};
  if (pt.vec) e["vec"] = *pt.vec;
  return e;
}

}  // namespace

FiniteJointDistribution distribution_from_json(const json& j) {
  auto xs = points_from_json(require(j, "x", ""), "x");
  const json& yj = require(j, "y", "");
  if (!yj.is_array()) throw ValidationError("field 'y' must be an array");
  std::vector<std::string> ys;
  for (std::size_t i = 0; i < yj.size(); ++i) ys.push_back(id_string(yj[i], "y[" + std::to_string(i) + "]"));

  const json& pj = require(j, "pxy", "");
  if (!pj.is_array() || pj.size() != xs.size()) {
    throw ValidationError("field 'pxy' must have one row per x point (" + std::to_string(xs.size()) + ")");
  }
  std::vector<double> mass;
  mass.reserve(xs.size() * ys.size());
  for (std::size_t r = 0; r < pj.size(); ++r) {
    const json& row = pj[r];
    const std::string where = "pxy[" + std::to_string(r) + "]";
    if (!row.is_array() || row.size() != ys.size()) {
      throw ValidationError("field '" + where + "' must have " + std::to_string(ys.size()) + " entries");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!row[c].is_number()) {
        throw ValidationError("field '" + where + "[" + std::to_string(c) + "]' must be a number");
      }
      mass.push_back(row[c].get<double>());
    }
  }
  try {
    return FiniteJointDistribution(std::move(xs), std::move(ys), std::move(mass));
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("distribution fields 'x', 'y', 'pxy': ") + e.what());
  }
}

json to_json(const FiniteJointDistribution& p) {
  json xs = json::array();
  for (const auto& pt : p.x_support()) xs.push_back(point_to_json(pt));
  json rows = json::array();
  for (std::size_t x = 0; x < p.x_size(); ++x) {
    const auto r = p.row(x);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return {{"x", xs}, {"y", p.y_support()}, {"pxy", rows}};
}

FiniteMap map_from_json(const json& j, const FiniteJointDistribution& source) {
  const json& fj = require(j, "f", "");
  if (!fj.is_object()) throw ValidationError("field 'f' must be an object of source id -> image id");
  std::map<std::string, std::string> mapping;
  for (auto it = fj.begin(); it != fj.end(); ++it) {
    mapping.emplace(it.key(), id_string(it.value(), "f." + it.key()));
  }
  std::vector<SupportPoint> codomain;
  if (j.contains("xt")) codomain = points_from_json(j.at("xt"), "xt");
  return FiniteMap::from_ids(source, mapping, codomain);
}

json to_json(const FiniteMap& f, const FiniteJointDistribution& source) {
  json fj = json::object();
  for (std::size_t x = 0; x < source.x_size(); ++x) {
    fj[source.x_support()[x].id] = f.codomain()[f(x)].id;
  }
  json xt = json::array();
  for (const auto& pt : f.codomain()) xt.push_back(point_to_json(pt));
  return {{"f", fj}, {"xt", xt}};
}

json to_json(const SafetyReport& r) {
  return {{"bayes_raw", r.bayes_raw},
          {"bayes_transformed", r.bayes_transformed},
          {"delta_star", r.delta_star},
          {"conditional_kl_bits", r.conditional_kl_bits},
          {"pinsker_delta", r.pinsker_delta},
          {"mi_loss_bits", r.mi_loss_bits}};
}

json to_json(const PinskerCertificate& c) {
  return {{"granted", c.granted},
          {"delta", c.delta},
          {"conditional_kl_bits", c.conditional_kl_bits},
          {"kl_threshold_bits", c.kl_threshold_bits},
          {"delta_star", c.delta_star}};
}

}  // namespace ktl
