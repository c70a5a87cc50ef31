#include "ktl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>

#include "ktl/error.hpp"
#include "ktl/finite_dist_json.hpp"
#include "ktl/parallel.hpp"
#include "ktl/rng.hpp"
#include "ktl/synthetic.hpp"

namespace ktl {
namespace {

struct Trial {
  bool ok = true;
  double margin = -std::numeric_limits<double>::infinity();
  nlohmann::json detail;

  // Records lhs <= rhs + slack.
  void check_le(const char* what, double lhs, double rhs, double slack) {
    const double m = lhs - rhs;
    margin = std::max(margin, m);
    if (!(m <= slack)) {
      ok = false;
      detail["violated"] = what;
      detail["lhs"] = lhs;
      detail["rhs"] = rhs;
    }
  }
  void check(const char* what, bool cond) {
    if (!cond) {
      ok = false;
      detail["violated"] = what;
    }
  }
  void attach(const FiniteJointDistribution& p, const FiniteMap& f) {
    detail["distribution"] = to_json(p);
    detail["map"] = to_json(f, p);
  }
};

using TrialFn = std::function<Trial(std::uint64_t seed, std::size_t index)>;

Trial injectivity_trial(std::uint64_t seed, std::size_t) {
  auto [p, f] = random_instance(seed);
  Trial t;
  const double ds = delta_star(p, f);
  t.check_le("delta_star >= 0", -ds, 0.0, kExactTolerance);
  if (f.is_injective()) t.check("delta_star == 0 for injective f", ds == 0.0);
  t.check_le("delta_star <= injectivity defect", ds, injectivity_defect(p, f), kExactTolerance);
  if (!t.ok) t.attach(p, f);
  return t;
}

Trial lemma2_trial(std::uint64_t seed, std::size_t) {
  auto [p, f] = random_instance(seed);
  Trial t;
  const auto r = safety_report(p, f);
  t.check_le("delta_star <= sqrt(ln2 / 2 * KL)", r.delta_star, r.pinsker_delta, kBoundSlack);
  if (!t.ok) t.attach(p, f);
  return t;
}

Trial mi_trial(std::uint64_t seed, std::size_t) {
  auto [p, f] = random_instance(seed);
  Trial t;
  const double loss = mutual_information(p) - mutual_information(pushforward(p, f));
  const double kl = conditional_kl(p, f);
  t.check_le("|MI loss - conditional KL| <= 1e-10", std::abs(loss - kl), 0.0, 1e-10);
  if (!t.ok) t.attach(p, f);
  return t;
}

Trial lemma3_trial(std::uint64_t seed, std::size_t) {
  Rng rng(seed);
  const double delta = 0.5 * rng.uniform();
  const std::size_t x_size = 2 + static_cast<std::size_t>(rng.index(5));
  const std::size_t xt_size = 1 + static_cast<std::size_t>(rng.index(x_size - 1));
  auto [p, f] = tightness_instance(delta, x_size, xt_size);
  Trial t;
  t.detail["delta"] = delta;
  const double ds = delta_star(p, f);
  t.check_le("|delta_star - delta| <= 1e-12", std::abs(ds - delta), 0.0, kExactTolerance);
  const double kl = conditional_kl(p, f);
  t.check_le("KL >= (2 / ln 2) delta^2", 2.0 / std::numbers::ln2 * delta * delta, kl, kExactTolerance);
  if (!t.ok) t.attach(p, f);
  return t;
}

std::vector<double> positive_part(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - 0.5, 0.0);
  return out;
}

std::vector<double> negative_part(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(0.5 - v[i], 0.0);
  return out;
}

Trial lemma7_trial(std::uint64_t seed, std::size_t index) {
  Rng rng(seed);
  InstanceShape shape;
  shape.payload_dim = 1 + static_cast<std::size_t>(rng.index(4));
  auto inst = random_instance(Rng::derive(seed, {1}), shape);
  const auto& p = inst.p;
  // Payloads are centered at 1/2 so both parts are informative.
  const std::vector<FiniteMap> parts{FiniteMap::from_payload_function(p, positive_part),
                                     FiniteMap::from_payload_function(p, negative_part)};
  Trial t;
  t.check_le("join_defect([x+, x-]) == 0", join_defect(p, parts), 0.0, kExactTolerance);
  t.check_le("delta_star((x+, x-)) == 0", delta_star(p, FiniteMap::tuple(parts)), 0.0, 0.0);
  if (!t.ok) t.attach(p, FiniteMap::tuple(parts));

  if (index == 0) {
    // x+ alone merges two negative points with opposite deterministic labels.
    const FiniteJointDistribution w({{"a", std::vector<double>{-1.0}}, {"b", std::vector<double>{-2.0}}},
                                    {"0", "1"}, {0.5, 0.0, 0.0, 0.5});
    const auto plus = FiniteMap::from_payload_function(w, [](std::span<const double> v) {
      return std::vector<double>{std::max(v[0], 0.0)};
    });
    const double ds = delta_star(w, plus);
    t.check_le("x+ witness delta_star == 0.5", std::abs(ds - 0.5), 0.0, kExactTolerance);
    if (!t.ok) t.attach(w, plus);
  }
  return t;
}

InstanceShape binary_shape(std::size_t payload_dim = 0) {
  InstanceShape s;
  s.min_y = 2;
  s.max_y = 2;
  s.payload_dim = payload_dim;
  return s;
}

Trial lemma8_trial(std::uint64_t seed, std::size_t) {
  auto [p, f] = random_instance(Rng::derive(seed, {0}), binary_shape());
  const Scorer g = gen_random_scorer(f, Rng::derive(seed, {1}));
  Trial t;
  const auto pair = loss_pullback_pair(p, f, g);
  t.check_le("l_id <= l_f", pair.l_id, pair.l_f, kExactTolerance);
  if (!t.ok) t.attach(p, f);
  return t;
}

Trial thm4_trial(std::uint64_t seed, std::size_t) {
  auto [p, f] = random_instance(Rng::derive(seed, {0}), binary_shape());
  const Scorer g = gen_random_scorer(f, Rng::derive(seed, {1}));
  Trial t;
  const auto r = bias_bound_check(p, f, g);
  t.check_le("delta_star <= 2 sqrt(L)", r.delta_star, r.bound, kBoundSlack);
  const auto pair = loss_pullback_pair(p, f, g);
  t.check_le("l_id <= l_f", pair.l_id, pair.l_f, kExactTolerance);
  if (!t.ok) t.attach(p, f);
  return t;
}

Trial thm3_trial(std::uint64_t seed, std::size_t) {
  Rng rng(seed);
  const double eps = 0.01 + 0.99 * rng.uniform();
  const std::size_t x_size = 1 + static_cast<std::size_t>(rng.index(20));
  const std::size_t y_size = 2 + static_cast<std::size_t>(rng.index(4));
  const auto pair = gen_shifted_pair(eps, x_size, y_size, Rng::derive(seed, {1}));
  const FiniteMap f = gen_random_map(pair.source, 1 + rng.index(x_size), Rng::derive(seed, {2}));
  const double delta_source = delta_star(pair.source, f);
  const auto r = shift_safety_bound(pair.source, pair.target, f, delta_source);
  Trial t;
  t.detail["eps"] = eps;
  t.check_le("KL <= eps^2 / (8 ln 2)", pair.kl_bits, eps * eps / (8.0 * std::numbers::ln2), kExactTolerance);
  t.check_le("delta_star_target <= delta_source + eps", r.delta_star_target, delta_source + eps, kBoundSlack);
  if (!t.ok) {
    t.attach(pair.source, f);
    t.detail["target"] = to_json(pair.target);
  }
  return t;
}

Trial problip_trial(std::uint64_t seed, std::size_t) {
  Rng rng(seed);
  const std::size_t dim = 1 + static_cast<std::size_t>(rng.index(3));
  auto [p, f] = random_instance(Rng::derive(seed, {1}), binary_shape(dim));
  const Scorer g = gen_linear_scorer(dim, 1.0, Rng::derive(seed, {2}));
  const double loss = g_squared_loss(p, FiniteMap::identity(p), g);
  Trial t;
  for (double eps : {0.05, 0.1, 0.2}) {
    const double defect = prob_lipschitz_defect(p, eps, g.lipschitz_constant());
    t.check_le("defect <= 8 L / eps^2", defect, 8.0 * loss / (eps * eps), kExactTolerance);
  }
  if (!t.ok) t.attach(p, f);
  return t;
}

const std::map<std::string, TrialFn>& registry() {
  static const std::map<std::string, TrialFn> suites = {
      {"injectivity", injectivity_trial}, {"lemma2", lemma2_trial}, {"lemma3", lemma3_trial},
      {"lemma7", lemma7_trial},           {"lemma8", lemma8_trial}, {"mi", mi_trial},
      {"problip", problip_trial},         {"thm3", thm3_trial},     {"thm4", thm4_trial},
  };
  return suites;
}

}  // namespace

RandomInstance random_instance(std::uint64_t seed, const InstanceShape& shape) {
  if (shape.max_x < 1 || shape.min_y < 2 || shape.max_y < shape.min_y) {
    throw ValidationError("invalid instance shape");
  }
  Rng rng(seed);
  const std::size_t x_size = 1 + static_cast<std::size_t>(rng.index(shape.max_x));
  const std::size_t y_size = shape.min_y + static_cast<std::size_t>(rng.index(shape.max_y - shape.min_y + 1));
  FiniteJointDistribution base = gen_random_finite(x_size, y_size, Rng::derive(seed, {1}), shape.payload_dim);

  // Sparse masses exercise zero-probability points and deterministic labels.
  if (rng.uniform() < 0.3) {
    std::vector<double> mass = base.masses();
    const double keep = 0.3 + 0.6 * rng.uniform();
    double total = 0.0;
    for (auto& m : mass) {
      if (rng.uniform() >= keep) m = 0.0;
      total += m;
    }
    if (total > 0.0) {
      for (auto& m : mass) m /= total;
      base = FiniteJointDistribution(base.x_support(), base.y_support(), std::move(mass));
    }
  }

  if (rng.uniform() < 0.25) {
    std::vector<std::size_t> perm(x_size);
    for (std::size_t i = 0; i < x_size; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<SupportPoint> codomain(x_size);
    for (std::size_t i = 0; i < x_size; ++i) codomain[i].id = "t" + std::to_string(i);
    FiniteMap f(std::move(perm), std::move(codomain));
    return {std::move(base), std::move(f)};
  }
  const std::size_t m = 1 + static_cast<std::size_t>(rng.index(x_size));
  FiniteMap f = gen_random_map(base, m, Rng::derive(seed, {2}));
  return {std::move(base), std::move(f)};
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

SuiteResult run_suite(const std::string& name, std::size_t trials, std::uint64_t seed) {
  const auto it = registry().find(name);
  if (it == registry().end()) {
    std::string known;
    for (const auto& n : suite_names()) known += (known.empty() ? "" : ", ") + n;
    throw ValidationError("unknown suite '" + name + "' (known: " + known + ")");
  }
  if (trials == 0) throw ValidationError("trials must be >= 1");

  std::vector<Trial> results(trials);
  parallel_for(trials, [&](std::size_t i) {
    const std::uint64_t trial_seed = Rng::derive(seed, {i});
    try {
      results[i] = it->second(trial_seed, i);
    } catch (const std::exception& e) {
      results[i].ok = false;
      results[i].detail["exception"] = e.what();
    }
    results[i].detail["trial"] = i;
    results[i].detail["trial_seed"] = trial_seed;
  });

  SuiteResult out;
  out.suite = name;
  out.trials = trials;
  for (const auto& r : results) {
    out.worst_margin = std::max(out.worst_margin, r.margin);
    if (!r.ok) {
      ++out.failures;
      if (!out.counterexample) out.counterexample = r.detail;
    }
  }
  return out;
}

nlohmann::json to_json(const SuiteResult& r) {
  nlohmann::json j = {{"suite", r.suite},
                      {"trials", r.trials},
                      {"failures", r.failures},
                      {"passed", r.passed()},
                      {"worst_margin", r.worst_margin}};
  if (r.counterexample) j["counterexample"] = *r.counterexample;
  return j;
}

}  // namespace ktl
