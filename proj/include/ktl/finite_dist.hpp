#pragma once

// Exact probability calculus on finite joint distributions p(x, y):
// Bayes error, pushforwards through maps, safety (increase in Bayes error),
// information quantities and the inequalities that bound them.
//
// Logarithms are base 2 throughout. Zero-mass support points are allowed and
// never contribute to posteriors.

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ktl {

// Equality checks on exact quantities.
inline constexpr double kExactTolerance = 1e-12;
// Slack granted to theorem inequalities.
inline constexpr double kBoundSlack = 1e-9;

struct SupportPoint {
  std::string id;
  std::optional<std::vector<double>> vec;

  bool operator==(const SupportPoint&) const = default;
};

class FiniteJointDistribution {
 public:
  // `mass` is row-major |x| x |y|. Throws ValidationError unless all masses are
  // finite and non-negative, they sum to 1 within 1e-12, ids are unique, there
  // are at least two classes, and payloads (if any) share one dimension.
  FiniteJointDistribution(std::vector<SupportPoint> x_support, std::vector<std::string> y_support,
                          std::vector<double> mass);

  std::size_t x_size() const { return x_.size(); }
  std::size_t y_size() const { return y_.size(); }
  const std::vector<SupportPoint>& x_support() const { return x_; }
  const std::vector<std::string>& y_support() const { return y_; }
  const std::vector<double>& masses() const { return mass_; }

  double mass(std::size_t x, std::size_t y) const { return mass_[x * y_.size() + y]; }
  std::span<const double> row(std::size_t x) const {
    return {mass_.data() + x * y_.size(), y_.size()};
  }
  double marginal_x(std::size_t x) const { return marginal_x_[x]; }
  double marginal_y(std::size_t y) const;
  // p(y | x); requires marginal_x(x) > 0.
  double posterior(std::size_t x, std::size_t y) const;
  // p(1 | x) for binary tasks; requires marginal_x(x) > 0.
  double eta(std::size_t x) const { return posterior(x, 1); }
  // Most probable class at x, smallest index on ties.
  std::size_t argmax_class(std::size_t x) const;

  bool has_payloads() const;
  std::size_t payload_dim() const;
  std::optional<std::size_t> index_of(const std::string& x_id) const;

  bool operator==(const FiniteJointDistribution& other) const {
    return x_ == other.x_ && y_ == other.y_ && mass_ == other.mass_;
  }

 private:
  std::vector<SupportPoint> x_;
  std::vector<std::string> y_;
  std::vector<double> mass_;
  std::vector<double> marginal_x_;
};

// A total function from a distribution's x-support to a finite codomain.
class FiniteMap {
 public:
  // image[i] is the codomain index of source point i.
  FiniteMap(std::vector<std::size_t> image, std::vector<SupportPoint> codomain);

  static FiniteMap identity(const FiniteJointDistribution& p);
  // From source-id -> codomain-id pairs. Codomain points are ordered by first
  // appearance along the source support unless `codomain` lists them.
  static FiniteMap from_ids(const FiniteJointDistribution& p,
                            const std::map<std::string, std::string>& mapping,
                            const std::vector<SupportPoint>& codomain = {});
  // Applies `fn` to every payload; equal outputs share one codomain point.
  static FiniteMap from_payload_function(
      const FiniteJointDistribution& p,
      const std::function<std::vector<double>(std::span<const double>)>& fn);
  // The tuple map x -> (f_0(x), ..., f_n(x)).
  static FiniteMap tuple(std::span<const FiniteMap> maps);

  std::size_t source_size() const { return image_.size(); }
  std::size_t codomain_size() const { return codomain_.size(); }
  std::size_t operator()(std::size_t x) const { return image_[x]; }
  const std::vector<std::size_t>& image() const { return image_; }
  const std::vector<SupportPoint>& codomain() const { return codomain_; }
  // Source indices of each fiber f^{-1}(x~), ascending.
  std::vector<std::vector<std::size_t>> fibers() const;
  bool is_injective() const;

 private:
  std::vector<std::size_t> image_;
  std::vector<SupportPoint> codomain_;
};

// A score function g on codomain points with values in [0, 1].
class Scorer {
 public:
  using Fn = std::function<double(const SupportPoint&)>;

  explicit Scorer(Fn fn, double lipschitz_constant = 0.0);
  static Scorer constant(double value);
  static Scorer lookup(std::map<std::string, double> by_id);
  static Scorer on_payload(std::function<double(std::span<const double>)> fn,
                           double lipschitz_constant);

  // Throws ValidationError if the score leaves [0, 1].
  double operator()(const SupportPoint& point) const;
  double lipschitz_constant() const { return lipschitz_; }

 private:
  Fn fn_;
  double lipschitz_;
};

struct SafetyReport {
  double bayes_raw = 0.0;
  double bayes_transformed = 0.0;
  double delta_star = 0.0;
  double conditional_kl_bits = 0.0;
  // The delta solving conditional_kl = (2 / ln 2) delta^2.
  double pinsker_delta = 0.0;
  double mi_loss_bits = 0.0;
};

struct PinskerCertificate {
  bool granted = false;
  double delta = 0.0;
  double conditional_kl_bits = 0.0;
  double kl_threshold_bits = 0.0;  // (2 / ln 2) delta^2
  double delta_star = 0.0;
};

struct ShiftSafetyReport {
  double kl_bits = 0.0;  // D_KL(p_source || p_target); +inf when vacuous
  double epsilon = 0.0;  // sqrt(8 ln 2 * kl_bits)
  double delta_source = 0.0;
  double bound = 0.0;  // delta_source + epsilon
  double delta_star_source = 0.0;
  double delta_star_target = 0.0;
  bool vacuous = false;           // target misses source support
  bool hypothesis_holds = false;  // delta_source >= delta_star_source
};

struct BiasBoundReport {
  double delta_star = 0.0;
  double squared_loss = 0.0;
  double bound = 0.0;  // 2 sqrt(squared_loss)
};

struct LossPair {
  double l_f = 0.0;   // squared loss of g o f against eta on the source
  double l_id = 0.0;  // squared loss of g against the fiber posterior
};

// Sum_x p(x) (1 - max_y eta_y(x)).
double bayes_error(const FiniteJointDistribution& p);

// p_{f^-1}(x~, y) = Sum_{x in f^-1(x~)} p(x, y).
FiniteJointDistribution pushforward(const FiniteJointDistribution& p, const FiniteMap& f);

// Increase in Bayes error caused by f. Evaluated per fiber as
// Sum_fibers [Sum_x max_y p(x,y) - max_y Sum_x p(x,y)], which is exactly 0 on
// singleton fibers and never negative; cross-checked against the difference of
// Bayes errors and the expectation form E_x[p(y_x|x) - p~(y_f(x)|f(x))].
double delta_star(const FiniteJointDistribution& p, const FiniteMap& f);
// The expectation form alone, with smallest-index argmax tie breaking.
double delta_star_expectation_form(const FiniteJointDistribution& p, const FiniteMap& f);

// D_KL(p(y|x) || p~(y|f(x))) in bits.
double conditional_kl(const FiniteJointDistribution& p, const FiniteMap& f);
double mutual_information(const FiniteJointDistribution& p);
// D_KL(p || q) over joint cells in bits; +inf if q misses p's support.
double joint_kl(const FiniteJointDistribution& p, const FiniteJointDistribution& q);

SafetyReport safety_report(const FiniteJointDistribution& p, const FiniteMap& f);

// Grants the certificate iff conditional_kl <= (2 / ln 2) delta^2.
PinskerCertificate pinsker_safety_certificate(const FiniteJointDistribution& p,
                                              const FiniteMap& f, double delta);

// Greedy maximal injective support: the heaviest member of each fiber
// (smallest index on ties). Optimal since fibers are disjoint.
std::vector<std::size_t> injective_support(const FiniteJointDistribution& p, const FiniteMap& f);
// Smallest delta for which f is delta-injective.
double injectivity_defect(const FiniteJointDistribution& p, const FiniteMap& f);
// 1 - p(union of the greedy injective supports of each map).
double join_defect(const FiniteJointDistribution& p, std::span<const FiniteMap> maps);

struct TightnessInstance {
  FiniteJointDistribution distribution;
  FiniteMap map;
};
// Two active points of mass 1/2 with eta = 1/2 -/+ delta sharing one fiber;
// every other point has zero mass. Requires 0 <= delta < 1/2 and
// 1 <= xt_size < x_size.
TightnessInstance tightness_instance(double delta, std::size_t x_size = 2,
                                     std::size_t xt_size = 1);

ShiftSafetyReport shift_safety_bound(const FiniteJointDistribution& p_source,
                                     const FiniteJointDistribution& p_target, const FiniteMap& f,
                                     double delta_source);

// Sum_x p(x) (g(f(x)) - eta(x))^2. Binary tasks only.
double g_squared_loss(const FiniteJointDistribution& p, const FiniteMap& f, const Scorer& g);
LossPair loss_pullback_pair(const FiniteJointDistribution& p, const FiniteMap& f,
                            const Scorer& g);
BiasBoundReport bias_bound_check(const FiniteJointDistribution& p, const FiniteMap& f,
                                 const Scorer& g);

// P(|eta(X) - eta(X')| > eps + L ||X - X'||) for independent X, X' ~ p(x).
double prob_lipschitz_defect(const FiniteJointDistribution& p, double eps, double lipschitz);

}  // namespace ktl
