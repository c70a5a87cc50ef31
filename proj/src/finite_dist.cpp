#include "ktl/finite_dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "ktl/error.hpp"

namespace ktl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Fiber-summed masses p~(x~, y), row-major over the codomain. Accumulation
// starts from 0.0 in source order, so singleton fibers reproduce source rows
// bit for bit.
std::vector<double> fiber_masses(const FiniteJointDistribution& p, const FiniteMap& f) {
  if (f.source_size() != p.x_size()) {
    throw ValidationError("map is defined on " + std::to_string(f.source_size()) +
                          " points but the distribution has " + std::to_string(p.x_size()));
  }
  const std::size_t ny = p.y_size();
  std::vector<double> out(f.codomain_size() * ny, 0.0);
  for (std::size_t x = 0; x < p.x_size(); ++x) {
    const std::size_t t = f(x);
    for (std::size_t y = 0; y < ny; ++y) out[t * ny + y] += p.mass(x, y);
  }
  return out;
}

double row_sum(std::span<const double> row) {
  double s = 0.0;
  for (double v : row) s += v;
  return s;
}

std::size_t argmax_index(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

void require_binary(const FiniteJointDistribution& p, const char* what) {
  if (p.y_size() != 2) {
    throw DomainError(std::string(what) + " requires a binary task (C = 2), got C = " +
                      std::to_string(p.y_size()));
  }
}

}  // namespace

// --- FiniteJointDistribution -------------------------------------------------

FiniteJointDistribution::FiniteJointDistribution(std::vector<SupportPoint> x_support,
                                                 std::vector<std::string> y_support,
                                                 std::vector<double> mass)
    : x_(std::move(x_support)), y_(std::move(y_support)), mass_(std::move(mass)) {
  if (x_.empty()) throw ValidationError("x support is empty");
  if (y_.size() < 2) throw ValidationError("y support needs at least 2 classes");
  if (mass_.size() != x_.size() * y_.size()) {
    throw ValidationError("mass table has " + std::to_string(mass_.size()) + " entries, expected " +
                          std::to_string(x_.size() * y_.size()));
  }
  std::set<std::string> seen;
  for (const auto& pt : x_) {
    if (!seen.insert(pt.id).second) throw ValidationError("duplicate x id '" + pt.id + "'");
  }
  seen.clear();
  for (const auto& id : y_) {
    if (!seen.insert(id).second) throw ValidationError("duplicate y id '" + id + "'");
  }
  std::optional<std::size_t> dim;
  for (const auto& pt : x_) {
    if (!pt.vec) continue;
    if (dim && *dim != pt.vec->size()) {
      throw ValidationError("payload of '" + pt.id + "' has dimension " +
                            std::to_string(pt.vec->size()) + ", expected " + std::to_string(*dim));
    }
    dim = pt.vec->size();
  }
  double total = 0.0;
  for (std::size_t i = 0; i < mass_.size(); ++i) {
    const double m = mass_[i];
    if (!std::isfinite(m) || m < 0.0) {
      std::ostringstream msg;
      msg << "mass p(" << x_[i / y_.size()].id << ", " << y_[i % y_.size()] << ") = " << m
          << " is not a non-negative finite number";
      throw ValidationError(msg.str());
    }
    total += m;
  }
  if (std::abs(total - 1.0) > kExactTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "total mass is " << total << ", expected 1";
    throw ValidationError(msg.str());
  }
  marginal_x_.resize(x_.size());
  for (std::size_t x = 0; x < x_.size(); ++x) marginal_x_[x] = row_sum(row(x));
}

double FiniteJointDistribution::marginal_y(std::size_t y) const {
  double s = 0.0;
  for (std::size_t x = 0; x < x_.size(); ++x) s += mass(x, y);
  return s;
}

double FiniteJointDistribution::posterior(std::size_t x, std::size_t y) const {
  const double px = marginal_x_[x];
  if (!(px > 0.0)) {
    throw ValidationError("posterior undefined at zero-mass point '" + x_[x].id + "'");
  }
  return mass(x, y) / px;
}

std::size_t FiniteJointDistribution::argmax_class(std::size_t x) const {
  return argmax_index(row(x));
}

bool FiniteJointDistribution::has_payloads() const {
  return std::all_of(x_.begin(), x_.end(), [](const SupportPoint& pt) { return pt.vec.has_value(); });
}

std::size_t FiniteJointDistribution::payload_dim() const {
  for (const auto& pt : x_) {
    if (pt.vec) return pt.vec->size();
  }
  return 0;
}

std::optional<std::size_t> FiniteJointDistribution::index_of(const std::string& x_id) const {
  for (std::size_t i = 0; i < x_.size(); ++i) {
    if (x_[i].id == x_id) return i;
  }
  return std::nullopt;
}

// --- FiniteMap ---------------------------------------------------------------

FiniteMap::FiniteMap(std::vector<std::size_t> image, std::vector<SupportPoint> codomain)
    : image_(std::move(image)), codomain_(std::move(codomain)) {
  for (std::size_t i = 0; i < image_.size(); ++i) {
    if (image_[i] >= codomain_.size()) {
      throw ValidationError("source point " + std::to_string(i) + " maps outside the codomain");
    }
  }
  std::set<std::string> seen;
  for (const auto& pt : codomain_) {
    if (!seen.insert(pt.id).second) throw ValidationError("duplicate codomain id '" + pt.id + "'");
  }
}

FiniteMap FiniteMap::identity(const FiniteJointDistribution& p) {
  std::vector<std::size_t> image(p.x_size());
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = i;
  return FiniteMap(std::move(image), p.x_support());
}

FiniteMap FiniteMap::from_ids(const FiniteJointDistribution& p,
                              const std::map<std::string, std::string>& mapping,
                              const std::vector<SupportPoint>& codomain) {
  for (const auto& [src, dst] : mapping) {
    if (!p.index_of(src)) throw ValidationError("map refers to unknown source point '" + src + "'");
  }
  std::vector<SupportPoint> points = codomain;
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < points.size(); ++i) position.emplace(points[i].id, i);
  const bool fixed_codomain = !codomain.empty();

  std::vector<std::size_t> image(p.x_size());
  for (std::size_t x = 0; x < p.x_size(); ++x) {
    const auto& id = p.x_support()[x].id;
    auto it = mapping.find(id);
    if (it == mapping.end()) throw ValidationError("map has no image for source point '" + id + "'");
    auto pos = position.find(it->second);
    if (pos == position.end()) {
      if (fixed_codomain) {
        throw ValidationError("image '" + it->second + "' of '" + id + "' is not in the codomain");
      }
      pos = position.emplace(it->second, points.size()).first;
      points.push_back(SupportPoint{it->second, std::nullopt});
    }
    image[x] = pos->second;
  }
  return FiniteMap(std::move(image), std::move(points));
}

FiniteMap FiniteMap::from_payload_function(
    const FiniteJointDistribution& p,
    const std::function<std::vector<double>(std::span<const double>)>& fn) {
  if (!p.has_payloads()) throw ValidationError("payload map needs vector payloads on every point");
  std::map<std::vector<double>, std::size_t> position;
  std::vector<SupportPoint> points;
  std::vector<std::size_t> image(p.x_size());
  for (std::size_t x = 0; x < p.x_size(); ++x) {
    std::vector<double> out = fn(*p.x_support()[x].vec);
    auto [it, inserted] = position.emplace(out, points.size());
    if (inserted) points.push_back(SupportPoint{"t" + std::to_string(points.size()), std::move(out)});
    image[x] = it->second;
  }
  return FiniteMap(std::move(image), std::move(points));
}

FiniteMap FiniteMap::tuple(std::span<const FiniteMap> maps) {
  if (maps.empty()) throw ValidationError("tuple map needs at least one component");
  const std::size_t n = maps.front().source_size();
  for (const auto& m : maps) {
    if (m.source_size() != n) throw ValidationError("tuple components have different sources");
  }
  std::map<std::vector<std::size_t>, std::size_t> position;
  std::vector<SupportPoint> points;
  std::vector<std::size_t> image(n);
  for (std::size_t x = 0; x < n; ++x) {
    std::vector<std::size_t> key;
    key.reserve(maps.size());
    for (const auto& m : maps) key.push_back(m(x));
    auto [it, inserted] = position.emplace(key, points.size());
    if (inserted) {
      SupportPoint pt;
      pt.id = "(";
      bool all_vec = true;
      std::vector<double> vec;
      for (std::size_t i = 0; i < maps.size(); ++i) {
        const auto& c = maps[i].codomain()[key[i]];
        pt.id += (i ? "," : "") + c.id;
        if (c.vec) {
          vec.insert(vec.end(), c.vec->begin(), c.vec->end());
        } else {
          all_vec = false;
        }
      }
      pt.id += ")";
      if (all_vec) pt.vec = std::move(vec);
      points.push_back(std::move(pt));
    }
    image[x] = it->second;
  }
  return FiniteMap(std::move(image), std::move(points));
}

std::vector<std::vector<std::size_t>> FiniteMap::fibers() const {
  std::vector<std::vector<std::size_t>> out(codomain_.size());
  for (std::size_t x = 0; x < image_.size(); ++x) out[image_[x]].push_back(x);
  return out;
}

bool FiniteMap::is_injective() const {
  std::vector<bool> hit(codomain_.size(), false);
  for (std::size_t t : image_) {
    if (hit[t]) return false;
    hit[t] = true;
  }
  return true;
}

// --- Scorer ------------------------------------------------------------------

Scorer::Scorer(Fn fn, double lipschitz_constant) : fn_(std::move(fn)), lipschitz_(lipschitz_constant) {
  if (!(lipschitz_constant >= 0.0)) throw ValidationError("scorer Lipschitz constant must be >= 0");
}

Scorer Scorer::constant(double value) {
  return Scorer([value](const SupportPoint&) { return value; }, 0.0);
}

Scorer Scorer::lookup(std::map<std::string, double> by_id) {
  return Scorer([table = std::move(by_id)](const SupportPoint& pt) {
    auto it = table.find(pt.id);
    if (it == table.end()) throw ValidationError("scorer has no value for '" + pt.id + "'");
    return it->second;
  });
}

Scorer Scorer::on_payload(std::function<double(std::span<const double>)> fn,
                          double lipschitz_constant) {
  return Scorer(
      [fn = std::move(fn)](const SupportPoint& pt) {
        if (!pt.vec) throw ValidationError("scorer needs a payload on '" + pt.id + "'");
        return fn(*pt.vec);
      },
      lipschitz_constant);
}

double Scorer::operator()(const SupportPoint& point) const {
  const double v = fn_(point);
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ValidationError("score " + std::to_string(v) + " at '" + point.id + "' is outside [0, 1]");
  }
  return v;
}

// --- Bayes error and safety --------------------------------------------------

double bayes_error(const FiniteJointDistribution& p) {
  double r = 0.0;
  for (std::size_t x = 0; x < p.x_size(); ++x) {
    const auto row = p.row(x);
    r += p.marginal_x(x) - row[argmax_index(row)];
  }
  return r;
}

FiniteJointDistribution pushforward(const FiniteJointDistribution& p, const FiniteMap& f) {
  return FiniteJointDistribution(f.codomain(), p.y_support(), fiber_masses(p, f));
}

double delta_star_expectation_form(const FiniteJointDistribution& p, const FiniteMap& f) {
  const std::vector<double> fm = fiber_masses(p, f);
  const std::size_t ny = p.y_size();
  double d = 0.0;
  for (std::size_t x = 0; x < p.x_size(); ++x) {
    const double px = p.marginal_x(x);
    if (!(px > 0.0)) continue;
    const std::span<const double> trow(fm.data() + f(x) * ny, ny);
    const double pt = row_sum(trow);
    const double best_raw = p.mass(x, p.argmax_class(x));
    d += best_raw - px * (trow[argmax_index(trow)] / pt);
  }
  return d;
}

double delta_star(const FiniteJointDistribution& p, const FiniteMap& f) {
  const std::vector<double> fm = fiber_masses(p, f);
  const std::size_t ny = p.y_size();
  std::vector<double> kept(f.codomain_size(), 0.0);
  for (std::size_t x = 0; x < p.x_size(); ++x) kept[f(x)] += p.mass(x, p.argmax_class(x));
  double d = 0.0;
  for (std::size_t t = 0; t < f.codomain_size(); ++t) {
    const std::span<const double> trow(fm.data() + t * ny, ny);
    d += kept[t] - trow[argmax_index(trow)];
  }

  const double via_bayes = bayes_error(pushforward(p, f)) - bayes_error(p);
  const double via_expectation = delta_star_expectation_form(p, f);
  if (std::abs(d - via_bayes) > kExactTolerance || std::abs(d - via_expectation) > kExactTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "delta* routes disagree: fiber " << d << ", Bayes difference " << via_bayes
        << ", expectation " << via_expectation;
    throw InternalConsistencyError(msg.str());
  }
  return d;
}

double conditional_kl(const FiniteJointDistribution& p, const FiniteMap& f) {
  const std::vector<double> fm = fiber_masses(p, f);
  const std::size_t ny = p.y_size();
  double kl = 0.0;
  for (std::size_t x = 0; x < p.x_size(); ++x) {
    const double px = p.marginal_x(x);
    if (!(px > 0.0)) continue;
    const std::span<const double> trow(fm.data() + f(x) * ny, ny);
    const double pt = row_sum(trow);
    for (std::size_t y = 0; y < ny; ++y) {
      const double pxy = p.mass(x, y);
      if (pxy == 0.0) continue;
      if (!(trow[y] > 0.0)) {
        throw InternalConsistencyError("fiber posterior vanishes where p(y|x) > 0 at '" +
                                       p.x_support()[x].id + "'");
      }
      // p(y|x) / p~(y|f(x)) written so that singleton fibers give exactly 1.
      kl += pxy * std::log2((pxy * pt) / (px * trow[y]));
    }
  }
  // Rounding can leave a tiny negative total.
  return std::max(kl, 0.0);
}

double mutual_information(const FiniteJointDistribution& p) {
  std::vector<double> py(p.y_size());
  for (std::size_t y = 0; y < p.y_size(); ++y) py[y] = p.marginal_y(y);
  double mi = 0.0;
  for (std::size_t x = 0; x < p.x_size(); ++x) {
    const double px = p.marginal_x(x);
    for (std::size_t y = 0; y < p.y_size(); ++y) {
      const double pxy = p.mass(x, y);
      if (pxy == 0.0) continue;
      mi += pxy * std::log2(pxy / (px * py[y]));
    }
  }
  return std::max(mi, 0.0);
}

double joint_kl(const FiniteJointDistribution& p, const FiniteJointDistribution& q) {
  if (p.x_size() != q.x_size() || p.y_size() != q.y_size()) {
    throw ValidationError("KL needs distributions over the same support");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.masses().size(); ++i) {
    const double a = p.masses()[i];
    const double b = q.masses()[i];
    if (a == 0.0) continue;
    if (b == 0.0) return kInf;
    kl += a * std::log2(a / b);
  }
  return std::max(kl, 0.0);
}

SafetyReport safety_report(const FiniteJointDistribution& p, const FiniteMap& f) {
  SafetyReport r;
  const auto q = pushforward(p, f);
  r.bayes_raw = bayes_error(p);
  r.bayes_transformed = bayes_error(q);
  r.delta_star = delta_star(p, f);
  r.conditional_kl_bits = conditional_kl(p, f);
  r.pinsker_delta = std::sqrt(r.conditional_kl_bits * std::numbers::ln2 / 2.0);
  r.mi_loss_bits = std::max(mutual_information(p) - mutual_information(q), 0.0);
  return r;
}

PinskerCertificate pinsker_safety_certificate(const FiniteJointDistribution& p,
                                              const FiniteMap& f, double delta) {
  if (!(delta >= 0.0)) throw ValidationError("certificate delta must be >= 0");
  PinskerCertificate c;
  c.delta = delta;
  c.conditional_kl_bits = conditional_kl(p, f);
  c.kl_threshold_bits = (2.0 / std::numbers::ln2) * delta * delta;
  c.delta_star = delta_star(p, f);
  c.granted = c.conditional_kl_bits <= c.kl_threshold_bits;
  if (c.granted && c.delta_star > delta + kBoundSlack) {
    throw InternalConsistencyError("Pinsker certificate granted but delta* = " +
                                   std::to_string(c.delta_star) + " exceeds " +
                                   std::to_string(delta));
  }
  return c;
}

// --- Injectivity -------------------------------------------------------------

std::vector<std::size_t> injective_support(const FiniteJointDistribution& p, const FiniteMap& f) {
  if (f.source_size() != p.x_size()) throw ValidationError("map and distribution sizes differ");
  std::vector<std::size_t> best(f.codomain_size(), p.x_size());
  for (std::size_t x = 0; x < p.x_size(); ++x) {
    std::size_t& b = best[f(x)];
    if (b == p.x_size() || p.marginal_x(x) > p.marginal_x(b)) b = x;
  }
  std::vector<std::size_t> support;
  for (std::size_t b : best) {
    if (b != p.x_size()) support.push_back(b);
  }
  std::sort(support.begin(), support.end());
  return support;
}

namespace {

double mass_outside(const FiniteJointDistribution& p, const std::vector<bool>& inside) {
  double d = 0.0;
  for (std::size_t x = 0; x < p.x_size(); ++x) {
    if (!inside[x]) d += p.marginal_x(x);
  }
  return d;
}

}  // namespace

double injectivity_defect(const FiniteJointDistribution& p, const FiniteMap& f) {
  std::vector<bool> inside(p.x_size(), false);
  for (std::size_t x : injective_support(p, f)) inside[x] = true;
  const double defect = mass_outside(p, inside);
  const double ds = delta_star(p, f);
  if (ds > defect + kExactTolerance) {
    throw InternalConsistencyError("delta* exceeds the injectivity defect");
  }
  return defect;
}

double join_defect(const FiniteJointDistribution& p, std::span<const FiniteMap> maps) {
  if (maps.empty()) throw ValidationError("join_defect needs at least one map");
  std::vector<bool> inside(p.x_size(), false);
  for (const auto& f : maps) {
    for (std::size_t x : injective_support(p, f)) inside[x] = true;
  }
  const double defect = mass_outside(p, inside);
  const double ds = delta_star(p, FiniteMap::tuple(maps));
  if (ds > defect + kExactTolerance) {
    throw InternalConsistencyError("delta* of the joined map exceeds the join defect");
  }
  return defect;
}

// --- Extremal constructions --------------------------------------------------

TightnessInstance tightness_instance(double delta, std::size_t x_size, std::size_t xt_size) {
  if (!(delta >= 0.0 && delta < 0.5)) {
    throw DomainError("tightness instance needs delta in [0, 0.5), got " + std::to_string(delta));
  }
  if (x_size < 2 || xt_size < 1 || xt_size >= x_size) {
    throw DomainError("tightness instance needs x_size >= 2 and 1 <= xt_size < x_size");
  }
  std::vector<SupportPoint> xs(x_size);
  for (std::size_t i = 0; i < x_size; ++i) xs[i].id = "x" + std::to_string(i);
  std::vector<double> mass(x_size * 2, 0.0);
  // Row layout is (p(x, 0), p(x, 1)).
  mass[0] = 0.5 * (0.5 + delta);
  mass[1] = 0.5 * (0.5 - delta);
  mass[2] = 0.5 * (0.5 - delta);
  mass[3] = 0.5 * (0.5 + delta);
  FiniteJointDistribution p(std::move(xs), {"0", "1"}, std::move(mass));

  std::vector<SupportPoint> ts(xt_size);
  for (std::size_t i = 0; i < xt_size; ++i) ts[i].id = "t" + std::to_string(i);
  std::vector<std::size_t> image(x_size, 0);
  for (std::size_t i = 2; i < x_size; ++i) image[i] = std::min(i - 1, xt_size - 1);
  return {std::move(p), FiniteMap(std::move(image), std::move(ts))};
}

ShiftSafetyReport shift_safety_bound(const FiniteJointDistribution& p_source,
                                     const FiniteJointDistribution& p_target, const FiniteMap& f,
                                     double delta_source) {
  if (p_source.y_support() != p_target.y_support() || p_source.x_size() != p_target.x_size()) {
    throw ValidationError("source and target distributions must share supports");
  }
  for (std::size_t x = 0; x < p_source.x_size(); ++x) {
    if (p_source.x_support()[x].id != p_target.x_support()[x].id) {
      throw ValidationError("source and target distributions must share supports");
    }
  }
  if (!(delta_source >= 0.0)) throw ValidationError("delta_source must be >= 0");

  ShiftSafetyReport r;
  r.delta_source = delta_source;
  r.kl_bits = joint_kl(p_source, p_target);
  r.vacuous = std::isinf(r.kl_bits);
  r.epsilon = r.vacuous ? kInf : std::sqrt(8.0 * std::numbers::ln2 * r.kl_bits);
  r.bound = delta_source + r.epsilon;
  r.delta_star_source = delta_star(p_source, f);
  r.delta_star_target = delta_star(p_target, f);
  r.hypothesis_holds = delta_source >= r.delta_star_source;
  if (!r.vacuous && r.hypothesis_holds && r.delta_star_target > r.bound + kBoundSlack) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "target delta* " << r.delta_star_target << " exceeds shift bound " << r.bound;
    throw InternalConsistencyError(msg.str());
  }
  return r;
}

// --- Squared loss ------------------------------------------------------------

double g_squared_loss(const FiniteJointDistribution& p, const FiniteMap& f, const Scorer& g) {
  require_binary(p, "g-squared loss");
  if (f.source_size() != p.x_size()) throw ValidationError("map and distribution sizes differ");
  std::vector<double> scores(f.codomain_size(), std::numeric_limits<double>::quiet_NaN());
  double loss = 0.0;
  for (std::size_t x = 0; x < p.x_size(); ++x) {
    const double px = p.marginal_x(x);
    if (!(px > 0.0)) continue;
    double& s = scores[f(x)];
    if (std::isnan(s)) s = g(f.codomain()[f(x)]);
    const double diff = s - p.eta(x);
    loss += px * diff * diff;
  }
  return loss;
}

LossPair loss_pullback_pair(const FiniteJointDistribution& p, const FiniteMap& f,
                            const Scorer& g) {
  LossPair out;
  out.l_f = g_squared_loss(p, f, g);
  const auto q = pushforward(p, f);
  double l_id = 0.0;
  for (std::size_t t = 0; t < q.x_size(); ++t) {
    const double pt = q.marginal_x(t);
    if (!(pt > 0.0)) continue;
    const double diff = g(q.x_support()[t]) - q.eta(t);
    l_id += pt * diff * diff;
  }
  out.l_id = l_id;
  if (out.l_id > out.l_f + kExactTolerance) {
    throw InternalConsistencyError("pulled-back loss exceeds the source loss");
  }
  return out;
}

BiasBoundReport bias_bound_check(const FiniteJointDistribution& p, const FiniteMap& f,
                                 const Scorer& g) {
  BiasBoundReport r;
  r.squared_loss = g_squared_loss(p, f, g);
  r.bound = 2.0 * std::sqrt(r.squared_loss);
  r.delta_star = delta_star(p, f);
  if (r.delta_star > r.bound + kBoundSlack) {
    throw InternalConsistencyError("delta* exceeds 2 sqrt(squared loss)");
  }
  return r;
}

double prob_lipschitz_defect(const FiniteJointDistribution& p, double eps, double lipschitz) {
  require_binary(p, "probabilistic Lipschitz defect");
  if (!(eps >= 0.0) || !(lipschitz >= 0.0)) throw ValidationError("eps and L must be >= 0");
  if (!p.has_payloads()) throw ValidationError("probabilistic Lipschitz defect needs payloads");
  const std::size_t n = p.x_size();
  std::vector<double> eta(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (p.marginal_x(i) > 0.0) eta[i] = p.eta(i);
  }
  double defect = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pi = p.marginal_x(i);
    if (!(pi > 0.0)) continue;
    const auto& xi = *p.x_support()[i].vec;
    for (std::size_t j = 0; j < n; ++j) {
      const double pj = p.marginal_x(j);
      if (!(pj > 0.0)) continue;
      const auto& xj = *p.x_support()[j].vec;
      double d2 = 0.0;
      for (std::size_t k = 0; k < xi.size(); ++k) d2 += (xi[k] - xj[k]) * (xi[k] - xj[k]);
      if (std::abs(eta[i] - eta[j]) > eps + lipschitz * std::sqrt(d2)) defect += pi * pj;
    }
  }
  return defect;
}

}  // namespace ktl
