#include "ktl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "ktl/error.hpp"
#include "ktl/rng.hpp"

namespace ktl {
namespace {

using Poly = std::vector<long double>;  // coefficients in the local variable t in [0, 1]

long double eval(const Poly& p, long double t) {
  long double v = 0.0L;
  for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * t + *it;
  return v;
}

Poly antiderivative(const Poly& p) {
  Poly q(p.size() + 1, 0.0L);
  for (std::size_t k = 0; k < p.size(); ++k) q[k + 1] = p[k] / static_cast<long double>(k + 1);
  return q;
}

// Density of a sum of `dim` independent U(0,1) variables, as one polynomial per
// unit interval [j, j+1]. Built by repeated convolution with U(0,1):
// f_{m+1}(u) = F_m(u) - F_m(u - 1).
std::vector<Poly> uniform_sum_density(std::size_t dim) {
  std::vector<Poly> pieces{Poly{1.0L}};
  for (std::size_t m = 1; m < dim; ++m) {
    std::vector<Poly> cdf(m);
    std::vector<long double> offset(m + 1, 0.0L);
    for (std::size_t j = 0; j < m; ++j) {
      cdf[j] = antiderivative(pieces[j]);
      offset[j + 1] = offset[j] + eval(cdf[j], 1.0L);
    }
    const std::size_t degree = pieces[0].size() + 1;
    std::vector<Poly> next(m + 1, Poly(degree, 0.0L));
    for (std::size_t j = 0; j <= m; ++j) {
      Poly& g = next[j];
      if (j < m) {
        g[0] += offset[j];
        for (std::size_t k = 0; k < cdf[j].size(); ++k) g[k] += cdf[j][k];
      } else {
        g[0] += offset[m];
      }
      if (j >= 1) {
        g[0] -= offset[j - 1];
        for (std::size_t k = 0; k < cdf[j - 1].size(); ++k) g[k] -= cdf[j - 1][k];
      }
    }
    pieces = std::move(next);
  }
  return pieces;
}

struct Quadrature {
  std::vector<long double> nodes;  // on [-1, 1]
  std::vector<long double> weights;
};

Quadrature gauss_legendre(std::size_t n) {
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  const long double pi = std::numbers::pi_v<long double>;
  for (std::size_t i = 0; i < n; ++i) {
    long double x = std::cos(pi * (static_cast<long double>(i) + 0.75L) / (static_cast<long double>(n) + 0.5L));
    long double dp = 0.0L;
    for (int iter = 0; iter < 100; ++iter) {
      long double p0 = 1.0L;
      long double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const long double p2 = ((2.0L * k - 1.0L) * x * p1 - (k - 1.0L) * p0) / static_cast<long double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<long double>(n) * (x * p1 - p0) / (x * x - 1.0L);
      const long double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-19L) break;
    }
    q.nodes[i] = x;
    q.weights[i] = 2.0L / ((1.0L - x * x) * dp * dp);
  }
  return q;
}

}  // namespace

double lipschitz_task_bayes_error(double lipschitz, std::size_t dim) {
  if (!(lipschitz >= 0.0) || !std::isfinite(lipschitz)) throw ValidationError("lipschitz must be finite and >= 0");
  if (dim < 1) throw ValidationError("dimension must be >= 1");
  if (lipschitz == 0.0) return 0.5;
  // Bayes error = 1/2 - E[min(1/2, c |S - D/2|)] with S the sum of coordinates.
  const long double c = static_cast<long double>(lipschitz) / std::sqrt(static_cast<long double>(dim));
  const long double center = static_cast<long double>(dim) / 2.0L;
  const long double kink = 0.5L / c;
  const auto pieces = uniform_sum_density(dim);
  const auto quad = gauss_legendre(dim / 2 + 2);

  long double expectation = 0.0L;
  for (std::size_t j = 0; j < pieces.size(); ++j) {
    const auto lo = static_cast<long double>(j);
    const long double hi = lo + 1.0L;
    std::vector<long double> cuts{lo, hi};
    for (long double b : {center, center - kink, center + kink}) {
      if (b > lo && b < hi) cuts.push_back(b);
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
      const long double a = cuts[s];
      const long double b = cuts[s + 1];
      const long double half = (b - a) / 2.0L;
      const long double mid = (a + b) / 2.0L;
      for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
        const long double u = mid + half * quad.nodes[i];
        const long double gap = std::min(0.5L, c * std::abs(u - center));
        expectation += quad.weights[i] * half * gap * eval(pieces[j], u - lo);
      }
    }
  }
  return static_cast<double>(0.5L - expectation);
}

LipschitzTask::LipschitzTask(double lipschitz, std::size_t dim, std::uint64_t seed)
    : lipschitz_(lipschitz), dim_(dim), seed_(seed), bayes_error_(lipschitz_task_bayes_error(lipschitz, dim)) {}

double LipschitzTask::posterior(std::span<const double> x) const {
  if (x.size() != dim_) throw ValidationError("point dimension does not match the task");
  double s = 0.0;
  for (double v : x) s += v - 0.5;
  return std::clamp(0.5 + lipschitz_ / std::sqrt(static_cast<double>(dim_)) * s, 0.0, 1.0);
}

LabeledDataset LipschitzTask::sample(std::size_t n, std::uint64_t stream) const {
  Rng rng = Rng::derived(seed_, {stream});
  std::vector<double> values(n * dim_);
  std::vector<std::int32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<double> x(values.data() + i * dim_, dim_);
    for (auto& v : x) v = rng.uniform();
    labels[i] = rng.bernoulli(posterior(x)) ? 1 : 0;
  }
  return LabeledDataset(std::move(values), dim_, std::move(labels), 2);
}

LipschitzTask gen_lipschitz_task(double lipschitz, std::size_t dim, std::uint64_t seed) {
  return LipschitzTask(lipschitz, dim, seed);
}

std::pair<LabeledDataset, LabeledDataset> gen_tightness_samples(double delta, std::size_t n,
                                                                std::uint64_t seed) {
  if (!(delta >= 0.0 && delta < 0.5)) throw ValidationError("delta must lie in [0, 1/2)");
  Rng rng(seed);
  std::vector<double> raw(n);
  std::vector<std::int32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool right = rng.bernoulli(0.5);
    raw[i] = right ? 1.0 : -1.0;
    labels[i] = rng.bernoulli(right ? 0.5 + delta : 0.5 - delta) ? 1 : 0;
  }
  std::vector<double> collapsed(n, 0.0);
  return {LabeledDataset(std::move(raw), 1, labels, 2), LabeledDataset(std::move(collapsed), 1, labels, 2)};
}

FiniteJointDistribution gen_random_finite(std::size_t x_size, std::size_t y_size, std::uint64_t seed,
                                          std::size_t payload_dim) {
  if (x_size < 1 || y_size < 1) throw ValidationError("support sizes must be >= 1");
  Rng rng = Rng::derived(seed, {0});
  std::vector<double> mass(x_size * y_size);
  double total = 0.0;
  for (auto& m : mass) {
    m = rng.exponential();
    total += m;
  }
  for (auto& m : mass) m /= total;

  Rng payload_rng = Rng::derived(seed, {1});
  std::vector<SupportPoint> xs(x_size);
  for (std::size_t i = 0; i < x_size; ++i) {
    xs[i].id = "x" + std::to_string(i);
    if (payload_dim > 0) {
      std::vector<double> v(payload_dim);
      for (auto& c : v) c = payload_rng.uniform();
      xs[i].vec = std::move(v);
    }
  }
  std::vector<std::string> ys(y_size);
  for (std::size_t y = 0; y < y_size; ++y) ys[y] = "y" + std::to_string(y);
  return FiniteJointDistribution(std::move(xs), std::move(ys), std::move(mass));
}

ShiftedPair gen_shifted_pair(double eps, std::size_t x_size, std::size_t y_size, std::uint64_t seed) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ValidationError("eps must be positive and finite");
  FiniteJointDistribution source = gen_random_finite(x_size, y_size, Rng::derive(seed, {0}));
  const FiniteJointDistribution proposal = gen_random_finite(x_size, y_size, Rng::derive(seed, {1}));
  const double budget = eps * eps / (8.0 * std::numbers::ln2);

  auto mixed = [&](double t) {
    std::vector<double> m(source.masses().size());
    double total = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = (1.0 - t) * source.masses()[i] + t * proposal.masses()[i];
      total += m[i];
    }
    for (auto& v : m) v /= total;
    return FiniteJointDistribution(source.x_support(), source.y_support(), std::move(m));
  };

  double t = 1.0;
  FiniteJointDistribution target = mixed(t);
  double kl = joint_kl(source, target);
  if (!(kl <= budget)) {
    // KL(source || mix(t)) is convex in t and 0 at t = 0, hence increasing.
    double lo = 0.0;
    double hi = 1.0;
    bool found = false;
    for (int iter = 0; iter < 200; ++iter) {
      t = 0.5 * (lo + hi);
      target = mixed(t);
      kl = joint_kl(source, target);
      if (kl > budget) {
        hi = t;
      } else if (kl < 0.5 * budget) {
        lo = t;
      } else {
        found = true;
        break;
      }
    }
    if (!found) throw ComputationError("bisection on the shift magnitude did not converge");
  }
  return ShiftedPair{std::move(source), std::move(target), t, kl};
}

FiniteMap gen_random_map(const FiniteJointDistribution& p, std::size_t codomain_size, std::uint64_t seed) {
  if (codomain_size < 1) throw ValidationError("codomain size must be >= 1");
  Rng rng(seed);
  std::vector<std::size_t> image(p.x_size());
  for (auto& v : image) v = static_cast<std::size_t>(rng.index(codomain_size));
  std::vector<SupportPoint> codomain(codomain_size);
  for (std::size_t i = 0; i < codomain_size; ++i) codomain[i].id = "t" + std::to_string(i);
  return FiniteMap(std::move(image), std::move(codomain));
}

Scorer gen_random_scorer(const FiniteMap& f, std::uint64_t seed) {
  Rng rng(seed);
  std::map<std::string, double> scores;
  for (const auto& pt : f.codomain()) scores[pt.id] = rng.uniform();
  return Scorer::lookup(std::move(scores));
}

Scorer gen_linear_scorer(std::size_t dim, double lipschitz, std::uint64_t seed) {
  if (dim < 1) throw ValidationError("dimension must be >= 1");
  if (!(lipschitz >= 0.0)) throw ValidationError("lipschitz must be >= 0");
  Rng rng(seed);
  std::vector<double> a(dim);
  double norm = 0.0;
  for (auto& v : a) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (auto& v : a) v = norm > 0.0 ? v * lipschitz / norm : 0.0;
  const double c = rng.uniform();
  return Scorer::on_payload(
      [a, c](std::span<const double> x) {
        double s = c;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * (x[i] - 0.5);
        return std::clamp(s, 0.0, 1.0);
      },
      lipschitz);
}

}  // namespace ktl
