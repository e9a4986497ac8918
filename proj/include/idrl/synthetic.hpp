#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "idrl/dataset.hpp"
#include "idrl/matrix.hpp"
#include "idrl/nn.hpp"
#include "idrl/rng.hpp"

namespace idrl {

enum class CorrelationFamily { Independent, Low, Medium, High };

inline std::string correlation_family_label(CorrelationFamily f) {
  switch (f) {
    case CorrelationFamily::Independent: return "independent";
    case CorrelationFamily::Low: return "low";
    case CorrelationFamily::Medium: return "medium";
    case CorrelationFamily::High: return "high";
  }
  return "unknown";
}

inline CorrelationFamily correlation_family_from_label(const std::string& label) {
  if (label == "independent") return CorrelationFamily::Independent;
  if (label == "low") return CorrelationFamily::Low;
  if (label == "medium") return CorrelationFamily::Medium;
  if (label == "high") return CorrelationFamily::High;
  throw std::invalid_argument("unknown correlation family: " + label);
}

// Where the family's correlation lives: across all covariates, or inside the
// outcome-driving (confounder, adjustment) block with the rest independent.
enum class CorrelationScope { Global, OutcomeBlock };

inline std::string correlation_scope_label(CorrelationScope s) {
  return s == CorrelationScope::Global ? "global" : "outcome_block";
}

inline CorrelationScope correlation_scope_from_label(const std::string& label) {
  if (label == "global") return CorrelationScope::Global;
  if (label == "outcome_block") return CorrelationScope::OutcomeBlock;
  throw std::invalid_argument("unknown correlation scope: " + label);
}

struct SyntheticSpec {
  std::size_t n_samples = 3000;
  std::size_t n_confounders = 15;
  std::size_t n_adjustment = 15;
  std::size_t n_instrumental = 10;
  std::size_t n_irrelevant = 20;
  CorrelationFamily correlation_family = CorrelationFamily::Independent;
  CorrelationScope correlation_scope = CorrelationScope::Global;
  std::uint64_t coefficient_seed = 12345;
  double noise_sd = 1.0;
  double q = 0.0;  // bias-amplification level, applied by amplify_bias

  std::size_t total_dim() const {
    return n_confounders + n_adjustment + n_instrumental + n_irrelevant;
  }

  void validate() const {
    if (total_dim() == 0) throw std::invalid_argument("synthetic: zero covariates");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("synthetic: q outside [0,1]");
    if (noise_sd < 0.0) throw std::invalid_argument("synthetic: negative noise sd");
    if (n_samples == 0) throw std::invalid_argument("synthetic: zero samples");
  }

  // Column layout: confounders, instrumental, irrelevant, adjustment.
  std::vector<VarRole> column_roles() const {
    std::vector<VarRole> roles;
    roles.insert(roles.end(), n_confounders, VarRole::Confounder);
    roles.insert(roles.end(), n_instrumental, VarRole::Instrumental);
    roles.insert(roles.end(), n_irrelevant, VarRole::Irrelevant);
    roles.insert(roles.end(), n_adjustment, VarRole::Adjustment);
    return roles;
  }
};

// Noiseless generating quantities per unit.
struct GroundTruth {
  std::vector<double> tau;     // true CATE
  std::vector<double> g_base;  // baseline outcome component
  std::vector<double> e0;      // true propensity, in (0,1)

  GroundTruth subset(const std::vector<std::size_t>& idx) const {
    GroundTruth out;
    auto pick = [&](const std::vector<double>& src) {
      std::vector<double> dst(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) dst[k] = src[idx[k]];
      return dst;
    };
    out.tau = pick(tau);
    out.g_base = pick(g_base);
    out.e0 = pick(e0);
    return out;
  }
};

// Frozen coefficient vectors of the generating process. Outcome terms load
// only on (confounder, adjustment) columns, the propensity only on
// (confounder, instrumental) columns; irrelevant columns load on nothing.
struct SyntheticCoefficients {
  std::vector<double> beta_tau;   // effect, linear part, dim = n_conf + n_adj
  std::vector<double> beta_sin;   // effect, sine part
  std::vector<double> beta_g;     // baseline, linear part
  std::vector<double> beta_sq;    // baseline, squared part
  std::vector<double> beta_prop;  // propensity score, dim = n_conf + n_inst
  double kappa = 0.0;             // propensity slope after overlap scaling

  std::uint64_t digest() const {
    auto mix = [](std::uint64_t h, const std::vector<double>& v) {
      for (double x : v) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(x));
        std::memcpy(&bits, &x, sizeof(bits));
        h ^= bits;
        h *= 0x100000001b3ULL;  // FNV-1a step
      }
      return h;
    };
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = mix(h, beta_tau);
    h = mix(h, beta_sin);
    h = mix(h, beta_g);
    h = mix(h, beta_sq);
    h = mix(h, beta_prop);
    return h;
  }
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline std::vector<double> draw_coefficients(std::size_t dim, Rng& rng) {
  std::vector<double> beta(dim);
  const double sd = dim > 0 ? 1.0 / std::sqrt(static_cast<double>(dim)) : 0.0;
  for (double& b : beta) b = rng.normal(0.0, sd);
  return beta;
}

}  // namespace detail

// Symmetric positive-definite correlation matrix. Families are exchangeable
// matrices with off-diagonal 0 / 0.2 / 0.5 / 0.8, the correlated ones blended
// with a small random orthogonal perturbation and rescaled to unit diagonal.
// The independent family is exactly the identity.
inline Matrix correlation_matrix(CorrelationFamily family, std::size_t d,
                                 std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("correlation_matrix: d must be >= 1");
  if (family == CorrelationFamily::Independent) return Matrix::identity(d);

  double rho = 0.0;
  switch (family) {
    case CorrelationFamily::Low: rho = 0.2; break;
    case CorrelationFamily::Medium: rho = 0.5; break;
    case CorrelationFamily::High: rho = 0.8; break;
    default: break;
  }

  Matrix base(d, d, rho);
  for (std::size_t i = 0; i < d; ++i) base(i, i) = 1.0;

  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(family)));
  Matrix ortho = random_orthogonal(d, rng);
  // E = Q diag(lambda) Q^T with lambda in [0.2, 1]; strictly PD perturbation.
  std::vector<double> lambda(d);
  for (double& l : lambda) l = rng.uniform(0.2, 1.0);
  Matrix scaled = ortho;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) scaled(i, j) *= lambda[j];
  Matrix perturb = matmul_nt(scaled, ortho);

  const double weight = 0.1;
  Matrix raw(d, d);
  for (std::size_t i = 0; i < d * d; ++i)
    raw.data[i] = (1.0 - weight) * base.data[i] + weight * perturb.data[i];

  // Rescale to unit diagonal; symmetrize against round-off.
  std::vector<double> inv_sqrt(d);
  for (std::size_t i = 0; i < d; ++i) inv_sqrt[i] = 1.0 / std::sqrt(raw(i, i));
  Matrix corr(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      corr(i, j) = raw(i, j) * inv_sqrt[i] * inv_sqrt[j];
  for (std::size_t i = 0; i < d; ++i) {
    corr(i, i) = 1.0;
    for (std::size_t j = 0; j < i; ++j) {
      double sym = 0.5 * (corr(i, j) + corr(j, i));
      corr(i, j) = sym;
      corr(j, i) = sym;
    }
  }
  return corr;
}

// Correlation used by the generator. Global scope applies the family matrix
// to all covariates. Outcome-block scope applies it to the (confounder,
// adjustment) block only, leaving the other columns independent, so shuffled
// negatives differ from real rows exactly in the outcome-relevant dependence
// structure.
inline Matrix role_correlation_matrix(const SyntheticSpec& spec, std::uint64_t seed) {
  const std::size_t d = spec.total_dim();
  if (spec.correlation_scope == CorrelationScope::Global)
    return correlation_matrix(spec.correlation_family, d, seed);
  Matrix corr = Matrix::identity(d);
  const std::size_t block = spec.n_confounders + spec.n_adjustment;
  if (block == 0 || spec.correlation_family == CorrelationFamily::Independent)
    return corr;
  Matrix inner = correlation_matrix(spec.correlation_family, block, seed);
  // column layout is [C | Z | I | A]
  std::vector<std::size_t> cols;
  cols.reserve(block);
  for (std::size_t j = 0; j < spec.n_confounders; ++j) cols.push_back(j);
  const std::size_t a_start = spec.n_confounders + spec.n_instrumental + spec.n_irrelevant;
  for (std::size_t j = 0; j < spec.n_adjustment; ++j) cols.push_back(a_start + j);
  for (std::size_t i = 0; i < block; ++i)
    for (std::size_t j = 0; j < block; ++j) corr(cols[i], cols[j]) = inner(i, j);
  return corr;
}

struct GenerateResult {
  Dataset data;
  GroundTruth truth;
  SyntheticCoefficients coefficients;
};

// Partially linear outcome model over correlated multivariate-normal
// covariates:
//   y = tau(C,A) * t + g(C,A) + noise,   t ~ Bernoulli(e0(C,Z))
// with tau = 1 + beta_tau.w + 0.5 sin(beta_sin.w), g = beta_g.w +
// 0.3 (beta_sq.w)^2, and e0 = sigmoid(kappa * beta_prop.v) where kappa is
// scaled so that e0 spans [0.05, 0.95] on the realized sample (overlap).
inline GenerateResult generate(const SyntheticSpec& spec, std::uint64_t sample_seed) {
  spec.validate();
  const std::size_t n = spec.n_samples;
  const std::size_t d = spec.total_dim();
  const std::size_t nc = spec.n_confounders;
  const std::size_t nz = spec.n_instrumental;
  const std::size_t ni = spec.n_irrelevant;
  const std::size_t na = spec.n_adjustment;

  GenerateResult result;
  SyntheticCoefficients& coef = result.coefficients;
  {
    Rng coef_rng(spec.coefficient_seed);
    const std::size_t outcome_dim = nc + na;
    const std::size_t prop_dim = nc + nz;
    coef.beta_tau = detail::draw_coefficients(outcome_dim, coef_rng);
    coef.beta_sin = detail::draw_coefficients(outcome_dim, coef_rng);
    coef.beta_g = detail::draw_coefficients(outcome_dim, coef_rng);
    coef.beta_sq = detail::draw_coefficients(outcome_dim, coef_rng);
    coef.beta_prop = detail::draw_coefficients(prop_dim, coef_rng);
  }

  Matrix corr = role_correlation_matrix(spec, derive_seed(spec.coefficient_seed, 7));
  Matrix chol = cholesky_lower(corr);

  Rng rng(sample_seed);
  Matrix z(n, d);
  for (double& v : z.data) v = rng.normal();
  Matrix x = matmul_nt(z, chol);  // rows are L * z_i

  Dataset& ds = result.data;
  ds.X = std::move(x);
  ds.roles = spec.column_roles();
  GroundTruth& gt = result.truth;
  gt.tau.resize(n);
  gt.g_base.resize(n);
  gt.e0.resize(n);

  // Gather the (C,A) and (C,Z) views once per row; column layout is
  // [C | Z | I | A].
  std::vector<double> w(nc + na), v(nc + nz);
  std::vector<double> prop_score(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < nc; ++j) w[j] = ds.X(i, j);
    for (std::size_t j = 0; j < na; ++j) w[nc + j] = ds.X(i, nc + nz + ni + j);
    for (std::size_t j = 0; j < nc; ++j) v[j] = ds.X(i, j);
    for (std::size_t j = 0; j < nz; ++j) v[nc + j] = ds.X(i, nc + j);

    gt.tau[i] = 1.0 + detail::dot(coef.beta_tau, w) +
                0.5 * std::sin(detail::dot(coef.beta_sin, w));
    double lin = detail::dot(coef.beta_g, w);
    double sq = detail::dot(coef.beta_sq, w);
    gt.g_base[i] = lin + 0.3 * sq * sq;
    prop_score[i] = detail::dot(coef.beta_prop, v);
  }

  double max_abs_score = 0.0;
  for (double s : prop_score) max_abs_score = std::max(max_abs_score, std::abs(s));
  const double logit_cap = std::log(0.95 / 0.05);
  coef.kappa = max_abs_score > 0.0 ? logit_cap / max_abs_score : 0.0;
  for (std::size_t i = 0; i < n; ++i)
    gt.e0[i] = sigmoid(coef.kappa * prop_score[i]);

  ds.t.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.t[i] = rng.bernoulli(gt.e0[i]) ? 1 : 0;

  ds.mu0 = gt.g_base;
  std::vector<double> mu1(n);
  for (std::size_t i = 0; i < n; ++i) mu1[i] = gt.g_base[i] + gt.tau[i];
  ds.mu1 = std::move(mu1);

  ds.y_f.resize(n);
  std::vector<double> y_cf(n);
  for (std::size_t i = 0; i < n; ++i)
    ds.y_f[i] = (ds.t[i] == 1 ? (*ds.mu1)[i] : (*ds.mu0)[i]) +
                rng.normal(0.0, spec.noise_sd);
  for (std::size_t i = 0; i < n; ++i)
    y_cf[i] = (ds.t[i] == 1 ? (*ds.mu0)[i] : (*ds.mu1)[i]) +
              rng.normal(0.0, spec.noise_sd);
  ds.y_cf = std::move(y_cf);

  ds.validate();
  return result;
}

struct BiasedSample {
  Dataset data;
  GroundTruth truth;
  std::vector<std::size_t> indices;  // ascending positions into the source
};

// Draw target_n units without replacement. Each draw is uniform over the
// remaining pool with probability 1-q; with probability q it takes the
// remaining unit with the greatest |e0 - 0.5| (ties broken by index).
inline BiasedSample amplify_bias(const Dataset& ds, const GroundTruth& gt,
                                 double q, std::size_t target_n,
                                 std::uint64_t seed) {
  const std::size_t n = ds.n();
  if (target_n > n)
    throw std::invalid_argument("amplify_bias: target_n exceeds pool size");
  if (q < 0.0 || q > 1.0)
    throw std::invalid_argument("amplify_bias: q outside [0,1]");
  if (gt.e0.size() != n)
    throw std::invalid_argument("amplify_bias: ground truth size mismatch");

  std::vector<std::size_t> by_extremity(n);
  std::iota(by_extremity.begin(), by_extremity.end(), std::size_t{0});
  std::stable_sort(by_extremity.begin(), by_extremity.end(),
                   [&](std::size_t a, std::size_t b) {
                     return std::abs(gt.e0[a] - 0.5) > std::abs(gt.e0[b] - 0.5);
                   });

  // O(1) uniform removal: pool of remaining indices + position lookup.
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::vector<std::size_t> pos(n);
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  std::vector<char> taken(n, 0);
  auto remove_from_pool = [&](std::size_t unit) {
    std::size_t p = pos[unit];
    std::size_t last = pool.back();
    pool[p] = last;
    pos[last] = p;
    pool.pop_back();
    taken[unit] = 1;
  };

  Rng rng(seed);
  std::size_t top = 0;  // cursor into by_extremity, skipping taken units
  std::vector<std::size_t> chosen;
  chosen.reserve(target_n);
  for (std::size_t k = 0; k < target_n; ++k) {
    std::size_t unit;
    if (rng.bernoulli(q)) {
      while (taken[by_extremity[top]]) ++top;
      unit = by_extremity[top];
    } else {
      unit = pool[rng.index(pool.size())];
    }
    remove_from_pool(unit);
    chosen.push_back(unit);
  }
  std::sort(chosen.begin(), chosen.end());

  BiasedSample out;
  out.data = ds.subset(chosen);
  out.truth = gt.subset(chosen);
  out.indices = std::move(chosen);
  return out;
}

}  // namespace idrl
