#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "idrl/synthetic.hpp"
#include "oracles.hpp"

using Catch::Approx;
using namespace idrl;

TEST_CASE("correlation_matrix independent family is the identity") {
  Matrix corr = correlation_matrix(CorrelationFamily::Independent, 10, 3);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j)
      REQUIRE(corr(i, j) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("correlation_matrix is positive definite for every family at d=60") {
  for (CorrelationFamily family :
       {CorrelationFamily::Independent, CorrelationFamily::Low,
        CorrelationFamily::Medium, CorrelationFamily::High}) {
    Matrix corr = correlation_matrix(family, 60, 11);
    for (std::size_t i = 0; i < 60; ++i) {
      REQUIRE(corr(i, i) == Approx(1.0).margin(1e-12));
      for (std::size_t j = 0; j < 60; ++j)
        REQUIRE(corr(i, j) == corr(j, i));
    }
    std::vector<double> eig = oracles::jacobi_eigenvalues(corr);
    for (double lambda : eig) {
      INFO(correlation_family_label(family));
      REQUIRE(lambda > 0.0);
    }
  }
}

TEST_CASE("correlation_matrix off-diagonal magnitude increases across families") {
  auto mean_abs_offdiag = [](const Matrix& m) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < m.rows; ++i)
      for (std::size_t j = 0; j < m.cols; ++j)
        if (i != j) {
          acc += std::abs(m(i, j));
          ++count;
        }
    return acc / static_cast<double>(count);
  };
  const std::size_t d = 40;
  double indep = mean_abs_offdiag(correlation_matrix(CorrelationFamily::Independent, d, 5));
  double low = mean_abs_offdiag(correlation_matrix(CorrelationFamily::Low, d, 5));
  double medium = mean_abs_offdiag(correlation_matrix(CorrelationFamily::Medium, d, 5));
  double high = mean_abs_offdiag(correlation_matrix(CorrelationFamily::High, d, 5));
  REQUIRE(indep < low);
  REQUIRE(low < medium);
  REQUIRE(medium < high);
}

TEST_CASE("generate is bit-identical under identical seeds") {
  SyntheticSpec spec;
  spec.n_samples = 200;
  GenerateResult a = generate(spec, 99);
  GenerateResult b = generate(spec, 99);
  REQUIRE(a.data.X.data == b.data.X.data);
  REQUIRE(a.data.t == b.data.t);
  REQUIRE(a.data.y_f == b.data.y_f);
  REQUIRE(*a.data.y_cf == *b.data.y_cf);
  REQUIRE(a.truth.e0 == b.truth.e0);

  GenerateResult c = generate(spec, 100);
  REQUIRE(a.data.X.data != c.data.X.data);
}

TEST_CASE("generate with no propensity inputs gives e0 = 0.5 everywhere") {
  SyntheticSpec spec;
  spec.n_samples = 4000;
  spec.n_confounders = 0;
  spec.n_instrumental = 0;
  spec.n_adjustment = 10;
  spec.n_irrelevant = 5;
  GenerateResult result = generate(spec, 21);
  for (double e : result.truth.e0) REQUIRE(e == 0.5);
  double treated = static_cast<double>(result.data.treated_count());
  double n = static_cast<double>(spec.n_samples);
  // empirical treated fraction within 3 standard errors of 0.5
  REQUIRE(std::abs(treated / n - 0.5) <= 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("generate mean effect matches the analytic mean of tau") {
  // tau = 1 + beta.w + 0.5 sin(beta_s.w) with w centered normal, so
  // E[tau] = 1 exactly (linear and sine terms are odd in w).
  SyntheticSpec spec;
  spec.n_samples = 100000;
  spec.correlation_family = CorrelationFamily::Medium;
  GenerateResult result = generate(spec, 31);
  std::vector<double> ite(spec.n_samples);
  for (std::size_t i = 0; i < ite.size(); ++i)
    ite[i] = (*result.data.mu1)[i] - (*result.data.mu0)[i];
  const double got = oracles::mean(ite);
  const double mc_err = oracles::sample_sd(ite) / std::sqrt(static_cast<double>(ite.size()));
  REQUIRE(std::abs(got - 1.0) <= 4.0 * mc_err);
}

TEST_CASE("generate role structure: outcome from (C,A), propensity from (C,Z)") {
  SyntheticSpec spec;
  spec.n_samples = 50;
  spec.n_confounders = 3;
  spec.n_instrumental = 2;
  spec.n_irrelevant = 4;
  spec.n_adjustment = 5;
  GenerateResult result = generate(spec, 17);
  const SyntheticCoefficients& coef = result.coefficients;
  REQUIRE(coef.beta_tau.size() == 8);   // C + A
  REQUIRE(coef.beta_prop.size() == 5);  // C + Z

  // Recompute tau, g, e0 from the frozen coefficients using only the role
  // columns; irrelevant columns cannot enter.
  const Dataset& ds = result.data;
  const auto& roles = *ds.roles;
  REQUIRE(roles.size() == 14);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    std::vector<double> w, v;
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      if (roles[j] == VarRole::Confounder) {
        w.push_back(ds.X(i, j));
        v.push_back(ds.X(i, j));
      }
    }
    for (std::size_t j = 0; j < ds.dim(); ++j)
      if (roles[j] == VarRole::Instrumental) v.push_back(ds.X(i, j));
    for (std::size_t j = 0; j < ds.dim(); ++j)
      if (roles[j] == VarRole::Adjustment) w.push_back(ds.X(i, j));

    double dot_tau = 0.0, dot_sin = 0.0, dot_g = 0.0, dot_sq = 0.0, dot_e = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      dot_tau += coef.beta_tau[k] * w[k];
      dot_sin += coef.beta_sin[k] * w[k];
      dot_g += coef.beta_g[k] * w[k];
      dot_sq += coef.beta_sq[k] * w[k];
    }
    for (std::size_t k = 0; k < v.size(); ++k) dot_e += coef.beta_prop[k] * v[k];

    REQUIRE(result.truth.tau[i] ==
            Approx(1.0 + dot_tau + 0.5 * std::sin(dot_sin)).epsilon(1e-12));
    REQUIRE(result.truth.g_base[i] ==
            Approx(dot_g + 0.3 * dot_sq * dot_sq).epsilon(1e-12));
    REQUIRE(result.truth.e0[i] ==
            Approx(1.0 / (1.0 + std::exp(-coef.kappa * dot_e))).epsilon(1e-12));
  }
}

TEST_CASE("generate satisfies the factual/counterfactual mean structure") {
  SyntheticSpec spec;
  spec.n_samples = 600;
  spec.noise_sd = 0.5;
  GenerateResult result = generate(spec, 41);
  const Dataset& ds = result.data;
  // mu1 - mu0 = tau exactly; e0 respects the overlap window.
  for (std::size_t i = 0; i < ds.n(); ++i) {
    REQUIRE((*ds.mu1)[i] - (*ds.mu0)[i] == Approx(result.truth.tau[i]).epsilon(1e-12));
    REQUIRE(result.truth.e0[i] >= 0.05 - 1e-12);
    REQUIRE(result.truth.e0[i] <= 0.95 + 1e-12);
  }
  // y_f - mu_t is the noise; its spread matches noise_sd.
  std::vector<double> noise(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i)
    noise[i] = ds.y_f[i] - (ds.t[i] == 1 ? (*ds.mu1)[i] : (*ds.mu0)[i]);
  REQUIRE(oracles::mean(noise) == Approx(0.0).margin(0.1));
  REQUIRE(oracles::sample_sd(noise) == Approx(0.5).margin(0.06));
}

TEST_CASE("amplify_bias q=1 takes exactly the most extreme units") {
  SyntheticSpec spec;
  spec.n_samples = 300;
  GenerateResult pool = generate(spec, 51);
  BiasedSample sample = amplify_bias(pool.data, pool.truth, 1.0, 80, 7);
  REQUIRE(sample.indices.size() == 80);

  std::vector<std::size_t> order(spec.n_samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(pool.truth.e0[a] - 0.5) > std::abs(pool.truth.e0[b] - 0.5);
  });
  std::set<std::size_t> want(order.begin(), order.begin() + 80);
  std::set<std::size_t> got(sample.indices.begin(), sample.indices.end());
  REQUIRE(got == want);
}

TEST_CASE("amplify_bias q=0 is a uniform subsample without replacement") {
  SyntheticSpec spec;
  spec.n_samples = 200;
  GenerateResult pool = generate(spec, 61);
  BiasedSample sample = amplify_bias(pool.data, pool.truth, 0.0, 50, 13);
  REQUIRE(sample.indices.size() == 50);
  std::set<std::size_t> unique(sample.indices.begin(), sample.indices.end());
  REQUIRE(unique.size() == 50);  // without replacement
  // deterministic given the seed
  BiasedSample again = amplify_bias(pool.data, pool.truth, 0.0, 50, 13);
  REQUIRE(again.indices == sample.indices);
  // a different seed moves the draw
  BiasedSample other = amplify_bias(pool.data, pool.truth, 0.0, 50, 14);
  REQUIRE(other.indices != sample.indices);
  // rows carried over intact
  for (std::size_t k = 0; k < 50; ++k) {
    REQUIRE(sample.data.y_f[k] == pool.data.y_f[sample.indices[k]]);
    REQUIRE(sample.truth.e0[k] == pool.truth.e0[sample.indices[k]]);
  }
}

TEST_CASE("amplify_bias mean extremity is monotone in q") {
  SyntheticSpec spec;
  spec.n_samples = 400;
  GenerateResult pool = generate(spec, 71);
  const double qs[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  double last = -1.0;
  for (double q : qs) {
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      BiasedSample sample = amplify_bias(pool.data, pool.truth, q, 100, seed);
      for (double e : sample.truth.e0) acc += std::abs(e - 0.5);
    }
    acc /= 50.0 * 100.0;
    REQUIRE(acc >= last);
    last = acc;
  }
}

TEST_CASE("amplify_bias rejects target_n beyond the pool") {
  SyntheticSpec spec;
  spec.n_samples = 20;
  GenerateResult pool = generate(spec, 81);
  REQUIRE_THROWS_AS(amplify_bias(pool.data, pool.truth, 0.5, 21, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(amplify_bias(pool.data, pool.truth, 1.5, 10, 1),
                    std::invalid_argument);
}
