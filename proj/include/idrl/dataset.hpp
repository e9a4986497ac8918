#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "idrl/matrix.hpp"
#include "idrl/rng.hpp"

namespace idrl {

enum class VarRole { Confounder, Instrumental, Adjustment, Irrelevant };

inline std::string var_role_label(VarRole role) {
  switch (role) {
    case VarRole::Confounder: return "confounder";
    case VarRole::Instrumental: return "instrumental";
    case VarRole::Adjustment: return "adjustment";
    case VarRole::Irrelevant: return "irrelevant";
  }
  return "unknown";
}

inline VarRole var_role_from_label(const std::string& label) {
  if (label == "confounder") return VarRole::Confounder;
  if (label == "instrumental") return VarRole::Instrumental;
  if (label == "adjustment") return VarRole::Adjustment;
  if (label == "irrelevant") return VarRole::Irrelevant;
  throw std::invalid_argument("unknown variable role: " + label);
}

// Canonical observational dataset: covariates, binary treatment, factual
// outcome, plus optional counterfactual ground truth, noiseless potential
// outcome means, randomized-subset membership, and per-column role labels.
struct Dataset {
  Matrix X;
  std::vector<int> t;
  std::vector<double> y_f;
  std::optional<std::vector<double>> y_cf;
  std::optional<std::vector<double>> mu0;
  std::optional<std::vector<double>> mu1;
  std::optional<std::vector<int>> e_flag;
  std::optional<std::vector<VarRole>> roles;

  std::size_t n() const { return X.rows; }
  std::size_t dim() const { return X.cols; }

  bool has_ground_truth() const { return mu0.has_value() && mu1.has_value(); }

  std::vector<double> true_ite() const {
    if (!has_ground_truth())
      throw std::invalid_argument("true_ite: dataset has no mu0/mu1");
    std::vector<double> ite(n());
    for (std::size_t i = 0; i < ite.size(); ++i) ite[i] = (*mu1)[i] - (*mu0)[i];
    return ite;
  }

  std::size_t treated_count() const {
    std::size_t c = 0;
    for (int ti : t) c += static_cast<std::size_t>(ti);
    return c;
  }

  void validate() const {
    const std::size_t rows = n();
    auto check_len = [&](std::size_t len, const char* name) {
      if (len != rows)
        throw std::invalid_argument(std::string("dataset: ") + name +
                                    " length does not match X rows");
    };
    check_len(t.size(), "t");
    check_len(y_f.size(), "y_f");
    if (y_cf) check_len(y_cf->size(), "y_cf");
    if (mu0) check_len(mu0->size(), "mu0");
    if (mu1) check_len(mu1->size(), "mu1");
    if (e_flag) check_len(e_flag->size(), "e_flag");
    if (roles && roles->size() != dim())
      throw std::invalid_argument("dataset: roles length does not match X cols");
    for (int ti : t)
      if (ti != 0 && ti != 1)
        throw std::invalid_argument("dataset: t contains values other than 0/1");
    for (int ei : e_flag.value_or(std::vector<int>{}))
      if (ei != 0 && ei != 1)
        throw std::invalid_argument("dataset: e_flag contains values other than 0/1");
  }

  Dataset subset(const std::vector<std::size_t>& idx) const {
    Dataset out;
    out.X = Matrix(idx.size(), dim());
    out.t.resize(idx.size());
    out.y_f.resize(idx.size());
    auto pick = [&](const std::vector<double>& src) {
      std::vector<double> dst(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) dst[k] = src[idx[k]];
      return dst;
    };
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const std::size_t i = idx[k];
      for (std::size_t j = 0; j < dim(); ++j) out.X(k, j) = X(i, j);
      out.t[k] = t[i];
      out.y_f[k] = y_f[i];
    }
    if (y_cf) out.y_cf = pick(*y_cf);
    if (mu0) out.mu0 = pick(*mu0);
    if (mu1) out.mu1 = pick(*mu1);
    if (e_flag) {
      std::vector<int> e(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) e[k] = (*e_flag)[idx[k]];
      out.e_flag = std::move(e);
    }
    out.roles = roles;
    return out;
  }
};

// Row-wise concatenation; optional fields survive only if present in both.
inline Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("concat: column counts differ");
  Dataset out;
  out.X = Matrix(a.n() + b.n(), a.dim());
  std::copy(a.X.data.begin(), a.X.data.end(), out.X.data.begin());
  std::copy(b.X.data.begin(), b.X.data.end(), out.X.data.begin() + a.X.size());
  auto join = [](const std::vector<double>& u, const std::vector<double>& v) {
    std::vector<double> w(u);
    w.insert(w.end(), v.begin(), v.end());
    return w;
  };
  out.t = a.t;
  out.t.insert(out.t.end(), b.t.begin(), b.t.end());
  out.y_f = join(a.y_f, b.y_f);
  if (a.y_cf && b.y_cf) out.y_cf = join(*a.y_cf, *b.y_cf);
  if (a.mu0 && b.mu0) out.mu0 = join(*a.mu0, *b.mu0);
  if (a.mu1 && b.mu1) out.mu1 = join(*a.mu1, *b.mu1);
  if (a.e_flag && b.e_flag) {
    std::vector<int> e(a.e_flag->begin(), a.e_flag->end());
    e.insert(e.end(), b.e_flag->begin(), b.e_flag->end());
    out.e_flag = std::move(e);
  }
  out.roles = a.roles;
  return out;
}

struct SplitSpec {
  double train_fraction = 0.63;
  double valid_fraction = 0.27;
  double test_fraction = 0.10;
  std::uint64_t seed = 0;

  void validate() const {
    if (train_fraction <= 0 || valid_fraction <= 0 || test_fraction <= 0)
      throw std::invalid_argument("split: fractions must be positive");
    double sum = train_fraction + valid_fraction + test_fraction;
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("split: fractions must sum to 1");
  }
};

struct SplitResult {
  Dataset train, valid, test;
  std::vector<std::size_t> train_idx, valid_idx, test_idx;
};

namespace detail {

// Largest-remainder apportionment of `total` into shares proportional to
// `fractions`; deviates from the exact share by less than one unit.
inline std::vector<std::size_t> apportion(std::size_t total,
                                          const std::vector<double>& fractions) {
  std::vector<std::size_t> counts(fractions.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    double exact = static_cast<double>(total) * fractions[i];
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned)
    counts[remainders[k % remainders.size()].second] += 1;
  return counts;
}

}  // namespace detail

// Disjoint, exhaustive, treatment-stratified partition. Total split sizes
// follow largest-remainder rounding of the fractions; within each split the
// treated count stays within one unit of the overall treated share.
inline SplitResult split(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  ds.validate();
  const std::size_t n = ds.n();
  if (n < 10) throw std::invalid_argument("split: need at least 10 rows");

  std::vector<std::size_t> treated, control;
  for (std::size_t i = 0; i < n; ++i)
    (ds.t[i] == 1 ? treated : control).push_back(i);

  const std::vector<double> fractions{spec.train_fraction, spec.valid_fraction,
                                      spec.test_fraction};
  std::vector<std::size_t> sizes = detail::apportion(n, fractions);

  // Treated units per split: largest remainder of size_s * (n1/n), then
  // clamped so controls fit; both arms must stay nonempty everywhere.
  const double treated_share = static_cast<double>(treated.size()) / static_cast<double>(n);
  std::vector<std::size_t> treated_counts(3);
  {
    std::vector<double> shares(3);
    for (int s = 0; s < 3; ++s) shares[s] = static_cast<double>(sizes[s]) * treated_share;
    std::size_t assigned = 0;
    std::vector<std::pair<double, std::size_t>> remainders;
    for (int s = 0; s < 3; ++s) {
      treated_counts[s] = static_cast<std::size_t>(std::floor(shares[s]));
      assigned += treated_counts[s];
      remainders.emplace_back(shares[s] - std::floor(shares[s]), s);
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
              });
    for (std::size_t k = 0; assigned < treated.size() && k < 3; ++k) {
      treated_counts[remainders[k].second] += 1;
      ++assigned;
    }
    // Guard against pathological rounding.
    while (assigned > treated.size()) {
      for (int s = 2; s >= 0 && assigned > treated.size(); --s)
        if (treated_counts[s] > 0) { treated_counts[s] -= 1; --assigned; }
    }
  }
  for (int s = 0; s < 3; ++s) {
    if (treated_counts[s] == 0 || treated_counts[s] >= sizes[s])
      throw std::invalid_argument(
          "split: a split would have an empty treatment arm");
  }

  Rng rng(spec.seed);
  rng.shuffle(treated);
  rng.shuffle(control);

  SplitResult result;
  std::vector<std::vector<std::size_t>*> parts{&result.train_idx, &result.valid_idx,
                                               &result.test_idx};
  std::size_t t_off = 0, c_off = 0;
  for (int s = 0; s < 3; ++s) {
    const std::size_t nt = treated_counts[s];
    const std::size_t nc = sizes[s] - nt;
    if (nc > control.size() - c_off)
      throw std::invalid_argument("split: a split would have an empty treatment arm");
    parts[s]->insert(parts[s]->end(), treated.begin() + t_off, treated.begin() + t_off + nt);
    parts[s]->insert(parts[s]->end(), control.begin() + c_off, control.begin() + c_off + nc);
    std::sort(parts[s]->begin(), parts[s]->end());
    t_off += nt;
    c_off += nc;
  }

  result.train = ds.subset(result.train_idx);
  result.valid = ds.subset(result.valid_idx);
  result.test = ds.subset(result.test_idx);
  return result;
}

// Per-column affine map fitted on training covariates: mean 0, variance 1.
// Zero-variance columns pass through unchanged.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 for zero-variance columns

  std::size_t dim() const { return mean.size(); }

  static Scaler identity(std::size_t d) {
    Scaler s;
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    return s;
  }

  Matrix transform(const Matrix& x) const {
    if (x.cols != dim()) throw ConfigError("scaler: column count mismatch");
    Matrix out = x;
    for (std::size_t i = 0; i < out.rows; ++i)
      for (std::size_t j = 0; j < out.cols; ++j)
        out(i, j) = (out(i, j) - mean[j]) / scale[j];
    return out;
  }

  Matrix inverse(const Matrix& x) const {
    if (x.cols != dim()) throw ConfigError("scaler: column count mismatch");
    Matrix out = x;
    for (std::size_t i = 0; i < out.rows; ++i)
      for (std::size_t j = 0; j < out.cols; ++j)
        out(i, j) = out(i, j) * scale[j] + mean[j];
    return out;
  }
};

inline Scaler fit_scaler(const Matrix& x) {
  if (x.rows == 0) throw std::invalid_argument("fit_scaler: empty matrix");
  Scaler s;
  s.mean.assign(x.cols, 0.0);
  s.scale.assign(x.cols, 1.0);
  const double n = static_cast<double>(x.rows);
  for (std::size_t j = 0; j < x.cols; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) m += x(i, j);
    m /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      double d = x(i, j) - m;
      var += d * d;
    }
    var /= n;
    if (var > 0.0) {
      s.mean[j] = m;
      s.scale[j] = std::sqrt(var);
    }
    // zero-variance column: identity map
  }
  return s;
}

struct StandardizeResult {
  Scaler scaler;
  Dataset train;
  std::vector<Dataset> others;
};

// Fit on train covariates, apply the same affine map everywhere.
inline StandardizeResult standardize(const Dataset& train,
                                     const std::vector<const Dataset*>& others = {}) {
  StandardizeResult result;
  result.scaler = fit_scaler(train.X);
  result.train = train;
  result.train.X = result.scaler.transform(train.X);
  result.others.reserve(others.size());
  for (const Dataset* ds : others) {
    Dataset copy = *ds;
    copy.X = result.scaler.transform(ds->X);
    result.others.push_back(std::move(copy));
  }
  return result;
}

}  // namespace idrl
