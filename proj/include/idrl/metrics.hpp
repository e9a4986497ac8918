#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "idrl/dataset.hpp"
#include "idrl/errors.hpp"

namespace idrl {

struct MetricsReport {
  std::optional<double> sqrt_pehe;  // needs mu0/mu1 ground truth
  std::optional<double> eps_ate;
  std::optional<double> r_pol;    // needs a randomized subset (e flag)
  std::optional<double> eps_att;  // needs a randomized subset (e flag)
  double factual_rmse = 0.0;
  std::string split_label;  // "in_sample" or "out_sample"
  bool policy_cell_empty = false;
};

struct PeheResult {
  double eps_pehe = 0.0;
  double sqrt_pehe = 0.0;
};

// Mean squared difference between true and estimated unit-level effects.
inline PeheResult pehe(std::span<const double> ite_true,
                       std::span<const double> ite_pred) {
  if (ite_true.size() != ite_pred.size())
    throw std::invalid_argument("pehe: length mismatch");
  if (ite_true.empty()) throw std::invalid_argument("pehe: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < ite_true.size(); ++i) {
    double diff = ite_true[i] - ite_pred[i];
    acc += diff * diff;
  }
  PeheResult out;
  out.eps_pehe = acc / static_cast<double>(ite_true.size());
  out.sqrt_pehe = std::sqrt(out.eps_pehe);
  return out;
}

// |mean true effect - mean estimated effect|.
inline double ate_error(std::span<const double> ite_true,
                        std::span<const double> ite_pred) {
  if (ite_true.size() != ite_pred.size())
    throw std::invalid_argument("ate_error: length mismatch");
  if (ite_true.empty()) throw std::invalid_argument("ate_error: empty input");
  double mt = 0.0, mp = 0.0;
  for (std::size_t i = 0; i < ite_true.size(); ++i) {
    mt += ite_true[i];
    mp += ite_pred[i];
  }
  const double n = static_cast<double>(ite_true.size());
  return std::abs(mt / n - mp / n);
}

inline double rmse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size())
    throw std::invalid_argument("rmse: length mismatch");
  if (pred.empty()) throw std::invalid_argument("rmse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double d = pred[i] - target[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

struct PolicyRiskResult {
  double value = 0.0;
  bool treated_cell_empty = false;
  bool control_cell_empty = false;
};

// R_pol = 1 - [E(y1 | pi=1) P(pi=1) + E(y0 | pi=0) P(pi=0)], where pi(x)=1
// iff the estimated effect is positive. Evaluated on the randomized subset
// (e_flag = 1), where the conditional means are estimable from factual data:
// E(y1 | pi=1) from units with t=1 and pi=1, E(y0 | pi=0) from t=0 and pi=0.
// An empty cell contributes zero and is flagged.
inline PolicyRiskResult policy_risk(std::span<const double> y1_pred,
                                    std::span<const double> y0_pred,
                                    std::span<const double> y_f,
                                    std::span<const int> t,
                                    std::span<const int> e_flag) {
  const std::size_t n = y_f.size();
  if (y1_pred.size() != n || y0_pred.size() != n || t.size() != n ||
      e_flag.size() != n)
    throw std::invalid_argument("policy_risk: length mismatch");
  std::size_t n_e = 0, n_pi1 = 0;
  double sum_treat = 0.0, sum_ctrl = 0.0;
  std::size_t cnt_treat = 0, cnt_ctrl = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (e_flag[i] != 1) continue;
    ++n_e;
    const bool pi = y1_pred[i] - y0_pred[i] > 0.0;
    if (pi) ++n_pi1;
    if (pi && t[i] == 1) {
      sum_treat += y_f[i];
      ++cnt_treat;
    } else if (!pi && t[i] == 0) {
      sum_ctrl += y_f[i];
      ++cnt_ctrl;
    }
  }
  if (n_e == 0)
    throw UnsupportedMetricError("policy_risk: no randomized-subset units");
  const double p1 = static_cast<double>(n_pi1) / static_cast<double>(n_e);
  PolicyRiskResult out;
  double gain = 0.0;
  if (cnt_treat > 0)
    gain += (sum_treat / static_cast<double>(cnt_treat)) * p1;
  else if (n_pi1 > 0)
    out.treated_cell_empty = true;
  if (cnt_ctrl > 0)
    gain += (sum_ctrl / static_cast<double>(cnt_ctrl)) * (1.0 - p1);
  else if (n_pi1 < n_e)
    out.control_cell_empty = true;
  out.value = 1.0 - gain;
  return out;
}

// ATT = mean factual outcome over treated minus over control units inside
// the randomized subset; the error compares it with the mean predicted
// effect over the treated.
inline double att_error(std::span<const double> y1_pred,
                        std::span<const double> y0_pred,
                        std::span<const double> y_f, std::span<const int> t,
                        std::span<const int> e_flag) {
  const std::size_t n = y_f.size();
  if (y1_pred.size() != n || y0_pred.size() != n || t.size() != n ||
      e_flag.size() != n)
    throw std::invalid_argument("att_error: length mismatch");
  double sum_t = 0.0, sum_ce = 0.0, sum_effect = 0.0;
  std::size_t n_t = 0, n_ce = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (t[i] == 1) {
      sum_t += y_f[i];
      sum_effect += y1_pred[i] - y0_pred[i];
      ++n_t;
    } else if (e_flag[i] == 1) {
      sum_ce += y_f[i];
      ++n_ce;
    }
  }
  if (n_t == 0) throw UnsupportedMetricError("att_error: no treated units");
  if (n_ce == 0)
    throw UnsupportedMetricError("att_error: control-and-randomized cell empty");
  const double att = sum_t / static_cast<double>(n_t) -
                     sum_ce / static_cast<double>(n_ce);
  const double predicted = sum_effect / static_cast<double>(n_t);
  return std::abs(att - predicted);
}

struct KnnPrediction {
  std::vector<double> y0;
  std::vector<double> y1;
};

// Per arm, the mean factual outcome of the k nearest same-arm neighbors in
// (standardized) covariate space; ties broken by index for determinism.
inline KnnPrediction knn_estimator(const Dataset& train, const Matrix& query,
                                   std::size_t k) {
  if (k < 1) throw std::invalid_argument("knn: k must be >= 1");
  if (query.cols != train.dim())
    throw std::invalid_argument("knn: query dimension mismatch");
  std::vector<std::size_t> treated, control;
  for (std::size_t i = 0; i < train.n(); ++i)
    (train.t[i] == 1 ? treated : control).push_back(i);
  if (treated.size() < k || control.size() < k)
    throw std::invalid_argument("knn: an arm has fewer than k units");

  KnnPrediction out;
  out.y0.resize(query.rows);
  out.y1.resize(query.rows);
  std::vector<std::pair<double, std::size_t>> dist;
  auto arm_mean = [&](const std::vector<std::size_t>& arm,
                      std::span<const double> q) {
    dist.clear();
    dist.reserve(arm.size());
    for (std::size_t idx : arm) {
      double d2 = 0.0;
      std::span<const double> row = train.X.row(idx);
      for (std::size_t j = 0; j < q.size(); ++j) {
        double diff = q[j] - row[j];
        d2 += diff * diff;
      }
      dist.emplace_back(d2, idx);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += train.y_f[dist[j].second];
    return acc / static_cast<double>(k);
  };
  for (std::size_t i = 0; i < query.rows; ++i) {
    std::span<const double> q = query.row(i);
    out.y0[i] = arm_mean(control, q);
    out.y1[i] = arm_mean(treated, q);
  }
  return out;
}

}  // namespace idrl
