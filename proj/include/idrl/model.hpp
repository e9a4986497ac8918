#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "idrl/dataset.hpp"
#include "idrl/matrix.hpp"
#include "idrl/nn.hpp"
#include "idrl/rng.hpp"

namespace idrl {

struct IdrlConfig {
  std::vector<std::size_t> rep_layers{64, 64};  // hidden widths of the representation net
  std::size_t rep_dim = 32;
  std::vector<std::size_t> head_layers{32, 32};  // hidden widths of each outcome head
  std::vector<std::size_t> phi_layers{32};       // hidden widths of the domain net; last = dim(H)
  double alpha = 1.0;  // weight of the infomax term MI(r, s)
  double beta = 1.0;   // weight of the adversarial domain term MI(r, h)
  std::size_t epochs = 300;
  std::size_t batch_size = 0;  // 0 = full batch
  double learning_rate = 1e-3;
  double scorer_lr_scale = 5.0;  // bilinear scorers track the representation
  std::uint64_t seed = 0;
  bool disable_infomax = false;    // ablation: drop the MI(r, s) term
  bool disable_domain_mi = false;  // ablation: drop the MI(r, h) term
  bool freeze_domain_net = false;

  void validate() const {
    if (alpha < 0.0 || beta < 0.0)
      throw std::invalid_argument("config: loss weights must be nonnegative");
    if (rep_dim < 1) throw std::invalid_argument("config: rep_dim must be >= 1");
    if (phi_layers.empty())
      throw std::invalid_argument("config: domain net needs at least one hidden layer");
    for (std::size_t w : rep_layers)
      if (w == 0) throw std::invalid_argument("config: zero-width layer");
    for (std::size_t w : head_layers)
      if (w == 0) throw std::invalid_argument("config: zero-width layer");
    for (std::size_t w : phi_layers)
      if (w == 0) throw std::invalid_argument("config: zero-width layer");
    if (learning_rate <= 0.0)
      throw std::invalid_argument("config: learning rate must be positive");
    if (scorer_lr_scale <= 0.0)
      throw std::invalid_argument("config: scorer lr scale must be positive");
  }

  bool infomax_active() const { return !disable_infomax && alpha != 0.0; }
  bool domain_mi_active() const { return !disable_domain_mi && beta != 0.0; }
};

// All learnable state plus the fitted input/outcome scalers, so a serialized
// model predicts on raw data without the training pipeline.
struct IdrlParams {
  IdrlConfig config;
  Mlp rep_net;       // g : X -> R
  Mlp head_control;  // outcome head, t = 0
  Mlp head_treated;  // outcome head, t = 1
  Mlp domain_net;    // hidden layers produce H; final 1-unit layer scores t
  Matrix w_infomax;  // bilinear scorer over (r, s), rep_dim x rep_dim
  Matrix w_domain;   // bilinear scorer over (r, h), rep_dim x h_dim
  Scaler x_scaler;
  double y_mean = 0.0;
  double y_sd = 1.0;

  std::size_t input_dim() const { return rep_net.front().in_dim(); }
  std::size_t rep_dim() const { return rep_net.back().out_dim(); }
  std::size_t h_dim() const { return w_domain.cols; }
};

// Initialization order is fixed; every network draws from the same stream so
// that ablation switches cannot shift another component's weights.
inline IdrlParams init_params(const IdrlConfig& config, std::size_t input_dim, Rng& rng) {
  config.validate();
  IdrlParams p;
  p.config = config;
  p.rep_net = make_mlp(input_dim, config.rep_layers, config.rep_dim,
                       Activation::Relu, Activation::Identity, rng);
  p.head_control = make_mlp(config.rep_dim, config.head_layers, 1,
                            Activation::Relu, Activation::Identity, rng);
  p.head_treated = make_mlp(config.rep_dim, config.head_layers, 1,
                            Activation::Relu, Activation::Identity, rng);
  p.domain_net = make_mlp(input_dim, config.phi_layers, 1, Activation::Relu,
                          Activation::Identity, rng);
  const std::size_t dr = config.rep_dim;
  const std::size_t dh = config.phi_layers.back();
  p.w_infomax = Matrix(dr, dr);
  double limit_s = std::sqrt(6.0 / static_cast<double>(dr + dr));
  for (double& w : p.w_infomax.data) w = rng.uniform(-limit_s, limit_s);
  p.w_domain = Matrix(dr, dh);
  double limit_h = std::sqrt(6.0 / static_cast<double>(dr + dh));
  for (double& w : p.w_domain.data) w = rng.uniform(-limit_h, limit_h);
  p.x_scaler = Scaler::identity(input_dim);
  return p;
}

// R = g(X); expects standardized covariates.
inline Matrix represent(const IdrlParams& params, const Matrix& x) {
  return forward_mlp(params.rep_net, x);
}

// Global summary: sigmoid of the average of the two group means,
// s = sigma((1/2n_t) sum_treated r_i + (1/2n_c) sum_control r_i).
inline std::vector<double> summarize(const Matrix& r, const std::vector<int>& t) {
  if (r.rows != t.size())
    throw std::invalid_argument("summarize: row count mismatch");
  std::size_t n_t = 0, n_c = 0;
  for (int ti : t) (ti == 1 ? n_t : n_c) += 1;
  if (n_t == 0 || n_c == 0)
    throw std::invalid_argument("summarize: a treatment group is empty");
  std::vector<double> mean_t(r.cols, 0.0), mean_c(r.cols, 0.0);
  for (std::size_t i = 0; i < r.rows; ++i) {
    std::vector<double>& acc = (t[i] == 1 ? mean_t : mean_c);
    for (std::size_t j = 0; j < r.cols; ++j) acc[j] += r(i, j);
  }
  std::vector<double> s(r.cols);
  for (std::size_t j = 0; j < r.cols; ++j)
    s[j] = sigmoid(0.5 * (mean_t[j] / static_cast<double>(n_t) +
                          mean_c[j] / static_cast<double>(n_c)));
  return s;
}

// Negative samples: each column independently permuted, which preserves the
// per-column marginals but destroys cross-column and treatment structure.
inline Matrix negative_shuffle(const Matrix& x, Rng& rng) {
  if (x.rows < 2)
    throw std::invalid_argument("negative_shuffle: need at least 2 rows");
  Matrix out(x.rows, x.cols);
  for (std::size_t j = 0; j < x.cols; ++j) {
    std::vector<std::size_t> perm = rng.permutation(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out(i, j) = x(perm[i], j);
  }
  return out;
}

inline Matrix negative_shuffle(const Matrix& x, std::uint64_t seed) {
  Rng rng(seed);
  return negative_shuffle(x, rng);
}

struct DomainPrediction {
  Matrix h;                  // penultimate activation per unit
  std::vector<double> prob;  // sigmoid of the final unit
};

// H plus the treatment probability from the final sigmoid unit.
inline DomainPrediction predict_domain(const IdrlParams& params, const Matrix& x) {
  MlpTrace trace;
  Matrix logit = forward_mlp(params.domain_net, x, &trace);
  DomainPrediction out;
  out.h = trace.acts[params.domain_net.size() - 1];
  out.prob.resize(logit.rows);
  for (std::size_t i = 0; i < logit.rows; ++i) out.prob[i] = sigmoid(logit(i, 0));
  return out;
}

namespace detail {

inline double bilinear_score(const Matrix& w, std::span<const double> left,
                             std::span<const double> right) {
  if (left.size() != w.rows || right.size() != w.cols)
    throw ConfigError("bilinear score: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < w.rows; ++i) {
    double inner = 0.0;
    const double* row = w.data.data() + i * w.cols;
    for (std::size_t j = 0; j < w.cols; ++j) inner += row[j] * right[j];
    acc += left[i] * inner;
  }
  return acc;
}

}  // namespace detail

// d_s(r, s) = sigma(r^T W s), clamped away from 0/1.
inline double score_infomax(const IdrlParams& params, std::span<const double> r,
                            std::span<const double> s) {
  return clamp_prob(sigmoid(detail::bilinear_score(params.w_infomax, r, s)));
}

// d_h(r, h) = sigma(r^T W h), clamped away from 0/1.
inline double score_domain(const IdrlParams& params, std::span<const double> r,
                           std::span<const double> h) {
  return clamp_prob(sigmoid(detail::bilinear_score(params.w_domain, r, h)));
}

// (1/2n) (sum_i log d(r_i, s) + sum_j log(1 - d(r~_j, s))).  Higher is
// better; the training loop maximizes this estimate.
inline double infomax_loss(const IdrlParams& params, const Matrix& r,
                           const Matrix& r_neg, std::span<const double> s) {
  if (r.rows != r_neg.rows)
    throw std::invalid_argument("infomax_loss: positive/negative row mismatch");
  const double half_n = 2.0 * static_cast<double>(r.rows);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.rows; ++i)
    acc += std::log(score_infomax(params, r.row(i), s));
  for (std::size_t j = 0; j < r_neg.rows; ++j)
    acc += std::log(1.0 - score_infomax(params, r_neg.row(j), s));
  return acc / half_n;
}

// (1/2n) (sum_i log d(r_i, h_i) + sum_j log(1 - d(r_j, h~_j))).  The
// discriminator ascends this; the representation receives the reversed
// gradient so that R is pushed toward domain independence.
inline double domain_mi_loss(const IdrlParams& params, const Matrix& r,
                             const Matrix& h, const Matrix& h_neg) {
  if (r.rows != h.rows || r.rows != h_neg.rows)
    throw std::invalid_argument("domain_mi_loss: row count mismatch");
  const double half_n = 2.0 * static_cast<double>(r.rows);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.rows; ++i)
    acc += std::log(score_domain(params, r.row(i), h.row(i)));
  for (std::size_t j = 0; j < r.rows; ++j)
    acc += std::log(1.0 - score_domain(params, r.row(j), h_neg.row(j)));
  return acc / half_n;
}

struct OutcomePrediction {
  std::vector<double> y0;
  std::vector<double> y1;
  std::vector<double> y_f;  // per-unit factual pick
};

// Both heads on every unit, de-standardized with the stored outcome scaler.
inline OutcomePrediction predict_outcomes(const IdrlParams& params, const Matrix& r,
                                          const std::vector<int>& t) {
  if (r.rows != t.size())
    throw std::invalid_argument("predict_outcomes: row count mismatch");
  Matrix out0 = forward_mlp(params.head_control, r);
  Matrix out1 = forward_mlp(params.head_treated, r);
  OutcomePrediction pred;
  pred.y0.resize(r.rows);
  pred.y1.resize(r.rows);
  pred.y_f.resize(r.rows);
  for (std::size_t i = 0; i < r.rows; ++i) {
    pred.y0[i] = out0(i, 0) * params.y_sd + params.y_mean;
    pred.y1[i] = out1(i, 0) * params.y_sd + params.y_mean;
    pred.y_f[i] = t[i] == 1 ? pred.y1[i] : pred.y0[i];
  }
  return pred;
}

// Raw-covariate convenience: applies the stored input scaler first.
inline OutcomePrediction predict_dataset(const IdrlParams& params, const Dataset& ds) {
  Matrix x_std = params.x_scaler.transform(ds.X);
  Matrix r = represent(params, x_std);
  return predict_outcomes(params, r, ds.t);
}

struct EffectEstimate {
  std::vector<double> ite;
  double ate = 0.0;
};

inline EffectEstimate estimate_effects(const IdrlParams& params, const Dataset& ds) {
  OutcomePrediction pred = predict_dataset(params, ds);
  EffectEstimate est;
  est.ite.resize(pred.y0.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < est.ite.size(); ++i) {
    est.ite[i] = pred.y1[i] - pred.y0[i];
    sum += est.ite[i];
  }
  est.ate = est.ite.empty() ? 0.0 : sum / static_cast<double>(est.ite.size());
  return est;
}

struct StepLosses {
  double loss_y = 0.0;
  double loss_infomax = 0.0;
  double loss_domain_mi = 0.0;
  double loss_phi = 0.0;
};

struct StepGradients {
  MlpGrads rep;  // positive and negative paths summed
  MlpGrads head_control;
  MlpGrads head_treated;
  MlpGrads domain_net;
  Matrix d_w_infomax;
  Matrix d_w_domain;
  StepLosses losses;
};

// One evaluation of every loss and every analytic gradient at the current
// parameters.  Sign conventions, as minimized by the optimizer:
//   g, heads : L_Y - alpha * L_infomax + beta * L_domain_mi
//              (the + beta term is the gradient reversal: g reduces the
//               domain MI estimate while the discriminator tightens it)
//   W_s      : -alpha * L_infomax
//   W_h      : -beta  * L_domain_mi
//   phi      : its own cross-entropy on (X, t); the MI terms do not reach it
inline StepGradients evaluate_training_step(const IdrlParams& params,
                                            const Matrix& x,
                                            const std::vector<int>& t,
                                            const std::vector<double>& y_std,
                                            const Matrix* x_neg) {
  const IdrlConfig& cfg = params.config;
  const std::size_t n = x.rows;
  if (t.size() != n || y_std.size() != n)
    throw std::invalid_argument("training step: input lengths disagree");
  const bool use_infomax = cfg.infomax_active();
  const bool use_domain = cfg.domain_mi_active();
  if ((use_infomax || use_domain) && x_neg == nullptr)
    throw std::invalid_argument("training step: negative samples required");

  StepGradients out;

  // Forward passes.
  MlpTrace tr_rep;
  Matrix r = forward_mlp(params.rep_net, x, &tr_rep);
  MlpTrace tr_rep_neg;
  Matrix r_neg;
  if (use_infomax) r_neg = forward_mlp(params.rep_net, *x_neg, &tr_rep_neg);

  MlpTrace tr_phi;
  Matrix phi_logit = forward_mlp(params.domain_net, x, &tr_phi);
  const Matrix& h = tr_phi.acts[params.domain_net.size() - 1];
  Matrix h_neg;
  if (use_domain) {
    MlpTrace tr_phi_neg;
    forward_mlp(params.domain_net, *x_neg, &tr_phi_neg);
    h_neg = tr_phi_neg.acts[params.domain_net.size() - 1];
  }

  MlpTrace tr_h0, tr_h1;
  Matrix out0 = forward_mlp(params.head_control, r, &tr_h0);
  Matrix out1 = forward_mlp(params.head_treated, r, &tr_h1);

  // Factual loss on the standardized outcome scale.
  std::vector<double> y_hat(n);
  for (std::size_t i = 0; i < n; ++i)
    y_hat[i] = t[i] == 1 ? out1(i, 0) : out0(i, 0);
  ScalarLoss l_y = mse_loss(y_hat, y_std);
  out.losses.loss_y = l_y.value;

  Matrix d_r(r.rows, r.cols);

  // Outcome heads.
  {
    Matrix up0(n, 1), up1(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      up0(i, 0) = t[i] == 1 ? 0.0 : l_y.grad[i];
      up1(i, 0) = t[i] == 1 ? l_y.grad[i] : 0.0;
    }
    out.head_control = backward_mlp(params.head_control, tr_h0, up0);
    out.head_treated = backward_mlp(params.head_treated, tr_h1, up1);
    for (std::size_t i = 0; i < d_r.size(); ++i)
      d_r.data[i] = out.head_control.d_input.data[i] + out.head_treated.d_input.data[i];
  }

  const double half_n = 2.0 * static_cast<double>(n);
  Matrix d_r_neg;

  // Infomax term: scores sigma(r^T W s) for positives, sigma(r~^T W s) for
  // negatives, with s = sigmoid of the averaged group means of R.
  out.d_w_infomax = Matrix(params.w_infomax.rows, params.w_infomax.cols);
  if (use_infomax) {
    std::vector<double> s = summarize(r, t);
    std::vector<double> ws = matvec(params.w_infomax, s);  // W s
    std::vector<double> u = matvec(r, std::span<const double>(ws));
    std::vector<double> u_neg = matvec(r_neg, std::span<const double>(ws));

    double value = 0.0;
    std::vector<double> a(n), a_neg(n);
    for (std::size_t i = 0; i < n; ++i) {
      double su = sigmoid(u[i]);
      double p = clamp_prob(su);
      value += std::log(p);
      a[i] = su * (1.0 - su) / p / half_n;
    }
    for (std::size_t j = 0; j < n; ++j) {
      double su = sigmoid(u_neg[j]);
      double p = clamp_prob(su);
      value += std::log(1.0 - p);
      a_neg[j] = -su * (1.0 - su) / (1.0 - p) / half_n;
    }
    out.losses.loss_infomax = value / half_n;

    // w1 = R^T a + R~^T a~ collects every score's pull on W and on s.
    std::vector<double> w1(r.cols, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < r.cols; ++j) w1[j] += a[i] * r(i, j);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < r.cols; ++j) w1[j] += a_neg[i] * r_neg(i, j);

    // dL/dW = w1 s^T ; the optimizer minimizes -alpha * L.
    for (std::size_t i = 0; i < params.w_infomax.rows; ++i)
      for (std::size_t j = 0; j < params.w_infomax.cols; ++j)
        out.d_w_infomax(i, j) = -cfg.alpha * w1[i] * s[j];

    // Direct pull on each representation row.
    d_r_neg = Matrix(n, r.cols);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < r.cols; ++j) {
        d_r(i, j) += -cfg.alpha * a[i] * ws[j];
        d_r_neg(i, j) = -cfg.alpha * a_neg[i] * ws[j];
      }

    // Path through the summary: s = sigmoid(m), m the averaged group means.
    std::vector<double> d_s(r.cols, 0.0);
    for (std::size_t i = 0; i < params.w_infomax.rows; ++i)
      for (std::size_t j = 0; j < params.w_infomax.cols; ++j)
        d_s[j] += params.w_infomax(i, j) * w1[i];
    std::size_t n_t = 0;
    for (int ti : t) n_t += static_cast<std::size_t>(ti);
    const std::size_t n_c = n - n_t;
    std::vector<double> d_m(r.cols);
    for (std::size_t j = 0; j < r.cols; ++j)
      d_m[j] = d_s[j] * s[j] * (1.0 - s[j]);
    for (std::size_t i = 0; i < n; ++i) {
      const double w_i = t[i] == 1 ? 0.5 / static_cast<double>(n_t)
                                   : 0.5 / static_cast<double>(n_c);
      for (std::size_t j = 0; j < r.cols; ++j)
        d_r(i, j) += -cfg.alpha * d_m[j] * w_i;
    }
  }

  // Domain term: positives pair r_i with h_i, negatives pair the same r_j
  // with h~_j from the shuffled covariates.  phi itself is not updated by
  // this term.
  out.d_w_domain = Matrix(params.w_domain.rows, params.w_domain.cols);
  if (use_domain) {
    Matrix rw = matmul(r, params.w_domain);  // n x h_dim
    double value = 0.0;
    std::vector<double> b(n), b_neg(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v_pos = 0.0, v_neg = 0.0;
      for (std::size_t j = 0; j < rw.cols; ++j) {
        v_pos += rw(i, j) * h(i, j);
        v_neg += rw(i, j) * h_neg(i, j);
      }
      double su = sigmoid(v_pos);
      double p = clamp_prob(su);
      value += std::log(p);
      b[i] = su * (1.0 - su) / p / half_n;
      double su_n = sigmoid(v_neg);
      double p_n = clamp_prob(su_n);
      value += std::log(1.0 - p_n);
      b_neg[i] = -su_n * (1.0 - su_n) / (1.0 - p_n) / half_n;
    }
    out.losses.loss_domain_mi = value / half_n;

    // dL/dW = R^T (b .* H + b~ .* H~); minimized as -beta * L for W_h.
    Matrix scaled_h(n, h.cols);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < h.cols; ++j)
        scaled_h(i, j) = b[i] * h(i, j) + b_neg[i] * h_neg(i, j);
    Matrix dw = matmul_tn(r, scaled_h);
    for (std::size_t i = 0; i < dw.size(); ++i)
      out.d_w_domain.data[i] = -cfg.beta * dw.data[i];

    // Reversed gradient into the representation: g descends +beta * L.
    Matrix d_r_mih = matmul_nt(scaled_h, params.w_domain);  // n x rep_dim
    for (std::size_t i = 0; i < d_r.size(); ++i)
      d_r.data[i] += cfg.beta * d_r_mih.data[i];
  }

  // Representation backward, positive then negative path (shared weights).
  out.rep = backward_mlp(params.rep_net, tr_rep, d_r);
  if (use_infomax) {
    MlpGrads neg = backward_mlp(params.rep_net, tr_rep_neg, d_r_neg);
    for (std::size_t li = 0; li < out.rep.d_weight.size(); ++li) {
      for (std::size_t k = 0; k < out.rep.d_weight[li].size(); ++k)
        out.rep.d_weight[li].data[k] += neg.d_weight[li].data[k];
      for (std::size_t k = 0; k < out.rep.d_bias[li].size(); ++k)
        out.rep.d_bias[li][k] += neg.d_bias[li][k];
    }
  }

  // Domain net cross-entropy on (X, t).
  {
    double value = 0.0;
    Matrix d_logit(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      double su = sigmoid(phi_logit(i, 0));
      double p = clamp_prob(su);
      value += t[i] == 1 ? std::log(p) : std::log(1.0 - p);
      const bool clamped = su <= kProbClamp || su >= 1.0 - kProbClamp;
      d_logit(i, 0) = clamped ? 0.0 : (su - static_cast<double>(t[i])) / static_cast<double>(n);
    }
    out.losses.loss_phi = -value / static_cast<double>(n);
    out.domain_net = backward_mlp(params.domain_net, tr_phi, d_logit);
  }

  return out;
}

// The scalar minimized by the representation and outcome parameters; used by
// the finite-difference checks.
inline double model_objective(const IdrlParams& params, const Matrix& x,
                              const std::vector<int>& t,
                              const std::vector<double>& y_std,
                              const Matrix* x_neg) {
  const IdrlConfig& cfg = params.config;
  Matrix r = represent(params, x);
  Matrix out0 = forward_mlp(params.head_control, r);
  Matrix out1 = forward_mlp(params.head_treated, r);
  std::vector<double> y_hat(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i)
    y_hat[i] = t[i] == 1 ? out1(i, 0) : out0(i, 0);
  double objective = mse_loss(y_hat, y_std).value;
  if (cfg.infomax_active()) {
    Matrix r_neg = represent(params, *x_neg);
    std::vector<double> s = summarize(r, t);
    objective -= cfg.alpha * infomax_loss(params, r, r_neg, s);
  }
  if (cfg.domain_mi_active()) {
    DomainPrediction pos = predict_domain(params, x);
    DomainPrediction neg = predict_domain(params, *x_neg);
    objective += cfg.beta * domain_mi_loss(params, r, pos.h, neg.h);
  }
  return objective;
}

// Cross-entropy of the domain net's treatment probability; phi's own target.
inline double domain_objective(const IdrlParams& params, const Matrix& x,
                               const std::vector<int>& t) {
  DomainPrediction pred = predict_domain(params, x);
  double value = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    double p = clamp_prob(pred.prob[i]);
    value += t[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return -value / static_cast<double>(x.rows);
}

struct EpochLog {
  std::size_t epoch = 0;
  double loss_y = 0.0;
  double loss_infomax = 0.0;
  double loss_domain_mi = 0.0;
  double loss_phi = 0.0;
  double valid_rmse = 0.0;
};

struct FitResult {
  IdrlParams params;  // best validation factual RMSE
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_valid_rmse = std::numeric_limits<double>::infinity();
};

namespace detail {

inline std::vector<std::vector<double>*> main_param_arrays(IdrlParams& p) {
  std::vector<std::vector<double>*> arrays = mlp_param_arrays(p.rep_net);
  for (auto* a : mlp_param_arrays(p.head_control)) arrays.push_back(a);
  for (auto* a : mlp_param_arrays(p.head_treated)) arrays.push_back(a);
  return arrays;
}

inline std::vector<const std::vector<double>*> main_grad_arrays(const StepGradients& g) {
  std::vector<const std::vector<double>*> arrays = mlp_grad_arrays(g.rep);
  for (auto* a : mlp_grad_arrays(g.head_control)) arrays.push_back(a);
  for (auto* a : mlp_grad_arrays(g.head_treated)) arrays.push_back(a);
  return arrays;
}

// Deal the shuffled per-arm index lists proportionally across batches, so
// every batch sees both arms.
inline std::vector<std::vector<std::size_t>> stratified_batches(
    const std::vector<int>& t, std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> treated, control;
  for (std::size_t i = 0; i < t.size(); ++i)
    (t[i] == 1 ? treated : control).push_back(i);
  const std::size_t n_batches =
      (t.size() + batch_size - 1) / batch_size;
  if (treated.size() < n_batches || control.size() < n_batches)
    throw std::invalid_argument(
        "fit: batch size too small to keep both arms in every batch");
  rng.shuffle(treated);
  rng.shuffle(control);
  std::vector<std::vector<std::size_t>> batches(n_batches);
  auto deal = [&](const std::vector<std::size_t>& src) {
    for (std::size_t k = 0; k < n_batches; ++k) {
      const std::size_t lo = k * src.size() / n_batches;
      const std::size_t hi = (k + 1) * src.size() / n_batches;
      batches[k].insert(batches[k].end(), src.begin() + lo, src.begin() + hi);
    }
  };
  deal(treated);
  deal(control);
  return batches;
}

inline Matrix gather_rows(const Matrix& x, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), x.cols);
  for (std::size_t k = 0; k < idx.size(); ++k)
    for (std::size_t j = 0; j < x.cols; ++j) out(k, j) = x(idx[k], j);
  return out;
}

}  // namespace detail

// The training loop. Per epoch: fresh negatives, representations for both,
// domain predictions for both, the summary vector, discriminator scores, one
// optimizer step on the combined objective (reversal contract above), and a
// cross-entropy step for the domain net. Returns the best-validation
// parameters. Deterministic given config.seed.
inline FitResult fit(const IdrlConfig& config, const Dataset& train, const Dataset& valid) {
  config.validate();
  train.validate();
  valid.validate();
  const std::size_t n = train.n();
  if (n < 2) throw std::invalid_argument("fit: need at least 2 training rows");
  {
    std::size_t treated = train.treated_count();
    if (treated == 0 || treated == n)
      throw std::invalid_argument("fit: a treatment arm is empty");
  }
  if (valid.n() == 0) throw std::invalid_argument("fit: empty validation set");

  Rng init_rng(derive_seed(config.seed, 0));
  Rng shuffle_rng(derive_seed(config.seed, 1));
  Rng batch_rng(derive_seed(config.seed, 2));

  IdrlParams params = init_params(config, train.dim(), init_rng);
  params.x_scaler = fit_scaler(train.X);
  {
    double mean = 0.0;
    for (double y : train.y_f) mean += y;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double y : train.y_f) var += (y - mean) * (y - mean);
    var /= static_cast<double>(n);
    params.y_mean = mean;
    params.y_sd = var > 0.0 ? std::sqrt(var) : 1.0;
  }

  Matrix x_train = params.x_scaler.transform(train.X);
  Matrix x_valid = params.x_scaler.transform(valid.X);
  std::vector<double> y_std(n);
  for (std::size_t i = 0; i < n; ++i)
    y_std[i] = (train.y_f[i] - params.y_mean) / params.y_sd;

  AdamState adam_main;
  adam_main.cfg.lr = config.learning_rate;
  AdamState adam_phi;
  adam_phi.cfg.lr = config.learning_rate;
  AdamState adam_scorers;
  adam_scorers.cfg.lr = config.learning_rate * config.scorer_lr_scale;

  const bool need_negatives = config.infomax_active() || config.domain_mi_active();
  const bool full_batch = config.batch_size == 0 || config.batch_size >= n;

  FitResult result;
  result.log.reserve(config.epochs);

  auto run_step = [&](const Matrix& x, const std::vector<int>& t,
                      const std::vector<double>& y) -> StepLosses {
    Matrix x_neg;
    if (need_negatives) x_neg = negative_shuffle(x, shuffle_rng);
    StepGradients grads = evaluate_training_step(params, x, t, y,
                                                 need_negatives ? &x_neg : nullptr);
    const StepLosses& losses = grads.losses;
    if (!std::isfinite(losses.loss_y) || !std::isfinite(losses.loss_infomax) ||
        !std::isfinite(losses.loss_domain_mi) || !std::isfinite(losses.loss_phi))
      throw std::runtime_error("fit: non-finite loss");
    if (!config.freeze_domain_net) {
      auto phi_params = mlp_param_arrays(params.domain_net);
      auto phi_grads = mlp_grad_arrays(grads.domain_net);
      adam_step(phi_params, phi_grads, adam_phi);
    }
    auto main_params = detail::main_param_arrays(params);
    auto main_grads = detail::main_grad_arrays(grads);
    adam_step(main_params, main_grads, adam_main);
    adam_step({&params.w_infomax.data, &params.w_domain.data},
              {&grads.d_w_infomax.data, &grads.d_w_domain.data}, adam_scorers);
    return losses;
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochLog entry;
    entry.epoch = epoch;
    try {
      if (full_batch) {
        StepLosses losses = run_step(x_train, train.t, y_std);
        entry.loss_y = losses.loss_y;
        entry.loss_infomax = losses.loss_infomax;
        entry.loss_domain_mi = losses.loss_domain_mi;
        entry.loss_phi = losses.loss_phi;
      } else {
        auto batches = detail::stratified_batches(train.t, config.batch_size, batch_rng);
        double weight_sum = 0.0;
        for (const auto& batch : batches) {
          Matrix xb = detail::gather_rows(x_train, batch);
          std::vector<int> tb(batch.size());
          std::vector<double> yb(batch.size());
          for (std::size_t k = 0; k < batch.size(); ++k) {
            tb[k] = train.t[batch[k]];
            yb[k] = y_std[batch[k]];
          }
          StepLosses losses = run_step(xb, tb, yb);
          const double w = static_cast<double>(batch.size());
          entry.loss_y += w * losses.loss_y;
          entry.loss_infomax += w * losses.loss_infomax;
          entry.loss_domain_mi += w * losses.loss_domain_mi;
          entry.loss_phi += w * losses.loss_phi;
          weight_sum += w;
        }
        entry.loss_y /= weight_sum;
        entry.loss_infomax /= weight_sum;
        entry.loss_domain_mi /= weight_sum;
        entry.loss_phi /= weight_sum;
      }
    } catch (const std::runtime_error& err) {
      throw std::runtime_error(std::string(err.what()) + " at epoch " +
                               std::to_string(epoch));
    }

    // Validation factual RMSE on the raw outcome scale.
    {
      Matrix r_va = forward_mlp(params.rep_net, x_valid);
      Matrix out0 = forward_mlp(params.head_control, r_va);
      Matrix out1 = forward_mlp(params.head_treated, r_va);
      double sq = 0.0;
      for (std::size_t i = 0; i < valid.n(); ++i) {
        double pred_std = valid.t[i] == 1 ? out1(i, 0) : out0(i, 0);
        double pred = pred_std * params.y_sd + params.y_mean;
        double diff = pred - valid.y_f[i];
        sq += diff * diff;
      }
      entry.valid_rmse = std::sqrt(sq / static_cast<double>(valid.n()));
      if (!std::isfinite(entry.valid_rmse))
        throw std::runtime_error("fit: non-finite validation RMSE at epoch " +
                                 std::to_string(epoch));
    }

    if (entry.valid_rmse < result.best_valid_rmse) {
      result.best_valid_rmse = entry.valid_rmse;
      result.best_epoch = epoch;
      result.params = params;
    }
    result.log.push_back(entry);
  }

  if (!std::isfinite(result.best_valid_rmse)) result.params = params;
  return result;
}

}  // namespace idrl
