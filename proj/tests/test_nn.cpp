#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "idrl/nn.hpp"
#include "oracles.hpp"

using Catch::Approx;
using namespace idrl;

namespace {

Mlp fixed_two_layer_net() {
  // 4 -> 3 relu -> 2 identity with small fixed weights.
  Mlp net;
  DenseLayer l1;
  l1.weight = Matrix(4, 3);
  double w1[] = {0.1, -0.2, 0.3, 0.4, 0.0, -0.1, -0.3, 0.2, 0.1, 0.05, -0.15, 0.25};
  std::copy(std::begin(w1), std::end(w1), l1.weight.data.begin());
  l1.bias = {0.01, -0.02, 0.03};
  l1.activation = Activation::Relu;
  DenseLayer l2;
  l2.weight = Matrix(3, 2);
  double w2[] = {0.5, -0.4, 0.3, 0.2, -0.1, 0.6};
  std::copy(std::begin(w2), std::end(w2), l2.weight.data.begin());
  l2.bias = {-0.05, 0.15};
  l2.activation = Activation::Identity;
  net.push_back(std::move(l1));
  net.push_back(std::move(l2));
  return net;
}

Matrix fixed_input_3x4() {
  Matrix x(3, 4);
  double vals[] = {1.0, -0.5, 0.25, 2.0, -1.5, 0.75, 0.0, -0.25, 0.5, 1.25, -2.0, 0.1};
  std::copy(std::begin(vals), std::end(vals), x.data.begin());
  return x;
}

}  // namespace

TEST_CASE("forward_mlp identity layer passes input through") {
  Mlp net;
  DenseLayer layer;
  layer.weight = Matrix::identity(3);
  layer.bias = {0.0, 0.0, 0.0};
  layer.activation = Activation::Identity;
  net.push_back(layer);

  Matrix x(2, 3);
  x.data = {1.0, 2.0, 3.0, -4.0, 5.0, -6.0};
  Matrix y = forward_mlp(net, x);
  REQUIRE(y.rows == 2);
  REQUIRE(y.cols == 3);
  for (std::size_t i = 0; i < y.size(); ++i) REQUIRE(y.data[i] == x.data[i]);
}

TEST_CASE("forward_mlp zero sigmoid layer gives 0.5 everywhere") {
  Mlp net;
  DenseLayer layer;
  layer.weight = Matrix(5, 4);
  layer.bias = std::vector<double>(4, 0.0);
  layer.activation = Activation::Sigmoid;
  net.push_back(layer);

  Rng rng(7);
  Matrix x(6, 5);
  for (double& v : x.data) v = rng.normal();
  Matrix y = forward_mlp(net, x);
  for (double v : y.data) REQUIRE(v == Approx(0.5));
}

TEST_CASE("forward_mlp matches straight-line scalar evaluation") {
  Mlp net = fixed_two_layer_net();
  Matrix x = fixed_input_3x4();
  Matrix got = forward_mlp(net, x);
  Matrix want = oracles::scalar_forward(net, x);
  REQUIRE(got.rows == want.rows);
  REQUIRE(got.cols == want.cols);
  for (std::size_t i = 0; i < got.size(); ++i)
    REQUIRE(got.data[i] == Approx(want.data[i]).epsilon(1e-12));
}

TEST_CASE("forward_mlp rejects dimension mismatch") {
  Mlp net = fixed_two_layer_net();
  Matrix x(3, 5);
  REQUIRE_THROWS_AS(forward_mlp(net, x), ConfigError);
}

TEST_CASE("forward_mlp sigmoid output stays in (0,1) and finite") {
  Rng rng(11);
  Mlp net = make_mlp(6, {8, 8}, 3, Activation::Relu, Activation::Sigmoid, rng);
  Matrix x(20, 6);
  for (double& v : x.data) v = rng.normal(0.0, 5.0);
  Matrix y = forward_mlp(net, x);
  for (double v : y.data) {
    REQUIRE(std::isfinite(v));
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
  }
}

TEST_CASE("backward_mlp identity layer weight gradient is X^T * ones") {
  Mlp net;
  DenseLayer layer;
  layer.weight = Matrix::identity(3);
  layer.bias = {0.0, 0.0, 0.0};
  layer.activation = Activation::Identity;
  net.push_back(layer);

  Matrix x(4, 3);
  Rng rng(3);
  for (double& v : x.data) v = rng.normal();
  MlpTrace trace;
  forward_mlp(net, x, &trace);
  Matrix upstream(4, 3, 1.0);
  MlpGrads grads = backward_mlp(net, trace, upstream);

  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double want = 0.0;
      for (std::size_t r = 0; r < 4; ++r) want += x(r, i);
      REQUIRE(grads.d_weight[0](i, j) == Approx(want).epsilon(1e-12));
    }
  for (double b : grads.d_bias[0]) REQUIRE(b == Approx(4.0));
}

TEST_CASE("backward_mlp zero upstream gives zero gradients") {
  Mlp net = fixed_two_layer_net();
  Matrix x = fixed_input_3x4();
  MlpTrace trace;
  forward_mlp(net, x, &trace);
  Matrix upstream(3, 2, 0.0);
  MlpGrads grads = backward_mlp(net, trace, upstream);
  for (const Matrix& dw : grads.d_weight)
    for (double v : dw.data) REQUIRE(v == 0.0);
  for (const auto& db : grads.d_bias)
    for (double v : db) REQUIRE(v == 0.0);
  for (double v : grads.d_input.data) REQUIRE(v == 0.0);
}

TEST_CASE("backward_mlp matches central finite differences") {
  Rng rng(42);
  Mlp net = make_mlp(4, {5}, 2, Activation::Relu, Activation::Identity, rng);
  Matrix x(6, 4);
  for (double& v : x.data) v = rng.normal();
  Matrix target(6, 2);
  for (double& v : target.data) v = rng.normal();

  // Loss: 0.5 * sum of squared outputs minus target, a generic upstream.
  auto objective = [&]() {
    Matrix y = forward_mlp(net, x);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      double d = y.data[i] - target.data[i];
      acc += 0.5 * d * d;
    }
    return acc;
  };

  MlpTrace trace;
  Matrix y = forward_mlp(net, x, &trace);
  Matrix upstream(y.rows, y.cols);
  for (std::size_t i = 0; i < y.size(); ++i)
    upstream.data[i] = y.data[i] - target.data[i];
  MlpGrads grads = backward_mlp(net, trace, upstream);

  auto params = mlp_param_arrays(net);
  auto numeric = oracles::finite_difference(params, objective, 1e-5);
  auto analytic = mlp_grad_arrays(grads);
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double err = oracles::max_relative_error(*analytic[p], numeric[p]);
    INFO("parameter array " << p);
    REQUIRE(err <= 1e-4);
  }

  // Input gradient as well.
  std::vector<std::vector<double>*> input_only{&x.data};
  auto numeric_input = oracles::finite_difference(input_only, objective, 1e-5);
  REQUIRE(oracles::max_relative_error(grads.d_input.data, numeric_input[0]) <= 1e-4);
}

TEST_CASE("gradient check across the layer shapes used by the model") {
  // relu chain into identity, relu into sigmoid, single linear layer.
  struct Case {
    std::vector<std::size_t> hidden;
    Activation out_act;
  };
  const Case cases[] = {{{8, 8}, Activation::Identity},
                        {{8}, Activation::Sigmoid},
                        {{}, Activation::Identity}};
  int case_id = 0;
  for (const Case& c : cases) {
    Rng rng(100 + case_id);
    Mlp net = make_mlp(5, c.hidden, 3, Activation::Relu, c.out_act, rng);
    Matrix x(7, 5);
    for (double& v : x.data) v = rng.normal();
    auto objective = [&]() {
      Matrix y = forward_mlp(net, x);
      double acc = 0.0;
      for (double v : y.data) acc += std::sin(v);  // generic smooth upstream
      return acc;
    };
    MlpTrace trace;
    Matrix y = forward_mlp(net, x, &trace);
    Matrix upstream(y.rows, y.cols);
    for (std::size_t i = 0; i < y.size(); ++i)
      upstream.data[i] = std::cos(y.data[i]);
    MlpGrads grads = backward_mlp(net, trace, upstream);
    auto params = mlp_param_arrays(net);
    auto numeric = oracles::finite_difference(params, objective, 1e-5);
    auto analytic = mlp_grad_arrays(grads);
    for (std::size_t p = 0; p < params.size(); ++p) {
      INFO("case " << case_id << " parameter " << p);
      REQUIRE(oracles::max_relative_error(*analytic[p], numeric[p]) <= 1e-4);
    }
    ++case_id;
  }
}

TEST_CASE("mse_loss closed forms") {
  std::vector<double> a{1.0, 3.0};
  std::vector<double> b{1.0, 1.0};
  ScalarLoss same = mse_loss(a, a);
  REQUIRE(same.value == 0.0);
  ScalarLoss loss = mse_loss(a, b);
  REQUIRE(loss.value == Approx(2.0));
  REQUIRE_THROWS_AS(mse_loss(std::vector<double>{}, std::vector<double>{}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(mse_loss(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("mse_loss gradient matches finite differences") {
  Rng rng(5);
  std::vector<double> pred(9), target(9);
  for (double& v : pred) v = rng.normal();
  for (double& v : target) v = rng.normal();
  ScalarLoss loss = mse_loss(pred, target);
  std::vector<std::vector<double>*> params{&pred};
  auto numeric = oracles::finite_difference(
      params, [&]() { return mse_loss(pred, target).value; }, 1e-6);
  REQUIRE(oracles::max_relative_error(loss.grad, numeric[0]) <= 1e-4);
}

TEST_CASE("bce_terms closed forms and scalar oracle") {
  std::vector<double> half(4, 0.5);
  REQUIRE(bce_terms(half, true).value == Approx(std::log(0.5)));
  REQUIRE(bce_terms(half, false).value == Approx(std::log(0.5)));

  std::vector<double> mixed{0.1, 0.7, 0.99, 0.42, 0.5};
  double want_pos = 0.0, want_neg = 0.0;
  for (double p : mixed) {
    want_pos += std::log(p) / 5.0;
    want_neg += std::log(1.0 - p) / 5.0;
  }
  REQUIRE(bce_terms(mixed, true).value == Approx(want_pos).epsilon(1e-12));
  REQUIRE(bce_terms(mixed, false).value == Approx(want_neg).epsilon(1e-12));

  // Boundary values are absorbed by clamping, no error.
  std::vector<double> extreme{0.0, 1.0};
  REQUIRE(std::isfinite(bce_terms(extreme, true).value));
  REQUIRE(std::isfinite(bce_terms(extreme, false).value));

  auto numeric = oracles::finite_difference(
      {&mixed}, [&]() { return bce_terms(mixed, true).value; }, 1e-7);
  REQUIRE(oracles::max_relative_error(bce_terms(mixed, true).grad, numeric[0]) <= 1e-4);
}

TEST_CASE("adam_step zero gradient leaves parameters unchanged") {
  std::vector<double> param{1.0, -2.0, 3.0};
  std::vector<double> grad{0.0, 0.0, 0.0};
  AdamState state;
  adam_step({&param}, {&grad}, state);
  REQUIRE(param == std::vector<double>{1.0, -2.0, 3.0});
}

TEST_CASE("adam_step single step matches hand computation") {
  // From zeroed state: m_hat = g, v_hat = g^2, so the update is
  // lr * g / (|g| + eps).
  std::vector<double> param{0.5, -1.5};
  std::vector<double> grad{0.2, -0.4};
  AdamState state;
  state.cfg.lr = 1e-3;
  adam_step({&param}, {&grad}, state);
  const double eps = state.cfg.epsilon;
  REQUIRE(param[0] == Approx(0.5 - 1e-3 * 0.2 / (std::abs(0.2) + eps)).epsilon(1e-12));
  REQUIRE(param[1] == Approx(-1.5 - 1e-3 * -0.4 / (std::abs(0.4) + eps)).epsilon(1e-12));
  REQUIRE(state.step == 1);
}

TEST_CASE("adam_step is deterministic across runs") {
  auto run = []() {
    std::vector<double> param{0.1, 0.2, 0.3};
    std::vector<double> grad{0.05, -0.02, 0.4};
    AdamState state;
    adam_step({&param}, {&grad}, state);
    adam_step({&param}, {&grad}, state);
    return param;
  };
  auto a = run();
  auto b = run();
  REQUIRE(a == b);
}

TEST_CASE("glorot initialization stays within the stated bound") {
  Rng rng(19);
  DenseLayer layer = make_dense(30, 50, Activation::Relu, rng);
  const double limit = std::sqrt(6.0 / 80.0);
  for (double w : layer.weight.data) {
    REQUIRE(w <= limit);
    REQUIRE(w >= -limit);
  }
  for (double b : layer.bias) REQUIRE(b == 0.0);
}
