#include <doctest.h>

#include "error.hpp"
#include "gradcheck.hpp"
#include "nn.hpp"
#include "optim.hpp"

using namespace stk;

TEST_CASE("sgd: p=1, g=1, lr=0.1 -> 0.9; zero gradient leaves parameters alone") {
  ParamSet params;
  params.add("p", Tensor::scalar(1.0));
  OptimizerState opt = OptimizerState::sgd(0.1);
  optimizer_step(opt, params, {Tensor::scalar(1.0)});
  CHECK(params.at("p").data[0] == doctest::Approx(0.9).epsilon(1e-15));

  optimizer_step(opt, params, {Tensor::scalar(0.0)});
  CHECK(params.at("p").data[0] == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  ParamSet params;
  params.add("p", Tensor::vector({0.25, -3.0}));
  OptimizerState opt = OptimizerState::adam(0.05);
  for (int i = 0; i < 3; ++i)
    optimizer_step(opt, params, {Tensor::vector({0.0, 0.0})});
  CHECK(params.at("p").data == std::vector<double>{0.25, -3.0});
}

TEST_CASE("adam trajectory on a quadratic matches the scripted oracle") {
  // f(p) = 0.5 * sum(p^2), grad = p; expected values simulated independently
  // step by step (lr 0.1, beta1 0.9, beta2 0.999, eps 1e-8).
  const double expected[10][2] = {
      {0.90000000099999999, -0.40000000199999997},
      {0.80041222971233816, -0.30118742373064034},
      {0.70158627450441502, -0.20487125573945109},
      {0.60393906268210795, -0.11291540243980777},
      {0.50796366192722098, -0.027814456530744422},
      {0.41423645920501484, 0.047431516293315767},
      {0.32342070867887096, 0.10978885920317655},
      {0.23626372875154017, 0.15694600639355333},
      {0.15358456473296608, 0.18795146043016228},
      {0.076249160619755327, 0.2033228230569068},
  };
  ParamSet params;
  params.add("p", Tensor::vector({1.0, -0.5}));
  OptimizerState opt = OptimizerState::adam(0.1);
  for (int t = 0; t < 10; ++t) {
    Tensor g = params.at("p");  // gradient of the quadratic is p itself
    optimizer_step(opt, params, {g});
    CHECK(params.at("p").data[0] == doctest::Approx(expected[t][0]).epsilon(1e-10));
    CHECK(params.at("p").data[1] == doctest::Approx(expected[t][1]).epsilon(1e-10));
  }
}

TEST_CASE("optimizer_step validates gradient shapes") {
  ParamSet params;
  params.add("p", Tensor::vector({1.0, 2.0}));
  OptimizerState opt = OptimizerState::sgd(0.1);
  CHECK_THROWS_AS(optimizer_step(opt, params, {Tensor::scalar(1.0)}), Error);
  CHECK_THROWS_AS(optimizer_step(opt, params, {}), Error);
}

TEST_CASE("grad_check: linear layer below 1e-6, lstm cell below 1e-4") {
  Rng rng(17);
  const Tensor w = init_uniform({3, 4}, 4, rng);
  const Tensor b = init_uniform({3}, 4, rng);
  const Tensor x = init_uniform({4}, 1, rng);
  const GradCheckResult linear =
      grad_check([&](Tape& t, const std::vector<Tape::NodeId>& p) {
        return t.mean(t.add(t.matmul(p[0], t.leaf(x)), p[1]));
      }, {w, b});
  CHECK(linear.max_rel_error < 1e-6);

  const LstmWeights cell = LstmWeights::init(3, 4, rng);
  const Tensor cx = init_uniform({3}, 1, rng);
  const GradCheckResult lstm =
      grad_check([&](Tape& t, const std::vector<Tape::NodeId>& p) {
        const LstmNodes nodes{p[0], p[1], p[2]};
        const auto h0 = t.leaf(Tensor::zeros({4}));
        const auto c0 = t.leaf(Tensor::zeros({4}));
        const auto step1 = lstm_step(t, nodes, t.leaf(cx), h0, c0);
        const auto step2 = lstm_step(t, nodes, t.leaf(cx), step1.h, step1.c);
        return t.mean(step2.h);
      }, {cell.w_x, cell.w_h, cell.bias});
  CHECK(lstm.max_rel_error < 1e-4);

  CHECK_THROWS_AS(grad_check([](Tape& t, const std::vector<Tape::NodeId>& p) {
                    return t.sum(p[0]);
                  }, {Tensor::scalar(1.0)}, 0.0),
                  Error);
}

TEST_CASE("lstm: graph step and plain forward agree") {
  Rng rng(23);
  const LstmWeights cell = LstmWeights::init(5, 6, rng);
  std::vector<double> x(5);
  for (double& v : x) v = rng.uniform(-1, 1);
  LstmState state{std::vector<double>(6, 0.1), std::vector<double>(6, -0.2)};

  const LstmState plain = lstm_forward(cell, x, state);

  Tape tape;
  const LstmNodes nodes{tape.leaf(cell.w_x), tape.leaf(cell.w_h), tape.leaf(cell.bias)};
  const auto got = lstm_step(tape, nodes, tape.leaf(Tensor::vector(x)),
                             tape.leaf(Tensor::vector(state.h)),
                             tape.leaf(Tensor::vector(state.c)));
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(tape.value(got.h).data[i] == doctest::Approx(plain.h[i]).epsilon(1e-14));
    CHECK(tape.value(got.c).data[i] == doctest::Approx(plain.c[i]).epsilon(1e-14));
  }
}
