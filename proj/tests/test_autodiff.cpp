#include <doctest.h>

#include <cmath>
#include <functional>

#include "error.hpp"
#include "gradcheck.hpp"
#include "rng.hpp"
#include "tape.hpp"

using namespace stk;

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double scale = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.data) v = rng.uniform(-scale, scale);
  return t;
}

// Scalarizes an arbitrary output with fixed random weights so that every
// output entry influences the loss.
Tape::NodeId weighted_sum(Tape& tape, Tape::NodeId x, Rng& rng) {
  Tensor w = random_tensor(rng, tape.value(x).shape);
  return tape.sum(tape.mul(x, tape.leaf(w)));
}

}  // namespace

TEST_CASE("forward basics: matmul identity, concat shape, conv impulse response") {
  Tape tape;
  Tensor eye = Tensor::zeros({3, 3});
  for (int i = 0; i < 3; ++i) eye.data[i * 3 + i] = 1.0;
  Tensor a = Tensor::zeros({3, 2});
  for (std::size_t i = 0; i < 6; ++i) a.data[i] = static_cast<double>(i) + 1.0;
  const auto prod = tape.matmul(tape.leaf(eye), tape.leaf(a));
  CHECK(tape.value(prod).data == a.data);

  const auto cat = tape.concat({tape.leaf(Tensor::vector({1, 2})),
                                tape.leaf(Tensor::vector({3, 4, 5}))});
  CHECK(tape.value(cat).shape == std::vector<std::size_t>{5});
  CHECK(tape.value(cat).data == std::vector<double>{1, 2, 3, 4, 5});

  // Delta impulse: convolution reproduces the (flipped-index-free) kernel
  // around the impulse location.
  Tensor x = Tensor::zeros({1, 5, 5});
  x.at3(0, 2, 2) = 1.0;
  Rng rng(1);
  Tensor k = random_tensor(rng, {1, 1, 3, 3});
  const auto y = tape.conv2d(tape.leaf(x), tape.leaf(k), Tape::kNoBias, 1, 1);
  const Tensor& out = tape.value(y);
  REQUIRE(out.shape == std::vector<std::size_t>{1, 5, 5});
  // out(oy,ox) = sum_k x(oy+ky-1, ox+kx-1) k(ky,kx); a delta at (2,2) demands
  // ky = 3-oy, kx = 3-ox.
  for (std::size_t oy = 0; oy < 5; ++oy)
    for (std::size_t ox = 0; ox < 5; ++ox) {
      const long long ky = 3 - static_cast<long long>(oy);
      const long long kx = 3 - static_cast<long long>(ox);
      double expect = 0.0;
      if (ky >= 0 && ky < 3 && kx >= 0 && kx < 3)
        expect = k.data[static_cast<std::size_t>(ky * 3 + kx)];
      CHECK(out.at3(0, oy, ox) == doctest::Approx(expect).epsilon(1e-15));
    }
}

TEST_CASE("backward basics: sum -> ones, mse(x,x) -> zeros, unreached leaves -> zeros") {
  Tape tape;
  const auto x = tape.leaf(Tensor::vector({1.0, 2.0, 3.0}), true);
  const auto unused = tape.leaf(Tensor::vector({4.0, 5.0}), true);
  const auto loss = tape.sum(x);
  tape.backward(loss);
  CHECK(tape.grad(x).data == std::vector<double>{1.0, 1.0, 1.0});
  CHECK(tape.grad(unused).data == std::vector<double>{0.0, 0.0});

  Tape tape2;
  const auto y = tape2.leaf(Tensor::vector({0.5, -0.25}), true);
  const auto mse = tape2.mse_loss(y, y);
  CHECK(tape2.value(mse).data[0] == 0.0);
  tape2.backward(mse);
  CHECK(tape2.grad(y).data == std::vector<double>{0.0, 0.0});
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  const auto x = tape.leaf(Tensor::vector({1.0, 2.0}), true);
  CHECK_THROWS_AS(tape.backward(x), Error);
}

TEST_CASE("shape mismatches name the op and the shapes") {
  Tape tape;
  const auto a = tape.leaf(Tensor::vector({1.0, 2.0}));
  const auto b = tape.leaf(Tensor::vector({1.0, 2.0, 3.0}));
  CHECK_THROWS_WITH_AS(tape.add(a, b), doctest::Contains("add"), Error);
  CHECK_THROWS_WITH_AS(tape.matmul(a, b), doctest::Contains("matmul"), Error);
}

TEST_CASE("numeric guard: first non-finite value raises a structured error") {
  Tape tape;
  const auto x = tape.leaf(Tensor::scalar(1e308));
  CHECK_THROWS_WITH_AS(tape.scale(tape.scale(x, 10.0), 10.0),
                       doctest::Contains("non-finite"), Error);
  Tensor nan_leaf = Tensor::scalar(std::nan(""));
  CHECK_THROWS_AS(tape.leaf(nan_leaf), Error);
}

TEST_CASE("losses: cross entropy of uniform logits is ln 3; matches LSE oracle") {
  Tape tape;
  const auto logits = tape.leaf(Tensor::vector({0.7, 0.7, 0.7}));
  const auto onehot = tape.leaf(Tensor::vector({0.0, 1.0, 0.0}));
  CHECK(tape.value(tape.cross_entropy_loss(logits, onehot)).data[0] ==
        doctest::Approx(std::log(3.0)).epsilon(1e-14));

  Rng rng(12);
  for (int it = 0; it < 50; ++it) {
    const std::size_t rows = 1 + rng.below(4), cols = 2 + rng.below(5);
    Tensor l = random_tensor(rng, {rows, cols}, 4.0);
    Tensor h = Tensor::zeros({rows, cols});
    for (std::size_t r = 0; r < rows; ++r) h.at2(r, rng.below(cols)) = 1.0;

    double expect = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      double mx = -1e300, lse = 0.0, picked = 0.0;
      for (std::size_t c = 0; c < cols; ++c) mx = std::max(mx, l.at2(r, c));
      for (std::size_t c = 0; c < cols; ++c) lse += std::exp(l.at2(r, c) - mx);
      for (std::size_t c = 0; c < cols; ++c)
        if (h.at2(r, c) == 1.0) picked = l.at2(r, c);
      expect += mx + std::log(lse) - picked;
    }
    expect /= static_cast<double>(rows);

    Tape t2;
    const auto got = t2.cross_entropy_loss(t2.leaf(l), t2.leaf(h));
    CHECK(t2.value(got).data[0] == doctest::Approx(expect).epsilon(1e-10));
  }

  Tape t3;
  const auto bad = t3.leaf(Tensor::vector({0.5, 0.5, 0.0}));
  const auto lg = t3.leaf(Tensor::vector({0.0, 0.0, 0.0}));
  CHECK_THROWS_AS(t3.cross_entropy_loss(lg, bad), Error);
}

TEST_CASE("every primitive passes finite-difference gradient checks") {
  Rng rng(99);
  auto check = [&](const char* name, const std::vector<Tensor>& params,
                   const GraphBuilder& build, double tol = 1e-4) {
    const GradCheckResult r = grad_check(build, params);
    INFO(name);
    CHECK(r.max_rel_error < tol);
  };

  for (int round = 0; round < 3; ++round) {
    const std::size_t n = 2 + rng.below(5);
    const Tensor a = random_tensor(rng, {n});
    const Tensor b = random_tensor(rng, {n});
    Rng wrng(1000 + round);

    check("add", {a, b}, [&](Tape& t, const std::vector<Tape::NodeId>& p) {
      Rng r(1000 + round);
      return weighted_sum(t, t.add(p[0], p[1]), r);
    });
    check("sub", {a, b}, [&](Tape& t, const std::vector<Tape::NodeId>& p) {
      Rng r(1001 + round);
      return weighted_sum(t, t.sub(p[0], p[1]), r);
    });
    check("mul", {a, b}, [&](Tape& t, const std::vector<Tape::NodeId>& p) {
      Rng r(1002 + round);
      return weighted_sum(t, t.mul(p[0], p[1]), r);
    });
    check("scale/add_scalar", {a}, [&](Tape& t, const std::vector<Tape::NodeId>& p) {
      Rng r(1003 + round);
      return weighted_sum(t, t.add_scalar(t.scale(p[0], -1.7), 0.3), r);
    });
    check("sigmoid", {a}, [&](Tape& t, const std::vector<Tape::NodeId>& p) {
      Rng r(1004 + round);
      return weighted_sum(t, t.sigmoid(p[0]), r);
    });
    check("tanh", {a}, [&](Tape& t, const std::vector<Tape::NodeId>& p) {
      Rng r(1005 + round);
      return weighted_sum(t, t.tanh(p[0]), r);
    });
    check("relu", {a}, [&](Tape& t, const std::vector<Tape::NodeId>& p) {
      Rng r(1006 + round);
      return weighted_sum(t, t.relu(p[0]), r);
    });
    check("softmax", {a}, [&](Tape& t, const std::vector<Tape::NodeId>& p) {
      Rng r(1007 + round);
      return weighted_sum(t, t.softmax(p[0]), r);
    });
    check("l2_normalize", {a}, [&](Tape& t, const std::vector<Tape::NodeId>& p) {
      Rng r(1008 + round);
      return weighted_sum(t, t.l2_normalize(p[0]), r);
    });
    check("concat+slice", {a, b}, [&](Tape& t, const std::vector<Tape::NodeId>& p) {
      Rng r(1009 + round);
      const auto cat = t.concat({p[0], p[1]});
      return weighted_sum(t, t.slice(cat, 1, 2 * n - 2), r);
    });
    check("mean", {a}, [&](Tape& t, const std::vector<Tape::NodeId>& p) {
      return t.mean(p[0]);
    });
    check("mse", {a, b}, [&](Tape& t, const std::vector<Tape::NodeId>& p) {
      return t.mse_loss(p[0], p[1]);
    });

    const std::size_t m = 2 + rng.below(3), k = 2 + rng.below(3), q = 2 + rng.below(3);
    const Tensor mat_a = random_tensor(rng, {m, k});
    const Tensor mat_b = random_tensor(rng, {k, q});
    const Tensor vec = random_tensor(rng, {k});
    check("matmul mat-mat", {mat_a, mat_b},
          [&](Tape& t, const std::vector<Tape::NodeId>& p) {
            Rng r(1010 + round);
            return weighted_sum(t, t.matmul(p[0], p[1]), r);
          });
    check("matmul mat-vec", {mat_a, vec},
          [&](Tape& t, const std::vector<Tape::NodeId>& p) {
            Rng r(1011 + round);
            return weighted_sum(t, t.matmul(p[0], p[1]), r);
          });

    const Tensor img = random_tensor(rng, {2, 6, 6});
    const Tensor kern = random_tensor(rng, {3, 2, 3, 3});
    const Tensor bias = random_tensor(rng, {3});
    check("conv2d+pool", {img, kern, bias},
          [&](Tape& t, const std::vector<Tape::NodeId>& p) {
            Rng r(1012 + round);
            const auto conv = t.conv2d(p[0], p[1], p[2], 1, 1);
            return weighted_sum(t, t.max_pool2d(conv, 2), r);
          });
    check("global_max_pool", {img}, [&](Tape& t, const std::vector<Tape::NodeId>& p) {
      Rng r(1013 + round);
      return weighted_sum(t, t.global_max_pool(p[0]), r);
    });

    const Tensor logits = random_tensor(rng, {3, 4}, 2.0);
    Tensor onehot = Tensor::zeros({3, 4});
    for (std::size_t r = 0; r < 3; ++r) onehot.at2(r, rng.below(4)) = 1.0;
    check("cross_entropy", {logits}, [&](Tape& t, const std::vector<Tape::NodeId>& p) {
      return t.cross_entropy_loss(p[0], t.leaf(onehot));
    });
  }
}

TEST_CASE("tape evaluation is deterministic") {
  auto run = [](std::vector<double>* values, std::vector<double>* grads) {
    Rng rng(31337);
    Tape tape;
    const auto w = tape.leaf(random_tensor(rng, {4, 4}), true);
    const auto x = tape.leaf(random_tensor(rng, {4}), true);
    const auto h = tape.tanh(tape.matmul(w, x));
    const auto loss = tape.mean(tape.mul(h, h));
    tape.backward(loss);
    *values = tape.value(loss).data;
    *grads = tape.grad(w).data;
  };
  std::vector<double> v1, g1, v2, g2;
  run(&v1, &g1);
  run(&v2, &g2);
  CHECK(v1 == v2);
  CHECK(g1 == g2);
}
