#include <doctest.h>

#include <cmath>
#include <vector>

#include "support/oracles.hpp"
#include "tadkit/errors.hpp"
#include "tadkit/graph.hpp"
#include "tadkit/rng.hpp"

using tadkit::Graph;
using tadkit::NodeId;
using tadkit::OpAttrs;
using tadkit::OpTag;
using tadkit::Rng;
using tadkit::Tensor;

namespace {

Tensor random_tensor(Rng& rng, std::vector<int> shape) {
  std::vector<double> v(static_cast<std::size_t>(Tensor::shape_size(shape)));
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor(std::move(shape), std::move(v));
}

constexpr double kGradTol = 1e-6;  // double-precision central differences are tight

}  // namespace

TEST_CASE("op name round trip covers the whole registry") {
  for (auto tag : {OpTag::kMatmul, OpTag::kConv1d, OpTag::kAdd, OpTag::kMul, OpTag::kConcat,
                   OpTag::kSlice, OpTag::kSigmoid, OpTag::kTanh, OpTag::kRelu, OpTag::kLeakyRelu,
                   OpTag::kSoftmax, OpTag::kMean, OpTag::kSquare, OpTag::kSqrt,
                   OpTag::kAffineModulate, OpTag::kReshape, OpTag::kTranspose, OpTag::kGather}) {
    CHECK(tadkit::op_from_name(tadkit::op_name(tag)) == tag);
  }
  CHECK_THROWS_AS(tadkit::op_from_name("not_an_op"), tadkit::ConfigError);
}

TEST_CASE("matmul forward matches hand computation") {
  Graph g;
  NodeId a = g.constant(Tensor({2, 2}, {1, 2, 3, 4}));
  NodeId b = g.constant(Tensor({2, 2}, {5, 6, 7, 8}));
  const auto& v = g.value(g.matmul(a, b)).values();
  CHECK(v == std::vector<double>{19, 22, 43, 50});

  // batched: each slice multiplied independently
  NodeId ba = g.constant(Tensor({2, 1, 2}, {1, 2, 3, 4}));
  NodeId bb = g.constant(Tensor({2, 2, 1}, {1, 1, 10, 100}));
  const auto& bv = g.value(g.matmul(ba, bb)).values();
  CHECK(bv == std::vector<double>{3, 430});

  CHECK_THROWS_AS(g.matmul(a, g.constant(Tensor({3, 2}, {1, 2, 3, 4, 5, 6}))),
                  tadkit::DimensionError);
}

TEST_CASE("conv1d forward: stride 1, zero same-padding, even kernels pad left by (K-1)/2") {
  Graph g;
  // x = [1,2,3,4] single channel; K=3 identity-ish kernel w = [1,0,0]
  NodeId x = g.constant(Tensor({1, 4, 1}, {1, 2, 3, 4}));
  NodeId w_prev = g.constant(Tensor({3, 1, 1}, {1, 0, 0}));
  // pad 1 on each side: y[t] = x[t-1]
  CHECK(g.value(g.conv1d(x, w_prev)).values() == std::vector<double>{0, 1, 2, 3});

  NodeId w_sum = g.constant(Tensor({3, 1, 1}, {1, 1, 1}));
  CHECK(g.value(g.conv1d(x, w_sum)).values() == std::vector<double>{3, 6, 9, 7});

  // K=2 pads 0 left, 1 right: y[t] = w0*x[t] + w1*x[t+1]
  NodeId w_even = g.constant(Tensor({2, 1, 1}, {1, 10}));
  CHECK(g.value(g.conv1d(x, w_even)).values() == std::vector<double>{21, 32, 43, 4});

  // multi-channel mixing: Cin=2 -> Cout=1, K=1
  NodeId x2 = g.constant(Tensor({1, 2, 2}, {1, 2, 3, 4}));
  NodeId w2 = g.constant(Tensor({1, 2, 1}, {10, 1}));
  CHECK(g.value(g.conv1d(x2, w2)).values() == std::vector<double>{12, 34});

  CHECK_THROWS_AS(g.conv1d(x2, g.constant(Tensor({1, 3, 1}, {1, 2, 3}))),
                  tadkit::DimensionError);
}

TEST_CASE("add/mul broadcast like numpy over trailing axes") {
  Graph g;
  NodeId a = g.constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  NodeId row = g.constant(Tensor({1, 3}, {10, 20, 30}));
  NodeId col = g.constant(Tensor({2, 1}, {100, 200}));
  CHECK(g.value(g.add(a, row)).values() == std::vector<double>{11, 22, 33, 14, 25, 36});
  CHECK(g.value(g.mul(a, col)).values() == std::vector<double>{100, 200, 300, 800, 1000, 1200});
  // scalar broadcasts against anything
  CHECK(g.value(g.add(a, g.scalar(1.0))).values() == std::vector<double>{2, 3, 4, 5, 6, 7});
  CHECK_THROWS_AS(g.add(a, g.constant(Tensor({2, 2}, {1, 2, 3, 4}))), tadkit::DimensionError);
}

TEST_CASE("concat and slice invert each other") {
  Graph g;
  NodeId a = g.constant(Tensor({2, 2}, {1, 2, 3, 4}));
  NodeId b = g.constant(Tensor({2, 1}, {9, 8}));
  NodeId c = g.concat({a, b}, 1);
  CHECK(g.value(c).shape() == std::vector<int>{2, 3});
  CHECK(g.value(c).values() == std::vector<double>{1, 2, 9, 3, 4, 8});
  CHECK(g.value(g.slice(c, 1, 0, 2)).values() == std::vector<double>{1, 2, 3, 4});
  CHECK(g.value(g.slice(c, 1, 2, 1)).values() == std::vector<double>{9, 8});
  CHECK_THROWS_AS(g.slice(c, 1, 2, 2), tadkit::DimensionError);
  CHECK_THROWS_AS(g.concat({a, g.constant(Tensor({3, 1}, {1, 2, 3}))}, 1),
                  tadkit::DimensionError);
}

TEST_CASE("softmax rows are positive and sum to one on the requested axis") {
  Rng rng(11);
  Graph g;
  NodeId x = g.constant(random_tensor(rng, {3, 4, 5}));
  for (int axis : {0, 1, 2}) {
    const Tensor& y = g.value(g.softmax(x, axis));
    for (double v : y.values()) CHECK(v > 0.0);
    Graph g2;
    const Tensor& means = g2.value(g2.mean_axis(g2.constant(y), axis));
    // mean over the axis is 1/n exactly when each slice sums to one
    for (double m : means.values()) CHECK(m == doctest::Approx(1.0 / y.dim(axis)));
  }
}

TEST_CASE("mean over all elements and over one axis") {
  Graph g;
  NodeId x = g.constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  CHECK(g.value(g.mean_all(x)).values()[0] == doctest::Approx(3.5));
  CHECK(g.value(g.mean_axis(x, 0)).values() == std::vector<double>{2.5, 3.5, 4.5});
  CHECK(g.value(g.mean_axis(x, 1)).values() == std::vector<double>{2, 5});
}

TEST_CASE("affine modulation computes (1+gamma)*x + beta with broadcasting") {
  Graph g;
  NodeId x = g.constant(Tensor({1, 2, 2}, {1, 2, 3, 4}));
  NodeId gamma = g.constant(Tensor({1, 1, 2}, {0.0, 1.0}));
  NodeId beta = g.constant(Tensor({1, 1, 2}, {10.0, -1.0}));
  CHECK(g.value(g.affine_modulate(x, gamma, beta)).values() ==
        std::vector<double>{11, 3, 13, 7});
  // zero gamma and beta is the identity
  NodeId zg = g.constant(Tensor::zeros({1, 1, 2}));
  CHECK(g.value(g.affine_modulate(x, zg, zg)).values() == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("reshape, transpose and gather move data as expected") {
  Graph g;
  NodeId x = g.constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  CHECK(g.value(g.reshape(x, {3, 2})).values() == std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK_THROWS_AS(g.reshape(x, {4, 2}), tadkit::DimensionError);

  CHECK(g.value(g.transpose(x)).values() == std::vector<double>{1, 4, 2, 5, 3, 6});
  NodeId b3 = g.constant(Tensor({2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8}));
  CHECK(g.value(g.transpose(b3)).values() == std::vector<double>{1, 3, 2, 4, 5, 7, 6, 8});

  NodeId table = g.constant(Tensor({3, 2}, {0, 1, 10, 11, 20, 21}));
  CHECK(g.value(g.gather(table, {2, 0, 2})).values() ==
        std::vector<double>{20, 21, 0, 1, 20, 21});
  CHECK_THROWS_AS(g.gather(table, {3}), tadkit::DimensionError);
}

TEST_CASE("backward demands a scalar-shaped loss and valid ids") {
  Graph g;
  Tensor p({2}, {1.0, 2.0}, true);
  NodeId x = g.param(p);
  CHECK_THROWS_AS(g.backward(x), tadkit::ContractError);
  CHECK_THROWS_AS(g.value(999), tadkit::ContractError);
}

TEST_CASE("gradients accumulate across backward calls and reach only connected params") {
  Tensor p({1}, {3.0}, true);
  Tensor q({1}, {5.0}, true);
  Graph g;
  NodeId loss = g.mean_all(g.square(g.param(p)));  // d/dp = 2p = 6
  g.param(q);                                      // on the tape but not on the loss path
  p.zero_grad();
  q.zero_grad();
  g.backward(loss);
  CHECK(p.grad()[0] == doctest::Approx(6.0));
  CHECK(q.grad()[0] == 0.0);
  g.backward(loss);
  CHECK(p.grad()[0] == doctest::Approx(12.0));
}

// Finite-difference sweep: every op participates in a scalar loss built as
// mean(square(op(...))) so the adjoint of each kernel is exercised.
TEST_CASE("finite differences validate every op's adjoint") {
  Rng rng(42);

  auto check = [&](const char* what, Tensor& p, const oracle::GraphBuilder& build) {
    INFO(what);
    CHECK(oracle::max_grad_rel_err(p, build) < kGradTol);
  };

  SUBCASE("matmul 2d, both sides") {
    Tensor a = random_tensor(rng, {3, 4});
    Tensor b = random_tensor(rng, {4, 2});
    auto build = [&](Graph& g) { return g.mean_all(g.square(g.matmul(g.param(a), g.param(b)))); };
    check("matmul lhs", a, build);
    check("matmul rhs", b, build);
  }

  SUBCASE("matmul batched") {
    Tensor a = random_tensor(rng, {2, 3, 4});
    Tensor b = random_tensor(rng, {2, 4, 2});
    auto build = [&](Graph& g) { return g.mean_all(g.square(g.matmul(g.param(a), g.param(b)))); };
    check("bmm lhs", a, build);
    check("bmm rhs", b, build);
  }

  SUBCASE("conv1d, odd and even kernels") {
    for (int K : {1, 2, 3, 4}) {
      Tensor x = random_tensor(rng, {2, 6, 3});
      Tensor w = random_tensor(rng, {K, 3, 2});
      auto build = [&](Graph& g) { return g.mean_all(g.square(g.conv1d(g.param(x), g.param(w)))); };
      check("conv input", x, build);
      check("conv weights", w, build);
    }
  }

  SUBCASE("broadcast add and mul") {
    Tensor a = random_tensor(rng, {2, 3, 4});
    Tensor b = random_tensor(rng, {1, 1, 4});
    auto sum = [&](Graph& g) { return g.mean_all(g.square(g.add(g.param(a), g.param(b)))); };
    check("add big", a, sum);
    check("add small (grad reduces over broadcast axes)", b, sum);
    auto prod = [&](Graph& g) { return g.mean_all(g.square(g.mul(g.param(a), g.param(b)))); };
    check("mul big", a, prod);
    check("mul small", b, prod);
  }

  SUBCASE("concat and slice") {
    Tensor a = random_tensor(rng, {2, 3});
    Tensor b = random_tensor(rng, {2, 2});
    auto build = [&](Graph& g) {
      NodeId c = g.concat({g.param(a), g.param(b)}, 1);
      return g.mean_all(g.square(g.slice(c, 1, 1, 3)));
    };
    check("concat+slice a", a, build);
    check("concat+slice b", b, build);
  }

  SUBCASE("elementwise nonlinearities") {
    Tensor x = random_tensor(rng, {3, 5});
    // keep sqrt's input positive with a +2 shift (values drawn from [-1,1])
    auto with = [&](auto fn) {
      return [&, fn](Graph& g) { return g.mean_all(g.square(fn(g))); };
    };
    check("sigmoid", x, with([&](Graph& g) { return g.sigmoid(g.param(x)); }));
    check("tanh", x, with([&](Graph& g) { return g.tanh(g.param(x)); }));
    check("leaky_relu", x,
          with([&](Graph& g) { return g.leaky_relu(g.param(x), 0.2); }));
    check("square", x, with([&](Graph& g) { return g.square(g.param(x)); }));
    check("sqrt", x,
          with([&](Graph& g) { return g.sqrt(g.add(g.param(x), g.scalar(2.0))); }));
  }

  SUBCASE("relu away from the kink") {
    // FD straddles the kink at 0; keep inputs away from it.
    std::vector<double> v(12);
    for (double& x : v) {
      x = rng.uniform(0.1, 1.0);
      if (rng.bernoulli(0.5)) x = -x;
    }
    Tensor x({3, 4}, v);
    auto build = [&](Graph& g) { return g.mean_all(g.square(g.relu(g.param(x)))); };
    check("relu", x, build);
  }

  SUBCASE("softmax on every axis") {
    Tensor x = random_tensor(rng, {2, 3, 4});
    for (int axis : {0, 1, 2}) {
      // weight cells asymmetrically so the adjoint isn't trivially zero
      Tensor w = random_tensor(rng, {2, 3, 4});
      auto build = [&, axis](Graph& g) {
        NodeId s = g.softmax(g.param(x), axis);
        return g.mean_all(g.square(g.mul(s, g.constant(w))));
      };
      check("softmax", x, build);
    }
  }

  SUBCASE("mean over all and over an axis") {
    Tensor x = random_tensor(rng, {2, 3, 4});
    check("mean_all", x, [&](Graph& g) { return g.square(g.mean_all(g.square(g.param(x)))); });
    for (int axis : {0, 1, 2}) {
      auto build = [&, axis](Graph& g) {
        return g.mean_all(g.square(g.mean_axis(g.square(g.param(x)), axis)));
      };
      check("mean_axis", x, build);
    }
  }

  SUBCASE("affine modulation, all three inputs") {
    Tensor x = random_tensor(rng, {2, 4, 3});
    Tensor gm = random_tensor(rng, {2, 1, 3});
    Tensor bt = random_tensor(rng, {2, 1, 3});
    auto build = [&](Graph& g) {
      return g.mean_all(g.square(g.affine_modulate(g.param(x), g.param(gm), g.param(bt))));
    };
    check("film x", x, build);
    check("film gamma", gm, build);
    check("film beta", bt, build);
  }

  SUBCASE("structural ops: reshape, transpose, gather") {
    Tensor x = random_tensor(rng, {2, 6});
    check("reshape", x, [&](Graph& g) {
      return g.mean_all(g.square(g.reshape(g.param(x), {3, 4})));
    });
    Tensor y = random_tensor(rng, {2, 3, 4});
    // fixed asymmetric weights so transposed cells get distinct pulls
    std::vector<double> wv(24);
    for (std::size_t i = 0; i < wv.size(); ++i) wv[i] = 0.1 * static_cast<double>(i + 1);
    Tensor w({2, 4, 3}, wv);
    check("transpose", y, [&](Graph& g) {
      return g.mean_all(g.square(g.mul(g.transpose(g.param(y)), g.constant(w))));
    });
    Tensor table = random_tensor(rng, {5, 3});
    check("gather (repeated rows accumulate)", table, [&](Graph& g) {
      return g.mean_all(g.square(g.gather(g.param(table), {0, 2, 2, 4})));
    });
  }

  SUBCASE("composite expression mixing most ops") {
    Tensor a = random_tensor(rng, {2, 4, 3});
    Tensor w = random_tensor(rng, {3, 3, 3});
    Tensor m = random_tensor(rng, {3, 2});
    auto build = [&](Graph& g) {
      NodeId h = g.conv1d(g.param(a), g.param(w));
      h = g.tanh(h);
      NodeId att = g.softmax(g.matmul(h, g.transpose(h)), 2);
      NodeId mixed = g.matmul(att, h);
      NodeId flat = g.reshape(g.mean_axis(mixed, 1), {2, 3});
      return g.mean_all(g.square(g.matmul(flat, g.param(m))));
    };
    check("composite a", a, build);
    check("composite w", w, build);
    check("composite m", m, build);
  }
}
