#include <doctest.h>

#include <cmath>
#include <vector>

#include "tadkit/adam.hpp"
#include "tadkit/errors.hpp"
#include "tadkit/tensor.hpp"

using tadkit::AdamConfig;
using tadkit::AdamState;
using tadkit::Tensor;

TEST_CASE("first step equals the hand-derived bias-corrected update") {
  Tensor p({2}, {1.0, -2.0}, true);
  p.ensure_grad() = {0.5, -1.5};
  std::vector<Tensor*> params{&p};
  AdamState st(params);
  AdamConfig cfg;  // lr 1e-3, beta1 .9, beta2 .999, eps 1e-8

  st.step(params, cfg);
  CHECK(st.t() == 1);

  // t=1: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps) ~ lr * sign(g)
  for (int i = 0; i < 2; ++i) {
    double g = i == 0 ? 0.5 : -1.5;
    double m_hat = 0.1 * g / (1.0 - 0.9);
    double v_hat = 0.001 * g * g / (1.0 - 0.999);
    double want = (i == 0 ? 1.0 : -2.0) - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    CHECK(p.values()[static_cast<std::size_t>(i)] == doctest::Approx(want).epsilon(1e-12));
  }
  // gradients are consumed by the step
  CHECK(p.grad()[0] == 0.0);
  CHECK(p.grad()[1] == 0.0);
}

TEST_CASE("two steps match a scalar reference implementation") {
  Tensor p({1}, {0.3}, true);
  std::vector<Tensor*> params{&p};
  AdamState st(params);
  AdamConfig cfg;
  cfg.lr = 0.01;

  double x = 0.3, m = 0, v = 0;
  for (int t = 1; t <= 2; ++t) {
    double g = 2.0 * x;  // d/dx of x^2
    p.ensure_grad()[0] = 2.0 * p.values()[0];
    st.step(params, cfg);

    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    double mh = m / (1.0 - std::pow(0.9, t));
    double vh = v / (1.0 - std::pow(0.999, t));
    x -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
    CHECK(p.values()[0] == doctest::Approx(x).epsilon(1e-14));
  }
}

TEST_CASE("missing gradient is a contract error") {
  Tensor p({1}, {1.0}, true);
  std::vector<Tensor*> params{&p};
  AdamState st(params);
  CHECK_THROWS_AS(st.step(params, AdamConfig{}), tadkit::ContractError);
}

TEST_CASE("global norm clip rescales only when above the ceiling") {
  Tensor a({2}, {3.0, 0.0}, true);
  Tensor b({1}, {4.0}, true);
  a.ensure_grad() = {3.0, 0.0};
  b.ensure_grad() = {4.0};
  std::vector<Tensor*> params{&a, &b};

  // norm = 5, ceiling 10: untouched
  double norm = AdamState::clip_global_norm(params, 10.0);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(a.grad()[0] == 3.0);
  CHECK(b.grad()[0] == 4.0);

  // ceiling 2.5: scaled by 0.5
  norm = AdamState::clip_global_norm(params, 2.5);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(a.grad()[0] == doctest::Approx(1.5));
  CHECK(b.grad()[0] == doctest::Approx(2.0));
}

TEST_CASE("adam converges on a quadratic bowl") {
  Tensor p({2}, {5.0, -3.0}, true);
  std::vector<Tensor*> params{&p};
  AdamState st(params);
  AdamConfig cfg;
  cfg.lr = 0.05;
  for (int i = 0; i < 2000; ++i) {
    auto& g = p.ensure_grad();
    g[0] = 2.0 * p.values()[0];
    g[1] = 2.0 * p.values()[1];
    st.step(params, cfg);
  }
  CHECK(std::fabs(p.values()[0]) < 1e-3);
  CHECK(std::fabs(p.values()[1]) < 1e-3);
}
