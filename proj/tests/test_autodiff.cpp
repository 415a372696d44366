#include <doctest.h>

#include <cmath>

#include "gradsurge/autodiff.hpp"
#include "gradsurge/kernels.hpp"
#include "gradsurge/rng.hpp"
#include "oracles.hpp"

using namespace gradsurge;

TEST_CASE("forward op basics") {
  Tape tape;
  int x = tape.constant(Tensor::vector({-1.0, 0.0, 2.0}));
  CHECK(tape.val(tape.relu(x)).data == std::vector<double>{0.0, 0.0, 2.0});

  int a = tape.constant(Tensor::matrix(1, 1, {2.0}));
  int b = tape.constant(Tensor::matrix(1, 1, {3.0}));
  CHECK(tape.val(tape.matmul(a, b)).data[0] == 6.0);

  int z = tape.constant(Tensor::vector({0.0}));
  int y = tape.constant(Tensor::vector({1.0}));
  CHECK(tape.scalar_val(tape.mean_all(tape.bce_with_logits(z, y))) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("shape and finiteness errors") {
  Tape tape;
  int a = tape.constant(Tensor::matrix(2, 3, std::vector<double>(6, 1.0)));
  int b = tape.constant(Tensor::matrix(2, 3, std::vector<double>(6, 1.0)));
  CHECK_THROWS_AS(tape.matmul(a, b), ConfigError);
  CHECK_THROWS_AS(tape.add(a, tape.constant(Tensor::vector({1.0, 2.0}))), ConfigError);
  CHECK_THROWS_AS(tape.constant(Tensor::vector({1.0, std::nan("")})), NumericError);
  CHECK_THROWS_AS(tape.backward(a), UsageError);  // loss must be scalar
}

TEST_CASE("backward basics") {
  {
    Tape tape;
    int x = tape.leaf(Tensor::vector({3.0}), true);
    int sq = tape.mul(x, x);
    tape.backward(tape.sum_all(sq));
    CHECK(tape.grad(x).data[0] == doctest::Approx(6.0));
  }
  {
    Tape tape;
    int x = tape.leaf(Tensor::vector({1.0, 5.0}), true);
    tape.backward(tape.mean_all(x));
    CHECK(tape.grad(x).data == std::vector<double>{0.5, 0.5});
  }
  {
    // bce-with-logits(w * 1, label 1) at w = 0: gradient = sigmoid(0) - 1
    Tape tape;
    int w = tape.leaf(Tensor::matrix(1, 1, {0.0}), true);
    int one = tape.constant(Tensor::matrix(1, 1, {1.0}));
    int logit = tape.matmul(one, w);
    int label = tape.constant(Tensor::matrix(1, 1, {1.0}));
    tape.backward(tape.mean_all(tape.bce_with_logits(logit, label)));
    CHECK(tape.grad(w).data[0] == doctest::Approx(-0.5).epsilon(1e-12));

    auto f = [](const std::vector<double>& wv) {
      Tape t;
      int wl = t.leaf(Tensor::matrix(1, 1, {wv[0]}), false);
      int onel = t.constant(Tensor::matrix(1, 1, {1.0}));
      int lab = t.constant(Tensor::matrix(1, 1, {1.0}));
      return t.scalar_val(t.mean_all(t.bce_with_logits(t.matmul(onel, wl), lab)));
    };
    auto fd = oracles::fd_gradient(f, {0.0});
    CHECK(fd[0] == doctest::Approx(-0.5).epsilon(1e-6));
  }
}

TEST_CASE("off-path parameters receive exact zeros") {
  Tape tape;
  int used = tape.leaf(Tensor::vector({1.0, 2.0}), true);
  int unused = tape.leaf(Tensor::vector({4.0}), true);
  tape.backward(tape.sum_all(used));
  CHECK(tape.grad(unused).data == std::vector<double>{0.0});
}

TEST_CASE("backward is linear in the loss") {
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    Tensor x0 = Tensor::matrix(3, 2, std::vector<double>(6));
    for (double& v : x0.data) v = rng.uniform(-1.0, 1.0);

    auto grads_of = [&](int which) {
      Tape tape;
      int x = tape.leaf(x0, true);
      int l1 = tape.mean_all(tape.sigmoid(x));
      int l2 = tape.mean_all(tape.mul(x, x));
      int loss = which == 0 ? l1 : which == 1 ? l2 : tape.add(l1, l2);
      tape.backward(loss);
      return tape.grad(x).data;
    };
    auto g1 = grads_of(0), g2 = grads_of(1), gsum = grads_of(2);
    for (std::size_t i = 0; i < gsum.size(); ++i)
      CHECK(std::fabs(gsum[i] - (g1[i] + g2[i])) <= 1e-12);
  }
}

TEST_CASE("forward+backward reruns are bit-identical") {
  Rng rng(22);
  Tensor x0 = Tensor::matrix(4, 3, std::vector<double>(12));
  for (double& v : x0.data) v = rng.uniform(-1.0, 1.0);

  auto run = [&]() {
    Tape tape;
    int x = tape.leaf(x0, true);
    int h = tape.relu(tape.matmul(x, tape.transpose(x)));
    tape.backward(tape.mean_all(h));
    return tape.grad(x).data;
  };
  CHECK(run() == run());
}

TEST_CASE("gather and concat route gradients to the right rows") {
  Tape tape;
  int x = tape.leaf(Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6}), true);
  int picked = tape.gather_rows(x, {2, 0, 2});
  tape.backward(tape.sum_all(picked));
  // row 2 selected twice, row 1 never
  CHECK(tape.grad(x).data == std::vector<double>{1, 1, 0, 0, 2, 2});
}

TEST_CASE("hvp on quadratic forms") {
  // L = 1/2 theta' diag(1,2) theta
  GradFn grad = [](const FlatVec& th) { return FlatVec{th[0], 2.0 * th[1]}; };
  FlatVec out = hvp(grad, {0.3, -0.7}, {1.0, 1.0});
  CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(out[1] == doctest::Approx(2.0).epsilon(1e-6));

  CHECK(hvp(grad, {0.3, -0.7}, {0.0, 0.0}) == FlatVec{0.0, 0.0});

  // L = sum softplus(theta): d2L/dth2 = sigmoid(th)(1 - sigmoid(th))
  GradFn softplus_grad = [](const FlatVec& th) {
    FlatVec g(th.size());
    for (std::size_t i = 0; i < th.size(); ++i) g[i] = 1.0 / (1.0 + std::exp(-th[i]));
    return g;
  };
  FlatVec h = hvp(softplus_grad, {0.0, 0.0}, {1.0, 0.0});
  CHECK(h[0] == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(h[1] == doctest::Approx(0.0));
}

TEST_CASE("hvp matches A*v on random quadratics within 1e-6") {
  Rng rng(23);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = rng.uniform_int(2, 6);
    // random symmetric A with |A| up to 1e2
    std::vector<double> a(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) a[i * n + j] = a[j * n + i] = rng.uniform(-50.0, 50.0);
    GradFn grad = [&](const FlatVec& th) {
      FlatVec g(n, 0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g[i] += a[i * n + j] * th[j];
      return g;
    };
    FlatVec theta(n), v(n), want(n, 0.0);
    for (double& x : theta) x = rng.uniform(-1.0, 1.0);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) want[i] += a[i * n + j] * v[j];
    CHECK(oracles::vec_rel_err(hvp(grad, theta, v), want) < 1e-6);
  }
}
