#include <doctest.h>

#include "helpers.hpp"
#include "qtl/params.hpp"
#include "qtl/tape.hpp"

using namespace qtl;
using qtltest::random_tensor;

TEST_SUITE_BEGIN("autodiff");

TEST_CASE("conv2d output shapes follow valid padding") {
  Tape<float> t;
  Var x = t.input(TensorF(Shape{1, 1, 128, 128}));
  Var w = t.input(TensorF(Shape{8, 1, 4, 4}));
  Var b = t.input(TensorF(Shape{8}));
  Var y = t.conv2d(x, w, b, 2);
  CHECK(t.value(y).shape == Shape{1, 8, 63, 63});
}

TEST_CASE("conv2d on zero input is constant at the bias") {
  Tape<float> t;
  Var x = t.input(TensorF(Shape{2, 3, 9, 9}));
  Rng rng(4);
  Var w = t.input(qtltest::random_tensor_f(Shape{4, 3, 3, 3}, rng));
  TensorF bias(Shape{4});
  for (int i = 0; i < 4; ++i) bias.values[i] = 0.5f * (i + 1);
  Var y = t.conv2d(x, w, t.input(bias), 1);
  const TensorF& out = t.value(y);
  const int64_t hw = out.shape[2] * out.shape[3];
  for (int64_t n = 0; n < out.shape[0]; ++n)
    for (int64_t c = 0; c < out.shape[1]; ++c)
      for (int64_t i = 0; i < hw; ++i)
        CHECK(out.values[(n * out.shape[1] + c) * hw + i] == bias.values[c]);
}

TEST_CASE("conv2d of ones sums the window") {
  Tape<float> t;
  Var x = t.input(TensorF(Shape{1, 1, 3, 3}, 1.0f));
  Var w = t.input(TensorF(Shape{1, 1, 2, 2}, 1.0f));
  Var y = t.conv2d(x, w, t.input(TensorF(Shape{1})), 1);
  CHECK(t.value(y).shape == Shape{1, 1, 2, 2});
  for (float v : t.value(y).values) CHECK(v == 4.0f);
}

TEST_CASE("conv2d reports both shapes on mismatch") {
  Tape<float> t;
  Var x = t.input(TensorF(Shape{1, 2, 8, 8}));
  Var w = t.input(TensorF(Shape{4, 3, 3, 3}));
  Var b = t.input(TensorF(Shape{4}));
  try {
    t.conv2d(x, w, b, 1);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[1,2,8,8]") != std::string::npos);
    CHECK(msg.find("[4,3,3,3]") != std::string::npos);
  }
}

TEST_CASE("conv2d is exactly linear in the input for power-of-two scales") {
  Rng rng(7);
  Tape<double> t;
  Tensor<double> x = random_tensor(Shape{1, 2, 6, 6}, rng);
  Tensor<double> x2 = x;
  for (auto& v : x2.values) v *= 2.0;
  Var w = t.input(random_tensor(Shape{3, 2, 3, 3}, rng));
  Var zero_bias = t.input(Tensor<double>(Shape{3}));
  Var y1 = t.conv2d(t.input(x), w, zero_bias, 1);
  Var y2 = t.conv2d(t.input(x2), w, zero_bias, 1);
  for (size_t i = 0; i < t.value(y1).values.size(); ++i)
    CHECK(t.value(y2).values[i] == 2.0 * t.value(y1).values[i]);
}

TEST_CASE("maxpool2d shape and max selection") {
  Tape<float> t;
  Var big = t.input(TensorF(Shape{1, 1, 63, 63}));
  CHECK(t.value(t.maxpool2d(big, 2, 1)).shape == Shape{1, 1, 62, 62});

  Var x = t.input(TensorF::from(Shape{1, 1, 2, 2}, {1, 2, 3, 4}));
  Var y = t.maxpool2d(x, 2, 1);
  CHECK(t.value(y).shape == Shape{1, 1, 1, 1});
  CHECK(t.value(y).values[0] == 4.0f);
}

TEST_CASE("maxpool2d ties route the gradient to the first cell in row-major order") {
  Tape<float> t;
  TensorF x(Shape{1, 1, 2, 2}, 3.0f);
  x.requires_grad = true;
  Var xv = t.leaf(x);
  Var y = t.maxpool2d(xv, 2, 1);
  CHECK(t.value(y).values[0] == 3.0f);
  t.backward(t.sum(y));
  CHECK(x.grad == std::vector<float>{1, 0, 0, 0});
}

TEST_CASE("maxpool2d rejects kernels larger than the input") {
  Tape<float> t;
  Var x = t.input(TensorF(Shape{1, 1, 2, 2}));
  CHECK_THROWS_AS(t.maxpool2d(x, 3, 1), DimensionError);
}

TEST_CASE("dense identity, zero input, and hand arithmetic") {
  Tape<float> t;
  TensorF eye(Shape{3, 3});
  for (int i = 0; i < 3; ++i) eye.values[i * 3 + i] = 1.0f;
  Var x = t.input(TensorF::from(Shape{2, 3}, {1, 2, 3, 4, 5, 6}));
  Var y = t.dense(x, t.input(eye), t.input(TensorF(Shape{3})));
  CHECK(t.value(y).values == std::vector<float>{1, 2, 3, 4, 5, 6});

  TensorF bias(Shape{3});
  bias.values = {0.5f, -1.0f, 2.0f};
  Var z = t.dense(t.input(TensorF(Shape{2, 3})), t.input(eye), t.input(bias));
  CHECK(t.value(z).values == std::vector<float>{0.5f, -1.0f, 2.0f, 0.5f, -1.0f, 2.0f});

  Var h = t.dense(t.input(TensorF::from(Shape{1, 2}, {1, 2})),
                  t.input(TensorF::from(Shape{2, 1}, {1, 1})),
                  t.input(TensorF::from(Shape{1}, {0.5f})));
  CHECK(t.value(h).values[0] == 3.5f);

  CHECK_THROWS_AS(t.dense(t.input(TensorF(Shape{1, 4})), t.input(eye), t.input(bias)),
                  DimensionError);
}

TEST_CASE("activation values") {
  Tape<float> t;
  Var x = t.input(TensorF::from(Shape{4}, {-1.0f, 2.0f, 0.0f, 17.0f}));
  const auto relu = t.value(t.activation(x, Activation::Relu)).values;
  CHECK(relu == std::vector<float>{0, 2, 0, 17});
  CHECK(t.value(t.activation(x, Activation::Tanh)).values[2] == 0.0f);
  const auto sig = t.value(t.activation(x, Activation::Sigmoid)).values;
  CHECK(sig[2] == 0.5f);
  CHECK(sig[3] >= 1.0f - 1e-7f);

  Var bad = t.input(TensorF::from(Shape{1}, {std::numeric_limits<float>::quiet_NaN()}));
  CHECK_THROWS_AS(t.activation(bad, Activation::Relu), NumericError);
}

TEST_CASE("dropout identity cases and determinism") {
  Rng rng(3);
  Tape<float> t;
  TensorF x(Shape{100}, 1.0f);
  Var xv = t.input(x);
  CHECK(t.value(t.dropout(xv, 0.0, true, rng)).values == x.values);
  CHECK(t.value(t.dropout(xv, 0.9, false, rng)).values == x.values);
  CHECK_THROWS_AS(t.dropout(xv, 1.0, true, rng), ConfigError);

  auto masked = [&](uint64_t seed) {
    Rng r(seed);
    Tape<float> tape;
    return tape.value(tape.dropout(tape.input(x), 0.5, true, r)).values;
  };
  CHECK(masked(11) == masked(11));
  CHECK(masked(11) != masked(12));
}

TEST_CASE("dropout is unbiased in expectation") {
  // mean over 10,000 seeded masks of dropout(1, p=0.5) within 0.02 of 1.0
  Rng rng(99);
  Tape<float> t;
  Var one = t.input(TensorF(Shape{10000}, 1.0f));
  Var y = t.dropout(one, 0.5, true, rng);
  double mean = 0;
  for (float v : t.value(y).values) mean += v;
  mean /= 10000.0;
  CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("bce_with_logits values and gradient") {
  Tape<double> t;
  Var l1 = t.input(Tensor<double>(Shape{1, 1}));
  Tensor<double> y1(Shape{1, 1});
  y1.values = {1.0};
  CHECK(t.value(t.bce_with_logits(l1, y1)).values[0] == doctest::Approx(std::log(2.0)).epsilon(1e-9));

  Var l2 = t.input(Tensor<double>(Shape{2, 1}));
  Tensor<double> y2(Shape{2, 1});
  y2.values = {0.0, 1.0};
  CHECK(t.value(t.bce_with_logits(l2, y2)).values[0] == doctest::Approx(std::log(2.0)).epsilon(1e-9));

  Tensor<double> logit(Shape{1, 1});
  logit.requires_grad = true;
  Tape<double> t2;
  Var lv = t2.leaf(logit);
  Var loss = t2.bce_with_logits(lv, y1);
  t2.backward(loss);
  CHECK(logit.grad[0] == doctest::Approx(-0.5).epsilon(1e-12));

  Tensor<double> bad(Shape{1, 1});
  bad.values = {0.7};
  Tape<double> t3;
  CHECK_THROWS_AS(t3.bce_with_logits(t3.input(Tensor<double>(Shape{1, 1})), bad), ConfigError);
}

TEST_CASE("bce_with_logits stays finite at extreme logits") {
  Tape<double> t;
  Tensor<double> logits(Shape{2, 1});
  logits.values = {1000.0, -1000.0};
  Tensor<double> labels(Shape{2, 1});
  labels.values = {1.0, 0.0};
  // both samples are confidently correct: per-sample loss ~ 0
  CHECK(t.value(t.bce_with_logits(t.input(logits), labels)).values[0] ==
        doctest::Approx(0.0).epsilon(1e-12));

  Tensor<double> wrong(Shape{2, 1});
  wrong.values = {0.0, 1.0};
  Tape<double> t2;
  const double loss = t2.value(t2.bce_with_logits(t2.input(logits), wrong)).values[0];
  CHECK(std::isfinite(loss));
  CHECK(loss == doctest::Approx(1000.0).epsilon(1e-9));
}

TEST_CASE("backward of sum gives ones; scaling by zero gives zeros") {
  Rng rng(5);
  Tensor<double> w = random_tensor(Shape{3, 4}, rng);
  w.requires_grad = true;
  {
    Tape<double> t;
    t.backward(t.sum(t.leaf(w)));
    for (double g : w.grad) CHECK(g == 1.0);
  }
  {
    w.zero_grad();
    Tape<double> t;
    Var loss = t.scale(t.sum(t.activation(t.leaf(w), Activation::Tanh)), 0.0);
    t.backward(loss);
    for (double g : w.grad) CHECK(g == 0.0);
  }
}

TEST_CASE("backward twice without a new forward is a state error") {
  Tensor<double> w(Shape{2}, 1.0);
  w.requires_grad = true;
  Tape<double> t;
  Var loss = t.sum(t.leaf(w));
  t.backward(loss);
  CHECK_THROWS_AS(t.backward(loss), StateError);
}

TEST_CASE("non-participating parameters receive zero grad through the wrapper") {
  Tensor<double> used(Shape{2}, 1.0);
  ParameterSet<double> ps;
  ps.add("used", used);
  ps.add("unused", Tensor<double>(Shape{3}, 2.0));
  Tape<double> t;
  Var loss = t.sum(t.leaf(ps.get("used")));
  backward(t, loss, ps);
  CHECK(ps.get("used").grad == std::vector<double>{1.0, 1.0});
  CHECK(ps.get("unused").grad == std::vector<double>{0.0, 0.0, 0.0});
}

// Finite-difference consistency, layer by layer. Smooth paths use plain
// random inputs; max-pool gets pairwise-separated values and relu gets inputs
// bounded away from the kink, so the central difference itself is valid.
TEST_CASE("conv/dense/tanh/sigmoid gradients match central differences (64-bit mode)") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const int64_t n = 1 + static_cast<int64_t>(rng.below(2));
    const int64_t c = 1 + static_cast<int64_t>(rng.below(2));
    const int64_t h = 5 + static_cast<int64_t>(rng.below(4));
    const int64_t co = 1 + static_cast<int64_t>(rng.below(3));
    const int64_t k = 2 + static_cast<int64_t>(rng.below(2));
    const int stride = 1 + static_cast<int>(rng.below(2));

    Tensor<double> x = random_tensor(Shape{n, c, h, h}, rng);
    Tensor<double> w = random_tensor(Shape{co, c, k, k}, rng, -0.5, 0.5);
    Tensor<double> b = random_tensor(Shape{co}, rng, -0.2, 0.2);
    const int64_t ho = (h - k) / stride + 1;
    Tensor<double> head = random_tensor(Shape{co * ho * ho, 1}, rng, -0.3, 0.3);
    Tensor<double> labels(Shape{n, 1});
    for (int64_t i = 0; i < n; ++i) labels.values[i] = static_cast<double>(rng.below(2));
    x.requires_grad = w.requires_grad = b.requires_grad = head.requires_grad = true;

    auto forward = [&](bool with_grads) {
      Tape<double> t;
      Var y = t.conv2d(t.leaf(x), t.leaf(w), t.leaf(b), stride);
      y = t.activation(y, Activation::Tanh);
      const Shape& s = t.value(y).shape;
      y = t.reshape(y, Shape{s[0], s[1] * s[2] * s[3]});
      y = t.dense(y, t.leaf(head), t.input(Tensor<double>(Shape{1})));
      y = t.activation(y, Activation::Sigmoid);
      y = t.scale(y, 4.0);
      Var loss = t.bce_with_logits(y, labels);
      const double value = t.value(loss).values[0];
      if (with_grads) {
        x.zero_grad();
        w.zero_grad();
        b.zero_grad();
        head.zero_grad();
        t.backward(loss);
      }
      return value;
    };

    forward(true);
    const double err =
        qtltest::max_fd_rel_error({&x, &w, &b, &head}, [&] { return forward(false); }, 1e-4);
    CHECK(err <= 1e-3);
  }
}

TEST_CASE("maxpool gradients match central differences on separated values") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed + 40);
    const int64_t h = 4 + static_cast<int64_t>(rng.below(3));
    // pairwise-distinct values with gaps far above the FD step
    std::vector<double> grid(h * h);
    for (size_t i = 0; i < grid.size(); ++i) grid[i] = 0.01 * static_cast<double>(i);
    rng.shuffle(grid);
    Tensor<double> x = Tensor<double>::from(Shape{1, 1, h, h}, grid);
    x.requires_grad = true;
    const int64_t po = h - 2 + 1;
    Tensor<double> head = random_tensor(Shape{po * po, 1}, rng, -1.0, 1.0);
    Tensor<double> labels(Shape{1, 1});
    labels.values = {1.0};

    auto forward = [&](bool with_grads) {
      Tape<double> t;
      Var y = t.maxpool2d(t.leaf(x), 2, 1);
      y = t.reshape(y, Shape{1, po * po});
      y = t.dense(y, t.input(head), t.input(Tensor<double>(Shape{1})));
      Var loss = t.bce_with_logits(y, labels);
      const double value = t.value(loss).values[0];
      if (with_grads) {
        x.zero_grad();
        t.backward(loss);
      }
      return value;
    };
    forward(true);
    CHECK(qtltest::max_fd_rel_error({&x}, [&] { return forward(false); }, 1e-4) <= 1e-3);
  }
}

TEST_CASE("relu gradients match central differences away from the kink") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed + 60);
    Tensor<double> x(Shape{2, 6});
    for (auto& v : x.values) {
      const double u = rng.uniform(-1.0, 1.0);
      v = (u < 0 ? -1.0 : 1.0) * (0.01 + std::abs(u));  // |x| >= 0.01
    }
    x.requires_grad = true;
    Tensor<double> w = random_tensor(Shape{6, 1}, rng);
    w.requires_grad = true;
    Tensor<double> labels(Shape{2, 1});
    labels.values = {1.0, 0.0};

    auto forward = [&](bool with_grads) {
      Tape<double> t;
      Var y = t.activation(t.leaf(x), Activation::Relu);
      y = t.dense(y, t.leaf(w), t.input(Tensor<double>(Shape{1})));
      Var loss = t.bce_with_logits(y, labels);
      const double value = t.value(loss).values[0];
      if (with_grads) {
        x.zero_grad();
        w.zero_grad();
        t.backward(loss);
      }
      return value;
    };
    forward(true);
    CHECK(qtltest::max_fd_rel_error({&x, &w}, [&] { return forward(false); }, 1e-4) <= 1e-3);
  }
}

TEST_CASE("dropout gradients match central differences under a fixed mask") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng init_rng(seed + 80);
    Tensor<double> x = random_tensor(Shape{3, 5}, init_rng);
    Tensor<double> w = random_tensor(Shape{5, 1}, init_rng);
    x.requires_grad = w.requires_grad = true;
    Tensor<double> labels(Shape{3, 1});
    labels.values = {1.0, 0.0, 1.0};

    auto forward = [&](bool with_grads) {
      Rng mask_rng(seed + 4000);  // identical mask for every evaluation
      Tape<double> t;
      Var y = t.dropout(t.leaf(x), 0.4, true, mask_rng);
      y = t.dense(y, t.leaf(w), t.input(Tensor<double>(Shape{1})));
      Var loss = t.bce_with_logits(y, labels);
      const double value = t.value(loss).values[0];
      if (with_grads) {
        x.zero_grad();
        w.zero_grad();
        t.backward(loss);
      }
      return value;
    };
    forward(true);
    CHECK(qtltest::max_fd_rel_error({&x, &w}, [&] { return forward(false); }, 1e-4) <= 1e-3);
  }
}

TEST_CASE("forward and gradients are bit-identical across identical runs") {
  auto run = [](uint64_t seed) {
    Rng rng(seed);
    TensorF x = qtltest::random_tensor_f(Shape{2, 1, 10, 10}, rng, 0.0, 1.0);
    TensorF w = qtltest::random_tensor_f(Shape{3, 1, 3, 3}, rng);
    w.requires_grad = true;
    TensorF labels(Shape{2, 1});
    labels.values = {1.0f, 0.0f};
    Tape<float> t;
    Rng drop(seed + 1);
    Var y = t.conv2d(t.input(x), t.leaf(w), t.input(TensorF(Shape{3})), 1);
    y = t.activation(y, Activation::Relu);
    y = t.maxpool2d(y, 2, 1);
    const Shape& s = t.value(y).shape;
    y = t.reshape(y, Shape{s[0], s[1] * s[2] * s[3]});
    y = t.dropout(y, 0.25, true, drop);
    TensorF head(Shape{s[1] * s[2] * s[3], 1}, 0.01f);
    y = t.dense(y, t.input(head), t.input(TensorF(Shape{1})));
    Var loss = t.bce_with_logits(y, labels);
    w.zero_grad();
    t.backward(loss);
    auto out = t.value(loss).values;
    out.insert(out.end(), w.grad.begin(), w.grad.end());
    return out;
  };
  CHECK(run(42) == run(42));
}

TEST_SUITE_END();
