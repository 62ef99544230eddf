#include <doctest.h>

#include "helpers.hpp"
#include "qtl/models.hpp"

using namespace qtl;

TEST_SUITE_BEGIN("models");

TEST_CASE("spatial chain matches the symbolic audit 128-63-62-28-27-10-9-6") {
  CHECK(baseline_spatial_chain() == std::vector<int64_t>{128, 63, 62, 28, 27, 10, 9, 6});
}

TEST_CASE("forward shapes follow the audit and end at 2304 features") {
  BaselineCnn model = build_baseline(1);
  Tape<float> tape;
  Var f = model.features(tape, tape.input(TensorF(Shape{1, 1, 128, 128})));
  CHECK(tape.value(f).shape == Shape{1, 2304});
}

TEST_CASE("conv-stack parameter count matches the layer-by-layer audit") {
  // (Co*Ci*k*k + Co) per layer, straight from the architecture table.
  const int64_t expected = (8 * 1 * 4 * 4 + 8) + (16 * 8 * 8 * 8 + 16) +
                           (32 * 16 * 8 * 8 + 32) + (64 * 32 * 4 * 4 + 64);
  CHECK(expected == 73976);
  BaselineCnn model = build_baseline(0);
  CHECK(model.conv_parameter_count() == expected);
}

TEST_CASE("same seed builds bit-identical baselines") {
  const BaselineCnn a = build_baseline(123);
  const BaselineCnn b = build_baseline(123);
  const BaselineCnn c = build_baseline(124);
  REQUIRE(a.params.entries().size() == b.params.entries().size());
  bool all_equal = true, any_diff_c = false;
  for (size_t i = 0; i < a.params.entries().size(); ++i) {
    all_equal = all_equal && a.params.entries()[i].value.values == b.params.entries()[i].value.values;
    any_diff_c = any_diff_c || a.params.entries()[i].value.values != c.params.entries()[i].value.values;
  }
  CHECK(all_equal);
  CHECK(any_diff_c);
}

TEST_CASE("feature extraction is deterministic and 2304-wide") {
  BaselineCnn model = build_baseline(7);
  FrozenFeatures frozen = freeze_features(model);
  TensorF zero(Shape{1, 1, 128, 128});
  const TensorF f1 = feature_extract(frozen, zero);
  const TensorF f2 = feature_extract(frozen, zero);
  CHECK(f1.shape == Shape{1, 2304});
  CHECK(f1.values == f2.values);

  TensorF bad(Shape{1, 1, 128, 128}, 2.0f);
  CHECK_THROWS_AS(feature_extract(frozen, bad), NumericError);
  Tape<float> t;
  CHECK_THROWS_AS(frozen.forward(t, t.input(TensorF(Shape{1, 1, 64, 64}))), DimensionError);
}

TEST_CASE("backward through frozen features never writes gradients into them") {
  BaselineCnn model = build_baseline(15);
  FrozenFeatures frozen = freeze_features(model);
  Rng rng(0);
  TensorF images = qtltest::random_tensor_f(Shape{2, 1, 128, 128}, rng, 0.0, 1.0);
  TensorF labels(Shape{2, 1});
  labels.values = {1.0f, 0.0f};

  CtlModel ctl = make_ctl_model(frozen, 3);
  Tape<float> tape;
  Rng drop(1);
  Var logits = ctl.forward(tape, tape.input(images), true, drop);
  Var loss = tape.bce_with_logits(logits, labels);
  backward(tape, loss, ctl.head.params);

  for (const auto& [name, tensor] : ctl.frozen.tensors) {
    CHECK_FALSE(tensor.requires_grad);
    CHECK(tensor.grad.empty());
  }
  // while the head did receive gradients
  bool any_nonzero = false;
  for (float g : ctl.head.params.get("fc1.weight").grad) any_nonzero = any_nonzero || g != 0.0f;
  CHECK(any_nonzero);
}

TEST_CASE("ctl head trainable count is 11531 and seeds differ") {
  CtlHead head = make_ctl_head(1);
  CHECK(head.params.parameter_count() == 2304 * 5 + 5 + 5 * 1 + 1);
  CHECK(head.params.parameter_count() == 11531);
  CtlHead other = make_ctl_head(2);
  CHECK(head.params.get("fc1.weight").values != other.params.get("fc1.weight").values);
}

TEST_CASE("ctl head with copied weights reproduces the baseline forward") {
  BaselineCnn model = build_baseline(40);
  FrozenFeatures frozen = freeze_features(model);
  CtlModel ctl = make_ctl_model(frozen, 99);
  ctl.head.params.get("fc1.weight").values = model.params.get("fc1.weight").values;
  ctl.head.params.get("fc1.bias").values = model.params.get("fc1.bias").values;
  ctl.head.params.get("fc2.weight").values = model.params.get("fc2.weight").values;
  ctl.head.params.get("fc2.bias").values = model.params.get("fc2.bias").values;

  Rng rng(4);
  TensorF images = qtltest::random_tensor_f(Shape{2, 1, 128, 128}, rng, 0.0, 1.0);
  Tape<float> t1, t2;
  Rng d1(0), d2(0);
  const auto base = t1.value(model.forward(t1, t1.input(images), false, d1)).values;
  const auto swapped = t2.value(ctl.forward(t2, t2.input(images), false, d2)).values;
  CHECK(base == swapped);
}

TEST_CASE("qtl model trainable count for 6 qubits 4 reps is 13885") {
  BaselineCnn model = build_baseline(2);
  FrozenFeatures frozen = freeze_features(model);
  QtlModel qtl_model = make_qtl_model(frozen, 6, 4, 5);
  CHECK(qtl_model.dqn.params.parameter_count() == (2304 * 6 + 6) + 48 + (6 * 1 + 1));
  CHECK(qtl_model.dqn.params.parameter_count() == 13885);
}

TEST_CASE("same seed gives identical initial qtl logits on a probe image") {
  BaselineCnn model = build_baseline(3);
  FrozenFeatures frozen = freeze_features(model);
  Rng rng(12);
  TensorF probe = qtltest::random_tensor_f(Shape{1, 1, 128, 128}, rng, 0.0, 1.0);

  auto logits = [&](uint64_t seed) {
    QtlModel m = make_qtl_model(frozen, 3, 2, seed);
    Tape<float> tape;
    return tape.value(m.forward(tape, tape.input(probe), QuantumBackend::ideal())).values;
  };
  CHECK(logits(7) == logits(7));
  CHECK(logits(7) != logits(8));
}

TEST_CASE("ctl and qtl heads consume identical frozen features") {
  BaselineCnn model = build_baseline(21);
  FrozenFeatures frozen = freeze_features(model);
  CtlModel ctl = make_ctl_model(frozen, 1);
  QtlModel qtl_model = make_qtl_model(frozen, 3, 2, 1);

  Rng rng(6);
  TensorF images = qtltest::random_tensor_f(Shape{2, 1, 128, 128}, rng, 0.0, 1.0);
  const TensorF fa = feature_extract(ctl.frozen, images);
  const TensorF fb = feature_extract(qtl_model.frozen, images);
  CHECK(fa.values == fb.values);  // max abs difference 0
}

TEST_SUITE_END();
