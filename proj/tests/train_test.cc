/* Copyright 2026 The TinyGraph Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "tinygraph/optimizer.h"

#include <cmath>

#include "checks.h"
#include "oracle.h"
#include "tinygraph/autodiff.h"
#include "tinygraph/dataset.h"
#include "tinygraph/session.h"

using namespace tg;

namespace {

TensorValue filled(DType dt, Shape s, double v) {
  TensorValue t(dt, std::move(s));
  for (int64_t i = 0; i < t.num_elements(); ++i) t.set(i, v);
  return t;
}

// loss = v^2 with v scalar-ish: d/dv = 2v, so one step at rate 0.25
// multiplies v by exactly 0.5 (all values are powers of two, so the
// trajectory is bit-exact).
TEST_CASE("gradient descent halves the quadratic bowl each step") {
  Graph g;
  auto v = g.new_variable(filled(DType::kF64, Shape{1}, 1.0), "v");
  auto loss = g.add(OpKind::kReduceSum, {g.add(OpKind::kMul,
                                               {v.value, v.value})},
                    {{"axes", std::vector<int64_t>{}}}, "loss");
  OptimizerConfig cfg;
  cfg.learning_rate = 0.25;
  NodeId step = minimize(g, loss, cfg);
  NodeId init = g.initialize_all_variables();

  Session s(g);
  RunOptions run_init;
  run_init.targets = {init};
  s.run({}, {}, run_init);

  RunOptions run_step;
  run_step.targets = {step};
  for (int k = 1; k <= 8; ++k) {
    // The loss fetched alongside the step is the pre-update loss.
    double before = s.run({v.value})[0].at(0);
    auto out = s.run({loss}, {}, run_step);
    CHECK(out[0].at(0) == before * before);
    CHECK(s.run({v.value})[0].at(0) == std::pow(0.5, k));
  }
}

TEST_CASE("minimize adds exactly one assign per variable plus a step node") {
  Graph g;
  auto x = g.placeholder(DType::kF32, Shape{kDynamicDim, 8}, "x");
  auto w = g.new_variable(filled(DType::kF32, Shape{8, 3}, 0.1), "W");
  auto b = g.new_variable(filled(DType::kF32, Shape{3}, 0.0), "b");
  auto y = g.add(OpKind::kSigmoid,
                 {g.add(OpKind::kAdd,
                        {g.add(OpKind::kMatMul, {x, w.value}), b.value})});
  auto loss = g.add(OpKind::kReduceMean, {y},
                    {{"axes", std::vector<int64_t>{}}}, "loss");

  size_t assigns_before = 0;
  for (const auto& [id, n] : g.nodes())
    if (n.kind == OpKind::kAssign) ++assigns_before;

  NodeId step = minimize(g, loss);

  size_t assigns_after = 0;
  for (const auto& [id, n] : g.nodes())
    if (n.kind == OpKind::kAssign) ++assigns_after;
  CHECK(assigns_after - assigns_before == 2);

  const Node& sn = g.node(step);
  CHECK(sn.kind == OpKind::kNoOp);
  REQUIRE(sn.control_inputs.size() == 2);
  for (NodeId c : sn.control_inputs) {
    const Node& a = g.node(c);
    CHECK(a.kind == OpKind::kAssign);
    // Each update assign targets a registered variable.
    CHECK(g.node(a.inputs[0].producer).kind == OpKind::kVariableOp);
  }
}

TEST_CASE("one step applies v -= lr * grad, bit-exact in f32") {
  const double kLr = 0.3;
  Graph g;
  Rng rng(21);
  auto x = g.placeholder(DType::kF32, Shape{2, 3}, "x");
  auto a = g.new_variable(tgtest::random_tensor(DType::kF32, Shape{2, 3}, rng),
                          "a");
  auto b = g.new_variable(tgtest::random_tensor(DType::kF32, Shape{3}, rng),
                          "b");
  auto t = g.add(OpKind::kAdd, {g.add(OpKind::kMul, {x, a.value}), b.value});
  auto loss = g.add(OpKind::kReduceSum, {g.add(OpKind::kSigmoid, {t})},
                    {{"axes", std::vector<int64_t>{}}}, "loss");
  auto grads = gradients(g, loss, {a.value, b.value});
  OptimizerConfig cfg;
  cfg.learning_rate = kLr;
  NodeId step = minimize(g, loss, cfg);
  NodeId init = g.initialize_all_variables();

  FeedMap feeds{{x, tgtest::random_tensor(DType::kF32, Shape{2, 3}, rng)}};
  Session s(g);
  RunOptions run_init;
  run_init.targets = {init};
  s.run({}, {}, run_init);

  auto pre = s.run({a.value, b.value, grads[0], grads[1]}, feeds);
  RunOptions run_step;
  run_step.targets = {step};
  s.run({}, feeds, run_step);
  auto post = s.run({a.value, b.value});

  const float lr = float(kLr);
  for (int which = 0; which < 2; ++which) {
    const TensorValue& v0 = pre[size_t(which)];
    const TensorValue& gv = pre[size_t(which) + 2];
    TensorValue expect(DType::kF32, v0.shape());
    for (int64_t i = 0; i < v0.num_elements(); ++i)
      expect.set(i, double(float(v0.at(i)) - lr * float(gv.at(i))));
    CHECK(post[size_t(which)].same_bits(expect));
  }
}

TEST_CASE("zero learning rate with skip_validation leaves variables alone") {
  Graph g;
  Rng rng(5);
  auto v = g.new_variable(tgtest::random_tensor(DType::kF32, Shape{4, 4}, rng),
                          "v");
  auto loss = g.add(OpKind::kReduceSum, {g.add(OpKind::kMul,
                                               {v.value, v.value})},
                    {{"axes", std::vector<int64_t>{}}}, "loss");
  OptimizerConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.skip_validation = true;
  NodeId step = minimize(g, loss, cfg);
  NodeId init = g.initialize_all_variables();

  Session s(g);
  RunOptions run_init;
  run_init.targets = {init};
  s.run({}, {}, run_init);
  TensorValue before = s.run({v.value})[0];
  RunOptions run_step;
  run_step.targets = {step};
  s.run({}, {}, run_step);
  CHECK(s.run({v.value})[0].same_bits(before));
}

TEST_CASE("invalid optimizer configurations are rejected") {
  Graph g;
  auto v = g.new_variable(filled(DType::kF64, Shape{1}, 1.0), "v");
  auto loss = g.add(OpKind::kReduceSum, {g.add(OpKind::kMul,
                                               {v.value, v.value})},
                    {{"axes", std::vector<int64_t>{}}}, "loss");
  OptimizerConfig zero;
  zero.learning_rate = 0.0;
  CHECK_CODE(minimize(g, loss, zero), Code::kInvalidArgument);
  OptimizerConfig negative;
  negative.learning_rate = -1.0;
  CHECK_CODE(minimize(g, loss, negative), Code::kInvalidArgument);

  Graph empty;
  auto p = empty.placeholder(DType::kF64, Shape{2}, "p");
  auto l = empty.add(OpKind::kReduceSum, {p},
                     {{"axes", std::vector<int64_t>{}}});
  CHECK_CODE(minimize(empty, l), Code::kInvalidArgument);
}

TEST_CASE("a short training run fits a small synthetic problem") {
  const int64_t kClasses = 4, kDim = 20, kCount = 400, kBatch = 64;
  Dataset data = make_synthetic(kClasses, kDim, kCount, 3.0, 5);

  Graph g;
  auto x = g.placeholder(DType::kF32, Shape{kDynamicDim, kDim}, "examples");
  auto y_ = g.placeholder(DType::kF32, Shape{kDynamicDim, kClasses},
                          "labels");
  auto w = g.new_variable(filled(DType::kF32, Shape{kDim, kClasses}, 0.0),
                          "W");
  auto b = g.new_variable(filled(DType::kF32, Shape{kClasses}, 0.0), "b");
  auto logits = g.add(OpKind::kAdd,
                      {g.add(OpKind::kMatMul, {x, w.value}), b.value});
  auto y = g.add(OpKind::kSoftmax, {logits}, {}, "estimates");
  auto loss = g.add(OpKind::kReduceMean, {build_cross_entropy_rows(g, y_, y)},
                    {{"axes", std::vector<int64_t>{}}}, "loss");
  auto hits = g.add(OpKind::kEqual, {g.add(OpKind::kArgMax, {y}),
                                     g.add(OpKind::kArgMax, {y_})});
  auto accuracy = g.add(OpKind::kReduceMean, {hits},
                        {{"axes", std::vector<int64_t>{}}}, "accuracy");
  NodeId step = minimize(g, loss);
  NodeId init = g.initialize_all_variables();

  Session s(g);
  RunOptions run_init;
  run_init.targets = {init};
  s.run({}, {}, run_init);

  // Zero-initialized softmax regression starts at loss ln(k).
  FeedMap full{{x, data.images}, {y_, data.labels}};
  double first = s.run({loss}, full)[0].at(0);
  CHECK(first == doctest::Approx(std::log(double(kClasses))).epsilon(1e-5));

  RunOptions run_step;
  run_step.targets = {step};
  for (int64_t i = 0; i < 50; ++i) {
    Batch batch = next_batch(data, kBatch, i, /*seed=*/1);
    s.run({}, {{x, batch.images}, {y_, batch.labels}}, run_step);
  }
  auto out = s.run({loss, accuracy}, full);
  CHECK(out[0].at(0) < 0.5 * first);
  CHECK(out[1].at(0) > 0.9);
}

}  // namespace
