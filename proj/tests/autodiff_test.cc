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

#include "tinygraph/autodiff.h"

#include <cmath>

#include "checks.h"
#include "grad_check.h"
#include "oracle.h"

using namespace tg;
using tgtest::dense;
using tgtest::kF64Tol;
using tgtest::kFdStep;
using tgtest::rel_err;

namespace {

TEST_CASE("d(x*x)/dx = 2x") {
  Graph g;
  auto x = g.placeholder(DType::kF64, Shape::scalar(), "x");
  auto z = g.add(OpKind::kMul, {x, x}, {}, "z");
  auto grads = gradients(g, z, {x});
  REQUIRE(grads.size() == 1);

  auto out = tgtest::eval(g, grads[0],
                          {{x, TensorValue::scalar(DType::kF64, 3.0)}});
  CHECK(out.at(0) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("chain rule through a three-link chain") {
  // w -> f=Sigmoid -> g=Mul(.,.) -> h=Log; dz/dw from the inserted gradient
  // nodes must equal the hand-derived chain product.
  Graph g;
  auto w = g.placeholder(DType::kF64, Shape::scalar(), "w");
  auto fx = g.add(OpKind::kSigmoid, {w}, {}, "f");
  auto gx = g.add(OpKind::kMul, {fx, fx}, {}, "g");
  auto hx = g.add(OpKind::kLog, {gx}, {}, "h");
  size_t before = g.num_nodes();
  auto grads = gradients(g, hx, {w});
  CHECK(g.num_nodes() > before);  // gradient nodes were inserted

  double w0 = 0.7;
  auto dz = tgtest::eval(g, grads[0],
                         {{w, TensorValue::scalar(DType::kF64, w0)}});
  double s = 1.0 / (1.0 + std::exp(-w0));
  // d/dw log(s^2) = 2 s'(w)/s = 2 (1-s).
  CHECK(dz.at(0) == doctest::Approx(2.0 * (1.0 - s)).epsilon(1e-12));
}

TEST_CASE("gradients are pure graph additions") {
  // Same build sequence twice: the control copy stays untouched, the other
  // gains gradient nodes. Pre-existing refs must evaluate identically.
  auto build = [](Graph& g) {
    auto x = g.placeholder(DType::kF64, Shape{2, 2}, "x");
    auto y = g.add(OpKind::kSigmoid, {x}, {}, "y");
    auto loss = g.add(OpKind::kReduceSum, {y},
                      {{"axes", std::vector<int64_t>{}}}, "loss");
    return std::tuple{x, y, loss};
  };
  Graph plain, grown;
  auto [px, py, ploss] = build(plain);
  auto [gx, gy, gloss] = build(grown);
  (void)ploss;
  size_t n_before = grown.num_nodes();
  gradients(grown, gloss, {gx});
  CHECK(grown.num_nodes() >= n_before);

  TensorValue x0 = dense(DType::kF64, Shape{2, 2}, {0.1, -0.4, 2.0, 1.0});
  CHECK(tgtest::eval(grown, gy, {{gx, x0}}) ==
        tgtest::eval(plain, py, {{px, x0}}));
}

TEST_CASE("fan-out paths sum their gradient contributions") {
  // z = x*a + x*b should give dz/dx = a + b, identical to the single-path
  // graph z2 = x*(a+b).
  Graph g;
  auto x = g.placeholder(DType::kF64, Shape::scalar(), "x");
  auto a = g.constant(TensorValue::scalar(DType::kF64, 2.5), "a");
  auto b = g.constant(TensorValue::scalar(DType::kF64, -0.75), "b");
  auto z = g.add(OpKind::kAdd,
                 {g.add(OpKind::kMul, {x, a}), g.add(OpKind::kMul, {x, b})});
  auto z2 = g.add(OpKind::kMul, {x, g.add(OpKind::kAdd, {a, b})});
  auto gz = gradients(g, z, {x})[0];
  auto gz2 = gradients(g, z2, {x})[0];

  FeedMap feeds{{x, TensorValue::scalar(DType::kF64, 1.25)}};
  Session s(g);
  auto out = s.run({gz, gz2}, feeds);
  CHECK(out[0].at(0) == doctest::Approx(1.75).epsilon(1e-12));
  CHECK(out[0].at(0) == out[1].at(0));
}

TEST_CASE("unreachable wrt yields a zero tensor") {
  Graph g;
  auto x = g.placeholder(DType::kF64, Shape::scalar(), "x");
  auto lonely = g.placeholder(DType::kF64, Shape{2, 3}, "lonely");
  auto z = g.add(OpKind::kMul, {x, x});
  auto grads = gradients(g, z, {x, lonely});
  auto out = tgtest::eval(g, grads[1], {});
  CHECK(out.shape() == Shape{2, 3});
  for (int64_t i = 0; i < 6; ++i) CHECK(out.at(i) == 0.0);
}

TEST_CASE("error cases") {
  Graph g;
  auto x = g.placeholder(DType::kF64, Shape{2}, "x");
  auto y = g.add(OpKind::kNeg, {x});
  CHECK_CODE(gradients(g, y, {x}), Code::kNonScalarTarget);

  Graph g2;
  auto x2 = g2.placeholder(DType::kF64, Shape{1, 3}, "x");
  auto am = g2.add(OpKind::kArgMax, {x2}, {{"axis", int64_t{1}}});
  auto t = g2.add(OpKind::kReduceSum, {am},
                  {{"axes", std::vector<int64_t>{}}});
  CHECK_CODE(gradients(g2, t, {x2}), Code::kNonDifferentiablePath);
}

TEST_CASE("no duplicate forward reconstruction inside the gradient subgraph") {
  Graph g;
  auto x = g.placeholder(DType::kF64, Shape{2, 2}, "x");
  auto e = g.add(OpKind::kExp, {x}, {}, "e");
  auto m = g.add(OpKind::kMul, {e, e}, {}, "m");
  auto loss = g.add(OpKind::kReduceSum, {m},
                    {{"axes", std::vector<int64_t>{}}}, "loss");
  std::set<NodeId> forward;
  for (const auto& [id, n] : g.nodes()) forward.insert(id);

  gradients(g, loss, {x});

  // Structural Eq.-1 check: new nodes reference forward tensors and no two
  // new nodes share (kind, inputs, attr-free signature).
  bool references_forward = false;
  std::set<std::pair<int, std::vector<std::pair<NodeId, int>>>> sigs;
  for (const auto& [id, n] : g.nodes()) {
    if (forward.count(id)) continue;
    std::vector<std::pair<NodeId, int>> ins;
    for (const TensorRef& in : n.inputs) {
      ins.emplace_back(in.producer, in.output_index);
      if (forward.count(in.producer)) references_forward = true;
    }
    if (n.attrs.empty())
      CHECK(sigs.insert({int(n.kind), ins}).second);
  }
  CHECK(references_forward);
}

TEST_CASE("conditional gradients follow the taken branch only") {
  Graph g;
  auto p = g.placeholder(DType::kF64, Shape::scalar(), "p");
  auto x = g.placeholder(DType::kF64, Shape::scalar(), "x");
  auto two = g.constant(TensorValue::scalar(DType::kF64, 2.0), "two");
  auto three = g.constant(TensorValue::scalar(DType::kF64, 3.0), "three");
  TensorRef mul_true, mul_false;
  auto y = build_cond(
      g, p, x,
      [&](TensorRef v) {
        mul_true = g.add(OpKind::kMul, {v, two});
        return mul_true;
      },
      [&](TensorRef v) {
        mul_false = g.add(OpKind::kMul, {v, three});
        return mul_false;
      });
  auto dy = gradients(g, y, {x})[0];

  Session s(g);
  auto x0 = TensorValue::scalar(DType::kF64, 1.5);
  auto on = s.run({y, dy}, {{p, TensorValue::scalar(DType::kF64, 1.0)},
                            {x, x0}});
  CHECK(on[0].at(0) == 3.0);  // forward: 2 * 1.5
  CHECK(on[1].at(0) == 2.0);
  // The untaken branch is absent from the trace.
  CHECK(s.last_trace().executed(mul_true.producer));
  CHECK_FALSE(s.last_trace().executed(mul_false.producer));

  // Flipping the fed predicate flips the gradient without a rebuild.
  auto off = s.run({y, dy}, {{p, TensorValue::scalar(DType::kF64, 0.0)},
                             {x, x0}});
  CHECK(off[0].at(0) == 4.5);  // forward: 3 * 1.5
  CHECK(off[1].at(0) == 3.0);
  CHECK_FALSE(s.last_trace().executed(mul_true.producer));
}

// ---------------------------------------------------------------------------
// Finite-difference agreement, per differentiable OpKind
// ---------------------------------------------------------------------------

TEST_CASE("every differentiable op matches central finite differences") {
  for (const tgtest::OpCase& oc : tgtest::op_cases()) {
    double worst = 0;
    for (uint64_t inst = 0; inst < 12; ++inst)
      worst = std::max(worst, tgtest::check_op_instance(oc, 1000 + inst));
    CAPTURE(oc.label);
    CHECK(worst < kF64Tol);
  }
}

TEST_CASE("walkthrough loss gradient matches finite differences (f64)") {
  // Miniature of the softmax-regression model: d=5 features, k=3 classes,
  // batch 4, W and b fed as placeholders so FD can perturb them.
  Rng rng(2024);
  Graph g;
  auto x = g.placeholder(DType::kF64, Shape{4, 5}, "x");
  auto w = g.placeholder(DType::kF64, Shape{5, 3}, "W");
  auto b = g.placeholder(DType::kF64, Shape{3}, "b");
  auto labels = g.placeholder(DType::kF64, Shape{4, 3}, "labels");
  auto logits = g.add(OpKind::kAdd, {g.add(OpKind::kMatMul, {x, w}), b});
  auto y = g.add(OpKind::kSoftmax, {logits});
  auto rows = build_cross_entropy_rows(g, labels, y);
  auto loss = g.add(OpKind::kReduceMean, {rows},
                    {{"axes", std::vector<int64_t>{}}}, "loss");

  FeedMap feeds;
  feeds.emplace_back(x, tgtest::random_tensor(DType::kF64, Shape{4, 5}, rng,
                                              0, 1));
  feeds.emplace_back(w, tgtest::random_tensor(DType::kF64, Shape{5, 3}, rng,
                                              -0.5, 0.5));
  feeds.emplace_back(b, tgtest::random_tensor(DType::kF64, Shape{3}, rng,
                                              -0.2, 0.2));
  TensorValue lv(DType::kF64, Shape{4, 3});
  for (int64_t r = 0; r < 4; ++r) lv.set(r * 3 + int64_t(rng.next() % 3), 1.0);
  feeds.emplace_back(labels, lv);

  auto grads = gradients(g, loss, {w, b});
  Session s(g);
  auto analytic = s.run(grads, feeds);
  for (size_t i : {size_t(1), size_t(2)}) {  // wrt W (index 1) and b (2)
    TensorValue fd = tgtest::fd_gradient(g, loss, feeds, i, kFdStep);
    for (int64_t e = 0; e < fd.num_elements(); ++e)
      CHECK(rel_err(analytic[i - 1].at(e), fd.at(e)) < kF64Tol);
  }
}

}  // namespace
