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

#include "tinygraph/graph.h"

#include "checks.h"
#include "json.hpp"
#include "oracle.h"
#include "tinygraph/graph_json.h"
#include "tinygraph/optimizer.h"

using namespace tg;

namespace {

TensorValue filled(DType dt, Shape s, double v) {
  TensorValue t(dt, std::move(s));
  for (int64_t i = 0; i < t.num_elements(); ++i) t.set(i, v);
  return t;
}

TEST_CASE("element-wise shape identity") {
  Graph g;
  auto x = g.placeholder(DType::kF32, Shape{2, 3}, "x");
  auto y = g.placeholder(DType::kF32, Shape{2, 3}, "y");
  auto z = g.add(OpKind::kAdd, {x, y});
  CHECK(z.shape == Shape{2, 3});
  CHECK(z.dtype == DType::kF32);
}

TEST_CASE("matmul infers dynamic batch") {
  Graph g;
  auto a = g.placeholder(DType::kF32, Shape{kDynamicDim, 784});
  auto w = g.placeholder(DType::kF32, Shape{784, 10});
  auto y = g.add(OpKind::kMatMul, {a, w});
  CHECK(y.shape.rank() == 2);
  CHECK(y.shape.dim(0) == kDynamicDim);
  CHECK(y.shape.dim(1) == 10);
}

TEST_CASE("matmul inner-dim mismatch") {
  Graph g;
  auto a = g.placeholder(DType::kF32, Shape{2, 3});
  auto b = g.placeholder(DType::kF32, Shape{2, 3});
  CHECK_CODE(g.add(OpKind::kMatMul, {a, b}), Code::kShapeIncompatible);
}

TEST_CASE("arity and dtype rejections") {
  Graph g;
  auto x = g.placeholder(DType::kF32, Shape{2});
  auto y64 = g.placeholder(DType::kF64, Shape{2});
  CHECK_CODE(g.add(OpKind::kAdd, {x}), Code::kArityMismatch);
  CHECK_CODE(g.add(OpKind::kNeg, {x, x}), Code::kArityMismatch);
  CHECK_CODE(g.add(OpKind::kAdd, {x, y64}), Code::kDTypeMismatch);
}

TEST_CASE("row-vector broadcast of the walkthrough") {
  Graph g;
  auto m = g.placeholder(DType::kF32, Shape{kDynamicDim, 10});
  auto b = g.placeholder(DType::kF32, Shape{10});
  auto s = g.add(OpKind::kAdd, {m, b});
  CHECK(s.shape.dim(0) == kDynamicDim);
  CHECK(s.shape.dim(1) == 10);
  // Unsupported mismatch stays an error.
  auto bad = g.placeholder(DType::kF32, Shape{3, 7});
  CHECK_CODE(g.add(OpKind::kAdd, {m, bad}), Code::kShapeIncompatible);
}

TEST_CASE("variable creation adds exactly three nodes with the right edges") {
  Graph g;
  size_t before = g.num_nodes();
  auto v = g.new_variable(filled(DType::kF32, Shape{784, 10}, 0.5), "W");
  CHECK(g.num_nodes() == before + 3);

  REQUIRE(g.variable_registry().size() == 1);
  const VariableEntry& e = g.variable_registry()[0];
  CHECK(e.variable == v.value.producer);
  CHECK(e.assign == v.initializer);
  const Node& assign = g.node(e.assign);
  CHECK(assign.kind == OpKind::kAssign);
  REQUIRE(assign.inputs.size() == 2);
  CHECK(assign.inputs[0].producer == e.variable);   // variable -> assign
  CHECK(assign.inputs[1].producer == e.initial);    // initial -> assign
  CHECK(g.node(e.variable).kind == OpKind::kVariableOp);

  // Registered trainable by default.
  auto tv = g.collection("trainable_variables");
  REQUIRE(tv.size() == 1);
  CHECK(tv[0] == e.variable);
}

TEST_CASE("non-trainable variables skip the collection") {
  Graph g;
  g.new_variable(filled(DType::kF32, Shape{2}, 0.0), "counter",
                 /*trainable=*/false);
  CHECK(g.collection("trainable_variables").empty());
  CHECK(g.variable_registry().size() == 1);
}

TEST_CASE("variable chained from another variable's assign output") {
  Graph g;
  auto a = g.new_variable(filled(DType::kF64, Shape{3}, 2.0), "a");
  // Initialize b from a's initialized value.
  const Node& assign_a = g.node(a.initializer);
  TensorRef a_initialized = assign_a.out(0);
  auto b = g.new_variable(a_initialized, "b");
  CHECK(g.variable_registry().size() == 2);

  NodeId init = g.initialize_all_variables();
  Session s(g);
  RunOptions opt;
  opt.targets = {init};
  s.run({}, {}, opt);
  CHECK(s.run({b.value})[0].at(1) == 2.0);
}

TEST_CASE("dynamic-shaped initializer is rejected") {
  Graph g;
  auto ph = g.placeholder(DType::kF32, Shape{kDynamicDim, 4});
  CHECK_CODE(g.new_variable(ph, "v"), Code::kDynamicShapeInitializer);
}

TEST_CASE("initialize_all_variables control fan-in") {
  Graph g0;
  NodeId init0 = g0.initialize_all_variables();
  CHECK(g0.node(init0).control_inputs.empty());

  Graph g2;
  g2.new_variable(filled(DType::kF32, Shape{2}, 1.0), "a");
  g2.new_variable(filled(DType::kF32, Shape{2}, 2.0), "b");
  NodeId init2 = g2.initialize_all_variables();
  CHECK(g2.node(init2).kind == OpKind::kNoOp);
  CHECK(g2.node(init2).control_inputs.size() == 2);
}

TEST_CASE("name scopes prefix and collisions suffix") {
  Graph g;
  g.push_scope("layer1");
  g.push_scope("weights");
  auto x = g.placeholder(DType::kF32, Shape{2}, "w");
  g.pop_scope();
  g.pop_scope();
  CHECK(g.node(x.producer).name.rfind("layer1/weights/", 0) == 0);

  auto a = g.placeholder(DType::kF32, Shape{2}, "dup");
  auto b = g.placeholder(DType::kF32, Shape{2}, "dup");
  CHECK(g.node(a.producer).name == "dup");
  CHECK(g.node(b.producer).name == "dup_1");
}

TEST_CASE("node ids are dense and topological") {
  auto c = tgtest::make_random_graph(11);
  NodeId expect = 0;
  for (const auto& [id, n] : c.g.nodes()) {
    CHECK(id == expect++);
    for (const TensorRef& in : n.inputs) CHECK(in.producer < id);
    for (NodeId ci : n.control_inputs) CHECK(ci < id);
  }
}

TEST_CASE("frozen graph rejects mutation") {
  Graph g;
  auto x = g.placeholder(DType::kF32, Shape{2});
  g.freeze();
  CHECK_CODE(g.add(OpKind::kNeg, {x}), Code::kFrozenGraph);
}

// Builds the full walkthrough graph: the round-trip testbed.
Graph walkthrough_graph() {
  Graph g;
  auto x = g.placeholder(DType::kF32, Shape{kDynamicDim, 784}, "examples");
  auto y_ = g.placeholder(DType::kF32, Shape{kDynamicDim, 10}, "labels");
  auto w = g.new_variable(filled(DType::kF32, Shape{784, 10}, 0.25), "W");
  auto b = g.new_variable(filled(DType::kF32, Shape{10}, 0.1), "b");
  auto logits = g.add(OpKind::kAdd,
                      {g.add(OpKind::kMatMul, {x, w.value}), b.value});
  auto y = g.add(OpKind::kSoftmax, {logits}, {}, "estimates");
  auto rows = build_cross_entropy_rows(g, y_, y);
  auto loss = g.add(OpKind::kReduceMean, {rows},
                    {{"axes", std::vector<int64_t>{}}}, "loss");
  OptimizerConfig cfg;
  cfg.learning_rate = 0.5;
  minimize(g, loss, cfg);
  g.initialize_all_variables();
  return g;
}

TEST_CASE("serialization round trip is lossless and byte-deterministic") {
  Graph g = walkthrough_graph();
  std::string bytes = serialize(g);
  Graph h = deserialize(bytes);
  CHECK(g.structurally_equal(h));
  CHECK(serialize(h) == bytes);

  // Same build sequence, fresh graph: byte-identical document.
  CHECK(serialize(walkthrough_graph()) == bytes);

  // Ids, names, attrs survive.
  CHECK(h.num_nodes() == g.num_nodes());
  for (const auto& [id, n] : g.nodes()) {
    CHECK(h.node(id).name == n.name);
    CHECK(h.node(id).kind == n.kind);
    CHECK(h.node(id).inputs.size() == n.inputs.size());
  }
  CHECK(h.variable_registry().size() == g.variable_registry().size());
  CHECK(h.collection("trainable_variables") ==
        g.collection("trainable_variables"));
}

TEST_CASE("deserialize rejects bad documents") {
  Graph g;
  auto x = g.placeholder(DType::kF32, Shape{2}, "x");
  g.add(OpKind::kNeg, {x}, {}, "n");
  std::string bytes = serialize(g);

  CHECK_CODE(deserialize("not json at all"), Code::kMalformedDocument);
  CHECK_CODE(deserialize("{\"version\":1}"), Code::kMalformedDocument);

  nlohmann::json doc = nlohmann::json::parse(bytes);
  nlohmann::json unknown = doc;
  unknown["nodes"][1]["kind"] = "Conv9D";
  CHECK_CODE(deserialize(unknown.dump()), Code::kUnknownOpKind);

  nlohmann::json dangling = doc;
  dangling["nodes"][1]["inputs"][0][0] = 777;  // no such producer
  CHECK_CODE(deserialize(dangling.dump()), Code::kDanglingInput);
}

TEST_CASE("feeding arbitrary internal tensors is allowed") {
  // Fetch the estimate while feeding the dot product directly: the upstream
  // producers must not execute.
  Graph g;
  auto x = g.placeholder(DType::kF64, Shape{1, 2}, "x");
  auto w = g.placeholder(DType::kF64, Shape{2, 1}, "w");
  auto dot = g.add(OpKind::kMatMul, {x, w}, {}, "dot");
  auto yhat = g.add(OpKind::kSigmoid, {dot}, {}, "yhat");

  Session s(g);
  auto out = s.run({yhat}, {{dot, tgtest::dense(DType::kF64, Shape{1, 1},
                                                {0.0})}});
  CHECK(out[0].at(0) == doctest::Approx(0.5));
  CHECK_FALSE(s.last_trace().executed(x.producer));
  CHECK_FALSE(s.last_trace().executed(w.producer));
  CHECK_FALSE(s.last_trace().executed(dot.producer));
}

}  // namespace
