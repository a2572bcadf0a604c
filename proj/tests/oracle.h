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

// Independent reference implementations used to validate the engine:
// naive scalar-loop kernels, central finite differences, a graph
// reachability oracle and a seeded random-graph generator. Everything here
// is deliberately written the dumb way.

#ifndef TINYGRAPH_TESTS_ORACLE_H_
#define TINYGRAPH_TESTS_ORACLE_H_

#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <vector>

#include "tinygraph/graph.h"
#include "tinygraph/rng.h"
#include "tinygraph/session.h"
#include "tinygraph/tensor.h"

namespace tgtest {

using tg::DType;
using tg::FeedMap;
using tg::Graph;
using tg::NodeId;
using tg::OpKind;
using tg::Rng;
using tg::Session;
using tg::Shape;
using tg::TensorRef;
using tg::TensorValue;

inline TensorValue dense(DType dt, Shape shape,
                         const std::vector<double>& values) {
  TensorValue t(dt, std::move(shape));
  for (size_t i = 0; i < values.size(); ++i) t.set(int64_t(i), values[i]);
  return t;
}

inline TensorValue random_tensor(DType dt, const Shape& shape, Rng& rng,
                                 double lo = -1.0, double hi = 1.0) {
  TensorValue t(dt, shape);
  for (int64_t i = 0; i < t.num_elements(); ++i)
    t.set(i, lo + (hi - lo) * rng.uniform());
  return t;
}

// Evaluates one fetch in a throwaway session.
inline TensorValue eval(Graph& g, TensorRef fetch, const FeedMap& feeds = {}) {
  Session s(g);
  return s.run({fetch}, feeds)[0];
}

// ---------------------------------------------------------------------------
// Naive scalar-loop kernels
// ---------------------------------------------------------------------------

inline TensorValue naive_unary(OpKind kind, const TensorValue& x) {
  TensorValue out(x.dtype(), x.shape());
  for (int64_t i = 0; i < x.num_elements(); ++i) {
    double v = x.at(i), r = 0;
    switch (kind) {
      case OpKind::kNeg: r = -v; break;
      case OpKind::kExp: r = x.dtype() == DType::kF32
                                 ? double(std::exp(float(v)))
                                 : std::exp(v);
        break;
      case OpKind::kLog: r = x.dtype() == DType::kF32
                                 ? double(std::log(float(v)))
                                 : std::log(v);
        break;
      case OpKind::kSigmoid:
        r = x.dtype() == DType::kF32
                ? double(1.0f / (1.0f + std::exp(-float(v))))
                : 1.0 / (1.0 + std::exp(-v));
        break;
      case OpKind::kRelu: r = v > 0 ? v : 0; break;
      default: throw tg::Error(tg::Code::kInvalidArgument, "not unary");
    }
    out.set(i, r);
  }
  return out;
}

// Same-shape element-wise binary (broadcast untested here; the broadcast
// forms get their own hand-written cases).
inline TensorValue naive_binary(OpKind kind, const TensorValue& a,
                                const TensorValue& b) {
  TensorValue out(a.dtype(), a.shape());
  for (int64_t i = 0; i < a.num_elements(); ++i) {
    double x = a.at(i), y = b.at(i), r = 0;
    switch (kind) {
      case OpKind::kAdd: r = a.dtype() == DType::kF32
                                 ? double(float(x) + float(y))
                                 : x + y;
        break;
      case OpKind::kSub: r = a.dtype() == DType::kF32
                                 ? double(float(x) - float(y))
                                 : x - y;
        break;
      case OpKind::kMul: r = a.dtype() == DType::kF32
                                 ? double(float(x) * float(y))
                                 : x * y;
        break;
      case OpKind::kEqual: r = x == y ? 1.0 : 0.0; break;
      default: throw tg::Error(tg::Code::kInvalidArgument, "not binary");
    }
    out.set(i, r);
  }
  return out;
}

inline TensorValue naive_matmul(const TensorValue& a, const TensorValue& b) {
  int64_t n = a.shape().dim(0), k = a.shape().dim(1), m = b.shape().dim(1);
  TensorValue out(a.dtype(), Shape{n, m});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < m; ++j) {
      if (a.dtype() == DType::kF32) {
        float acc = 0;
        for (int64_t t = 0; t < k; ++t)
          acc += float(a.at(i * k + t)) * float(b.at(t * m + j));
        out.set(i * m + j, double(acc));
      } else {
        double acc = 0;
        for (int64_t t = 0; t < k; ++t) acc += a.at(i * k + t) * b.at(t * m + j);
        out.set(i * m + j, acc);
      }
    }
  return out;
}

// Row-wise softmax with max subtraction, one scalar at a time.
inline TensorValue naive_softmax(const TensorValue& x) {
  int64_t rows = x.shape().rank() == 1 ? 1 : x.shape().dim(0);
  int64_t cols = x.shape().rank() == 1 ? x.shape().dim(0)
                                       : x.shape().dim(x.shape().rank() - 1);
  TensorValue out(x.dtype(), x.shape());
  for (int64_t r = 0; r < rows; ++r) {
    double mx = x.at(r * cols);
    for (int64_t c = 1; c < cols; ++c) mx = std::max(mx, x.at(r * cols + c));
    if (x.dtype() == DType::kF32) {
      float denom = 0;
      for (int64_t c = 0; c < cols; ++c)
        denom += std::exp(float(x.at(r * cols + c)) - float(mx));
      for (int64_t c = 0; c < cols; ++c)
        out.set(r * cols + c,
                double(std::exp(float(x.at(r * cols + c)) - float(mx)) / denom));
    } else {
      double denom = 0;
      for (int64_t c = 0; c < cols; ++c)
        denom += std::exp(x.at(r * cols + c) - mx);
      for (int64_t c = 0; c < cols; ++c)
        out.set(r * cols + c, std::exp(x.at(r * cols + c) - mx) / denom);
    }
  }
  return out;
}

// Full reduction to a scalar, in flat index order (matching the engine's
// fixed reduction order for the all-axes case).
inline double naive_reduce_all(const TensorValue& x, bool mean) {
  double acc = 0;
  if (x.dtype() == DType::kF32) {
    float facc = 0;
    for (int64_t i = 0; i < x.num_elements(); ++i) facc += float(x.at(i));
    acc = mean ? double(facc / float(x.num_elements())) : double(facc);
  } else {
    for (int64_t i = 0; i < x.num_elements(); ++i) acc += x.at(i);
    if (mean) acc /= double(x.num_elements());
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

// Central finite differences (fourth-order five-point stencil) of a fetched
// scalar with respect to the fed tensor at feeds[wrt]. Every element is
// perturbed individually; the graph is re-run four times per element.
inline TensorValue fd_gradient(Graph& g, TensorRef target, FeedMap feeds,
                               size_t wrt, double h) {
  Session s(g);
  TensorValue grad(DType::kF64, feeds[wrt].second.shape());
  auto at = [&](int64_t i, double v) {
    double saved = feeds[wrt].second.at(i);
    feeds[wrt].second.set(i, v);
    double out = s.run({target}, feeds)[0].at(0);
    feeds[wrt].second.set(i, saved);
    return out;
  };
  for (int64_t i = 0; i < grad.num_elements(); ++i) {
    double x = feeds[wrt].second.at(i);
    double d = (at(i, x - 2 * h) - 8 * at(i, x - h) + 8 * at(i, x + h) -
                at(i, x + 2 * h)) /
               (12 * h);
    grad.set(i, d);
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Reachability oracle
// ---------------------------------------------------------------------------

// Backward transitive closure from `roots` following data and control edges,
// with fed tensors acting as cut points, computed by plain DFS. Assign's
// input 0 is a handle, not a read, and is not traversed.
inline std::set<NodeId> closure_oracle(const Graph& g,
                                       const std::vector<NodeId>& roots,
                                       const std::set<TensorRef>& fed) {
  std::set<NodeId> seen;
  std::function<void(NodeId)> visit = [&](NodeId id) {
    if (!seen.insert(id).second) return;
    const tg::Node& n = g.node(id);
    for (size_t i = 0; i < n.inputs.size(); ++i) {
      if (n.kind == OpKind::kAssign && i == 0) continue;
      if (fed.count(n.inputs[i])) continue;
      visit(n.inputs[i].producer);
    }
    for (NodeId c : n.control_inputs) visit(c);
  };
  for (NodeId r : roots) visit(r);
  return seen;
}

// ---------------------------------------------------------------------------
// Random graph generator
// ---------------------------------------------------------------------------

struct RandomGraphCase {
  Graph g;
  TensorRef out;  // rank-0 fetch
  FeedMap feeds;
};

// Seeded DAG of same-shape element-wise ops over a few placeholders,
// reduced to a scalar. `duplicate_rate` injects structurally identical
// nodes so CSE has work to do.
inline RandomGraphCase make_random_graph(uint64_t seed,
                                         double duplicate_rate = 0.3) {
  Rng rng(seed);
  RandomGraphCase c;
  Shape shape{3, 4};
  int num_ph = 2 + int(rng.next() % 3);
  std::vector<TensorRef> pool;
  for (int i = 0; i < num_ph; ++i) {
    TensorRef ph = c.g.placeholder(DType::kF64, shape);
    pool.push_back(ph);
    c.feeds.emplace_back(ph, random_tensor(DType::kF64, shape, rng));
  }
  const OpKind binary[] = {OpKind::kAdd, OpKind::kSub, OpKind::kMul};
  const OpKind unary[] = {OpKind::kNeg, OpKind::kSigmoid, OpKind::kRelu};
  int num_ops = 4 + int(rng.next() % 8);
  for (int i = 0; i < num_ops; ++i) {
    TensorRef node;
    if (rng.uniform() < 0.7) {
      TensorRef a = pool[size_t(rng.next() % pool.size())];
      TensorRef b = pool[size_t(rng.next() % pool.size())];
      node = c.g.add(binary[rng.next() % 3], {a, b});
    } else {
      TensorRef a = pool[size_t(rng.next() % pool.size())];
      node = c.g.add(unary[rng.next() % 3], {a});
    }
    pool.push_back(node);
    if (rng.uniform() < duplicate_rate) {
      // Rebuild the same node verbatim; CSE must fold it away.
      const tg::Node& n = c.g.node(node.producer);
      pool.push_back(c.g.add(n.kind, n.inputs));
    }
  }
  // Join everything so the whole pool is in the fetch closure.
  TensorRef acc = pool[size_t(num_ph)];
  for (size_t i = size_t(num_ph) + 1; i < pool.size(); ++i)
    acc = c.g.add(OpKind::kAdd, {acc, pool[i]});
  c.out = c.g.add(OpKind::kReduceSum, {acc},
                  {{"axes", std::vector<int64_t>{}}});
  return c;
}

}  // namespace tgtest

#endif  // TINYGRAPH_TESTS_ORACLE_H_
