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

#include <map>
#include <set>
#include <unordered_map>

namespace tg {

namespace {

// Builder that deduplicates gradient nodes by (kind, inputs, attrs) within
// one gradients() call, so the gradient subgraph never reconstructs the same
// computation twice.
class GradBuilder {
 public:
  explicit GradBuilder(Graph& g) : g_(g) {}

  TensorRef emit(OpKind kind, const std::vector<TensorRef>& inputs,
                 AttrMap attrs, const std::string& name) {
    std::string key = make_key(kind, inputs, attrs);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    TensorRef out = g_.add(kind, inputs, std::move(attrs), name);
    memo_.emplace(std::move(key), out);
    return out;
  }

  std::vector<TensorRef> emit_multi(OpKind kind,
                                    const std::vector<TensorRef>& inputs,
                                    AttrMap attrs, const std::string& name) {
    std::string key = make_key(kind, inputs, attrs);
    auto it = multi_memo_.find(key);
    if (it != multi_memo_.end()) return it->second;
    auto outs = g_.add_node(kind, inputs, std::move(attrs), name);
    multi_memo_.emplace(std::move(key), outs);
    return outs;
  }

  TensorRef scalar_const(DType dt, double v, const std::string& name) {
    return emit(OpKind::kConst, {}, {{"value", TensorValue::scalar(dt, v)}},
                name);
  }

  Graph& graph() { return g_; }

 private:
  static std::string make_key(OpKind kind,
                              const std::vector<TensorRef>& inputs,
                              const AttrMap& attrs) {
    std::string key = op_kind_name(kind);
    for (const TensorRef& in : inputs)
      key += "|" + std::to_string(in.producer) + ":" +
             std::to_string(in.output_index);
    for (const auto& [k, v] : attrs) {
      key += "|" + k + "=";
      if (std::holds_alternative<int64_t>(v)) {
        key += std::to_string(std::get<int64_t>(v));
      } else if (std::holds_alternative<double>(v)) {
        key += std::to_string(std::get<double>(v));
      } else if (std::holds_alternative<std::string>(v)) {
        key += std::get<std::string>(v);
      } else if (std::holds_alternative<std::vector<int64_t>>(v)) {
        for (int64_t x : std::get<std::vector<int64_t>>(v))
          key += std::to_string(x) + ",";
      } else if (std::holds_alternative<Shape>(v)) {
        key += std::get<Shape>(v).to_string();
      } else if (std::holds_alternative<DType>(v)) {
        key += dtype_name(std::get<DType>(v));
      } else {
        const auto& t = std::get<TensorValue>(v);
        key += dtype_name(t.dtype()) + t.shape().to_string();
        for (int64_t i = 0; i < t.num_elements(); ++i)
          key += ":" + std::to_string(t.at(i));
      }
    }
    return key;
  }

  Graph& g_;
  std::unordered_map<std::string, TensorRef> memo_;
  std::unordered_map<std::string, std::vector<TensorRef>> multi_memo_;
};

// Undoes an element-wise broadcast: sums `grad` (shaped like the op output)
// down to `operand_shape`.
TensorRef unbroadcast(GradBuilder& b, TensorRef grad,
                      const Shape& operand_shape, const std::string& name) {
  if (grad.shape == operand_shape) return grad;
  Shape out_ignored;
  Broadcast bc = resolve_broadcast(grad.shape, operand_shape, &out_ignored);
  std::vector<int64_t> axes;
  switch (bc) {
    case Broadcast::kScalarRhs:
      axes = {};  // reduce everything
      break;
    case Broadcast::kRowRhs:
      axes = {0};
      break;
    case Broadcast::kColRhs:
      axes = {1};
      break;
    default:
      // Same rank with a dynamic leading dim on one side only.
      return grad;
  }
  return b.emit(OpKind::kReduceSum, {grad}, {{"axes", axes}}, name);
}

// dy/dx contributions of one node, given the accumulated gradients of its
// outputs. Entries in `out_grads` may be absent (unused outputs).
std::vector<std::optional<TensorRef>> node_gradients(
    GradBuilder& b, const Node& n,
    const std::vector<std::optional<TensorRef>>& out_grads) {
  Graph& g = b.graph();
  std::string base = n.name;
  std::vector<std::optional<TensorRef>> in_grads(n.inputs.size());
  TensorRef y0 = n.outputs.empty() ? TensorRef{} : g.node(n.id).out(0);
  std::optional<TensorRef> g0 = out_grads.empty() ? std::nullopt : out_grads[0];

  switch (n.kind) {
    case OpKind::kAdd: {
      if (!g0) break;
      in_grads[0] = unbroadcast(b, *g0, n.inputs[0].shape, base + "/dx");
      in_grads[1] = unbroadcast(b, *g0, n.inputs[1].shape, base + "/dy");
      break;
    }
    case OpKind::kSub: {
      if (!g0) break;
      in_grads[0] = unbroadcast(b, *g0, n.inputs[0].shape, base + "/dx");
      TensorRef neg = b.emit(OpKind::kNeg, {*g0}, {}, base + "/neg");
      in_grads[1] = unbroadcast(b, neg, n.inputs[1].shape, base + "/dy");
      break;
    }
    case OpKind::kMul: {
      if (!g0) break;
      TensorRef gx =
          b.emit(OpKind::kMul, {*g0, n.inputs[1]}, {}, base + "/gx");
      TensorRef gy =
          b.emit(OpKind::kMul, {*g0, n.inputs[0]}, {}, base + "/gy");
      in_grads[0] = unbroadcast(b, gx, n.inputs[0].shape, base + "/dx");
      in_grads[1] = unbroadcast(b, gy, n.inputs[1].shape, base + "/dy");
      break;
    }
    case OpKind::kMatMul: {
      if (!g0) break;
      bool ta = attr_int(n.attrs, "transpose_a", 0) != 0;
      bool tb = attr_int(n.attrs, "transpose_b", 0) != 0;
      TensorRef a = n.inputs[0], c = n.inputs[1];
      auto mm = [&](TensorRef x, TensorRef y, bool tx, bool ty,
                    const std::string& nm) {
        AttrMap attrs;
        if (tx) attrs["transpose_a"] = int64_t{1};
        if (ty) attrs["transpose_b"] = int64_t{1};
        return b.emit(OpKind::kMatMul, {x, y}, std::move(attrs), nm);
      };
      if (!ta && !tb) {
        in_grads[0] = mm(*g0, c, false, true, base + "/da");
        in_grads[1] = mm(a, *g0, true, false, base + "/db");
      } else if (ta && !tb) {
        in_grads[0] = mm(c, *g0, false, true, base + "/da");
        in_grads[1] = mm(a, *g0, false, false, base + "/db");
      } else if (!ta && tb) {
        in_grads[0] = mm(*g0, c, false, false, base + "/da");
        in_grads[1] = mm(*g0, a, true, false, base + "/db");
      } else {
        in_grads[0] = mm(c, *g0, true, true, base + "/da");
        in_grads[1] = mm(*g0, a, true, true, base + "/db");
      }
      break;
    }
    case OpKind::kExp: {
      if (!g0) break;
      in_grads[0] = b.emit(OpKind::kMul, {*g0, y0}, {}, base + "/dx");
      break;
    }
    case OpKind::kLog: {
      // d/dx log x = 1/x, recovered from the forward output as exp(-log x).
      if (!g0) break;
      TensorRef neg = b.emit(OpKind::kNeg, {y0}, {}, base + "/neg");
      TensorRef recip = b.emit(OpKind::kExp, {neg}, {}, base + "/recip");
      in_grads[0] = b.emit(OpKind::kMul, {*g0, recip}, {}, base + "/dx");
      break;
    }
    case OpKind::kNeg: {
      if (!g0) break;
      in_grads[0] = b.emit(OpKind::kNeg, {*g0}, {}, base + "/dx");
      break;
    }
    case OpKind::kSigmoid: {
      if (!g0) break;
      TensorRef ones = b.emit(OpKind::kOnesLike, {y0}, {}, base + "/ones");
      TensorRef one_minus =
          b.emit(OpKind::kSub, {ones, y0}, {}, base + "/one_minus");
      TensorRef dydx = b.emit(OpKind::kMul, {y0, one_minus}, {}, base + "/dydx");
      in_grads[0] = b.emit(OpKind::kMul, {*g0, dydx}, {}, base + "/dx");
      break;
    }
    case OpKind::kRelu: {
      if (!g0) break;
      in_grads[0] =
          b.emit(OpKind::kReluGrad, {*g0, n.inputs[0]}, {}, base + "/dx");
      break;
    }
    case OpKind::kSoftmax: {
      if (!g0) break;
      // dX = Y * (G - rowsum(G * Y)).
      TensorRef gy = b.emit(OpKind::kMul, {*g0, y0}, {}, base + "/gy");
      std::vector<int64_t> axes =
          y0.shape.rank() == 2 ? std::vector<int64_t>{1}
                               : std::vector<int64_t>{};
      TensorRef s = b.emit(OpKind::kReduceSum, {gy}, {{"axes", axes}},
                           base + "/rowsum");
      TensorRef centered = b.emit(OpKind::kSub, {*g0, s}, {}, base + "/center");
      in_grads[0] = b.emit(OpKind::kMul, {y0, centered}, {}, base + "/dx");
      break;
    }
    case OpKind::kReduceSum: {
      if (!g0) break;
      TensorRef ones =
          b.emit(OpKind::kOnesLike, {n.inputs[0]}, {}, base + "/ones");
      in_grads[0] = b.emit(OpKind::kMul, {ones, *g0}, {}, base + "/dx");
      break;
    }
    case OpKind::kReduceMean: {
      if (!g0) break;
      // Divide by the (possibly runtime) reduced element count: the count is
      // a ReduceSum over ones, and 1/count is exp(-log count).
      TensorRef ones =
          b.emit(OpKind::kOnesLike, {n.inputs[0]}, {}, base + "/ones");
      AttrMap axes_attr = {{"axes", attr_int_list(n.attrs, "axes")}};
      TensorRef count =
          b.emit(OpKind::kReduceSum, {ones}, axes_attr, base + "/count");
      TensorRef logc = b.emit(OpKind::kLog, {count}, {}, base + "/log_count");
      TensorRef neg = b.emit(OpKind::kNeg, {logc}, {}, base + "/neg");
      TensorRef inv = b.emit(OpKind::kExp, {neg}, {}, base + "/inv_count");
      TensorRef scaled = b.emit(OpKind::kMul, {*g0, inv}, {}, base + "/scaled");
      in_grads[0] = b.emit(OpKind::kMul, {ones, scaled}, {}, base + "/dx");
      break;
    }
    case OpKind::kAssign: {
      // Pass-through to the assigned value.
      if (!g0) break;
      in_grads[1] = *g0;
      break;
    }
    case OpKind::kSwitch: {
      // Gradient of the gated data input merges the two branch gradients;
      // the untaken branch's contribution is dead at runtime, so the merge
      // forwards exactly the taken branch.
      auto branch_grad = [&](int i) -> TensorRef {
        if (out_grads[size_t(i)]) return *out_grads[size_t(i)];
        TensorRef zero = b.scalar_const(n.inputs[0].dtype, 0.0,
                                        base + "/zero");
        return b.emit(OpKind::kMul, {g.node(n.id).out(i), zero}, {},
                      base + "/zeros_" + std::to_string(i));
      };
      if (out_grads[0] || out_grads[1]) {
        TensorRef gf = branch_grad(0);
        TensorRef gt = branch_grad(1);
        in_grads[0] = b.emit(OpKind::kMerge, {gf, gt}, {}, base + "/merge");
      }
      break;
    }
    case OpKind::kMerge: {
      if (!g0) break;
      if (n.inputs.size() != 2)
        throw Error(Code::kNonDifferentiablePath,
                    "gradient defined only for two-way Merge");
      auto pit = n.attrs.find("pred_node");
      auto iit = n.attrs.find("pred_index");
      if (pit == n.attrs.end())
        throw Error(Code::kNonDifferentiablePath,
                    "Merge without a recorded predicate");
      NodeId pred_node = std::get<int64_t>(pit->second);
      int pred_index =
          iit == n.attrs.end()
              ? 0
              : static_cast<int>(std::get<int64_t>(iit->second));
      TensorRef pred = g.node(pred_node).out(pred_index);
      auto sw = b.emit_multi(OpKind::kSwitch, {*g0, pred}, {},
                             base + "/grad_switch");
      in_grads[0] = sw[0];
      in_grads[1] = sw[1];
      break;
    }
    default:
      break;  // non-differentiable: contributes nothing upstream
  }
  return in_grads;
}

}  // namespace

std::vector<TensorRef> gradients(Graph& g, TensorRef target,
                                 const std::vector<TensorRef>& wrt) {
  const Node& target_node = g.node(target.producer);
  const Shape& tshape =
      target_node.outputs[size_t(target.output_index)].shape;
  if (tshape.rank() != 0)
    throw Error(Code::kNonScalarTarget,
                "gradient target must be rank-0, got " + tshape.to_string());

  // Backward data-edge closure of the target.
  std::set<NodeId> ancestors;
  {
    std::vector<NodeId> stack{target.producer};
    while (!stack.empty()) {
      NodeId id = stack.back();
      stack.pop_back();
      if (!ancestors.insert(id).second) continue;
      for (const TensorRef& in : g.node(id).inputs)
        stack.push_back(in.producer);
    }
  }

  GradBuilder builder(g);
  Graph::ScopeGuard scope(g, "gradients");

  // Accumulated gradient contributions per tensor.
  std::map<TensorRef, std::vector<TensorRef>> contributions;
  TensorRef seed = builder.scalar_const(target.dtype, 1.0, "seed");
  contributions[target].push_back(seed);

  auto summed = [&](const TensorRef& t) -> std::optional<TensorRef> {
    auto it = contributions.find(t);
    if (it == contributions.end()) return std::nullopt;
    TensorRef acc = it->second[0];
    for (size_t i = 1; i < it->second.size(); ++i)
      acc = builder.emit(OpKind::kAdd, {acc, it->second[i]}, {},
                         g.node(t.producer).name + "/grad_sum");
    return acc;
  };

  // Ids are a topological order; sweep ancestors in reverse.
  for (auto it = ancestors.rbegin(); it != ancestors.rend(); ++it) {
    const Node n = g.node(*it);  // copy: node map grows during emission
    std::vector<std::optional<TensorRef>> out_grads(n.outputs.size());
    bool any = false;
    for (int i = 0; i < static_cast<int>(n.outputs.size()); ++i) {
      out_grads[size_t(i)] = summed(n.out(i));
      any = any || out_grads[size_t(i)].has_value();
    }
    if (!any) continue;
    auto in_grads = node_gradients(builder, n, out_grads);
    for (size_t i = 0; i < in_grads.size(); ++i)
      if (in_grads[i]) contributions[n.inputs[i]].push_back(*in_grads[i]);
  }

  std::vector<TensorRef> result;
  result.reserve(wrt.size());
  for (const TensorRef& w : wrt) {
    auto grad = summed(w);
    if (grad) {
      result.push_back(*grad);
      continue;
    }
    if (ancestors.count(w.producer))
      throw Error(Code::kNonDifferentiablePath,
                  g.node(w.producer).name +
                      " is reachable only through non-differentiable ops");
    const TensorSig& sig =
        g.node(w.producer).outputs[size_t(w.output_index)];
    if (sig.shape.is_dynamic())
      throw Error(Code::kInvalidArgument,
                  "zero gradient for dynamic-shaped tensor is not supported");
    TensorValue zeros(sig.dtype, sig.shape);
    result.push_back(builder.emit(OpKind::kConst, {}, {{"value", zeros}},
                                  g.node(w.producer).name + "/zeros"));
  }
  return result;
}

}  // namespace tg
