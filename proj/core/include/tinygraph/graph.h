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

#ifndef TINYGRAPH_GRAPH_H_
#define TINYGRAPH_GRAPH_H_

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "tinygraph/op.h"

namespace tg {

// Symbolic handle to one output of a node. Never stores data; resolvable to
// a value only during a session run.
struct TensorRef {
  NodeId producer = -1;
  int output_index = 0;
  DType dtype = DType::kF32;
  Shape shape;

  bool operator==(const TensorRef& other) const {
    return producer == other.producer && output_index == other.output_index;
  }
  bool operator<(const TensorRef& other) const {
    return producer != other.producer ? producer < other.producer
                                      : output_index < other.output_index;
  }
};

struct Node {
  NodeId id = -1;
  OpKind kind = OpKind::kNoOp;
  std::string name;
  std::vector<TensorRef> inputs;
  std::set<NodeId> control_inputs;
  AttrMap attrs;
  std::optional<std::string> device_constraint;
  std::vector<TensorSig> outputs;

  TensorRef out(int index = 0) const {
    return TensorRef{id, index, outputs[size_t(index)].dtype,
                     outputs[size_t(index)].shape};
  }
};

struct VariableEntry {
  NodeId variable;
  NodeId initial;
  NodeId assign;
};

// Immutable-after-freeze directed multigraph of operation nodes. Node ids are
// dense integers in insertion order, so id order is a topological order.
class Graph {
 public:
  Graph() = default;

  // Inserts a node, inferring output shapes/dtypes. The name (optionally
  // scope-prefixed) is made unique by suffixing _1, _2, ... on collision.
  std::vector<TensorRef> add_node(OpKind kind,
                                  const std::vector<TensorRef>& inputs,
                                  AttrMap attrs = {},
                                  const std::string& name = "",
                                  const std::set<NodeId>& control_inputs = {});

  // Single-output convenience wrapper.
  TensorRef add(OpKind kind, const std::vector<TensorRef>& inputs,
                AttrMap attrs = {}, const std::string& name = "",
                const std::set<NodeId>& control_inputs = {});

  TensorRef constant(const TensorValue& value, const std::string& name = "");
  TensorRef placeholder(DType dtype, const Shape& shape,
                        const std::string& name = "");

  // Adds the variable triple (VariableOp, initial-value producer, Assign).
  // `initial` must already be in the graph and have a concrete shape.
  // Returns the variable's value tensor and the initializer node id.
  struct Variable {
    TensorRef value;
    NodeId initializer;
  };
  Variable new_variable(TensorRef initial, const std::string& name = "",
                        bool trainable = true);

  // Convenience overload adding the Fig.-3 triple in one call: a Const
  // producing `initial_value`, the VariableOp, and the Assign.
  Variable new_variable(const TensorValue& initial_value,
                        const std::string& name = "", bool trainable = true);

  // NoOp with a control edge from every registered variable initializer.
  NodeId initialize_all_variables();

  void push_scope(const std::string& scope);
  void pop_scope();

  class ScopeGuard {
   public:
    ScopeGuard(Graph& g, const std::string& scope) : g_(g) {
      g_.push_scope(scope);
    }
    ~ScopeGuard() { g_.pop_scope(); }

   private:
    Graph& g_;
  };

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  // Mutable deep copy; rewrite passes leave the original untouched.
  Graph clone_unfrozen() const {
    Graph g = *this;
    g.frozen_ = false;
    return g;
  }

  const Node& node(NodeId id) const;
  bool has_node(NodeId id) const { return nodes_.count(id) > 0; }
  const std::map<NodeId, Node>& nodes() const { return nodes_; }
  size_t num_nodes() const { return nodes_.size(); }

  std::optional<NodeId> find(const std::string& name) const;
  TensorRef output_of(const std::string& name, int index = 0) const;

  const std::vector<VariableEntry>& variable_registry() const {
    return variables_;
  }
  const std::map<std::string, std::vector<NodeId>>& collections() const {
    return collections_;
  }
  std::vector<NodeId> collection(const std::string& tag) const;
  void add_to_collection(const std::string& tag, NodeId id);

  void set_device_constraint(NodeId id, const std::string& device);

  // Nodes consuming any output of `id` through data edges.
  std::vector<NodeId> consumers(NodeId id) const;

  bool structurally_equal(const Graph& other) const;

  // Mutators reserved for deserialization and pass machinery; these bypass
  // shape inference and keep caller-supplied ids.
  void insert_raw(Node node);
  void restore_variable_entry(const VariableEntry& entry) {
    variables_.push_back(entry);
  }
  void erase_node(NodeId id);
  void replace_input(NodeId consumer, const TensorRef& from,
                     const TensorRef& to);
  // Redirects control edges after a node merge.
  void remap_control_inputs(NodeId from, NodeId to) {
    check_mutable();
    for (auto& [id, n] : nodes_) {
      if (n.control_inputs.erase(from)) n.control_inputs.insert(to);
    }
  }
  // Redirects collection membership after a node merge (without duplicates).
  void remap_collection_refs(NodeId from, NodeId to) {
    check_mutable();
    for (auto& [tag, ids] : collections_) {
      bool has_to = std::find(ids.begin(), ids.end(), to) != ids.end();
      for (auto it = ids.begin(); it != ids.end();) {
        if (*it == from) {
          if (has_to) {
            it = ids.erase(it);
            continue;
          }
          *it = to;
          has_to = true;
        }
        ++it;
      }
    }
  }
  // Updates variable-registry references after a node merge.
  void remap_variable_node(NodeId from, NodeId to) {
    for (VariableEntry& e : variables_) {
      if (e.variable == from) e.variable = to;
      if (e.initial == from) e.initial = to;
      if (e.assign == from) e.assign = to;
    }
  }

 private:
  void check_mutable() const {
    if (frozen_)
      throw Error(Code::kFrozenGraph, "graph is frozen; build a new graph");
  }
  std::string unique_name(const std::string& hint, OpKind kind);

  std::map<NodeId, Node> nodes_;
  std::unordered_map<std::string, NodeId> name_index_;
  std::map<std::string, std::vector<NodeId>> collections_;
  std::vector<VariableEntry> variables_;
  std::vector<std::string> scope_stack_;
  NodeId next_id_ = 0;
  bool frozen_ = false;
};

// Graph composition helper: per-row cross entropy -sum_j L[i,j]*log(Y[i,j]),
// built from Mul/Log/Neg/ReduceSum nodes.
TensorRef build_cross_entropy_rows(Graph& g, TensorRef labels,
                                   TensorRef estimates);

// Acyclic conditional: selects between the outputs of two branch builders
// depending on a scalar predicate (nonzero = true), expressed as a
// Switch/Merge pair. Branch builders receive the gated value tensor.
template <typename ThenFn, typename ElseFn>
TensorRef build_cond(Graph& g, TensorRef pred, TensorRef value, ThenFn then_fn,
                     ElseFn else_fn, const std::string& name = "cond") {
  Graph::ScopeGuard scope(g, name);
  auto sw = g.add_node(OpKind::kSwitch, {value, pred}, {}, "switch");
  TensorRef on_false = else_fn(sw[0]);
  TensorRef on_true = then_fn(sw[1]);
  // The merge remembers its predicate so gradient construction can gate the
  // upstream gradient through the same condition.
  AttrMap attrs;
  attrs["pred_node"] = pred.producer;
  attrs["pred_index"] = static_cast<int64_t>(pred.output_index);
  return g.add(OpKind::kMerge, {on_false, on_true}, std::move(attrs), "merge");
}

}  // namespace tg

#endif  // TINYGRAPH_GRAPH_H_
