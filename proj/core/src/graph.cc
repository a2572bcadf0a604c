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

#include <algorithm>

namespace tg {

std::string Graph::unique_name(const std::string& hint, OpKind kind) {
  std::string base;
  for (const auto& s : scope_stack_) base += s + "/";
  base += hint.empty() ? std::string(op_kind_name(kind)) : hint;
  if (!name_index_.count(base)) return base;
  for (int suffix = 1;; ++suffix) {
    std::string candidate = base + "_" + std::to_string(suffix);
    if (!name_index_.count(candidate)) return candidate;
  }
}

std::vector<TensorRef> Graph::add_node(OpKind kind,
                                       const std::vector<TensorRef>& inputs,
                                       AttrMap attrs, const std::string& name,
                                       const std::set<NodeId>& control_inputs) {
  check_mutable();
  std::vector<TensorSig> input_sigs;
  input_sigs.reserve(inputs.size());
  for (const TensorRef& in : inputs) {
    auto it = nodes_.find(in.producer);
    if (it == nodes_.end())
      throw Error(Code::kDanglingInput,
                  "input references missing node " +
                      std::to_string(in.producer));
    const Node& producer = it->second;
    if (in.output_index < 0 ||
        in.output_index >= static_cast<int>(producer.outputs.size()))
      throw Error(Code::kDanglingInput,
                  "input references missing output of node " + producer.name);
    input_sigs.push_back(producer.outputs[size_t(in.output_index)]);
  }
  for (NodeId c : control_inputs) {
    if (!nodes_.count(c))
      throw Error(Code::kDanglingInput,
                  "control input references missing node " +
                      std::to_string(c));
  }

  Node node;
  node.id = next_id_;
  node.kind = kind;
  node.name = unique_name(name, kind);
  node.attrs = std::move(attrs);
  node.control_inputs = control_inputs;
  node.outputs = infer_signatures(kind, input_sigs, node.attrs);
  // Refresh the denormalized signature carried by each input ref.
  node.inputs.reserve(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i) {
    TensorRef in = inputs[i];
    in.dtype = input_sigs[i].dtype;
    in.shape = input_sigs[i].shape;
    node.inputs.push_back(in);
  }

  ++next_id_;
  name_index_[node.name] = node.id;
  NodeId id = node.id;
  nodes_.emplace(id, std::move(node));

  std::vector<TensorRef> outs;
  const Node& stored = nodes_.at(id);
  for (int i = 0; i < static_cast<int>(stored.outputs.size()); ++i)
    outs.push_back(stored.out(i));
  return outs;
}

TensorRef Graph::add(OpKind kind, const std::vector<TensorRef>& inputs,
                     AttrMap attrs, const std::string& name,
                     const std::set<NodeId>& control_inputs) {
  auto outs = add_node(kind, inputs, std::move(attrs), name, control_inputs);
  if (outs.size() != 1)
    throw Error(Code::kInvalidArgument,
                std::string(op_kind_name(kind)) +
                    " does not have exactly one output");
  return outs[0];
}

TensorRef Graph::constant(const TensorValue& value, const std::string& name) {
  return add(OpKind::kConst, {}, {{"value", value}}, name);
}

TensorRef Graph::placeholder(DType dtype, const Shape& shape,
                             const std::string& name) {
  return add(OpKind::kPlaceholder, {}, {{"dtype", dtype}, {"shape", shape}},
             name);
}

Graph::Variable Graph::new_variable(TensorRef initial, const std::string& name,
                                    bool trainable) {
  check_mutable();
  const Node& producer = node(initial.producer);
  const TensorSig& sig = producer.outputs[size_t(initial.output_index)];
  if (sig.shape.is_dynamic())
    throw Error(Code::kDynamicShapeInitializer,
                "variable initializer must have a concrete shape, got " +
                    sig.shape.to_string());
  std::string base = name.empty() ? "variable" : name;
  TensorRef var = add(OpKind::kVariableOp, {},
                      {{"dtype", sig.dtype}, {"shape", sig.shape}}, base);
  TensorRef assigned =
      add(OpKind::kAssign, {var, initial}, {},
          nodes_.at(var.producer).name + "/init");
  variables_.push_back(
      VariableEntry{var.producer, initial.producer, assigned.producer});
  if (trainable) add_to_collection("trainable_variables", var.producer);
  return Variable{var, assigned.producer};
}

Graph::Variable Graph::new_variable(const TensorValue& initial_value,
                                    const std::string& name, bool trainable) {
  std::string base = name.empty() ? "variable" : name;
  TensorRef init = constant(initial_value, base + "/initial_value");
  return new_variable(init, base, trainable);
}

NodeId Graph::initialize_all_variables() {
  std::set<NodeId> deps;
  for (const auto& v : variables_) deps.insert(v.assign);
  auto outs = add_node(OpKind::kNoOp, {}, {}, "init_all_variables", deps);
  (void)outs;
  return next_id_ - 1;
}

void Graph::push_scope(const std::string& scope) {
  scope_stack_.push_back(scope);
}

void Graph::pop_scope() {
  if (scope_stack_.empty())
    throw Error(Code::kInvalidArgument, "scope stack underflow");
  scope_stack_.pop_back();
}

const Node& Graph::node(NodeId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end())
    throw Error(Code::kDanglingInput, "no node with id " + std::to_string(id));
  return it->second;
}

std::optional<NodeId> Graph::find(const std::string& name) const {
  auto it = name_index_.find(name);
  if (it == name_index_.end()) return std::nullopt;
  return it->second;
}

TensorRef Graph::output_of(const std::string& name, int index) const {
  auto id = find(name);
  if (!id) throw Error(Code::kNameNotFound, name);
  return node(*id).out(index);
}

std::vector<NodeId> Graph::collection(const std::string& tag) const {
  auto it = collections_.find(tag);
  return it == collections_.end() ? std::vector<NodeId>{} : it->second;
}

void Graph::add_to_collection(const std::string& tag, NodeId id) {
  collections_[tag].push_back(id);
}

void Graph::set_device_constraint(NodeId id, const std::string& device) {
  check_mutable();
  auto it = nodes_.find(id);
  if (it == nodes_.end())
    throw Error(Code::kDanglingInput, "no node with id " + std::to_string(id));
  it->second.device_constraint = device;
}

std::vector<NodeId> Graph::consumers(NodeId id) const {
  std::vector<NodeId> out;
  for (const auto& [nid, n] : nodes_) {
    for (const TensorRef& in : n.inputs) {
      if (in.producer == id) {
        out.push_back(nid);
        break;
      }
    }
  }
  return out;
}

namespace {

bool attrs_equal(const AttrMap& a, const AttrMap& b) {
  if (a.size() != b.size()) return false;
  auto ia = a.begin();
  auto ib = b.begin();
  for (; ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (ia->second != ib->second) return false;
  }
  return true;
}

}  // namespace

bool Graph::structurally_equal(const Graph& other) const {
  if (nodes_.size() != other.nodes_.size()) return false;
  auto it = nodes_.begin();
  auto jt = other.nodes_.begin();
  for (; it != nodes_.end(); ++it, ++jt) {
    const Node& a = it->second;
    const Node& b = jt->second;
    if (a.id != b.id || a.kind != b.kind || a.name != b.name) return false;
    if (a.inputs.size() != b.inputs.size()) return false;
    for (size_t i = 0; i < a.inputs.size(); ++i)
      if (!(a.inputs[i] == b.inputs[i])) return false;
    if (a.control_inputs != b.control_inputs) return false;
    if (a.device_constraint != b.device_constraint) return false;
    if (!attrs_equal(a.attrs, b.attrs)) return false;
  }
  if (collections_ != other.collections_) return false;
  if (variables_.size() != other.variables_.size()) return false;
  for (size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].variable != other.variables_[i].variable ||
        variables_[i].initial != other.variables_[i].initial ||
        variables_[i].assign != other.variables_[i].assign)
      return false;
  }
  return true;
}

void Graph::insert_raw(Node node) {
  check_mutable();
  if (nodes_.count(node.id))
    throw Error(Code::kMalformedDocument,
                "duplicate node id " + std::to_string(node.id));
  if (name_index_.count(node.name))
    throw Error(Code::kDuplicateName, node.name);
  name_index_[node.name] = node.id;
  next_id_ = std::max(next_id_, node.id + 1);
  NodeId id = node.id;
  nodes_.emplace(id, std::move(node));
}

void Graph::erase_node(NodeId id) {
  check_mutable();
  auto it = nodes_.find(id);
  if (it == nodes_.end()) return;
  name_index_.erase(it->second.name);
  nodes_.erase(it);
  for (auto& [tag, ids] : collections_)
    ids.erase(std::remove(ids.begin(), ids.end(), id), ids.end());
}

void Graph::replace_input(NodeId consumer, const TensorRef& from,
                          const TensorRef& to) {
  check_mutable();
  auto it = nodes_.find(consumer);
  if (it == nodes_.end())
    throw Error(Code::kDanglingInput, "no consumer " + std::to_string(consumer));
  for (TensorRef& in : it->second.inputs) {
    if (in == from) {
      in.producer = to.producer;
      in.output_index = to.output_index;
    }
  }
}

TensorRef build_cross_entropy_rows(Graph& g, TensorRef labels,
                                   TensorRef estimates) {
  Graph::ScopeGuard scope(g, "cross_entropy");
  TensorRef logy = g.add(OpKind::kLog, {estimates}, {}, "log");
  TensorRef prod = g.add(OpKind::kMul, {labels, logy}, {}, "mul");
  int64_t last_axis = std::max(0, prod.shape.rank() - 1);
  TensorRef summed =
      g.add(OpKind::kReduceSum, {prod},
            {{"axes", std::vector<int64_t>{last_axis}}}, "row_sum");
  return g.add(OpKind::kNeg, {summed}, {}, "neg");
}

}  // namespace tg
