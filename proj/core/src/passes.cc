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

#include "tinygraph/passes.h"

#include <algorithm>
#include <cstring>
#include <sstream>

namespace tg {

namespace {

void append_attr(std::ostringstream& os, const AttrValue& v) {
  struct Visitor {
    std::ostringstream& os;
    void operator()(int64_t x) { os << "i" << x; }
    void operator()(double x) {
      // Bit pattern, so -0.0 and NaN payloads distinguish.
      uint64_t bits;
      std::memcpy(&bits, &x, sizeof bits);
      os << "f" << bits;
    }
    void operator()(const std::string& x) { os << "s" << x.size() << ":" << x; }
    void operator()(const std::vector<int64_t>& x) {
      os << "l";
      for (int64_t d : x) os << d << ",";
    }
    void operator()(const Shape& x) { os << "h" << x.to_string(); }
    void operator()(DType x) { os << "d" << dtype_name(x); }
    void operator()(const TensorValue& x) {
      os << "t" << dtype_name(x.dtype()) << x.shape().to_string() << ":";
      if (x.dtype() == DType::kF32) {
        for (float f : x.f32()) {
          uint32_t bits;
          std::memcpy(&bits, &f, sizeof bits);
          os << bits << ",";
        }
      } else {
        for (double f : x.f64()) {
          uint64_t bits;
          std::memcpy(&bits, &f, sizeof bits);
          os << bits << ",";
        }
      }
    }
  };
  std::visit(Visitor{os}, v);
}

// Structural identity key: kind, attrs, ordered data inputs, control inputs
// and device pin. Names are deliberately excluded.
std::string node_signature(const Node& n) {
  std::ostringstream os;
  os << op_kind_name(n.kind) << "|";
  for (const TensorRef& in : n.inputs)
    os << in.producer << ":" << in.output_index << ",";
  os << "|";
  for (NodeId c : n.control_inputs) os << c << ",";
  os << "|";
  for (const auto& [key, value] : n.attrs) {
    os << key << "=";
    append_attr(os, value);
    os << ";";
  }
  os << "|" << n.device_constraint.value_or("");
  return os.str();
}

}  // namespace

std::pair<Graph, CseReport> eliminate_common_subgraphs(const Graph& graph) {
  Graph g = graph.clone_unfrozen();
  CseReport report;
  for (;;) {
    ++report.rounds;
    std::map<std::string, NodeId> seen;
    std::vector<std::pair<NodeId, NodeId>> merges;  // duplicate -> survivor
    for (const auto& [id, n] : g.nodes()) {
      if (op_def(n.kind).stateful) continue;
      std::string key = node_signature(n);
      auto [it, inserted] = seen.emplace(std::move(key), id);
      if (!inserted) merges.emplace_back(id, it->second);
    }
    if (merges.empty()) break;
    for (const auto& [dup, survivor] : merges) {
      const Node& d = g.node(dup);
      int n_outputs = static_cast<int>(d.outputs.size());
      for (NodeId consumer : g.consumers(dup)) {
        for (int i = 0; i < n_outputs; ++i)
          g.replace_input(consumer, TensorRef{dup, i, DType::kF32, Shape()},
                          TensorRef{survivor, i, DType::kF32, Shape()});
      }
      g.remap_control_inputs(dup, survivor);
      g.remap_collection_refs(dup, survivor);
      g.remap_variable_node(dup, survivor);
      g.erase_node(dup);
    }
    report.merged_nodes += static_cast<int>(merges.size());
  }
  return {std::move(g), report};
}

// ---------------------------------------------------------------------------
// Cost model
// ---------------------------------------------------------------------------

const Device& CostModel::device(const std::string& name) const {
  for (const Device& d : fleet_)
    if (d.name == name) return d;
  throw Error(Code::kNoFeasibleDevice, "unknown device " + name);
}

int64_t CostModel::tensor_bytes(const TensorSig& sig,
                                int64_t batch_hint) const {
  return sig.shape.num_elements_hint(batch_hint) *
         static_cast<int64_t>(dtype_size(sig.dtype));
}

double default_op_time_us(OpKind kind, const std::vector<TensorSig>& inputs,
                          const std::vector<TensorSig>& outputs,
                          const AttrMap& attrs, int64_t batch_hint) {
  if (kind == OpKind::kMatMul && inputs.size() == 2) {
    bool ta = attr_int(attrs, "transpose_a", 0) != 0;
    bool tb = attr_int(attrs, "transpose_b", 0) != 0;
    auto dim = [&](const Shape& s, int i) {
      int64_t d = s.dim(i);
      return d == kDynamicDim ? batch_hint : d;
    };
    const Shape& a = inputs[0].shape;
    const Shape& b = inputs[1].shape;
    if (a.rank() == 2 && b.rank() == 2) {
      int64_t n = dim(a, ta ? 1 : 0);
      int64_t k = dim(a, ta ? 0 : 1);
      int64_t m = dim(b, tb ? 0 : 1);
      return double(n) * double(m) * double(k) / 1000.0;
    }
  }
  double elements = 0;
  for (const TensorSig& out : outputs)
    elements += double(out.shape.num_elements_hint(batch_hint));
  return elements / 1000.0;  // 1 us per 1k elements
}

double CostModel::op_time_us(const Device& d, const Node& node,
                             int64_t batch_hint) const {
  if (!d.supports(node.kind)) return kInfiniteCost;
  auto it = d.per_op_time.find(node.kind);
  if (it != d.per_op_time.end()) return it->second;
  std::vector<TensorSig> input_sigs;
  input_sigs.reserve(node.inputs.size());
  for (const TensorRef& in : node.inputs)
    input_sigs.push_back(TensorSig{in.dtype, in.shape});
  return default_op_time_us(node.kind, input_sigs, node.outputs, node.attrs,
                            batch_hint);
}

double CostModel::transmission_us(int64_t bytes, const Device& source) const {
  return double(bytes) / source.bandwidth + latency_us_;
}

std::vector<Device> make_default_fleet(int workers) {
  std::vector<Device> fleet;
  for (int i = 0; i < workers; ++i) {
    Device d;
    d.name = "/worker:" + std::to_string(i) + "/cpu:0";
    fleet.push_back(std::move(d));
  }
  return fleet;
}

// ---------------------------------------------------------------------------
// Placement
// ---------------------------------------------------------------------------

Placement place(const Graph& graph, const CostModel& cost_model,
                int64_t batch_hint) {
  const std::vector<Device>& fleet = cost_model.fleet();
  if (fleet.empty())
    throw Error(Code::kNoFeasibleDevice, "empty device fleet");
  // Stable lexicographic device order for tie-breaking.
  std::vector<const Device*> order;
  for (const Device& d : fleet) order.push_back(&d);
  std::sort(order.begin(), order.end(),
            [](const Device* a, const Device* b) { return a->name < b->name; });

  Placement placement;
  for (const auto& [id, n] : graph.nodes()) {
    PlacementRow row;
    row.node = id;
    const Device* best = nullptr;
    double best_cost = kInfiniteCost;
    for (const Device* d : order) {
      double cost = cost_model.op_time_us(*d, n, batch_hint);
      if (cost != kInfiniteCost) {
        for (const TensorRef& in : n.inputs) {
          const std::string& src = placement.assignment.at(in.producer);
          if (src == d->name) continue;
          int64_t bytes =
              cost_model.tensor_bytes(TensorSig{in.dtype, in.shape}, batch_hint);
          cost += cost_model.transmission_us(bytes, cost_model.device(src));
        }
      }
      row.costs.emplace_back(d->name, cost);
      if (cost < best_cost) {
        best_cost = cost;
        best = d;
      }
    }
    // An Assign mutates its variable's storage in place, so it always lives
    // with the variable regardless of the cost table.
    if (n.kind == OpKind::kAssign && !n.inputs.empty()) {
      const std::string& var_dev = placement.assignment.at(n.inputs[0].producer);
      for (const Device* d : order)
        if (d->name == var_dev) best = d;
    }
    if (n.device_constraint) {
      const std::string& pin = *n.device_constraint;
      const Device* pinned = nullptr;
      for (const Device* d : order)
        if (d->name == pin) pinned = d;
      if (!pinned || !pinned->supports(n.kind))
        throw Error(Code::kConstraintInfeasible,
                    "node " + n.name + " pinned to " + pin +
                        (pinned ? " which lacks the kernel" : " which is not in the fleet"));
      best = pinned;
    } else if (!best) {
      throw Error(Code::kNoFeasibleDevice,
                  "no device implements " + std::string(op_kind_name(n.kind)) +
                      " for node " + n.name);
    }
    row.chosen = best->name;
    placement.assignment[id] = best->name;
    placement.report.push_back(std::move(row));
  }
  return placement;
}

std::string Placement::csv(const Graph& graph) const {
  std::ostringstream os;
  os << "node,name,chosen";
  if (!report.empty())
    for (const auto& [dev, cost] : report.front().costs) os << "," << dev;
  os << "\n";
  for (const PlacementRow& row : report) {
    os << row.node << "," << graph.node(row.node).name << "," << row.chosen;
    for (const auto& [dev, cost] : row.costs) {
      os << ",";
      if (cost == kInfiniteCost)
        os << "inf";
      else
        os << cost;
    }
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Partitioning
// ---------------------------------------------------------------------------

namespace {

struct SubgraphBuilder {
  Graph graph;
  NodeId next_id = 0;

  NodeId insert(Node n) {
    n.id = next_id++;
    NodeId id = n.id;
    graph.insert_raw(std::move(n));
    return id;
  }
};

}  // namespace

PartitionedProgram partition(const Graph& graph, const Placement& placement,
                             bool truncate) {
  PartitionedProgram program;
  std::map<std::string, SubgraphBuilder> builders;
  // (source tensor | control node, destination device) -> channel index;
  // this is the recv canonicalization: at most one recv per destination.
  std::map<std::pair<std::string, std::string>, size_t> channel_index;

  auto data_key = [](const TensorRef& t) {
    return "t" + std::to_string(t.producer) + ":" +
           std::to_string(t.output_index);
  };

  auto ensure_data_channel = [&](const TensorRef& source,
                                 const std::string& dst) -> size_t {
    auto mkey = std::make_pair(data_key(source), dst);
    auto found = channel_index.find(mkey);
    if (found != channel_index.end()) return found->second;

    const auto& [src_dev, src_sub_id] = program.node_map.at(source.producer);
    SubgraphBuilder& src_b = builders.at(src_dev);
    SubgraphBuilder& dst_b = builders[dst];

    Channel ch;
    ch.key = mkey.first + "->" + dst;
    ch.source = source;
    ch.dtype = source.dtype;
    ch.truncate = truncate && source.dtype == DType::kF32;
    ch.src_device = src_dev;
    ch.dst_device = dst;

    TensorRef wire{src_sub_id, source.output_index, source.dtype, source.shape};
    if (ch.truncate) {
      Node cast;
      cast.kind = OpKind::kCastTruncate16;
      cast.name = "cast16_" + ch.key;
      cast.inputs = {wire};
      cast.outputs = {TensorSig{source.dtype, source.shape}};
      ch.cast_node = src_b.insert(std::move(cast));
      wire = TensorRef{ch.cast_node, 0, source.dtype, source.shape};
    }

    Node send;
    send.kind = OpKind::kSend;
    send.name = "send_" + ch.key;
    send.inputs = {wire};
    send.attrs["channel"] = ch.key;
    ch.send_node = src_b.insert(std::move(send));

    Node recv;
    recv.kind = OpKind::kRecv;
    recv.name = "recv_" + ch.key;
    recv.attrs["channel"] = ch.key;
    recv.attrs["dtype"] = source.dtype;
    recv.attrs["shape"] = source.shape;
    recv.outputs = {TensorSig{source.dtype, source.shape}};
    ch.recv_node = dst_b.insert(std::move(recv));

    program.channels.push_back(std::move(ch));
    size_t index = program.channels.size() - 1;
    channel_index.emplace(std::move(mkey), index);
    return index;
  };

  auto ensure_control_channel = [&](NodeId source,
                                    const std::string& dst) -> size_t {
    auto mkey = std::make_pair("c" + std::to_string(source), dst);
    auto found = channel_index.find(mkey);
    if (found != channel_index.end()) return found->second;

    const auto& [src_dev, src_sub_id] = program.node_map.at(source);
    SubgraphBuilder& src_b = builders.at(src_dev);
    SubgraphBuilder& dst_b = builders[dst];

    Channel ch;
    ch.key = mkey.first + "->" + dst;
    ch.control = true;
    ch.src_device = src_dev;
    ch.dst_device = dst;

    Node send;
    send.kind = OpKind::kSend;
    send.name = "send_" + ch.key;
    send.control_inputs = {src_sub_id};
    send.attrs["channel"] = ch.key;
    send.attrs["control"] = int64_t{1};
    ch.send_node = src_b.insert(std::move(send));

    // The recv produces a scalar token consumed only through control edges.
    Node recv;
    recv.kind = OpKind::kRecv;
    recv.name = "recv_" + ch.key;
    recv.attrs["channel"] = ch.key;
    recv.attrs["control"] = int64_t{1};
    recv.attrs["dtype"] = DType::kF32;
    recv.attrs["shape"] = Shape::scalar();
    recv.outputs = {TensorSig{DType::kF32, Shape::scalar()}};
    ch.recv_node = dst_b.insert(std::move(recv));

    program.channels.push_back(std::move(ch));
    size_t index = program.channels.size() - 1;
    channel_index.emplace(std::move(mkey), index);
    return index;
  };

  // Node ids are a topological order, so producers are always cloned before
  // consumers and channel endpoints can be appended on the fly.
  for (const auto& [id, n] : graph.nodes()) {
    const std::string& dev = placement.assignment.at(id);
    SubgraphBuilder& b = builders[dev];

    Node clone;
    clone.kind = n.kind;
    clone.name = n.name;
    clone.attrs = n.attrs;
    clone.device_constraint = n.device_constraint;
    clone.outputs = n.outputs;
    for (const TensorRef& in : n.inputs) {
      const auto& [in_dev, in_sub_id] = program.node_map.at(in.producer);
      if (in_dev == dev) {
        clone.inputs.push_back(
            TensorRef{in_sub_id, in.output_index, in.dtype, in.shape});
      } else {
        size_t ch = ensure_data_channel(in, dev);
        clone.inputs.push_back(TensorRef{program.channels[ch].recv_node, 0,
                                         in.dtype, in.shape});
      }
    }
    for (NodeId c : n.control_inputs) {
      const auto& [c_dev, c_sub_id] = program.node_map.at(c);
      if (c_dev == dev) {
        clone.control_inputs.insert(c_sub_id);
      } else {
        size_t ch = ensure_control_channel(c, dev);
        clone.control_inputs.insert(program.channels[ch].recv_node);
      }
    }
    NodeId sub_id = b.insert(std::move(clone));
    program.node_map[id] = {dev, sub_id};
  }

  for (auto& [dev, b] : builders)
    program.subgraphs.emplace(dev, std::move(b.graph));
  return program;
}

}  // namespace tg
