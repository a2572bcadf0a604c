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

#ifndef TINYGRAPH_PASSES_H_
#define TINYGRAPH_PASSES_H_

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tinygraph/graph.h"

namespace tg {

// ---------------------------------------------------------------------------
// Common subgraph elimination
// ---------------------------------------------------------------------------

struct CseReport {
  int merged_nodes = 0;
  int rounds = 0;
};

// Merges stateless nodes with identical (kind, attrs, ordered inputs,
// control inputs), redirecting consumers to the lowest-id survivor, repeated
// to fixpoint. Returns a rewritten copy; the input graph is untouched.
std::pair<Graph, CseReport> eliminate_common_subgraphs(const Graph& graph);

// ---------------------------------------------------------------------------
// Devices and cost model
// ---------------------------------------------------------------------------

// Simulated execution unit. Names follow the "/worker:<label>/cpu:<index>"
// convention and must be unique within a fleet.
struct Device {
  std::string name;
  // Empty set means every OpKind is implemented.
  std::set<OpKind> kernel_table;
  // Optional per-kind simulated-microsecond overrides; kinds not listed fall
  // back to the built-in size-based estimate.
  std::map<OpKind, double> per_op_time;
  // Bytes per simulated microsecond on this device's outgoing links.
  double bandwidth = 1000.0;  // 1 GB/s

  bool supports(OpKind kind) const {
    return kernel_table.empty() || kernel_table.count(kind) > 0;
  }
};

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

class CostModel {
 public:
  CostModel() = default;
  explicit CostModel(std::vector<Device> fleet, double latency_us = 50.0)
      : fleet_(std::move(fleet)), latency_us_(latency_us) {}

  const std::vector<Device>& fleet() const { return fleet_; }
  const Device& device(const std::string& name) const;

  // Tensor size with dynamic dims resolved via the batch hint.
  int64_t tensor_bytes(const TensorSig& sig, int64_t batch_hint) const;

  // Simulated kernel time on `d`. Infinite exactly when the kernel table
  // lacks the kind.
  double op_time_us(const Device& d, const Node& node, int64_t batch_hint) const;

  // Cross-device transfer estimate: bytes / source bandwidth + fixed latency.
  double transmission_us(int64_t bytes, const Device& source) const;

  double latency_us() const { return latency_us_; }

 private:
  std::vector<Device> fleet_;
  double latency_us_ = 50.0;
};

// Built-in per-node time estimate (also used for trace timing): element-wise
// ops cost 1 us per 1k output elements; MatMul costs n*m*k/1000 us.
double default_op_time_us(OpKind kind, const std::vector<TensorSig>& inputs,
                          const std::vector<TensorSig>& outputs,
                          const AttrMap& attrs, int64_t batch_hint);

// A fleet of `workers` single-CPU workers with default constants.
std::vector<Device> make_default_fleet(int workers);

// ---------------------------------------------------------------------------
// Placement
// ---------------------------------------------------------------------------

struct PlacementRow {
  NodeId node;
  std::string chosen;
  std::vector<std::pair<std::string, double>> costs;  // per device
};

struct Placement {
  std::map<NodeId, std::string> assignment;
  std::vector<PlacementRow> report;

  std::string csv(const Graph& graph) const;
};

// Greedy topological sweep: per node, cost(d) = kernel availability +
// simulated time + transmission from already-placed input producers; argmin
// with lexicographic device-name tie-break. device_constraint pins with
// validation.
Placement place(const Graph& graph, const CostModel& cost_model,
                int64_t batch_hint = 100);

// ---------------------------------------------------------------------------
// Partitioning
// ---------------------------------------------------------------------------

struct Channel {
  std::string key;
  TensorRef source;  // tensor in the original graph; unset for control
  bool control = false;
  bool truncate = false;  // F32 wire truncation applied at the send side
  DType dtype = DType::kF32;
  std::string src_device;
  std::string dst_device;
  NodeId send_node;   // id within the source device subgraph
  NodeId recv_node;   // id within the destination device subgraph
  NodeId cast_node = -1;  // CastTruncate16 ahead of the send, if any
};

struct PartitionedProgram {
  // Device name -> subgraph. Node names are preserved from the input graph.
  std::map<std::string, Graph> subgraphs;
  std::vector<Channel> channels;
  // Original node id -> (device, subgraph node id).
  std::map<NodeId, std::pair<std::string, NodeId>> node_map;
};

// Rewrites every cross-device data edge into a send/recv channel pair,
// canonicalized to at most one recv per (producer tensor, destination
// device). Cross-device control edges become token channels. When `truncate`
// is set, F32 channels pass through CastTruncate16 on the sending side.
PartitionedProgram partition(const Graph& graph, const Placement& placement,
                             bool truncate = false);

}  // namespace tg

#endif  // TINYGRAPH_PASSES_H_
