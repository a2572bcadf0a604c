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

#ifndef TINYGRAPH_SESSION_H_
#define TINYGRAPH_SESSION_H_

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tinygraph/graph.h"
#include "tinygraph/passes.h"
#include "tinygraph/summary.h"

namespace tg {

struct TraceStep {
  NodeId node;
  std::string name;
  std::string device;
  double start_us = 0;
  double end_us = 0;
  int64_t live_bytes = 0;  // after this step's buffer releases
};

struct RunTrace {
  std::vector<TraceStep> steps;
  int64_t peak_live_bytes = 0;

  bool executed(NodeId node) const {
    for (const TraceStep& s : steps)
      if (s.node == node) return true;
    return false;
  }
  std::string to_jsonl() const;
};

enum class Schedule : uint8_t { kAlap, kAsap };

struct RunOptions {
  Schedule schedule = Schedule::kAlap;
  // Nodes to execute for effect only (train steps, Save/Restore, NoOp);
  // they join the closure like fetches but return no value.
  std::vector<NodeId> targets;
  // Stamped onto summary records emitted by this run.
  int64_t step = 0;
  // Destination for fetched summary records; unwritten when null.
  EventWriter* event_writer = nullptr;
  // Dynamic-dimension resolution for placement/cost purposes.
  int64_t batch_hint = 100;
};

using FeedMap = std::vector<std::pair<TensorRef, TensorValue>>;

// Owns variable state across run() calls. The graph is frozen on first use
// and must outlive the session. Externally synchronized: one run at a time.
class Session {
 public:
  explicit Session(Graph& graph);
  // Distributed-capable session; placement and partition are derived lazily
  // from the cost model on first run_distributed().
  Session(Graph& graph, CostModel cost_model, bool truncate_wire = false);

  std::vector<TensorValue> run(const std::vector<TensorRef>& fetches,
                               const FeedMap& feeds = {},
                               const RunOptions& options = {});

  // Master/worker execution of the partitioned program: one concurrent
  // executor per device, communicating only through in-process channels.
  std::vector<TensorValue> run_distributed(
      const std::vector<TensorRef>& fetches, const FeedMap& feeds = {},
      const RunOptions& options = {});

  const RunTrace& last_trace() const { return trace_; }
  const Graph& graph() const { return *graph_; }

  const Placement& placement(int64_t batch_hint = 100);
  const PartitionedProgram& program(int64_t batch_hint = 100);

  bool has_variable(NodeId id) const { return variables_.count(id) > 0; }
  const TensorValue& variable_value(NodeId id) const;

 private:
  Graph* graph_;
  std::map<NodeId, TensorValue> variables_;
  std::optional<CostModel> cost_model_;
  bool truncate_wire_ = false;
  std::optional<Placement> placement_;
  std::optional<PartitionedProgram> program_;
  RunTrace trace_;
  int64_t run_count_ = 0;
};

}  // namespace tg

#endif  // TINYGRAPH_SESSION_H_
