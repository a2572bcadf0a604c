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

#include "tinygraph/session.h"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <exception>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "json.hpp"
#include "tinygraph/checkpoint.h"
#include "tinygraph/kernels.h"

namespace tg {

namespace {

constexpr const char* kLocalDevice = "/worker:0/cpu:0";

using TensorKey = std::pair<NodeId, int>;

TensorKey key_of(const TensorRef& t) { return {t.producer, t.output_index}; }

struct Message {
  TensorValue value;
  double ready_us = 0;
  bool dead = false;
};

// All in-process channels share one lock: traffic is tiny and a single
// condition variable lets an executor sleep on "any of my recvs".
struct ChannelHub {
  std::mutex mu;
  std::condition_variable cv;
  std::map<std::string, std::deque<Message>> queues;
  bool closed = false;

  void push(const std::string& key, Message m) {
    {
      std::lock_guard<std::mutex> lock(mu);
      queues[key].push_back(std::move(m));
    }
    cv.notify_all();
  }
  void close() {
    {
      std::lock_guard<std::mutex> lock(mu);
      closed = true;
    }
    cv.notify_all();
  }
};

// Assign's first input names the variable being written; it is a handle, not
// a data read, so it neither forces the VariableOp to execute nor extends the
// closure (Fig.-3 semantics: initialization must not read the variable).
bool is_ref_input(const Node& n, size_t index) {
  return n.kind == OpKind::kAssign && index == 0;
}

// Backward transitive closure from the fetches; fed tensors cut traversal.
std::set<NodeId> compute_closure(const Graph& g,
                                 const std::vector<TensorRef>& fetches,
                                 const std::vector<NodeId>& targets,
                                 const std::set<TensorKey>& fed) {
  std::set<NodeId> closure;
  std::vector<NodeId> stack;
  auto push = [&](NodeId id) {
    if (closure.insert(id).second) stack.push_back(id);
  };
  for (const TensorRef& f : fetches) {
    if (fed.count(key_of(f))) continue;
    (void)g.node(f.producer);  // validates existence
    push(f.producer);
  }
  for (NodeId t : targets) {
    (void)g.node(t);
    push(t);
  }
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    const Node& n = g.node(id);
    for (size_t i = 0; i < n.inputs.size(); ++i) {
      if (is_ref_input(n, i) || fed.count(key_of(n.inputs[i]))) continue;
      push(n.inputs[i].producer);
    }
    for (NodeId c : n.control_inputs) push(c);
  }
  return closure;
}

// Priority order over the closure. Both variants are topological orders, so
// a single-device executor can run them front to back.
std::vector<NodeId> schedule_order(const Graph& g,
                                   const std::set<NodeId>& closure,
                                   const std::set<TensorKey>& fed,
                                   Schedule schedule) {
  // Dependency edges within the closure (data edges not cut by feeds, plus
  // control edges).
  std::map<NodeId, std::vector<NodeId>> consumers;
  for (NodeId id : closure) {
    const Node& n = g.node(id);
    for (size_t i = 0; i < n.inputs.size(); ++i) {
      const TensorRef& in = n.inputs[i];
      if (is_ref_input(n, i) || fed.count(key_of(in))) continue;
      if (closure.count(in.producer)) consumers[in.producer].push_back(id);
    }
    for (NodeId c : n.control_inputs)
      if (closure.count(c)) consumers[c].push_back(id);
  }

  std::map<NodeId, int64_t> rank;
  if (schedule == Schedule::kAlap) {
    // Longest remaining path to a fetched sink; deepest first = as late as
    // possible for everything off the critical path.
    std::map<NodeId, int64_t> depth;
    for (auto it = closure.rbegin(); it != closure.rend(); ++it) {
      int64_t d = 0;
      auto ci = consumers.find(*it);
      if (ci != consumers.end())
        for (NodeId c : ci->second) d = std::max(d, depth[c] + 1);
      depth[*it] = d;
      rank[*it] = -d;  // negate so ascending rank = descending depth
    }
  } else {
    std::map<NodeId, int64_t> level;
    for (NodeId id : closure) {
      const Node& n = g.node(id);
      int64_t l = 0;
      for (size_t i = 0; i < n.inputs.size(); ++i) {
        const TensorRef& in = n.inputs[i];
        if (is_ref_input(n, i) || fed.count(key_of(in))) continue;
        if (closure.count(in.producer))
          l = std::max(l, level[in.producer] + 1);
      }
      for (NodeId c : n.control_inputs)
        if (closure.count(c)) l = std::max(l, level[c] + 1);
      level[id] = l;
      rank[id] = l;
    }
  }

  std::vector<NodeId> order(closure.begin(), closure.end());
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    return rank[a] != rank[b] ? rank[a] < rank[b] : a < b;
  });
  return order;
}

struct ExecContext {
  const Graph* graph = nullptr;  // node ids below refer to this graph
  std::string device;
  std::vector<NodeId> order;
  const std::map<TensorKey, TensorValue>* feeds = nullptr;
  std::set<TensorKey> pinned;
  std::map<NodeId, TensorValue>* store = nullptr;  // keyed by origin node id
  std::function<NodeId(NodeId)> store_key;         // local id -> origin id
  const Graph* origin = nullptr;  // name/sig source for Save/Restore
  // Distributed only.
  ChannelHub* hub = nullptr;
  std::map<NodeId, const Channel*> sends;
  std::map<NodeId, const Channel*> recvs;
  const CostModel* cost_model = nullptr;
  int64_t batch_hint = 100;
  // Summary stamping.
  int64_t step = 0;
  double time_base_s = 0;
};

struct ExecResult {
  std::map<TensorKey, TensorValue> values;  // pinned tensors survive
  std::map<TensorKey, std::vector<EventRecord>> summaries;
  std::set<TensorKey> dead;
  RunTrace trace;
};

ExecResult execute(const ExecContext& ctx) {
  const Graph& g = *ctx.graph;
  ExecResult res;
  std::map<TensorKey, TensorValue> values;
  std::map<TensorKey, int> refcount;
  for (NodeId id : ctx.order) {
    const Node& n = g.node(id);
    for (size_t i = 0; i < n.inputs.size(); ++i) {
      TensorKey k = key_of(n.inputs[i]);
      if (!is_ref_input(n, i) && !ctx.feeds->count(k)) ++refcount[k];
    }
  }

  int64_t live = 0;
  double clock = 0;
  std::set<NodeId> done;

  auto release_inputs = [&](const Node& n) {
    for (size_t i = 0; i < n.inputs.size(); ++i) {
      TensorKey k = key_of(n.inputs[i]);
      if (is_ref_input(n, i) || ctx.feeds->count(k)) continue;
      auto rc = refcount.find(k);
      if (rc == refcount.end() || --rc->second > 0) continue;
      if (ctx.pinned.count(k)) continue;
      auto v = values.find(k);
      if (v != values.end()) {
        live -= int64_t(v->second.byte_size());
        values.erase(v);
      }
    }
  };

  auto store_output = [&](NodeId id, int index, TensorValue v) {
    live += int64_t(v.byte_size());
    values[{id, index}] = std::move(v);
    res.trace.peak_live_bytes = std::max(res.trace.peak_live_bytes, live);
  };

  auto input_value = [&](const TensorRef& in) -> const TensorValue& {
    TensorKey k = key_of(in);
    auto f = ctx.feeds->find(k);
    return f != ctx.feeds->end() ? f->second : values.at(k);
  };

  auto kill_outputs = [&](const Node& n) {
    for (int i = 0; i < int(n.outputs.size()); ++i) res.dead.insert({n.id, i});
  };

  size_t executed = 0;
  std::unique_lock<std::mutex> hub_lock;
  while (executed < ctx.order.size()) {
    NodeId pick = -1;
    Message incoming;
    bool got_message = false;
    if (ctx.hub) hub_lock = std::unique_lock<std::mutex>(ctx.hub->mu);
    for (NodeId id : ctx.order) {
      if (done.count(id)) continue;
      const Node& n = g.node(id);
      bool ready = true;
      for (size_t i = 0; i < n.inputs.size(); ++i) {
        TensorKey k = key_of(n.inputs[i]);
        if (is_ref_input(n, i) || ctx.feeds->count(k) || values.count(k) ||
            res.dead.count(k))
          continue;
        ready = false;
        break;
      }
      if (ready)
        for (NodeId c : n.control_inputs)
          if (!done.count(c)) {
            ready = false;
            break;
          }
      if (!ready) continue;
      if (n.kind == OpKind::kRecv) {
        if (!ctx.hub)
          throw Error(Code::kChannelClosed,
                      "recv node " + n.name + " outside a distributed run");
        auto& q = ctx.hub->queues[attr_string(n.attrs, "channel")];
        if (q.empty()) continue;  // message not yet arrived
        incoming = std::move(q.front());
        q.pop_front();
        got_message = true;
      }
      pick = id;
      break;
    }
    if (pick < 0) {
      if (!ctx.hub)
        throw Error(Code::kDeadlockDetected,
                    "no runnable node in an acyclic schedule");
      if (ctx.hub->closed)
        throw Error(Code::kChannelClosed,
                    "peer executor failed while " + ctx.device +
                        " was waiting on a channel");
      ctx.hub->cv.wait(hub_lock);
      hub_lock.unlock();
      continue;
    }
    if (hub_lock.owns_lock()) hub_lock.unlock();

    const Node& n = g.node(pick);
    done.insert(pick);
    ++executed;

    // Deadness: an untaken branch never executes and never shows in the
    // trace; Merge is the only kind that tolerates dead inputs.
    bool any_dead = false;
    for (size_t i = 0; i < n.inputs.size(); ++i)
      if (!is_ref_input(n, i) && res.dead.count(key_of(n.inputs[i])))
        any_dead = true;
    if ((any_dead && n.kind != OpKind::kMerge) ||
        (n.kind == OpKind::kRecv && got_message && incoming.dead)) {
      kill_outputs(n);
      if (n.kind == OpKind::kSend) {
        Message m;
        m.dead = true;
        ctx.hub->push(attr_string(n.attrs, "channel"), std::move(m));
      }
      release_inputs(n);
      continue;
    }

    double start = clock;
    if (n.kind == OpKind::kRecv) start = std::max(clock, incoming.ready_us);

    bool skip_trace = false;
    switch (n.kind) {
      case OpKind::kPlaceholder:
        throw Error(Code::kMissingFeed, "placeholder " + n.name + " not fed");
      case OpKind::kNoOp:
        break;
      case OpKind::kVariableOp: {
        NodeId key = ctx.store_key(pick);
        auto it = ctx.store->find(key);
        if (it == ctx.store->end())
          throw Error(Code::kUninitializedVariable,
                      "variable " + n.name + " read before initialization");
        store_output(pick, 0, it->second);
        break;
      }
      case OpKind::kAssign: {
        const TensorValue& v = input_value(n.inputs[1]);
        if (!n.outputs[0].shape.accepts(v.shape()) ||
            n.outputs[0].dtype != v.dtype())
          throw Error(Code::kRuntimeShapeMismatch,
                      "assign to " + n.name + " with shape " +
                          v.shape().to_string());
        (*ctx.store)[ctx.store_key(n.inputs[0].producer)] = v;
        store_output(pick, 0, v);
        break;
      }
      case OpKind::kSwitch: {
        const TensorValue& v = input_value(n.inputs[0]);
        bool taken = input_value(n.inputs[1]).at(0) != 0.0;
        store_output(pick, taken ? 1 : 0, v);
        res.dead.insert({pick, taken ? 0 : 1});
        break;
      }
      case OpKind::kMerge: {
        const TensorValue* alive = nullptr;
        for (const TensorRef& in : n.inputs) {
          if (res.dead.count(key_of(in))) continue;
          alive = &input_value(in);
          break;
        }
        if (!alive) {
          kill_outputs(n);
          skip_trace = true;
          break;
        }
        store_output(pick, 0, *alive);
        break;
      }
      case OpKind::kSave: {
        const auto& ids = attr_int_list(n.attrs, "var_ids");
        if (ids.size() != n.inputs.size())
          throw Error(Code::kInvalidArgument,
                      "save var_ids/input arity mismatch at " + n.name);
        std::vector<CheckpointEntry> entries;
        for (size_t i = 0; i < ids.size(); ++i)
          entries.push_back(CheckpointEntry{ctx.origin->node(ids[i]).name,
                                            input_value(n.inputs[i])});
        write_checkpoint(attr_string(n.attrs, "path"), entries);
        break;
      }
      case OpKind::kRestore: {
        auto entries = read_checkpoint(attr_string(n.attrs, "path"));
        for (int64_t id : attr_int_list(n.attrs, "var_ids")) {
          const Node& var = ctx.origin->node(id);
          const CheckpointEntry* found = nullptr;
          for (const CheckpointEntry& e : entries)
            if (e.name == var.name) found = &e;
          if (!found)
            throw Error(Code::kNameNotFound,
                        "checkpoint has no entry \"" + var.name + "\"");
          if (found->value.dtype() != var.outputs[0].dtype ||
              !var.outputs[0].shape.accepts(found->value.shape()))
            throw Error(Code::kShapeMismatchAtRestore,
                        "entry \"" + var.name + "\" has shape " +
                            found->value.shape().to_string() + ", expected " +
                            var.outputs[0].shape.to_string());
          (*ctx.store)[id] = found->value;
        }
        break;
      }
      case OpKind::kScalarSummary:
      case OpKind::kHistogramSummary: {
        const TensorValue& v = input_value(n.inputs[0]);
        EventRecord rec;
        rec.step = ctx.step;
        rec.tag = attr_string(n.attrs, "tag");
        if (n.kind == OpKind::kScalarSummary) {
          rec.kind = SummaryKind::kScalar;
          rec.scalar = v.at(0);
        } else {
          rec.kind = SummaryKind::kHistogram;
          rec.histogram = build_histogram(v);
        }
        rec.time = ctx.time_base_s + start * 1e-6;
        res.summaries[{pick, 0}] = {std::move(rec)};
        store_output(pick, 0, TensorValue::scalar(DType::kF32, 0.0));
        break;
      }
      case OpKind::kMergeSummaries: {
        std::vector<EventRecord> merged;
        for (const TensorRef& in : n.inputs) {
          auto it = res.summaries.find(key_of(in));
          if (it != res.summaries.end())
            merged.insert(merged.end(), it->second.begin(), it->second.end());
        }
        res.summaries[{pick, 0}] = std::move(merged);
        store_output(pick, 0, TensorValue::scalar(DType::kF32, 0.0));
        break;
      }
      case OpKind::kSend: {
        const Channel* ch = ctx.sends.at(pick);
        Message m;
        m.value = ch->control ? TensorValue::scalar(DType::kF32, 0.0)
                              : input_value(n.inputs[0]);
        m.ready_us =
            start + ctx.cost_model->transmission_us(
                        int64_t(m.value.byte_size()),
                        ctx.cost_model->device(ch->src_device));
        ctx.hub->push(ch->key, std::move(m));
        break;
      }
      case OpKind::kRecv:
        store_output(pick, 0, std::move(incoming.value));
        break;
      default: {
        std::vector<TensorValue> in_vals;
        in_vals.reserve(n.inputs.size());
        for (const TensorRef& in : n.inputs) in_vals.push_back(input_value(in));
        std::vector<TensorValue> outs = eval_kernel(n.kind, in_vals, n.attrs);
        for (size_t i = 0; i < outs.size(); ++i) {
          if (!n.outputs[i].shape.accepts(outs[i].shape()))
            throw Error(Code::kRuntimeShapeMismatch,
                        n.name + " produced shape " +
                            outs[i].shape().to_string() + ", declared " +
                            n.outputs[i].shape.to_string());
          store_output(pick, int(i), std::move(outs[i]));
        }
        break;
      }
    }

    if (skip_trace) {
      release_inputs(n);
      continue;
    }

    // Simulated timing: same size-based estimate the placement pass uses,
    // evaluated on the concrete shapes of this step.
    std::vector<TensorSig> in_sigs, out_sigs;
    for (size_t i = 0; i < n.inputs.size(); ++i) {
      const TensorRef& in = n.inputs[i];
      if (is_ref_input(n, i) || res.dead.count(key_of(in))) continue;
      TensorKey k = key_of(in);
      if (!ctx.feeds->count(k) && !values.count(k)) continue;
      const TensorValue& v = input_value(in);
      in_sigs.push_back(TensorSig{v.dtype(), v.shape()});
    }
    for (int i = 0; i < int(n.outputs.size()); ++i) {
      auto it = values.find({pick, i});
      if (it != values.end())
        out_sigs.push_back(TensorSig{it->second.dtype(), it->second.shape()});
    }
    double duration =
        default_op_time_us(n.kind, in_sigs, out_sigs, n.attrs, ctx.batch_hint);
    clock = start + duration;

    release_inputs(n);
    res.trace.steps.push_back(
        TraceStep{pick, n.name, ctx.device, start, clock, live});
  }

  res.values = std::move(values);
  return res;
}

void validate_feeds(const Graph& g, const FeedMap& feeds,
                    std::set<TensorKey>* fed,
                    std::map<TensorKey, TensorValue>* feed_values) {
  for (const auto& [ref, value] : feeds) {
    const Node& producer = g.node(ref.producer);
    if (ref.output_index < 0 ||
        ref.output_index >= int(producer.outputs.size()))
      throw Error(Code::kDanglingInput,
                  "feed references missing output of " + producer.name);
    const TensorSig& sig = producer.outputs[size_t(ref.output_index)];
    if (sig.dtype != value.dtype())
      throw Error(Code::kDTypeMismatch,
                  "feed for " + producer.name + " has dtype " +
                      dtype_name(value.dtype()) + ", declared " +
                      dtype_name(sig.dtype));
    if (!sig.shape.accepts(value.shape()))
      throw Error(Code::kShapeMismatchAtFeed,
                  "feed for " + producer.name + " has shape " +
                      value.shape().to_string() + ", declared " +
                      sig.shape.to_string());
    fed->insert(key_of(ref));
    (*feed_values)[key_of(ref)] = value;
  }
}

void check_placeholders_fed(const Graph& g, const std::set<NodeId>& closure) {
  for (NodeId id : closure) {
    const Node& n = g.node(id);
    if (n.kind == OpKind::kPlaceholder)
      throw Error(Code::kMissingFeed,
                  "placeholder " + n.name + " is in the run closure but unfed");
  }
}

}  // namespace

std::string RunTrace::to_jsonl() const {
  std::string out;
  for (const TraceStep& s : steps) {
    nlohmann::ordered_json j;
    j["node"] = s.node;
    j["name"] = s.name;
    j["device"] = s.device;
    j["start_us"] = s.start_us;
    j["end_us"] = s.end_us;
    j["live_bytes"] = s.live_bytes;
    out += j.dump();
    out += "\n";
  }
  return out;
}

Session::Session(Graph& graph) : graph_(&graph) { graph.freeze(); }

Session::Session(Graph& graph, CostModel cost_model, bool truncate_wire)
    : graph_(&graph),
      cost_model_(std::move(cost_model)),
      truncate_wire_(truncate_wire) {
  graph.freeze();
}

const TensorValue& Session::variable_value(NodeId id) const {
  auto it = variables_.find(id);
  if (it == variables_.end())
    throw Error(Code::kUninitializedVariable,
                "variable node " + std::to_string(id) + " has no value");
  return it->second;
}

const Placement& Session::placement(int64_t batch_hint) {
  if (!cost_model_)
    throw Error(Code::kInvalidArgument, "session was built without a fleet");
  if (!placement_) placement_ = place(*graph_, *cost_model_, batch_hint);
  return *placement_;
}

const PartitionedProgram& Session::program(int64_t batch_hint) {
  if (!program_)
    program_ = partition(*graph_, placement(batch_hint), truncate_wire_);
  return *program_;
}

std::vector<TensorValue> Session::run(const std::vector<TensorRef>& fetches,
                                      const FeedMap& feeds,
                                      const RunOptions& options) {
  ++run_count_;
  std::set<TensorKey> fed;
  std::map<TensorKey, TensorValue> feed_values;
  validate_feeds(*graph_, feeds, &fed, &feed_values);
  std::set<NodeId> closure =
      compute_closure(*graph_, fetches, options.targets, fed);
  check_placeholders_fed(*graph_, closure);

  ExecContext ctx;
  ctx.graph = graph_;
  ctx.device = kLocalDevice;
  ctx.order = schedule_order(*graph_, closure, fed, options.schedule);
  ctx.feeds = &feed_values;
  for (const TensorRef& f : fetches)
    if (!fed.count(key_of(f))) ctx.pinned.insert(key_of(f));
  ctx.store = &variables_;
  ctx.store_key = [](NodeId id) { return id; };
  ctx.origin = graph_;
  ctx.batch_hint = options.batch_hint;
  ctx.step = options.step;
  ctx.time_base_s = double(run_count_ - 1);

  ExecResult result = execute(ctx);
  trace_ = std::move(result.trace);

  std::vector<TensorValue> out;
  for (const TensorRef& f : fetches) {
    TensorKey k = key_of(f);
    if (fed.count(k)) {
      out.push_back(feed_values.at(k));
      continue;
    }
    if (result.dead.count(k))
      throw Error(Code::kInvalidArgument,
                  "fetched tensor is dead (untaken conditional branch)");
    out.push_back(result.values.at(k));
    auto s = result.summaries.find(k);
    if (s != result.summaries.end() && options.event_writer)
      for (const EventRecord& rec : s->second) options.event_writer->write(rec);
  }
  return out;
}

std::vector<TensorValue> Session::run_distributed(
    const std::vector<TensorRef>& fetches, const FeedMap& feeds,
    const RunOptions& options) {
  const Placement& pl = placement(options.batch_hint);
  const PartitionedProgram& prog = program(options.batch_hint);
  ++run_count_;

  std::set<TensorKey> fed;
  std::map<TensorKey, TensorValue> feed_values;
  validate_feeds(*graph_, feeds, &fed, &feed_values);
  std::set<NodeId> closure =
      compute_closure(*graph_, fetches, options.targets, fed);
  check_placeholders_fed(*graph_, closure);

  std::map<std::string, const Channel*> by_key;
  for (const Channel& ch : prog.channels) by_key[ch.key] = &ch;

  // Per-device execution sets: the closure's clones plus the channel
  // endpoints serving closure edges that cross devices.
  std::map<std::string, std::set<NodeId>> need;
  std::map<std::string, std::map<NodeId, const Channel*>> sends, recvs;
  for (NodeId id : closure) {
    const auto& [dev, sub] = prog.node_map.at(id);
    need[dev].insert(sub);
    const Node& n = graph_->node(id);
    for (size_t i = 0; i < n.inputs.size(); ++i) {
      const TensorRef& in = n.inputs[i];
      if (is_ref_input(n, i) || fed.count(key_of(in))) continue;
      const auto& [src_dev, src_sub] = prog.node_map.at(in.producer);
      if (src_dev == dev) continue;
      std::string key = "t" + std::to_string(in.producer) + ":" +
                        std::to_string(in.output_index) + "->" + dev;
      const Channel* ch = by_key.at(key);
      need[src_dev].insert(ch->send_node);
      if (ch->cast_node >= 0) need[src_dev].insert(ch->cast_node);
      need[dev].insert(ch->recv_node);
      sends[src_dev][ch->send_node] = ch;
      recvs[dev][ch->recv_node] = ch;
    }
    for (NodeId c : n.control_inputs) {
      const auto& [src_dev, src_sub] = prog.node_map.at(c);
      if (src_dev == dev) continue;
      std::string key = "c" + std::to_string(c) + "->" + dev;
      const Channel* ch = by_key.at(key);
      need[src_dev].insert(ch->send_node);
      need[dev].insert(ch->recv_node);
      sends[src_dev][ch->send_node] = ch;
      recvs[dev][ch->recv_node] = ch;
    }
  }

  // Translate feeds: the producer's clone, plus every recv carrying the fed
  // tensor (consumers on other devices read through those recvs).
  std::map<std::string, std::map<TensorKey, TensorValue>> device_feeds;
  for (auto& [k, v] : feed_values) {
    const auto& [dev, sub] = prog.node_map.at(k.first);
    device_feeds[dev][{sub, k.second}] = v;
    for (const Channel& ch : prog.channels)
      if (!ch.control && key_of(ch.source) == k)
        device_feeds[ch.dst_device][{ch.recv_node, 0}] = v;
  }

  // Fetch routing.
  std::map<std::string, std::set<TensorKey>> pinned;
  for (const TensorRef& f : fetches) {
    if (fed.count(key_of(f))) continue;
    const auto& [dev, sub] = prog.node_map.at(f.producer);
    pinned[dev].insert({sub, f.output_index});
  }

  // Reverse node map for variable-store keys.
  std::map<std::string, std::map<NodeId, NodeId>> sub_to_origin;
  for (const auto& [orig, loc] : prog.node_map)
    sub_to_origin[loc.first][loc.second] = orig;

  ChannelHub hub;
  struct Worker {
    std::string device;
    ExecContext ctx;
    ExecResult result;
    std::exception_ptr error;
  };
  std::vector<Worker> workers;
  for (const auto& [dev, nodes] : need) {
    if (nodes.empty()) continue;
    Worker w;
    w.device = dev;
    const Graph& sub = prog.subgraphs.at(dev);
    std::set<TensorKey> dev_fed;
    for (const auto& [k, v] : device_feeds[dev]) dev_fed.insert(k);
    w.ctx.graph = &sub;
    w.ctx.device = dev;
    w.ctx.order = schedule_order(sub, nodes, dev_fed, options.schedule);
    w.ctx.feeds = &device_feeds[dev];
    w.ctx.pinned = pinned[dev];
    w.ctx.store = &variables_;
    auto& rev = sub_to_origin[dev];
    w.ctx.store_key = [&rev](NodeId id) { return rev.at(id); };
    w.ctx.origin = graph_;
    w.ctx.hub = &hub;
    w.ctx.sends = sends[dev];
    w.ctx.recvs = recvs[dev];
    w.ctx.cost_model = &*cost_model_;
    w.ctx.batch_hint = options.batch_hint;
    w.ctx.step = options.step;
    w.ctx.time_base_s = double(run_count_ - 1);
    workers.push_back(std::move(w));
  }

  std::vector<std::thread> threads;
  threads.reserve(workers.size());
  for (Worker& w : workers) {
    threads.emplace_back([&w, &hub] {
      try {
        w.result = execute(w.ctx);
      } catch (...) {
        w.error = std::current_exception();
        hub.close();
      }
    });
  }
  for (std::thread& t : threads) t.join();

  // A real failure beats the ChannelClosed it caused elsewhere.
  std::exception_ptr first;
  for (const Worker& w : workers) {
    if (!w.error) continue;
    try {
      std::rethrow_exception(w.error);
    } catch (const Error& e) {
      if (!first || e.code() != Code::kChannelClosed) first = w.error;
      if (e.code() != Code::kChannelClosed) break;
    } catch (...) {
      first = w.error;
      break;
    }
  }
  if (first) std::rethrow_exception(first);

  trace_ = RunTrace{};
  for (const Worker& w : workers) {
    trace_.steps.insert(trace_.steps.end(), w.result.trace.steps.begin(),
                        w.result.trace.steps.end());
    trace_.peak_live_bytes =
        std::max(trace_.peak_live_bytes, w.result.trace.peak_live_bytes);
  }

  std::vector<TensorValue> out;
  for (const TensorRef& f : fetches) {
    TensorKey k = key_of(f);
    if (fed.count(k)) {
      out.push_back(feed_values.at(k));
      continue;
    }
    const auto& [dev, sub] = prog.node_map.at(f.producer);
    const Worker* owner = nullptr;
    for (const Worker& w : workers)
      if (w.device == dev) owner = &w;
    TensorKey local{sub, f.output_index};
    if (owner->result.dead.count(local))
      throw Error(Code::kInvalidArgument,
                  "fetched tensor is dead (untaken conditional branch)");
    out.push_back(owner->result.values.at(local));
    auto s = owner->result.summaries.find(local);
    if (s != owner->result.summaries.end() && options.event_writer)
      for (const EventRecord& rec : s->second) options.event_writer->write(rec);
  }
  (void)pl;
  return out;
}

}  // namespace tg
