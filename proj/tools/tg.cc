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

// tg: command-line front end. `tg train` runs the softmax-regression demo
// (optionally on a simulated multi-device fleet); `tg graph` exposes the
// rewrite passes on serialized graphs.
//
// Exit codes: 0 success, 1 usage error, 2 bad input data, 3 runtime failure.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tinygraph/autodiff.h"
#include "tinygraph/dataset.h"
#include "tinygraph/dot_export.h"
#include "tinygraph/graph.h"
#include "tinygraph/graph_json.h"
#include "tinygraph/optimizer.h"
#include "tinygraph/passes.h"
#include "tinygraph/rng.h"
#include "tinygraph/session.h"
#include "tinygraph/summary.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

int exit_code_for(const tg::Error& e) {
  switch (e.code()) {
    case tg::Code::kMalformedDocument:
    case tg::Code::kUnknownOpKind:
    case tg::Code::kNameNotFound:
    case tg::Code::kChecksumMismatch:
      return kExitData;
    default:
      return kExitRuntime;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw tg::Error(tg::Code::kNameNotFound, "cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f)
    throw tg::Error(tg::Code::kInvalidArgument, "cannot write " + path);
  f << text;
}

// --data syntax: "synthetic:k=10,d=784,n=5000,sep=3.0,seed=7"
//            or  "idx:images=<path>,labels=<path>"
tg::Dataset load_dataset(const std::string& spec, tg::DType dtype) {
  auto colon = spec.find(':');
  std::string kind = spec.substr(0, colon);
  std::map<std::string, std::string> kv;
  if (colon != std::string::npos) {
    std::stringstream rest(spec.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
      auto eq = item.find('=');
      if (eq == std::string::npos)
        throw tg::Error(tg::Code::kInvalidArgument,
                        "bad --data parameter \"" + item + "\"");
      kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }
  auto get = [&](const std::string& key, const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  };
  if (kind == "synthetic") {
    return tg::make_synthetic(
        std::stoll(get("k", "10")), std::stoll(get("d", "784")),
        std::stoll(get("n", "5000")), std::stod(get("sep", "3.0")),
        std::stoull(get("seed", "7")), dtype);
  }
  if (kind == "idx") {
    if (!kv.count("images") || !kv.count("labels"))
      throw tg::Error(tg::Code::kInvalidArgument,
                      "idx data needs images= and labels= paths");
    return tg::load_idx(kv.at("images"), kv.at("labels"), dtype);
  }
  throw tg::Error(tg::Code::kInvalidArgument,
                  "unknown data source \"" + kind + "\"");
}

tg::CostModel load_fleet(const std::string& fleet_path, int devices) {
  if (fleet_path.empty())
    return tg::CostModel(tg::make_default_fleet(devices));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(fleet_path));
  } catch (const nlohmann::json::exception& e) {
    throw tg::Error(tg::Code::kMalformedDocument,
                    "fleet file: " + std::string(e.what()));
  }
  std::vector<tg::Device> fleet;
  for (const auto& d : doc.at("devices")) {
    tg::Device dev;
    dev.name = d.at("name").get<std::string>();
    if (d.contains("bandwidth")) dev.bandwidth = d.at("bandwidth").get<double>();
    if (d.contains("kernels"))
      for (const auto& k : d.at("kernels"))
        dev.kernel_table.insert(tg::op_kind_from_name(k.get<std::string>()));
    if (d.contains("per_op_time"))
      for (auto it = d.at("per_op_time").begin(); it != d.at("per_op_time").end();
           ++it)
        dev.per_op_time[tg::op_kind_from_name(it.key())] =
            it.value().get<double>();
    fleet.push_back(std::move(dev));
  }
  double latency = doc.value("latency_us", 50.0);
  return tg::CostModel(std::move(fleet), latency);
}

struct TrainFlags {
  std::string data = "synthetic:k=10,d=784,n=5000,sep=3.0,seed=7";
  int64_t steps = 1000;
  int64_t batch = 100;
  double lr = 0.5;
  uint64_t seed = 1;
  int devices = 1;
  std::string fleet;
  bool truncate_wire = false;
  std::string checkpoint;
  int64_t checkpoint_every = 0;
  std::string events;
  std::string dtype_name = "f32";
  bool zero_init = false;
  bool resume = false;
};

// The walkthrough model: y = softmax(X W + b), mean cross-entropy loss,
// accuracy via ArgMax/Equal/ReduceMean, SGD train step, plus bookkeeping
// nodes for checkpoints and summaries.
struct Model {
  tg::TensorRef x, labels, loss, accuracy;
  tg::TensorRef w, b;
  tg::NodeId train_step = -1, init = -1;
  tg::NodeId save = -1, restore = -1, set_step = -1;
  tg::TensorRef step_ph;
  tg::NodeId step_var = -1;
  std::optional<tg::TensorRef> merged;
};

Model build_model(tg::Graph& g, int64_t d, int64_t k, const TrainFlags& f) {
  tg::DType dtype = f.dtype_name == "f64" ? tg::DType::kF64 : tg::DType::kF32;
  Model m;
  m.x = g.placeholder(dtype, tg::Shape{tg::kDynamicDim, d}, "x");
  m.labels = g.placeholder(dtype, tg::Shape{tg::kDynamicDim, k}, "labels");

  tg::TensorValue w0(dtype, tg::Shape{d, k});
  tg::TensorValue b0(dtype, tg::Shape{k});
  if (!f.zero_init) {
    tg::Rng rng(f.seed);
    for (int64_t i = 0; i < d * k; ++i) w0.set(i, rng.uniform());
    for (int64_t i = 0; i < k; ++i) b0.set(i, 0.1);
  }
  auto W = g.new_variable(w0, "W");
  auto B = g.new_variable(b0, "b");
  m.w = W.value;
  m.b = B.value;

  tg::TensorRef y;
  {
    tg::Graph::ScopeGuard scope(g, "model");
    tg::TensorRef logits = g.add(
        tg::OpKind::kAdd, {g.add(tg::OpKind::kMatMul, {m.x, m.w}, {}, "xw"), m.b},
        {}, "logits");
    y = g.add(tg::OpKind::kSoftmax, {logits}, {}, "y");
  }
  tg::TensorRef ce = tg::build_cross_entropy_rows(g, m.labels, y);
  m.loss = g.add(tg::OpKind::kReduceMean, {ce},
                 {{"axes", std::vector<int64_t>{0}}}, "loss");
  {
    tg::Graph::ScopeGuard scope(g, "metrics");
    tg::TensorRef pred =
        g.add(tg::OpKind::kArgMax, {y}, {{"axis", int64_t{1}}}, "prediction");
    tg::TensorRef truth = g.add(tg::OpKind::kArgMax, {m.labels},
                                {{"axis", int64_t{1}}}, "truth");
    tg::TensorRef hits = g.add(tg::OpKind::kEqual, {pred, truth}, {}, "hits");
    m.accuracy = g.add(tg::OpKind::kReduceMean, {hits},
                       {{"axes", std::vector<int64_t>{0}}}, "accuracy");
  }

  if (!f.events.empty()) {
    tg::scalar_summary(g, "loss", m.loss);
    tg::histogram_summary(g, "W", m.w);
    m.merged = tg::merge_all_summaries(g);
  }

  tg::OptimizerConfig cfg;
  cfg.learning_rate = f.lr;
  m.train_step = tg::minimize(g, m.loss, cfg);
  m.init = g.initialize_all_variables();

  // Checkpoint plumbing: a resumable run persists W, b and a global step
  // counter. The Save reads the counter through the Assign's output so the
  // fresh value is what lands in the file.
  if (!f.checkpoint.empty()) {
    auto step_var =
        g.new_variable(tg::TensorValue::scalar(dtype, 0), "global_step",
                       /*trainable=*/false);
    m.step_var = step_var.value.producer;
    m.step_ph = g.placeholder(dtype, tg::Shape::scalar(), "step_value");
    tg::TensorRef assigned = g.add(tg::OpKind::kAssign,
                                   {step_var.value, m.step_ph}, {},
                                   "set_global_step");
    m.set_step = assigned.producer;
    std::vector<int64_t> ids{m.w.producer, m.b.producer, m.step_var};
    g.add_node(tg::OpKind::kSave, {m.w, m.b, assigned},
               {{"path", f.checkpoint}, {"var_ids", ids}}, "save");
    m.save = g.nodes().rbegin()->first;
    g.add_node(tg::OpKind::kRestore, {},
               {{"path", f.checkpoint}, {"var_ids", ids}}, "restore");
    m.restore = g.nodes().rbegin()->first;
  }
  return m;
}

int cmd_train(const TrainFlags& f) {
  tg::DType dtype = f.dtype_name == "f64" ? tg::DType::kF64 : tg::DType::kF32;
  tg::Dataset data = load_dataset(f.data, dtype);

  tg::Graph g;
  Model m = build_model(g, data.dim(), data.classes(), f);

  bool distributed = f.devices > 1 || !f.fleet.empty();
  std::optional<tg::CostModel> cm;
  if (distributed) {
    cm = load_fleet(f.fleet, f.devices);
    // Summary payloads do not travel over channels; keep the whole summary
    // subtree on one device.
    std::string pin = cm->fleet().front().name;
    for (const tg::Device& d : cm->fleet()) pin = std::min(pin, d.name);
    for (tg::NodeId id : g.collection("summaries"))
      g.set_device_constraint(id, pin);
    if (m.merged) g.set_device_constraint(m.merged->producer, pin);
  }

  tg::Session session =
      distributed ? tg::Session(g, *cm, f.truncate_wire) : tg::Session(g);
  auto run = [&](const std::vector<tg::TensorRef>& fetches,
                 const tg::FeedMap& feeds, const tg::RunOptions& options) {
    return distributed ? session.run_distributed(fetches, feeds, options)
                       : session.run(fetches, feeds, options);
  };

  std::optional<tg::EventWriter> writer;
  if (!f.events.empty()) writer.emplace(f.events);

  int64_t start_step = 0;
  if (f.resume) {
    if (f.checkpoint.empty())
      throw tg::Error(tg::Code::kInvalidArgument,
                      "--resume requires --checkpoint");
    tg::RunOptions opt;
    opt.targets = {m.restore};
    run({}, {}, opt);
    start_step = int64_t(session.variable_value(m.step_var).at(0));
  } else {
    tg::RunOptions opt;
    opt.targets = {m.init};
    run({}, {}, opt);
  }

  if (f.steps == 0) {
    tg::Batch batch = tg::next_batch(data, f.batch, 0, f.seed);
    auto out = run({m.loss}, {{m.x, batch.images}, {m.labels, batch.labels}},
                   {});
    std::printf("Loss at step 0: %.6f\n", out[0].at(0));
  }

  for (int64_t s = start_step; s < f.steps; ++s) {
    tg::Batch batch = tg::next_batch(data, f.batch, s, f.seed);
    tg::RunOptions opt;
    opt.targets = {m.train_step};
    opt.step = s;
    if (writer) opt.event_writer = &*writer;
    std::vector<tg::TensorRef> fetches{m.loss};
    if (m.merged) fetches.push_back(*m.merged);
    auto out =
        run(fetches, {{m.x, batch.images}, {m.labels, batch.labels}}, opt);
    std::printf("Loss at step %lld: %.6f\n", static_cast<long long>(s),
                out[0].at(0));

    if (!f.checkpoint.empty() && f.checkpoint_every > 0 &&
        (s + 1) % f.checkpoint_every == 0) {
      tg::RunOptions copt;
      copt.targets = {m.save};
      run({}, {{m.step_ph, tg::TensorValue::scalar(dtype, double(s + 1))}},
          copt);
    }
  }
  if (!f.checkpoint.empty() && f.checkpoint_every == 0 && f.steps > 0) {
    tg::RunOptions copt;
    copt.targets = {m.save};
    run({}, {{m.step_ph, tg::TensorValue::scalar(dtype, double(f.steps))}},
        copt);
  }

  if (f.steps > 0) {
    auto out = run({m.accuracy, m.loss},
                   {{m.x, data.images}, {m.labels, data.labels}}, {});
    std::printf("Accuracy after %lld steps: %.4f (full-set loss %.6f)\n",
                static_cast<long long>(f.steps), out[0].at(0), out[1].at(0));
  }

  const char* log = std::getenv("TG_LOG");
  if (log && *log) std::cerr << session.last_trace().to_jsonl();
  if (writer) writer->flush();
  return 0;
}

int cmd_graph(const std::string& sub, const std::string& input,
              const std::string& output, const std::string& fleet_path,
              int devices, int64_t batch_hint, bool truncate, int depth,
              bool report) {
  tg::Graph g = tg::deserialize(read_file(input));
  if (sub == "optimize") {
    auto [rewritten, cse_report] = tg::eliminate_common_subgraphs(g);
    if (report)
      std::fprintf(stderr, "merged %d node%s in %d round%s\n",
                   cse_report.merged_nodes,
                   cse_report.merged_nodes == 1 ? "" : "s", cse_report.rounds,
                   cse_report.rounds == 1 ? "" : "s");
    write_output(output, tg::serialize(rewritten));
    return 0;
  }
  if (sub == "place" || sub == "partition") {
    tg::CostModel cm = load_fleet(fleet_path, devices);
    tg::Placement placement = tg::place(g, cm, batch_hint);
    if (sub == "place") {
      write_output(output, placement.csv(g));
      return 0;
    }
    tg::PartitionedProgram prog = tg::partition(g, placement, truncate);
    nlohmann::ordered_json doc;
    for (const auto& [dev, sub_graph] : prog.subgraphs)
      doc["devices"][dev] = sub_graph.num_nodes();
    doc["channels"] = nlohmann::ordered_json::array();
    for (const tg::Channel& ch : prog.channels) {
      nlohmann::ordered_json c;
      c["key"] = ch.key;
      c["from"] = ch.src_device;
      c["to"] = ch.dst_device;
      c["control"] = ch.control;
      c["truncate"] = ch.truncate;
      doc["channels"].push_back(std::move(c));
    }
    write_output(output, doc.dump(2) + "\n");
    if (report)
      std::fprintf(stderr, "%zu channels across %zu devices\n",
                   prog.channels.size(), prog.subgraphs.size());
    return 0;
  }
  if (sub == "dot") {
    write_output(output, tg::export_dot(g, depth));
    return 0;
  }
  throw tg::Error(tg::Code::kInvalidArgument, "unknown subcommand " + sub);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tinygraph command line"};
  app.require_subcommand(1);

  TrainFlags tf;
  CLI::App* train = app.add_subcommand("train", "run the softmax demo");
  train->add_option("--data", tf.data, "synthetic:... or idx:images=..,labels=..");
  train->add_option("--steps", tf.steps)->check(CLI::NonNegativeNumber);
  train->add_option("--batch", tf.batch)->check(CLI::PositiveNumber);
  train->add_option("--lr", tf.lr);
  train->add_option("--seed", tf.seed);
  train->add_option("--devices", tf.devices)->check(CLI::PositiveNumber);
  train->add_option("--fleet", tf.fleet, "fleet JSON path");
  train->add_flag("--truncate-wire", tf.truncate_wire);
  train->add_option("--checkpoint", tf.checkpoint);
  train->add_option("--checkpoint-every", tf.checkpoint_every);
  train->add_option("--events", tf.events, "JSONL event file");
  train->add_option("--dtype", tf.dtype_name)
      ->check(CLI::IsMember({"f32", "f64"}));
  train->add_flag("--zero-init", tf.zero_init, "start from W=0, b=0");
  train->add_flag("--resume", tf.resume, "restore from --checkpoint first");

  std::string g_sub, g_input, g_output, g_fleet;
  int g_devices = 2, g_depth = 1;
  int64_t g_batch_hint = 100;
  bool g_truncate = false, g_report = false;
  CLI::App* graph = app.add_subcommand("graph", "graph tooling");
  graph->add_option("subcommand", g_sub, "optimize|place|partition|dot")
      ->required()
      ->check(CLI::IsMember({"optimize", "place", "partition", "dot"}));
  graph->add_option("input", g_input, "graph JSON path")->required();
  graph->add_option("-o,--output", g_output, "output path (default stdout)");
  graph->add_option("--fleet", g_fleet, "fleet JSON path");
  graph->add_option("--devices", g_devices)->check(CLI::PositiveNumber);
  graph->add_option("--batch-hint", g_batch_hint);
  graph->add_flag("--truncate-wire", g_truncate);
  graph->add_option("--depth", g_depth, "DOT collapse depth");
  graph->add_flag("--report", g_report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) return cmd_train(tf);
    return cmd_graph(g_sub, g_input, g_output, g_fleet, g_devices,
                     g_batch_hint, g_truncate, g_depth, g_report);
  } catch (const tg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
