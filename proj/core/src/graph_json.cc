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

#include "tinygraph/graph_json.h"

#include <json.hpp>

namespace tg {

namespace {

using nlohmann::json;

// Reserved collection tags carrying the variable registry through the
// document format.
constexpr const char* kVarTag = "__registry/variables";
constexpr const char* kInitTag = "__registry/initials";
constexpr const char* kAssignTag = "__registry/assigns";

json attr_to_json(const AttrValue& v) {
  json j;
  if (std::holds_alternative<int64_t>(v)) {
    j["t"] = "int";
    j["v"] = std::get<int64_t>(v);
  } else if (std::holds_alternative<double>(v)) {
    j["t"] = "float";
    j["v"] = std::get<double>(v);
  } else if (std::holds_alternative<std::string>(v)) {
    j["t"] = "string";
    j["v"] = std::get<std::string>(v);
  } else if (std::holds_alternative<std::vector<int64_t>>(v)) {
    j["t"] = "ints";
    j["v"] = std::get<std::vector<int64_t>>(v);
  } else if (std::holds_alternative<Shape>(v)) {
    j["t"] = "shape";
    j["v"] = std::get<Shape>(v).dims();
  } else if (std::holds_alternative<DType>(v)) {
    j["t"] = "dtype";
    j["v"] = dtype_name(std::get<DType>(v));
  } else {
    const auto& t = std::get<TensorValue>(v);
    json payload;
    payload["dims"] = t.shape().dims();
    payload["dtype"] = dtype_name(t.dtype());
    json data = json::array();
    for (int64_t i = 0; i < t.num_elements(); ++i) data.push_back(t.at(i));
    payload["data"] = std::move(data);
    j["t"] = "tensor";
    j["v"] = std::move(payload);
  }
  return j;
}

DType dtype_from_json(const json& j) {
  std::string s = j.get<std::string>();
  if (s == "f32") return DType::kF32;
  if (s == "f64") return DType::kF64;
  throw Error(Code::kMalformedDocument, "unknown dtype " + s);
}

AttrValue attr_from_json(const json& j) {
  std::string t = j.at("t").get<std::string>();
  const json& v = j.at("v");
  if (t == "int") return v.get<int64_t>();
  if (t == "float") return v.get<double>();
  if (t == "string") return v.get<std::string>();
  if (t == "ints") return v.get<std::vector<int64_t>>();
  if (t == "shape") return Shape(v.get<std::vector<int64_t>>());
  if (t == "dtype") return dtype_from_json(v);
  if (t == "tensor") {
    DType dt = dtype_from_json(v.at("dtype"));
    Shape shape(v.at("dims").get<std::vector<int64_t>>());
    size_t n = size_t(shape.num_elements());
    const json& data = v.at("data");
    if (data.size() != n)
      throw Error(Code::kMalformedDocument, "tensor data length mismatch");
    if (dt == DType::kF32) {
      std::vector<float> vals(n);
      for (size_t i = 0; i < n; ++i) vals[i] = data[i].get<float>();
      return TensorValue::from_f32(shape, std::move(vals));
    }
    std::vector<double> vals(n);
    for (size_t i = 0; i < n; ++i) vals[i] = data[i].get<double>();
    return TensorValue::from_f64(shape, std::move(vals));
  }
  throw Error(Code::kMalformedDocument, "unknown attr type tag " + t);
}

}  // namespace

std::string serialize(const Graph& graph) {
  json doc;
  doc["version"] = 1;
  json nodes = json::array();
  for (const auto& [id, n] : graph.nodes()) {
    json jn;
    jn["id"] = id;
    jn["name"] = n.name;
    jn["kind"] = op_kind_name(n.kind);
    json inputs = json::array();
    for (const TensorRef& in : n.inputs)
      inputs.push_back(json::array({in.producer, in.output_index}));
    jn["inputs"] = std::move(inputs);
    jn["control"] = std::vector<NodeId>(n.control_inputs.begin(),
                                        n.control_inputs.end());
    json attrs = json::object();
    for (const auto& [key, value] : n.attrs) attrs[key] = attr_to_json(value);
    jn["attrs"] = std::move(attrs);
    jn["device"] =
        n.device_constraint ? json(*n.device_constraint) : json(nullptr);
    nodes.push_back(std::move(jn));
  }
  doc["nodes"] = std::move(nodes);

  json collections = json::object();
  for (const auto& [tag, ids] : graph.collections()) collections[tag] = ids;
  std::vector<NodeId> vars, inits, assigns;
  for (const auto& entry : graph.variable_registry()) {
    vars.push_back(entry.variable);
    inits.push_back(entry.initial);
    assigns.push_back(entry.assign);
  }
  if (!vars.empty()) {
    collections[kVarTag] = vars;
    collections[kInitTag] = inits;
    collections[kAssignTag] = assigns;
  }
  doc["collections"] = std::move(collections);
  return doc.dump();
}

Graph deserialize(const std::string& bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::exception& e) {
    throw Error(Code::kMalformedDocument, e.what());
  }
  Graph g;
  try {
    if (doc.at("version").get<int>() != 1)
      throw Error(Code::kMalformedDocument, "unsupported document version");

    // Sort by id; ids are a topological order by construction, so a data or
    // control edge pointing at a not-yet-processed node is a cycle.
    std::vector<const json*> node_docs;
    for (const json& jn : doc.at("nodes")) node_docs.push_back(&jn);
    std::sort(node_docs.begin(), node_docs.end(),
              [](const json* a, const json* b) {
                return a->at("id").get<NodeId>() < b->at("id").get<NodeId>();
              });
    std::set<NodeId> all_ids;
    for (const json* jn : node_docs) all_ids.insert(jn->at("id").get<NodeId>());

    for (const json* jnp : node_docs) {
      const json& jn = *jnp;
      Node n;
      n.id = jn.at("id").get<NodeId>();
      n.name = jn.at("name").get<std::string>();
      n.kind = op_kind_from_name(jn.at("kind").get<std::string>());
      for (const auto& [key, value] : jn.at("attrs").items())
        n.attrs[key] = attr_from_json(value);
      if (!jn.at("device").is_null())
        n.device_constraint = jn.at("device").get<std::string>();

      std::vector<TensorSig> input_sigs;
      for (const json& ji : jn.at("inputs")) {
        NodeId producer = ji.at(0).get<NodeId>();
        int index = ji.at(1).get<int>();
        if (!all_ids.count(producer))
          throw Error(Code::kDanglingInput,
                      "node " + n.name + " references missing node " +
                          std::to_string(producer));
        if (!g.has_node(producer))
          throw Error(Code::kCycleDetected,
                      "node " + n.name + " references node " +
                          std::to_string(producer) +
                          " that is not before it in id order");
        const Node& p = g.node(producer);
        if (index < 0 || index >= static_cast<int>(p.outputs.size()))
          throw Error(Code::kDanglingInput,
                      "node " + n.name + " references missing output");
        const TensorSig& sig = p.outputs[size_t(index)];
        n.inputs.push_back(TensorRef{producer, index, sig.dtype, sig.shape});
        input_sigs.push_back(sig);
      }
      for (const json& jc : jn.at("control")) {
        NodeId c = jc.get<NodeId>();
        if (!all_ids.count(c))
          throw Error(Code::kDanglingInput,
                      "control edge to missing node " + std::to_string(c));
        if (!g.has_node(c))
          throw Error(Code::kCycleDetected, "control edge out of id order");
        n.control_inputs.insert(c);
      }
      n.outputs = infer_signatures(n.kind, input_sigs, n.attrs);
      g.insert_raw(std::move(n));
    }

    std::vector<NodeId> vars, inits, assigns;
    for (const auto& [tag, ids] : doc.at("collections").items()) {
      auto list = ids.get<std::vector<NodeId>>();
      for (NodeId id : list)
        if (!all_ids.count(id))
          throw Error(Code::kDanglingInput,
                      "collection " + tag + " references missing node");
      if (tag == kVarTag)
        vars = list;
      else if (tag == kInitTag)
        inits = list;
      else if (tag == kAssignTag)
        assigns = list;
      else
        for (NodeId id : list) g.add_to_collection(tag, id);
    }
    if (vars.size() != inits.size() || vars.size() != assigns.size())
      throw Error(Code::kMalformedDocument, "inconsistent variable registry");
    for (size_t i = 0; i < vars.size(); ++i)
      g.restore_variable_entry({vars[i], inits[i], assigns[i]});
  } catch (const json::exception& e) {
    throw Error(Code::kMalformedDocument, e.what());
  }
  return g;
}

}  // namespace tg
