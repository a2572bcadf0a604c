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

#include "tinygraph/dot_export.h"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <vector>

namespace tg {

namespace {

std::vector<std::string> split_scopes(const std::string& name) {
  std::vector<std::string> segs;
  std::string cur;
  for (char c : name) {
    if (c == '/') {
      segs.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  segs.push_back(cur);
  return segs;
}

// Scope-quotient map: a node keeps its first collapse_depth+1 name segments,
// so scopes deeper than the cutoff fold into a single visual block.
std::string quotient(const std::string& name, int depth) {
  std::vector<std::string> segs = split_scopes(name);
  size_t keep = std::min(segs.size(), size_t(depth) + 1);
  std::string out;
  for (size_t i = 0; i < keep; ++i) {
    if (i) out += "/";
    out += segs[i];
  }
  return out;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

struct QuotientNode {
  int members = 0;
  OpKind kind = OpKind::kNoOp;  // meaningful when members == 1
};

struct ClusterTrie {
  std::vector<std::string> leaves;  // quotient keys directly at this level
  std::map<std::string, ClusterTrie> children;
};

void emit_cluster(std::ostringstream& os, const ClusterTrie& trie,
                  const std::string& path,
                  const std::map<std::string, std::string>& node_id,
                  const std::map<std::string, QuotientNode>& qnodes,
                  int indent) {
  std::string pad(size_t(indent) * 2, ' ');
  for (const std::string& key : trie.leaves) {
    const QuotientNode& q = qnodes.at(key);
    os << pad << node_id.at(key) << " [label=\"";
    if (q.members > 1) {
      os << escape(key) << "\\n(" << q.members << " ops)\" shape=box3d";
    } else {
      os << escape(key) << "\\n" << op_kind_name(q.kind) << "\" shape="
         << (op_def(q.kind).stateful ? "box" : "ellipse");
    }
    os << "];\n";
  }
  int cluster_index = 0;
  for (const auto& [seg, child] : trie.children) {
    std::string child_path = path.empty() ? seg : path + "/" + seg;
    os << pad << "subgraph \"cluster_" << escape(child_path) << "\" {\n";
    os << pad << "  label=\"" << escape(seg) << "\";\n";
    emit_cluster(os, child, child_path, node_id, qnodes, indent + 1);
    os << pad << "}\n";
    ++cluster_index;
  }
  (void)cluster_index;
}

}  // namespace

std::string export_dot(const Graph& g, int collapse_depth) {
  if (collapse_depth < 0) collapse_depth = 0;
  std::map<std::string, QuotientNode> qnodes;
  std::map<NodeId, std::string> node_key;
  for (const auto& [id, n] : g.nodes()) {
    std::string key = quotient(n.name, collapse_depth);
    node_key[id] = key;
    QuotientNode& q = qnodes[key];
    ++q.members;
    q.kind = q.members == 1 ? n.kind : q.kind;
  }

  // Image of the edge set under the quotient map, self-loops dropped.
  std::set<std::tuple<std::string, std::string, bool>> edges;
  for (const auto& [id, n] : g.nodes()) {
    for (const TensorRef& in : n.inputs) {
      const std::string& u = node_key.at(in.producer);
      const std::string& v = node_key.at(id);
      if (u != v) edges.insert({u, v, false});
    }
    for (NodeId c : n.control_inputs) {
      const std::string& u = node_key.at(c);
      const std::string& v = node_key.at(id);
      if (u != v) edges.insert({u, v, true});
    }
  }

  std::map<std::string, std::string> node_id;
  int counter = 0;
  for (const auto& [key, q] : qnodes)
    node_id[key] = "n" + std::to_string(counter++);

  ClusterTrie root;
  for (const auto& [key, q] : qnodes) {
    std::vector<std::string> segs = split_scopes(key);
    ClusterTrie* t = &root;
    for (size_t i = 0; i + 1 < segs.size(); ++i) t = &t->children[segs[i]];
    t->leaves.push_back(key);
  }

  std::ostringstream os;
  os << "digraph G {\n";
  if (!qnodes.empty()) {
    os << "  rankdir=TB;\n";
    emit_cluster(os, root, "", node_id, qnodes, 1);
    for (const auto& [u, v, control] : edges) {
      os << "  " << node_id.at(u) << " -> " << node_id.at(v);
      if (control) os << " [style=dashed]";
      os << ";\n";
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace tg
