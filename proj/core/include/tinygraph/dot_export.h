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

#ifndef TINYGRAPH_DOT_EXPORT_H_
#define TINYGRAPH_DOT_EXPORT_H_

#include <string>

#include "tinygraph/graph.h"

namespace tg {

// Deterministic Graphviz rendering. Nodes are grouped by slash-delimited
// name scopes: everything deeper than `collapse_depth` scope levels folds
// into one quotient node (depth 0 keeps one node per scope root), and scope
// prefixes above the fold render as nested clusters. Data edges are solid,
// control edges dashed; parallel edges between quotient nodes are merged.
std::string export_dot(const Graph& g, int collapse_depth = 1);

}  // namespace tg

#endif  // TINYGRAPH_DOT_EXPORT_H_
