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

#ifndef TINYGRAPH_GRAPH_JSON_H_
#define TINYGRAPH_GRAPH_JSON_H_

#include <string>

#include "tinygraph/graph.h"

namespace tg {

// Lossless JSON graph document, UTF-8 with sorted keys; byte-deterministic
// for a given build sequence.
std::string serialize(const Graph& graph);

// Throws MalformedDocument, UnknownOpKind, DanglingInput or CycleDetected.
Graph deserialize(const std::string& bytes);

}  // namespace tg

#endif  // TINYGRAPH_GRAPH_JSON_H_
