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

#ifndef TINYGRAPH_OPTIMIZER_H_
#define TINYGRAPH_OPTIMIZER_H_

#include <optional>
#include <vector>

#include "tinygraph/graph.h"

namespace tg {

struct OptimizerConfig {
  double learning_rate = 0.5;
  // Defaults to the graph's "trainable_variables" collection.
  std::optional<std::vector<TensorRef>> var_list;
  // Tests may bypass the learning_rate > 0 check to verify the no-op update.
  bool skip_validation = false;
};

// Gradient-descent step construction: builds gradients(loss), then one
// Assign(v, v - lr * grad_v) per variable, all reading pre-step variable
// values (assigns are ordered after every gradient via control edges).
// Returns a NoOp node whose execution performs one SGD step atomically.
NodeId minimize(Graph& g, TensorRef loss, const OptimizerConfig& config = {});

}  // namespace tg

#endif  // TINYGRAPH_OPTIMIZER_H_
