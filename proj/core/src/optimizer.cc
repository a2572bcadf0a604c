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

#include "tinygraph/optimizer.h"

#include <map>
#include <set>

#include "tinygraph/autodiff.h"

namespace tg {

NodeId minimize(Graph& g, TensorRef loss, const OptimizerConfig& config) {
  if (!config.skip_validation && !(config.learning_rate > 0))
    throw Error(Code::kInvalidArgument, "learning rate must be positive");

  std::vector<TensorRef> vars;
  if (config.var_list) {
    vars = *config.var_list;
  } else {
    for (NodeId id : g.collection("trainable_variables"))
      vars.push_back(g.node(id).out(0));
  }
  if (vars.empty())
    throw Error(Code::kInvalidArgument, "no variables to optimize");

  std::vector<TensorRef> grads = gradients(g, loss, vars);

  Graph::ScopeGuard scope(g, "train");
  // Every assign waits for every gradient, so all updates read pre-step
  // variable values regardless of schedule.
  std::set<NodeId> after_grads;
  for (const TensorRef& grad : grads) after_grads.insert(grad.producer);

  std::map<DType, TensorRef> lr_by_dtype;
  std::set<NodeId> assigns;
  for (size_t i = 0; i < vars.size(); ++i) {
    const std::string& var_name = g.node(vars[i].producer).name;
    auto lr_it = lr_by_dtype.find(vars[i].dtype);
    if (lr_it == lr_by_dtype.end()) {
      TensorRef lr = g.constant(
          TensorValue::scalar(vars[i].dtype, config.learning_rate), "lr");
      lr_it = lr_by_dtype.emplace(vars[i].dtype, lr).first;
    }
    TensorRef scaled = g.add(OpKind::kMul, {lr_it->second, grads[i]}, {},
                             var_name + "/scaled_grad");
    TensorRef updated =
        g.add(OpKind::kSub, {vars[i], scaled}, {}, var_name + "/next_value");
    TensorRef assigned = g.add(OpKind::kAssign, {vars[i], updated}, {},
                               var_name + "/apply_sgd", after_grads);
    assigns.insert(assigned.producer);
  }

  g.add_node(OpKind::kNoOp, {}, {}, "step", assigns);
  return g.nodes().rbegin()->first;
}

}  // namespace tg
