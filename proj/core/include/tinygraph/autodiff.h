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

#ifndef TINYGRAPH_AUTODIFF_H_
#define TINYGRAPH_AUTODIFF_H_

#include <vector>

#include "tinygraph/graph.h"

namespace tg {

// Symbol-to-symbol gradient construction: walks the graph in reverse from
// `target` and inserts gradient nodes, so that d(target)/d(wrt[i]) is itself
// a graph output. Adds nodes only; never mutates existing ones. Forward
// tensors are reused by reference rather than recomputed, and the nodes
// introduced here are deduplicated by (kind, inputs, attrs).
//
// A wrt tensor that is not an ancestor of the target yields a zero constant
// of matching shape. A wrt tensor reachable only through non-differentiable
// ops raises NonDifferentiablePath. Non-scalar targets raise NonScalarTarget.
std::vector<TensorRef> gradients(Graph& g, TensorRef target,
                                 const std::vector<TensorRef>& wrt);

}  // namespace tg

#endif  // TINYGRAPH_AUTODIFF_H_
