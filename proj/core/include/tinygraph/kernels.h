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

#ifndef TINYGRAPH_KERNELS_H_
#define TINYGRAPH_KERNELS_H_

#include <vector>

#include "tinygraph/op.h"
#include "tinygraph/tensor.h"

namespace tg {

// Forward computation for a stateless OpKind. Pure: identical inputs produce
// bit-identical outputs (fixed reduction order, no parallel reassociation).
// Stateful kinds (variables, feeds, channels, summaries) are the executor's
// responsibility and are rejected here.
std::vector<TensorValue> eval_kernel(OpKind kind,
                                     const std::vector<TensorValue>& inputs,
                                     const AttrMap& attrs);

}  // namespace tg

#endif  // TINYGRAPH_KERNELS_H_
