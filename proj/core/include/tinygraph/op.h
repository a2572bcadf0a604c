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

#ifndef TINYGRAPH_OP_H_
#define TINYGRAPH_OP_H_

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "tinygraph/tensor.h"
#include "tinygraph/types.h"

namespace tg {

enum class OpKind : uint8_t {
  kConst,
  kVariableOp,
  kPlaceholder,
  kAssign,
  kAdd,
  kSub,
  kMul,
  kMatMul,
  kExp,
  kLog,
  kNeg,
  kSigmoid,
  kRelu,
  kSoftmax,
  kReduceSum,
  kReduceMean,
  kEqual,
  kArgMax,
  kCastTruncate16,
  kSwitch,
  kMerge,
  kSave,
  kRestore,
  kSend,
  kRecv,
  kScalarSummary,
  kHistogramSummary,
  kMergeSummaries,
  kNoOp,
  // Helper kinds used by gradient construction.
  kOnesLike,
  kReluGrad,
};

const char* op_kind_name(OpKind kind);
// Throws UnknownOpKind for unrecognized names.
OpKind op_kind_from_name(const std::string& name);

using AttrValue = std::variant<int64_t, double, std::string,
                               std::vector<int64_t>, Shape, DType, TensorValue>;
using AttrMap = std::map<std::string, AttrValue>;

// Static per-kind contract: arity, output count and statefulness.
struct OpDef {
  int min_inputs;
  int max_inputs;  // -1 means unbounded
  int num_outputs;
  bool stateful;
  bool differentiable;
};

const OpDef& op_def(OpKind kind);

// (dtype, shape) signature of one tensor edge.
struct TensorSig {
  DType dtype;
  Shape shape;
};

// Per-kind shape/dtype inference. Rejects arity, dtype and shape violations.
std::vector<TensorSig> infer_signatures(OpKind kind,
                                        const std::vector<TensorSig>& inputs,
                                        const AttrMap& attrs);

// Supported element-wise broadcast forms between two operand shapes.
enum class Broadcast {
  kNone,        // identical shapes
  kScalarLhs,   // lhs is rank-0
  kScalarRhs,   // rhs is rank-0
  kRowRhs,      // lhs (n,k), rhs (k): rhs repeated over rows
  kColRhs,      // lhs (n,k), rhs (n): rhs repeated over columns
  kRowLhs,      // mirror of kRowRhs
  kColLhs,      // mirror of kColRhs
};

// Resolves the broadcast form for a binary element-wise op, or throws
// ShapeIncompatible. `out` receives the result shape.
Broadcast resolve_broadcast(const Shape& lhs, const Shape& rhs, Shape* out);

// Attr accessors with type checking.
int64_t attr_int(const AttrMap& attrs, const std::string& key,
                 int64_t fallback);
const std::vector<int64_t>& attr_int_list(const AttrMap& attrs,
                                          const std::string& key);
std::string attr_string(const AttrMap& attrs, const std::string& key,
                        const std::string& fallback = "");
double attr_float(const AttrMap& attrs, const std::string& key,
                  double fallback);

}  // namespace tg

#endif  // TINYGRAPH_OP_H_
