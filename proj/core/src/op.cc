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

#include "tinygraph/op.h"

#include <algorithm>
#include <array>
#include <unordered_map>

namespace tg {

const char* code_name(Code code) {
  switch (code) {
    case Code::kArityMismatch: return "ArityMismatch";
    case Code::kDTypeMismatch: return "DTypeMismatch";
    case Code::kShapeIncompatible: return "ShapeIncompatible";
    case Code::kDuplicateName: return "DuplicateName";
    case Code::kCycleDetected: return "CycleDetected";
    case Code::kDynamicShapeInitializer: return "DynamicShapeInitializer";
    case Code::kMalformedDocument: return "MalformedDocument";
    case Code::kUnknownOpKind: return "UnknownOpKind";
    case Code::kDanglingInput: return "DanglingInput";
    case Code::kRuntimeShapeMismatch: return "RuntimeShapeMismatch";
    case Code::kMissingFeed: return "MissingFeed";
    case Code::kShapeMismatchAtFeed: return "ShapeMismatchAtFeed";
    case Code::kUninitializedVariable: return "UninitializedVariable";
    case Code::kNonScalarTarget: return "NonScalarTarget";
    case Code::kNonDifferentiablePath: return "NonDifferentiablePath";
    case Code::kNoFeasibleDevice: return "NoFeasibleDevice";
    case Code::kConstraintInfeasible: return "ConstraintInfeasible";
    case Code::kChannelClosed: return "ChannelClosed";
    case Code::kDeadlockDetected: return "DeadlockDetected";
    case Code::kChecksumMismatch: return "ChecksumMismatch";
    case Code::kNameNotFound: return "NameNotFound";
    case Code::kShapeMismatchAtRestore: return "ShapeMismatchAtRestore";
    case Code::kNonScalarSummaryInput: return "NonScalarSummaryInput";
    case Code::kFrozenGraph: return "FrozenGraph";
    case Code::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

struct KindEntry {
  OpKind kind;
  const char* name;
  OpDef def;
};

// {min_inputs, max_inputs (-1 unbounded), num_outputs, stateful, differentiable}
constexpr std::array<KindEntry, 31> kKinds = {{
    {OpKind::kConst, "Const", {0, 0, 1, false, false}},
    {OpKind::kVariableOp, "VariableOp", {0, 0, 1, true, false}},
    {OpKind::kPlaceholder, "Placeholder", {0, 0, 1, true, false}},
    {OpKind::kAssign, "Assign", {2, 2, 1, true, true}},
    {OpKind::kAdd, "Add", {2, 2, 1, false, true}},
    {OpKind::kSub, "Sub", {2, 2, 1, false, true}},
    {OpKind::kMul, "Mul", {2, 2, 1, false, true}},
    {OpKind::kMatMul, "MatMul", {2, 2, 1, false, true}},
    {OpKind::kExp, "Exp", {1, 1, 1, false, true}},
    {OpKind::kLog, "Log", {1, 1, 1, false, true}},
    {OpKind::kNeg, "Neg", {1, 1, 1, false, true}},
    {OpKind::kSigmoid, "Sigmoid", {1, 1, 1, false, true}},
    {OpKind::kRelu, "ReLU", {1, 1, 1, false, true}},
    {OpKind::kSoftmax, "Softmax", {1, 1, 1, false, true}},
    {OpKind::kReduceSum, "ReduceSum", {1, 1, 1, false, true}},
    {OpKind::kReduceMean, "ReduceMean", {1, 1, 1, false, true}},
    {OpKind::kEqual, "Equal", {2, 2, 1, false, false}},
    {OpKind::kArgMax, "ArgMax", {1, 1, 1, false, false}},
    {OpKind::kCastTruncate16, "CastTruncate16", {1, 1, 1, false, false}},
    {OpKind::kSwitch, "Switch", {2, 2, 2, false, true}},
    {OpKind::kMerge, "Merge", {2, -1, 1, false, true}},
    {OpKind::kSave, "Save", {0, -1, 0, true, false}},
    {OpKind::kRestore, "Restore", {0, 0, 0, true, false}},
    {OpKind::kSend, "Send", {0, 1, 0, true, false}},
    {OpKind::kRecv, "Recv", {0, 0, 1, true, false}},
    {OpKind::kScalarSummary, "ScalarSummary", {1, 1, 1, true, false}},
    {OpKind::kHistogramSummary, "HistogramSummary", {1, 1, 1, true, false}},
    {OpKind::kMergeSummaries, "MergeSummaries", {0, -1, 1, true, false}},
    {OpKind::kNoOp, "NoOp", {0, 0, 0, false, false}},
    {OpKind::kOnesLike, "OnesLike", {1, 1, 1, false, false}},
    {OpKind::kReluGrad, "ReluGrad", {2, 2, 1, false, false}},
}};

const KindEntry& entry(OpKind kind) {
  for (const auto& e : kKinds)
    if (e.kind == kind) return e;
  throw Error(Code::kUnknownOpKind, "bad OpKind value");
}

}  // namespace

const char* op_kind_name(OpKind kind) { return entry(kind).name; }

OpKind op_kind_from_name(const std::string& name) {
  for (const auto& e : kKinds)
    if (name == e.name) return e.kind;
  throw Error(Code::kUnknownOpKind, name);
}

const OpDef& op_def(OpKind kind) { return entry(kind).def; }

int64_t attr_int(const AttrMap& attrs, const std::string& key,
                 int64_t fallback) {
  auto it = attrs.find(key);
  if (it == attrs.end()) return fallback;
  return std::get<int64_t>(it->second);
}

const std::vector<int64_t>& attr_int_list(const AttrMap& attrs,
                                          const std::string& key) {
  static const std::vector<int64_t> kEmpty;
  auto it = attrs.find(key);
  if (it == attrs.end()) return kEmpty;
  return std::get<std::vector<int64_t>>(it->second);
}

std::string attr_string(const AttrMap& attrs, const std::string& key,
                        const std::string& fallback) {
  auto it = attrs.find(key);
  if (it == attrs.end()) return fallback;
  return std::get<std::string>(it->second);
}

double attr_float(const AttrMap& attrs, const std::string& key,
                  double fallback) {
  auto it = attrs.find(key);
  if (it == attrs.end()) return fallback;
  if (std::holds_alternative<int64_t>(it->second))
    return static_cast<double>(std::get<int64_t>(it->second));
  return std::get<double>(it->second);
}

Broadcast resolve_broadcast(const Shape& lhs, const Shape& rhs, Shape* out) {
  if (lhs == rhs) {
    *out = lhs;
    return Broadcast::kNone;
  }
  if (lhs.rank() == 0) {
    *out = rhs;
    return Broadcast::kScalarLhs;
  }
  if (rhs.rank() == 0) {
    *out = lhs;
    return Broadcast::kScalarRhs;
  }
  auto vec_with_matrix = [](const Shape& mat, const Shape& vec,
                            bool* is_row) -> bool {
    int64_t n = mat.dim(0), k = mat.dim(1), m = vec.dim(0);
    // A static length equal to the column count binds over rows (the
    // walkthrough's bias case); otherwise the vector must match the leading
    // dimension, checked at runtime when either extent is dynamic.
    if (m != kDynamicDim && k != kDynamicDim && m == k) {
      *is_row = true;
      return true;
    }
    if (m == kDynamicDim || n == kDynamicDim || m == n) {
      *is_row = false;
      return true;
    }
    return false;
  };
  bool is_row = false;
  if (lhs.rank() == 2 && rhs.rank() == 1 &&
      vec_with_matrix(lhs, rhs, &is_row)) {
    *out = lhs;
    return is_row ? Broadcast::kRowRhs : Broadcast::kColRhs;
  }
  if (lhs.rank() == 1 && rhs.rank() == 2 &&
      vec_with_matrix(rhs, lhs, &is_row)) {
    *out = rhs;
    return is_row ? Broadcast::kRowLhs : Broadcast::kColLhs;
  }
  // Identical ranks with one dynamic leading dim still match element-wise.
  if (lhs.rank() == rhs.rank()) {
    bool ok = true;
    std::vector<int64_t> dims;
    for (int i = 0; i < lhs.rank(); ++i) {
      int64_t a = lhs.dim(i), b = rhs.dim(i);
      if (a == b || a == kDynamicDim || b == kDynamicDim) {
        dims.push_back(a == kDynamicDim ? b : a);
      } else {
        ok = false;
        break;
      }
    }
    if (ok) {
      *out = Shape(dims);
      return Broadcast::kNone;
    }
  }
  throw Error(Code::kShapeIncompatible,
              "no element-wise match for " + lhs.to_string() + " and " +
                  rhs.to_string());
}

namespace {

void check_axes(const std::vector<int64_t>& axes, int rank) {
  for (size_t i = 0; i < axes.size(); ++i) {
    if (axes[i] < 0 || axes[i] >= rank)
      throw Error(Code::kInvalidArgument, "reduction axis out of range");
    if (i > 0 && axes[i] <= axes[i - 1])
      throw Error(Code::kInvalidArgument, "axes must be strictly increasing");
  }
}

Shape reduce_shape(const Shape& in, const std::vector<int64_t>& axes) {
  if (axes.empty()) return Shape::scalar();
  std::vector<int64_t> dims;
  for (int i = 0; i < in.rank(); ++i) {
    if (std::find(axes.begin(), axes.end(), i) == axes.end())
      dims.push_back(in.dim(i));
  }
  return Shape(dims);
}

}  // namespace

std::vector<TensorSig> infer_signatures(OpKind kind,
                                        const std::vector<TensorSig>& inputs,
                                        const AttrMap& attrs) {
  const OpDef& def = op_def(kind);
  int n = static_cast<int>(inputs.size());
  if (n < def.min_inputs || (def.max_inputs >= 0 && n > def.max_inputs))
    throw Error(Code::kArityMismatch,
                std::string(op_kind_name(kind)) + " got " + std::to_string(n) +
                    " inputs");
  // Mixed-dtype inputs to one node are rejected at build time.
  for (int i = 1; i < n; ++i)
    if (inputs[size_t(i)].dtype != inputs[0].dtype)
      throw Error(Code::kDTypeMismatch,
                  std::string(op_kind_name(kind)) + ": mixed input dtypes");
  DType dt = n > 0 ? inputs[0].dtype : DType::kF32;

  switch (kind) {
    case OpKind::kConst: {
      auto it = attrs.find("value");
      if (it == attrs.end())
        throw Error(Code::kInvalidArgument, "Const requires a value attr");
      const auto& t = std::get<TensorValue>(it->second);
      return {{t.dtype(), t.shape()}};
    }
    case OpKind::kVariableOp:
    case OpKind::kPlaceholder:
    case OpKind::kRecv: {
      auto dit = attrs.find("dtype");
      auto sit = attrs.find("shape");
      if (dit == attrs.end() || sit == attrs.end())
        throw Error(Code::kInvalidArgument,
                    std::string(op_kind_name(kind)) +
                        " requires dtype and shape attrs");
      Shape s = std::get<Shape>(sit->second);
      if (kind == OpKind::kVariableOp && s.is_dynamic())
        throw Error(Code::kDynamicShapeInitializer,
                    "variable shape must be concrete");
      return {{std::get<DType>(dit->second), s}};
    }
    case OpKind::kAssign: {
      if (inputs[0].shape != inputs[1].shape &&
          !inputs[0].shape.accepts(inputs[1].shape))
        throw Error(Code::kShapeIncompatible, "Assign shape mismatch");
      return {{dt, inputs[0].shape}};
    }
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul:
    case OpKind::kEqual: {
      Shape out;
      resolve_broadcast(inputs[0].shape, inputs[1].shape, &out);
      return {{dt, out}};
    }
    case OpKind::kMatMul: {
      const Shape& a = inputs[0].shape;
      const Shape& b = inputs[1].shape;
      if (a.rank() != 2 || b.rank() != 2)
        throw Error(Code::kShapeIncompatible, "MatMul requires rank-2 inputs");
      bool ta = attr_int(attrs, "transpose_a", 0) != 0;
      bool tb = attr_int(attrs, "transpose_b", 0) != 0;
      int64_t m = ta ? a.dim(1) : a.dim(0);
      int64_t ka = ta ? a.dim(0) : a.dim(1);
      int64_t kb = tb ? b.dim(1) : b.dim(0);
      int64_t p = tb ? b.dim(0) : b.dim(1);
      if (ka != kDynamicDim && kb != kDynamicDim && ka != kb)
        throw Error(Code::kShapeIncompatible,
                    "MatMul inner dimensions differ: " + a.to_string() +
                        " vs " + b.to_string());
      if (m != kDynamicDim && p == kDynamicDim)
        throw Error(Code::kShapeIncompatible,
                    "MatMul result may not have a dynamic column count");
      return {{dt, Shape({m, p})}};
    }
    case OpKind::kExp:
    case OpKind::kLog:
    case OpKind::kNeg:
    case OpKind::kSigmoid:
    case OpKind::kRelu:
    case OpKind::kCastTruncate16:
    case OpKind::kOnesLike:
      return {{dt, inputs[0].shape}};
    case OpKind::kReluGrad: {
      if (inputs[0].shape != inputs[1].shape)
        throw Error(Code::kShapeIncompatible, "ReluGrad shape mismatch");
      return {{dt, inputs[0].shape}};
    }
    case OpKind::kSoftmax: {
      if (inputs[0].shape.rank() < 1 || inputs[0].shape.rank() > 2)
        throw Error(Code::kShapeIncompatible,
                    "Softmax requires a rank-1 or rank-2 input");
      return {{dt, inputs[0].shape}};
    }
    case OpKind::kReduceSum:
    case OpKind::kReduceMean: {
      const auto& axes = attr_int_list(attrs, "axes");
      check_axes(axes, inputs[0].shape.rank());
      return {{dt, reduce_shape(inputs[0].shape, axes)}};
    }
    case OpKind::kArgMax: {
      int rank = inputs[0].shape.rank();
      if (rank < 1 || rank > 2)
        throw Error(Code::kShapeIncompatible,
                    "ArgMax requires a rank-1 or rank-2 input");
      int64_t axis = attr_int(attrs, "axis", rank - 1);
      if (axis < 0 || axis >= rank)
        throw Error(Code::kInvalidArgument, "ArgMax axis out of range");
      return {{dt, reduce_shape(inputs[0].shape, {axis})}};
    }
    case OpKind::kSwitch: {
      if (inputs[1].shape.rank() != 0)
        throw Error(Code::kShapeIncompatible,
                    "Switch predicate must be a scalar");
      return {{dt, inputs[0].shape}, {dt, inputs[0].shape}};
    }
    case OpKind::kMerge: {
      for (int i = 1; i < n; ++i)
        if (inputs[size_t(i)].shape != inputs[0].shape)
          throw Error(Code::kShapeIncompatible, "Merge input shapes differ");
      return {{dt, inputs[0].shape}};
    }
    case OpKind::kScalarSummary: {
      if (inputs[0].shape.rank() != 0)
        throw Error(Code::kNonScalarSummaryInput,
                    "scalar summary input must be rank-0, got " +
                        inputs[0].shape.to_string());
      return {{dt, Shape::scalar()}};
    }
    case OpKind::kHistogramSummary:
      return {{dt, Shape::scalar()}};
    case OpKind::kMergeSummaries:
      return {{dt, Shape::scalar()}};
    case OpKind::kSave:
    case OpKind::kRestore:
    case OpKind::kSend:
    case OpKind::kNoOp:
      return {};
  }
  throw Error(Code::kUnknownOpKind, "unhandled kind in inference");
}

}  // namespace tg
