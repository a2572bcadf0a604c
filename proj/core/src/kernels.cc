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

#include "tinygraph/kernels.h"

#include <algorithm>
#include <cmath>

#include "tinygraph/truncate16.h"

namespace tg {

namespace {

template <typename T>
std::span<const T> data_of(const TensorValue& t);
template <>
std::span<const float> data_of<float>(const TensorValue& t) {
  return t.f32();
}
template <>
std::span<const double> data_of<double>(const TensorValue& t) {
  return t.f64();
}

template <typename T>
std::span<T> data_of(TensorValue& t);
template <>
std::span<float> data_of<float>(TensorValue& t) {
  return t.f32();
}
template <>
std::span<double> data_of<double>(TensorValue& t) {
  return t.f64();
}

template <typename T, typename F>
TensorValue unary(const TensorValue& x, F f) {
  TensorValue out(x.dtype(), x.shape());
  auto in = data_of<T>(x);
  auto o = data_of<T>(out);
  for (size_t i = 0; i < in.size(); ++i) o[i] = f(in[i]);
  return out;
}

// Element-wise binary op with the supported broadcast forms resolved against
// the concrete runtime shapes.
template <typename T, typename F>
TensorValue binary(const TensorValue& a, const TensorValue& b, F f) {
  Shape out_shape;
  Broadcast bc = resolve_broadcast(a.shape(), b.shape(), &out_shape);
  auto da = data_of<T>(a);
  auto db = data_of<T>(b);

  // Column broadcasts resolved against dynamic graph shapes must still match
  // the fed leading extent.
  auto check_col = [](const TensorValue& mat, const TensorValue& vec) {
    if (vec.shape().dim(0) != mat.shape().dim(0))
      throw Error(Code::kRuntimeShapeMismatch,
                  "vector length " + vec.shape().to_string() +
                      " does not match rows of " + mat.shape().to_string());
  };

  TensorValue out(a.dtype(), out_shape);
  auto o = data_of<T>(out);
  switch (bc) {
    case Broadcast::kNone:
      for (size_t i = 0; i < o.size(); ++i) o[i] = f(da[i], db[i]);
      break;
    case Broadcast::kScalarLhs:
      for (size_t i = 0; i < o.size(); ++i) o[i] = f(da[0], db[i]);
      break;
    case Broadcast::kScalarRhs:
      for (size_t i = 0; i < o.size(); ++i) o[i] = f(da[i], db[0]);
      break;
    case Broadcast::kRowRhs: {
      size_t k = size_t(a.shape().dim(1));
      for (size_t i = 0; i < o.size(); ++i) o[i] = f(da[i], db[i % k]);
      break;
    }
    case Broadcast::kRowLhs: {
      size_t k = size_t(b.shape().dim(1));
      for (size_t i = 0; i < o.size(); ++i) o[i] = f(da[i % k], db[i]);
      break;
    }
    case Broadcast::kColRhs: {
      check_col(a, b);
      size_t k = size_t(a.shape().dim(1));
      for (size_t i = 0; i < o.size(); ++i) o[i] = f(da[i], db[i / k]);
      break;
    }
    case Broadcast::kColLhs: {
      check_col(b, a);
      size_t k = size_t(b.shape().dim(1));
      for (size_t i = 0; i < o.size(); ++i) o[i] = f(da[i / k], db[i]);
      break;
    }
  }
  return out;
}

template <typename T>
TensorValue matmul(const TensorValue& a, const TensorValue& b, bool ta,
                   bool tb) {
  int64_t ar = a.shape().dim(0), ac = a.shape().dim(1);
  int64_t br = b.shape().dim(0), bc = b.shape().dim(1);
  int64_t m = ta ? ac : ar;
  int64_t kk = ta ? ar : ac;
  int64_t kb = tb ? bc : br;
  int64_t p = tb ? br : bc;
  if (kk != kb)
    throw Error(Code::kRuntimeShapeMismatch,
                "MatMul inner dimensions differ at runtime");
  TensorValue out(a.dtype(), Shape({m, p}));
  auto da = data_of<T>(a);
  auto db = data_of<T>(b);
  auto o = data_of<T>(out);
  auto at = [&](int64_t i, int64_t k) {
    return ta ? da[size_t(k * ac + i)] : da[size_t(i * ac + k)];
  };
  auto bt = [&](int64_t k, int64_t j) {
    return tb ? db[size_t(j * bc + k)] : db[size_t(k * bc + j)];
  };
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < p; ++j) {
      T acc = 0;
      for (int64_t k = 0; k < kk; ++k) acc += at(i, k) * bt(k, j);
      o[size_t(i * p + j)] = acc;
    }
  }
  return out;
}

template <typename T>
TensorValue softmax(const TensorValue& x) {
  // Max-subtraction per row for stability; the result is the same
  // distribution as the plain exp/sum-of-exp formulation.
  int64_t rows = x.shape().rank() == 2 ? x.shape().dim(0) : 1;
  int64_t cols = x.shape().rank() == 2 ? x.shape().dim(1)
                                       : x.shape().num_elements();
  TensorValue out(x.dtype(), x.shape());
  auto in = data_of<T>(x);
  auto o = data_of<T>(out);
  for (int64_t r = 0; r < rows; ++r) {
    const T* row = in.data() + r * cols;
    T* orow = o.data() + r * cols;
    T mx = row[0];
    for (int64_t c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
    T denom = 0;
    for (int64_t c = 0; c < cols; ++c) {
      orow[c] = std::exp(row[c] - mx);
      denom += orow[c];
    }
    for (int64_t c = 0; c < cols; ++c) orow[c] /= denom;
  }
  return out;
}

template <typename T>
TensorValue reduce(const TensorValue& x, const std::vector<int64_t>& axes,
                   bool mean) {
  int rank = x.shape().rank();
  auto in = data_of<T>(x);
  auto reduce_all = [&]() {
    T acc = 0;
    for (T v : in) acc += v;
    if (mean) acc /= static_cast<T>(in.size());
    TensorValue out(x.dtype(), Shape::scalar());
    data_of<T>(out)[0] = acc;
    return out;
  };
  if (axes.empty() || static_cast<int>(axes.size()) == rank) {
    return reduce_all();
  }
  if (rank != 2 || axes.size() != 1)
    throw Error(Code::kInvalidArgument, "unsupported reduction layout");
  int64_t n = x.shape().dim(0), k = x.shape().dim(1);
  if (axes[0] == 1) {
    TensorValue out(x.dtype(), Shape({n}));
    auto o = data_of<T>(out);
    for (int64_t r = 0; r < n; ++r) {
      T acc = 0;
      for (int64_t c = 0; c < k; ++c) acc += in[size_t(r * k + c)];
      o[size_t(r)] = mean ? acc / static_cast<T>(k) : acc;
    }
    return out;
  }
  TensorValue out(x.dtype(), Shape({k}));
  auto o = data_of<T>(out);
  for (int64_t c = 0; c < k; ++c) {
    T acc = 0;
    for (int64_t r = 0; r < n; ++r) acc += in[size_t(r * k + c)];
    o[size_t(c)] = mean ? acc / static_cast<T>(n) : acc;
  }
  return out;
}

template <typename T>
TensorValue argmax(const TensorValue& x, int64_t axis) {
  auto in = data_of<T>(x);
  if (x.shape().rank() == 1) {
    int64_t best = 0;
    for (size_t i = 1; i < in.size(); ++i)
      if (in[i] > in[size_t(best)]) best = int64_t(i);
    TensorValue out(x.dtype(), Shape::scalar());
    data_of<T>(out)[0] = static_cast<T>(best);
    return out;
  }
  int64_t n = x.shape().dim(0), k = x.shape().dim(1);
  if (axis == 1) {
    TensorValue out(x.dtype(), Shape({n}));
    auto o = data_of<T>(out);
    for (int64_t r = 0; r < n; ++r) {
      int64_t best = 0;
      for (int64_t c = 1; c < k; ++c)
        if (in[size_t(r * k + c)] > in[size_t(r * k + best)]) best = c;
      o[size_t(r)] = static_cast<T>(best);
    }
    return out;
  }
  TensorValue out(x.dtype(), Shape({k}));
  auto o = data_of<T>(out);
  for (int64_t c = 0; c < k; ++c) {
    int64_t best = 0;
    for (int64_t r = 1; r < n; ++r)
      if (in[size_t(r * k + c)] > in[size_t(best * k + c)]) best = r;
    o[size_t(c)] = static_cast<T>(best);
  }
  return out;
}

TensorValue cast_truncate16(const TensorValue& x) {
  if (x.dtype() == DType::kF64) return x;  // wire truncation is F32-only
  TensorValue out(DType::kF32, x.shape());
  auto in = x.f32();
  auto o = out.f32();
  for (size_t i = 0; i < in.size(); ++i) o[i] = truncate16(in[i]);
  return out;
}

template <typename T>
std::vector<TensorValue> dispatch(OpKind kind,
                                  const std::vector<TensorValue>& in,
                                  const AttrMap& attrs) {
  switch (kind) {
    case OpKind::kAdd:
      return {binary<T>(in[0], in[1], [](T a, T b) { return a + b; })};
    case OpKind::kSub:
      return {binary<T>(in[0], in[1], [](T a, T b) { return a - b; })};
    case OpKind::kMul:
      return {binary<T>(in[0], in[1], [](T a, T b) { return a * b; })};
    case OpKind::kEqual:
      return {binary<T>(in[0], in[1],
                        [](T a, T b) { return a == b ? T(1) : T(0); })};
    case OpKind::kMatMul:
      return {matmul<T>(in[0], in[1], attr_int(attrs, "transpose_a", 0) != 0,
                        attr_int(attrs, "transpose_b", 0) != 0)};
    case OpKind::kExp:
      return {unary<T>(in[0], [](T v) { return std::exp(v); })};
    case OpKind::kLog:
      // Log(0) yields -inf by policy; no clamping.
      return {unary<T>(in[0], [](T v) { return std::log(v); })};
    case OpKind::kNeg:
      return {unary<T>(in[0], [](T v) { return -v; })};
    case OpKind::kSigmoid:
      return {unary<T>(in[0], [](T v) { return T(1) / (T(1) + std::exp(-v)); })};
    case OpKind::kRelu:
      return {unary<T>(in[0], [](T v) { return v > T(0) ? v : T(0); })};
    case OpKind::kSoftmax:
      return {softmax<T>(in[0])};
    case OpKind::kReduceSum:
      return {reduce<T>(in[0], attr_int_list(attrs, "axes"), false)};
    case OpKind::kReduceMean:
      return {reduce<T>(in[0], attr_int_list(attrs, "axes"), true)};
    case OpKind::kArgMax:
      return {argmax<T>(in[0],
                        attr_int(attrs, "axis", in[0].shape().rank() - 1))};
    case OpKind::kOnesLike:
      return {unary<T>(in[0], [](T) { return T(1); })};
    case OpKind::kReluGrad:
      // Derivative mask of ReLU; defined as 0 at exactly 0.
      return {binary<T>(in[0], in[1],
                        [](T g, T x) { return x > T(0) ? g : T(0); })};
    default:
      break;
  }
  throw Error(Code::kInvalidArgument,
              std::string("no pure kernel for ") + op_kind_name(kind));
}

}  // namespace

std::vector<TensorValue> eval_kernel(OpKind kind,
                                     const std::vector<TensorValue>& inputs,
                                     const AttrMap& attrs) {
  if (kind == OpKind::kConst) {
    auto it = attrs.find("value");
    if (it == attrs.end())
      throw Error(Code::kInvalidArgument, "Const without value attr");
    return {std::get<TensorValue>(it->second)};
  }
  if (kind == OpKind::kCastTruncate16) return {cast_truncate16(inputs[0])};
  for (size_t i = 1; i < inputs.size(); ++i)
    if (inputs[i].dtype() != inputs[0].dtype())
      throw Error(Code::kDTypeMismatch, "mixed dtypes at kernel invocation");
  if (inputs.empty())
    throw Error(Code::kInvalidArgument,
                std::string("no pure kernel for ") + op_kind_name(kind));
  if (inputs[0].dtype() == DType::kF32)
    return dispatch<float>(kind, inputs, attrs);
  return dispatch<double>(kind, inputs, attrs);
}

}  // namespace tg
