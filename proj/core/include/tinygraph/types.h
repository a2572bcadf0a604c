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

#ifndef TINYGRAPH_TYPES_H_
#define TINYGRAPH_TYPES_H_

#include <cstdint>
#include <string>
#include <vector>

#include "tinygraph/error.h"

namespace tg {

using NodeId = int64_t;

enum class DType : uint8_t { kF32 = 0, kF64 = 1 };

inline const char* dtype_name(DType dt) {
  return dt == DType::kF32 ? "f32" : "f64";
}

inline size_t dtype_size(DType dt) { return dt == DType::kF32 ? 4 : 8; }

// Extent value marking a dimension as unknown until fed. Only the leading
// (batch) dimension of a graph-time shape may be dynamic.
inline constexpr int64_t kDynamicDim = -1;

// Graph-time tensor shape. Rank-0 (empty dims) is a scalar.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<int64_t> dims) : dims_(dims) { validate(); }
  explicit Shape(std::vector<int64_t> dims) : dims_(std::move(dims)) {
    validate();
  }

  static Shape scalar() { return Shape(); }

  int rank() const { return static_cast<int>(dims_.size()); }
  const std::vector<int64_t>& dims() const { return dims_; }
  int64_t dim(int i) const { return dims_[static_cast<size_t>(i)]; }

  bool is_dynamic() const {
    for (int64_t d : dims_)
      if (d == kDynamicDim) return true;
    return false;
  }

  // Element count; requires a fully concrete shape.
  int64_t num_elements() const {
    int64_t n = 1;
    for (int64_t d : dims_) {
      if (d == kDynamicDim)
        throw Error(Code::kInvalidArgument,
                    "num_elements() on dynamic shape " + to_string());
      n *= d;
    }
    return n;
  }

  // Element count with dynamic dims resolved to `hint` (used for cost
  // estimation only).
  int64_t num_elements_hint(int64_t hint) const {
    int64_t n = 1;
    for (int64_t d : dims_) n *= (d == kDynamicDim ? hint : d);
    return n;
  }

  bool operator==(const Shape& other) const { return dims_ == other.dims_; }
  bool operator!=(const Shape& other) const { return dims_ != other.dims_; }

  // True when a concrete runtime shape satisfies this graph-time shape.
  bool accepts(const Shape& concrete) const {
    if (rank() != concrete.rank()) return false;
    for (int i = 0; i < rank(); ++i) {
      if (dims_[static_cast<size_t>(i)] == kDynamicDim) continue;
      if (dims_[static_cast<size_t>(i)] != concrete.dim(i)) return false;
    }
    return true;
  }

  std::string to_string() const {
    std::string s = "(";
    for (size_t i = 0; i < dims_.size(); ++i) {
      if (i) s += ",";
      s += dims_[i] == kDynamicDim ? "?" : std::to_string(dims_[i]);
    }
    s += ")";
    return s;
  }

 private:
  void validate() const {
    for (size_t i = 0; i < dims_.size(); ++i) {
      int64_t d = dims_[i];
      if (d == kDynamicDim) {
        if (i != 0)
          throw Error(Code::kShapeIncompatible,
                      "only the leading dimension may be dynamic");
      } else if (d < 0) {
        throw Error(Code::kShapeIncompatible, "negative extent");
      }
    }
  }

  std::vector<int64_t> dims_;
};

}  // namespace tg

#endif  // TINYGRAPH_TYPES_H_
