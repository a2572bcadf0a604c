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

#ifndef TINYGRAPH_TENSOR_H_
#define TINYGRAPH_TENSOR_H_

#include <cstring>
#include <span>
#include <variant>
#include <vector>

#include "tinygraph/types.h"

namespace tg {

// Dense n-dimensional array of one element type, stored contiguously in
// row-major order. Runtime values always have fully concrete shapes.
class TensorValue {
 public:
  TensorValue() : dtype_(DType::kF32), data_(std::vector<float>{}) {}

  TensorValue(DType dtype, Shape shape)
      : dtype_(dtype), shape_(std::move(shape)) {
    if (shape_.is_dynamic())
      throw Error(Code::kInvalidArgument,
                  "runtime tensor requires a concrete shape");
    size_t n = static_cast<size_t>(shape_.num_elements());
    if (dtype_ == DType::kF32)
      data_ = std::vector<float>(n, 0.0f);
    else
      data_ = std::vector<double>(n, 0.0);
  }

  static TensorValue scalar(DType dtype, double v) {
    TensorValue t(dtype, Shape::scalar());
    t.set(0, v);
    return t;
  }

  static TensorValue from_f32(Shape shape, std::vector<float> values) {
    TensorValue t;
    t.dtype_ = DType::kF32;
    t.shape_ = std::move(shape);
    if (static_cast<int64_t>(values.size()) != t.shape_.num_elements())
      throw Error(Code::kShapeIncompatible, "element count mismatch");
    t.data_ = std::move(values);
    return t;
  }

  static TensorValue from_f64(Shape shape, std::vector<double> values) {
    TensorValue t;
    t.dtype_ = DType::kF64;
    t.shape_ = std::move(shape);
    if (static_cast<int64_t>(values.size()) != t.shape_.num_elements())
      throw Error(Code::kShapeIncompatible, "element count mismatch");
    t.data_ = std::move(values);
    return t;
  }

  DType dtype() const { return dtype_; }
  const Shape& shape() const { return shape_; }
  int64_t num_elements() const { return shape_.num_elements(); }
  size_t byte_size() const {
    return static_cast<size_t>(num_elements()) * dtype_size(dtype_);
  }

  std::span<const float> f32() const {
    return std::get<std::vector<float>>(data_);
  }
  std::span<float> f32() { return std::get<std::vector<float>>(data_); }
  std::span<const double> f64() const {
    return std::get<std::vector<double>>(data_);
  }
  std::span<double> f64() { return std::get<std::vector<double>>(data_); }

  // Dtype-erased element access, as double.
  double at(int64_t i) const {
    return dtype_ == DType::kF32 ? static_cast<double>(f32()[size_t(i)])
                                 : f64()[size_t(i)];
  }
  void set(int64_t i, double v) {
    if (dtype_ == DType::kF32)
      f32()[size_t(i)] = static_cast<float>(v);
    else
      f64()[size_t(i)] = v;
  }

  bool same_bits(const TensorValue& other) const {
    if (dtype_ != other.dtype_ || shape_ != other.shape_) return false;
    if (dtype_ == DType::kF32) {
      auto a = f32(), b = other.f32();
      return std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
    }
    auto a = f64(), b = other.f64();
    return std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
  }

 private:
  DType dtype_;
  Shape shape_;
  std::variant<std::vector<float>, std::vector<double>> data_;
};

inline bool operator==(const TensorValue& a, const TensorValue& b) {
  return a.same_bits(b);
}
inline bool operator!=(const TensorValue& a, const TensorValue& b) {
  return !a.same_bits(b);
}

}  // namespace tg

#endif  // TINYGRAPH_TENSOR_H_
