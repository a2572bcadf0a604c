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

#ifndef TINYGRAPH_DATASET_H_
#define TINYGRAPH_DATASET_H_

#include <cstdint>
#include <string>

#include "tinygraph/tensor.h"

namespace tg {

// In-memory classification dataset: images (n, d) with values scaled to
// [0, 1]-ish magnitudes, labels (n, k) one-hot.
struct Dataset {
  TensorValue images;
  TensorValue labels;

  int64_t size() const { return images.shape().dim(0); }
  int64_t dim() const { return images.shape().dim(1); }
  int64_t classes() const { return labels.shape().dim(1); }
};

// IDX pair reader (big-endian dims, u8 payload): images magic 0x00000803
// with dims (n, rows, cols) flattened to (n, rows*cols) and scaled by 1/255;
// labels magic 0x00000801, one-hot encoded over max(label)+1 classes.
Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path, DType dtype = DType::kF32);

// Hermetic stand-in for MNIST: `classes` sparse prototypes in [0,1]^dim.
// Each class lights up ~10% of the coordinates with bright means in
// [0.5, 1); the rest stay exactly zero, like ink on a blank canvas.
// Lit coordinates add Gaussian noise with sigma = 0.25/separation (larger
// separation = crisper classes) and samples are clamped to [0, 1].
// Classes are interleaved (sample i belongs to class i mod k) and `count`
// is the total sample count. Fully determined by the seed.
Dataset make_synthetic(int64_t classes, int64_t dim, int64_t count,
                       double separation, uint64_t seed,
                       DType dtype = DType::kF32);

struct Batch {
  TensorValue images;
  TensorValue labels;
};

// Mini-batch `step` under sequential epochs with per-epoch seeded shuffling.
// Stateless in step: resuming at step s reproduces the uninterrupted order.
Batch next_batch(const Dataset& data, int64_t batch, int64_t step,
                 uint64_t seed);

}  // namespace tg

#endif  // TINYGRAPH_DATASET_H_
