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

#include "tinygraph/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <vector>

#include "tinygraph/rng.h"

namespace tg {

namespace {

std::vector<int64_t> epoch_permutation(int64_t n, uint64_t seed,
                                       int64_t epoch) {
  std::vector<int64_t> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed * 1000003ull + uint64_t(epoch) + 1);
  for (int64_t i = n - 1; i > 0; --i) {
    int64_t j = int64_t(rng.next() % uint64_t(i + 1));
    std::swap(perm[size_t(i)], perm[size_t(j)]);
  }
  return perm;
}

uint32_t read_be32(std::ifstream& f, const std::string& path) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4))
    throw Error(Code::kMalformedDocument, "truncated IDX header in " + path);
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) |
         (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

TensorValue dense(DType dtype, Shape shape, const std::vector<double>& data) {
  TensorValue t(dtype, std::move(shape));
  for (size_t i = 0; i < data.size(); ++i) t.set(int64_t(i), data[i]);
  return t;
}

}  // namespace

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path, DType dtype) {
  std::ifstream imgf(images_path, std::ios::binary);
  if (!imgf)
    throw Error(Code::kNameNotFound, "cannot open " + images_path);
  if (read_be32(imgf, images_path) != 0x00000803u)
    throw Error(Code::kMalformedDocument,
                images_path + " lacks the IDX image magic 0x00000803");
  int64_t n = read_be32(imgf, images_path);
  int64_t rows = read_be32(imgf, images_path);
  int64_t cols = read_be32(imgf, images_path);
  int64_t d = rows * cols;
  std::vector<unsigned char> pixels(size_t(n * d));
  if (!imgf.read(reinterpret_cast<char*>(pixels.data()),
                 std::streamsize(pixels.size())))
    throw Error(Code::kMalformedDocument,
                images_path + " is shorter than its header claims");

  std::ifstream lblf(labels_path, std::ios::binary);
  if (!lblf)
    throw Error(Code::kNameNotFound, "cannot open " + labels_path);
  if (read_be32(lblf, labels_path) != 0x00000801u)
    throw Error(Code::kMalformedDocument,
                labels_path + " lacks the IDX label magic 0x00000801");
  int64_t ln = read_be32(lblf, labels_path);
  if (ln != n)
    throw Error(Code::kMalformedDocument,
                "image/label counts differ: " + std::to_string(n) + " vs " +
                    std::to_string(ln));
  std::vector<unsigned char> raw_labels(static_cast<size_t>(n));
  if (!lblf.read(reinterpret_cast<char*>(raw_labels.data()),
                 std::streamsize(raw_labels.size())))
    throw Error(Code::kMalformedDocument,
                labels_path + " is shorter than its header claims");

  int64_t k = 0;
  for (unsigned char l : raw_labels) k = std::max<int64_t>(k, l + 1);

  std::vector<double> images(size_t(n * d));
  for (size_t i = 0; i < pixels.size(); ++i)
    images[i] = double(pixels[i]) / 255.0;
  std::vector<double> labels(size_t(n * k), 0.0);
  for (int64_t i = 0; i < n; ++i)
    labels[size_t(i * k + raw_labels[size_t(i)])] = 1.0;

  return Dataset{dense(dtype, Shape{n, d}, images),
                 dense(dtype, Shape{n, k}, labels)};
}

Dataset make_synthetic(int64_t classes, int64_t dim, int64_t count,
                       double separation, uint64_t seed, DType dtype) {
  if (classes < 2 || dim < 1 || count < classes)
    throw Error(Code::kInvalidArgument, "degenerate synthetic dataset spec");
  if (!(separation > 0))
    throw Error(Code::kInvalidArgument, "separation must be positive");

  // Image-like class prototypes: ~10% of coordinates are "ink" (bright,
  // class-specific), the rest stay exactly zero, mirroring the sparsity that
  // makes pixel data trainable at walkthrough learning rates.
  Rng rng(seed);
  std::vector<double> means(size_t(classes * dim), 0.0);
  for (double& m : means)
    if (rng.uniform() < 0.1) m = 0.5 + 0.5 * rng.uniform();

  double sigma = 0.25 / separation;
  std::vector<double> images(size_t(count * dim));
  std::vector<double> labels(size_t(count * classes), 0.0);
  for (int64_t i = 0; i < count; ++i) {
    int64_t c = i % classes;
    labels[size_t(i * classes + c)] = 1.0;
    for (int64_t j = 0; j < dim; ++j) {
      double mu = means[size_t(c * dim + j)];
      double x = mu == 0.0 ? 0.0 : mu + sigma * rng.normal();
      images[size_t(i * dim + j)] = std::clamp(x, 0.0, 1.0);
    }
  }
  return Dataset{dense(dtype, Shape{count, dim}, images),
                 dense(dtype, Shape{count, classes}, labels)};
}

Batch next_batch(const Dataset& data, int64_t batch, int64_t step,
                 uint64_t seed) {
  if (batch < 1 || batch > data.size())
    throw Error(Code::kInvalidArgument, "bad batch size");
  int64_t n = data.size(), d = data.dim(), k = data.classes();
  DType dtype = data.images.dtype();

  TensorValue images(dtype, Shape{batch, d});
  TensorValue labels(dtype, Shape{batch, k});
  int64_t cached_epoch = -1;
  std::vector<int64_t> perm;
  for (int64_t i = 0; i < batch; ++i) {
    int64_t global = step * batch + i;
    int64_t epoch = global / n;
    if (epoch != cached_epoch) {
      perm = epoch_permutation(n, seed, epoch);
      cached_epoch = epoch;
    }
    int64_t src = perm[size_t(global % n)];
    for (int64_t j = 0; j < d; ++j)
      images.set(i * d + j, data.images.at(src * d + j));
    for (int64_t j = 0; j < k; ++j)
      labels.set(i * k + j, data.labels.at(src * k + j));
  }
  return Batch{std::move(images), std::move(labels)};
}

}  // namespace tg
