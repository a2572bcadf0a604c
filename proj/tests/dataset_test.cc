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

#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "checks.h"
#include "oracle.h"

using namespace tg;

namespace {

void push_be32(std::string& s, uint32_t v) {
  s.push_back(char((v >> 24) & 0xff));
  s.push_back(char((v >> 16) & 0xff));
  s.push_back(char((v >> 8) & 0xff));
  s.push_back(char(v & 0xff));
}

// A crafted three-sample, 2x2-pixel IDX pair with known bytes.
std::string idx_images(uint32_t magic = 0x00000803u, uint32_t n = 3,
                       int payload = 12) {
  std::string s;
  push_be32(s, magic);
  push_be32(s, n);
  push_be32(s, 2);  // rows
  push_be32(s, 2);  // cols
  const unsigned char px[12] = {0, 255, 51, 102,   // sample 0
                                255, 0, 0, 255,    // sample 1
                                10, 20, 30, 40};   // sample 2
  for (int i = 0; i < payload; ++i) s.push_back(char(px[i]));
  return s;
}

std::string idx_labels(uint32_t magic = 0x00000801u, uint32_t n = 3) {
  std::string s;
  push_be32(s, magic);
  push_be32(s, n);
  const unsigned char lbl[3] = {2, 0, 1};
  for (uint32_t i = 0; i < n && i < 3; ++i) s.push_back(char(lbl[i]));
  return s;
}

struct TempFile {
  std::string path;
  TempFile(const std::string& name, const std::string& bytes)
      : path("/tmp/tg_dataset_" + name) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size()));
  }
  ~TempFile() { std::remove(path.c_str()); }
};

TEST_CASE("idx loader decodes the crafted fixture") {
  TempFile img("ok_images", idx_images());
  TempFile lbl("ok_labels", idx_labels());
  Dataset d = load_idx(img.path, lbl.path, DType::kF64);

  CHECK(d.size() == 3);
  CHECK(d.dim() == 4);        // 2x2 flattened
  CHECK(d.classes() == 3);    // max label 2 -> 3 one-hot columns
  CHECK(d.images.shape() == Shape{3, 4});
  CHECK(d.labels.shape() == Shape{3, 3});

  CHECK(d.images.at(0) == 0.0);
  CHECK(d.images.at(1) == 1.0);           // 255/255
  CHECK(d.images.at(2) == 51.0 / 255.0);  // exactly 0.2
  CHECK(d.images.at(4) == 1.0);
  CHECK(d.images.at(8) == 10.0 / 255.0);

  // One-hot rows for labels 2, 0, 1.
  const double want[9] = {0, 0, 1, 1, 0, 0, 0, 1, 0};
  for (int i = 0; i < 9; ++i) CHECK(d.labels.at(i) == want[i]);
}

TEST_CASE("idx loader rejects bad files") {
  TempFile img("good_images", idx_images());
  TempFile lbl("good_labels", idx_labels());

  TempFile bad_magic("bad_magic", idx_images(0x00000804u));
  CHECK_CODE(load_idx(bad_magic.path, lbl.path), Code::kMalformedDocument);

  TempFile bad_lbl_magic("bad_lbl_magic", idx_labels(0x00000803u));
  CHECK_CODE(load_idx(img.path, bad_lbl_magic.path), Code::kMalformedDocument);

  TempFile truncated("truncated", idx_images(0x00000803u, 3, /*payload=*/7));
  CHECK_CODE(load_idx(truncated.path, lbl.path), Code::kMalformedDocument);

  TempFile short_hdr("short_hdr", std::string("\x00\x00\x08", 3));
  CHECK_CODE(load_idx(short_hdr.path, lbl.path), Code::kMalformedDocument);

  TempFile two_labels("two_labels", idx_labels(0x00000801u, 2));
  CHECK_CODE(load_idx(img.path, two_labels.path), Code::kMalformedDocument);

  CHECK_CODE(load_idx("/tmp/tg_dataset_no_such_file", lbl.path),
             Code::kNameNotFound);
  CHECK_CODE(load_idx(img.path, "/tmp/tg_dataset_no_such_file"),
             Code::kNameNotFound);
}

TEST_CASE("synthetic data is deterministic, one-hot and in range") {
  Dataset a = make_synthetic(4, 30, 100, 2.0, 9);
  Dataset b = make_synthetic(4, 30, 100, 2.0, 9);
  CHECK(a.images.same_bits(b.images));
  CHECK(a.labels.same_bits(b.labels));
  CHECK_FALSE(
      a.images.same_bits(make_synthetic(4, 30, 100, 2.0, 10).images));

  CHECK(a.size() == 100);  // total count, not per class
  CHECK(a.dim() == 30);
  CHECK(a.classes() == 4);
  for (int64_t i = 0; i < a.images.num_elements(); ++i) {
    CHECK(a.images.at(i) >= 0.0);
    CHECK(a.images.at(i) <= 1.0);
  }
  for (int64_t i = 0; i < a.size(); ++i) {
    double row = 0;
    for (int64_t c = 0; c < 4; ++c) row += a.labels.at(i * 4 + c);
    CHECK(row == 1.0);
    // Classes are interleaved.
    CHECK(a.labels.at(i * 4 + (i % 4)) == 1.0);
  }
}

TEST_CASE("degenerate synthetic specs are rejected") {
  CHECK_CODE(make_synthetic(1, 10, 10, 1.0, 0), Code::kInvalidArgument);
  CHECK_CODE(make_synthetic(4, 0, 10, 1.0, 0), Code::kInvalidArgument);
  CHECK_CODE(make_synthetic(4, 10, 3, 1.0, 0), Code::kInvalidArgument);
  CHECK_CODE(make_synthetic(4, 10, 10, 0.0, 0), Code::kInvalidArgument);
  CHECK_CODE(make_synthetic(4, 10, 10, -1.0, 0), Code::kInvalidArgument);
}

TEST_CASE("batching shuffles per epoch and resumes statelessly") {
  Dataset d = make_synthetic(3, 40, 30, 2.0, 1);
  const int64_t kBatch = 10, kSeed = 77;
  const int64_t kDim = d.dim();

  // One epoch covers every sample exactly once.
  std::multiset<double> epoch_rows, data_rows;
  for (int64_t i = 0; i < d.size(); ++i) {
    double key = 0;
    for (int64_t j = 0; j < kDim; ++j) key += d.images.at(i * kDim + j);
    data_rows.insert(key);
  }
  for (int64_t step = 0; step < 3; ++step) {
    Batch b = next_batch(d, kBatch, step, kSeed);
    CHECK(b.images.shape() == Shape{kBatch, kDim});
    CHECK(b.labels.shape() == Shape{kBatch, 3});
    for (int64_t i = 0; i < kBatch; ++i) {
      double key = 0;
      for (int64_t j = 0; j < kDim; ++j) key += b.images.at(i * kDim + j);
      epoch_rows.insert(key);
    }
  }
  CHECK(epoch_rows == data_rows);

  // Stateless in step: asking for step 5 cold equals asking after a warmup.
  Batch cold = next_batch(d, kBatch, 5, kSeed);
  for (int64_t s = 0; s < 5; ++s) next_batch(d, kBatch, s, kSeed);
  Batch warm = next_batch(d, kBatch, 5, kSeed);
  CHECK(cold.images.same_bits(warm.images));
  CHECK(cold.labels.same_bits(warm.labels));

  // Different epochs see different orders (same seed, new permutation).
  Batch e0 = next_batch(d, kBatch, 0, kSeed);
  Batch e1 = next_batch(d, kBatch, 3, kSeed);
  CHECK_FALSE(e0.images.same_bits(e1.images));

  // A batch can straddle an epoch boundary and stay well-formed.
  Batch straddle = next_batch(d, 7, 4, kSeed);  // samples 28..34
  CHECK(straddle.images.shape() == Shape{7, kDim});

  CHECK_CODE(next_batch(d, 0, 0, kSeed), Code::kInvalidArgument);
  CHECK_CODE(next_batch(d, 31, 0, kSeed), Code::kInvalidArgument);
}

}  // namespace
