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

#ifndef TINYGRAPH_SUMMARY_H_
#define TINYGRAPH_SUMMARY_H_

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "tinygraph/graph.h"
#include "tinygraph/tensor.h"

namespace tg {

// Fixed log-spaced binning: 15 positive decade buckets between 1e-12 and
// 1e3, mirrored on the negative side, plus a zero bucket for |x| < 1e-12.
// Out-of-range magnitudes clamp into the outermost buckets, so counts always
// sum to the element count. `edges` holds the 32 boundaries; counts[i] covers
// [edges[i], edges[i+1]) with the zero bucket at index 15.
struct Histogram {
  std::vector<double> edges;
  std::vector<int64_t> counts;
  double min = 0;
  double max = 0;
  double sum = 0;
};

Histogram build_histogram(const TensorValue& value);

enum class SummaryKind : uint8_t { kScalar, kHistogram };

struct EventRecord {
  int64_t step = 0;
  double time = 0;  // simulated seconds, deterministic across runs
  std::string tag;
  SummaryKind kind = SummaryKind::kScalar;
  double scalar = 0;
  Histogram histogram;
};

// One JSONL line, keys in the order step, time, tag, kind, value.
std::string event_to_json(const EventRecord& record);

// Append-only JSONL sink; the single-writer contract is the caller's.
class EventWriter {
 public:
  explicit EventWriter(const std::string& path);
  void write(const EventRecord& record);
  void flush() { out_.flush(); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

// Graph builders. Summary nodes are registered in the "summaries" collection;
// their outputs resolve to serialized event payloads during a run.
TensorRef scalar_summary(Graph& g, const std::string& tag, TensorRef x);
TensorRef histogram_summary(Graph& g, const std::string& tag, TensorRef x);
// MergeSummaries over every node currently in the "summaries" collection.
TensorRef merge_all_summaries(Graph& g);

}  // namespace tg

#endif  // TINYGRAPH_SUMMARY_H_
