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

#include "tinygraph/summary.h"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace tg {

namespace {

constexpr int kDecadeLo = -12;  // smallest magnitude decade, 1e-12
constexpr int kDecadeHi = 3;    // largest edge, 1e3
constexpr int kSideBuckets = kDecadeHi - kDecadeLo;  // 15 per side

int bucket_index(double x) {
  double mag = std::fabs(x);
  if (!(mag >= std::pow(10.0, kDecadeLo)))  // zero, denormal-small, NaN
    return kSideBuckets;
  int decade = int(std::floor(std::log10(mag)));
  int offset = std::clamp(decade - kDecadeLo, 0, kSideBuckets - 1);
  return x < 0 ? kSideBuckets - 1 - offset : kSideBuckets + 1 + offset;
}

}  // namespace

Histogram build_histogram(const TensorValue& value) {
  Histogram h;
  for (int k = kDecadeHi; k > kDecadeLo; --k)
    h.edges.push_back(-std::pow(10.0, k));
  h.edges.push_back(-std::pow(10.0, kDecadeLo));
  for (int k = kDecadeLo; k <= kDecadeHi; ++k)
    h.edges.push_back(std::pow(10.0, k));
  h.counts.assign(2 * kSideBuckets + 1, 0);

  int64_t n = value.num_elements();
  for (int64_t i = 0; i < n; ++i) {
    double x = value.at(i);
    ++h.counts[size_t(bucket_index(x))];
    if (i == 0 || x < h.min) h.min = x;
    if (i == 0 || x > h.max) h.max = x;
    h.sum += x;
  }
  return h;
}

std::string event_to_json(const EventRecord& record) {
  nlohmann::ordered_json j;
  j["step"] = record.step;
  j["time"] = record.time;
  j["tag"] = record.tag;
  j["kind"] = record.kind == SummaryKind::kScalar ? "scalar" : "histogram";
  if (record.kind == SummaryKind::kScalar) {
    j["value"] = record.scalar;
  } else {
    nlohmann::ordered_json v;
    v["edges"] = record.histogram.edges;
    v["counts"] = record.histogram.counts;
    v["min"] = record.histogram.min;
    v["max"] = record.histogram.max;
    v["sum"] = record.histogram.sum;
    j["value"] = std::move(v);
  }
  return j.dump();
}

EventWriter::EventWriter(const std::string& path)
    : path_(path), out_(path, std::ios::app) {
  if (!out_)
    throw Error(Code::kInvalidArgument, "cannot open event file " + path);
}

void EventWriter::write(const EventRecord& record) {
  out_ << event_to_json(record) << "\n";
}

TensorRef scalar_summary(Graph& g, const std::string& tag, TensorRef x) {
  TensorRef out = g.add(OpKind::kScalarSummary, {x}, {{"tag", tag}},
                        "summary/" + tag);
  g.add_to_collection("summaries", out.producer);
  return out;
}

TensorRef histogram_summary(Graph& g, const std::string& tag, TensorRef x) {
  TensorRef out = g.add(OpKind::kHistogramSummary, {x}, {{"tag", tag}},
                        "summary/" + tag);
  g.add_to_collection("summaries", out.producer);
  return out;
}

TensorRef merge_all_summaries(Graph& g) {
  std::vector<TensorRef> inputs;
  for (NodeId id : g.collection("summaries"))
    inputs.push_back(g.node(id).out(0));
  return g.add(OpKind::kMergeSummaries, inputs, {}, "merged_summaries");
}

}  // namespace tg
