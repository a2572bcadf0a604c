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

#ifndef TINYGRAPH_CHECKPOINT_H_
#define TINYGRAPH_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "tinygraph/tensor.h"

namespace tg {

struct CheckpointEntry {
  std::string name;
  TensorValue value;
};

// Binary container, little-endian throughout:
//   magic "TGCKPT01", then per entry:
//   u32 name length | name bytes | u8 dtype | u8 rank | u64 dims[rank] |
//   payload | u32 CRC32 over name bytes + payload.
void write_checkpoint(const std::string& path,
                      const std::vector<CheckpointEntry>& entries);

// Throws MalformedDocument on a bad magic/truncated stream and
// ChecksumMismatch when an entry's CRC32 does not match.
std::vector<CheckpointEntry> read_checkpoint(const std::string& path);

uint32_t crc32(const void* data, size_t size, uint32_t seed = 0);

}  // namespace tg

#endif  // TINYGRAPH_CHECKPOINT_H_
