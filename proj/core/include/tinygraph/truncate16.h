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

#ifndef TINYGRAPH_TRUNCATE16_H_
#define TINYGRAPH_TRUNCATE16_H_

#include <bit>
#include <cstdint>

namespace tg {

// Lossy 32->16 bit wire compression: keep sign, 8 exponent bits and the top
// 7 mantissa bits; the receiving side reconstructs by zero-filling the low
// 16 bits, so one application is its own round trip. NaN inputs get the
// quiet bit forced so the truncated encoding stays a NaN instead of
// collapsing to an infinity.
inline uint16_t truncate16_wire(float v) {
  uint32_t bits = std::bit_cast<uint32_t>(v);
  if (v != v) bits |= 0x00400000u;
  return static_cast<uint16_t>(bits >> 16);
}

inline float truncate16_restore(uint16_t hi) {
  return std::bit_cast<float>(static_cast<uint32_t>(hi) << 16);
}

inline float truncate16(float v) {
  return truncate16_restore(truncate16_wire(v));
}

}  // namespace tg

#endif  // TINYGRAPH_TRUNCATE16_H_
