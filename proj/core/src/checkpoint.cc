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

#include "tinygraph/checkpoint.h"

#include <array>
#include <cstring>
#include <fstream>

namespace tg {

namespace {

constexpr char kMagic[8] = {'T', 'G', 'C', 'K', 'P', 'T', '0', '1'};

const std::array<uint32_t, 256>& crc_table() {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k)
        c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  return table;
}

template <typename T>
void put(std::string& out, T v) {
  // Little-endian on every supported target.
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& buf, size_t& pos) {
  if (pos + sizeof(T) > buf.size())
    throw Error(Code::kMalformedDocument, "truncated checkpoint entry");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

uint32_t crc32(const void* data, size_t size, uint32_t seed) {
  const auto& table = crc_table();
  uint32_t c = seed ^ 0xFFFFFFFFu;
  const uint8_t* p = static_cast<const uint8_t*>(data);
  for (size_t i = 0; i < size; ++i) c = table[(c ^ p[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

void write_checkpoint(const std::string& path,
                      const std::vector<CheckpointEntry>& entries) {
  std::string out(kMagic, sizeof kMagic);
  for (const CheckpointEntry& e : entries) {
    put<uint32_t>(out, static_cast<uint32_t>(e.name.size()));
    out += e.name;
    put<uint8_t>(out, static_cast<uint8_t>(e.value.dtype()));
    const Shape& shape = e.value.shape();
    put<uint8_t>(out, static_cast<uint8_t>(shape.rank()));
    for (int64_t d : shape.dims()) put<uint64_t>(out, uint64_t(d));

    std::string payload;
    if (e.value.dtype() == DType::kF32) {
      auto span = e.value.f32();
      payload.assign(reinterpret_cast<const char*>(span.data()),
                     span.size_bytes());
    } else {
      auto span = e.value.f64();
      payload.assign(reinterpret_cast<const char*>(span.data()),
                     span.size_bytes());
    }
    out += payload;
    uint32_t crc = crc32(e.name.data(), e.name.size());
    crc = crc32(payload.data(), payload.size(), crc);
    put<uint32_t>(out, crc);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f)
    throw Error(Code::kInvalidArgument, "cannot open " + path + " for writing");
  f.write(out.data(), std::streamsize(out.size()));
  if (!f) throw Error(Code::kInvalidArgument, "short write to " + path);
}

std::vector<CheckpointEntry> read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Code::kNameNotFound, "cannot open checkpoint " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < sizeof kMagic ||
      std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
    throw Error(Code::kMalformedDocument, "bad checkpoint magic in " + path);

  std::vector<CheckpointEntry> entries;
  size_t pos = sizeof kMagic;
  while (pos < buf.size()) {
    uint32_t name_len = take<uint32_t>(buf, pos);
    if (pos + name_len > buf.size())
      throw Error(Code::kMalformedDocument, "truncated checkpoint name");
    std::string name = buf.substr(pos, name_len);
    pos += name_len;

    uint8_t dtype_byte = take<uint8_t>(buf, pos);
    if (dtype_byte > 1)
      throw Error(Code::kMalformedDocument, "unknown dtype byte");
    DType dtype = static_cast<DType>(dtype_byte);
    uint8_t rank = take<uint8_t>(buf, pos);
    std::vector<int64_t> dims;
    for (int i = 0; i < rank; ++i)
      dims.push_back(int64_t(take<uint64_t>(buf, pos)));
    Shape shape(dims);
    size_t payload_size =
        size_t(shape.num_elements()) * dtype_size(dtype);
    if (pos + payload_size > buf.size())
      throw Error(Code::kMalformedDocument, "truncated checkpoint payload");
    const char* payload = buf.data() + pos;
    pos += payload_size;

    uint32_t stored = take<uint32_t>(buf, pos);
    uint32_t computed = crc32(name.data(), name.size());
    computed = crc32(payload, payload_size, computed);
    if (stored != computed)
      throw Error(Code::kChecksumMismatch,
                  "checksum mismatch for entry \"" + name + "\"");

    TensorValue value;
    if (dtype == DType::kF32) {
      std::vector<float> data(payload_size / sizeof(float));
      std::memcpy(data.data(), payload, payload_size);
      value = TensorValue::from_f32(shape, std::move(data));
    } else {
      std::vector<double> data(payload_size / sizeof(double));
      std::memcpy(data.data(), payload, payload_size);
      value = TensorValue::from_f64(shape, std::move(data));
    }
    entries.push_back(CheckpointEntry{std::move(name), std::move(value)});
  }
  return entries;
}

}  // namespace tg
