// Copyright 2026 The pwavec Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PWAVEC_NN_SERIALIZE_HPP_
#define PWAVEC_NN_SERIALIZE_HPP_

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "pwavec/nn/modules.hpp"

namespace pwavec {
namespace nn {

// PWNN weight container: little-endian, versioned.
//   magic "PWNN", u16 version, u32 entry count,
//   per entry: name (u16-length string), shape (4 x u32), u64 data offset,
//   u64 payload length in doubles, payload (f64 each).
// Entries are written in name order, so byte output is a pure function of
// the tensor map (this also makes the container hashable for model ids).

constexpr uint16_t kPwnnVersion = 1;

inline std::vector<uint8_t> SerializeTensors(
    const std::map<std::string, Tensor4>& tensors) {
  ByteWriter w;
  w.U8('P');
  w.U8('W');
  w.U8('N');
  w.U8('N');
  w.U16(kPwnnVersion);
  w.U32(static_cast<uint32_t>(tensors.size()));
  uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    w.String(name);
    w.U32(uint32_t(t.n()));
    w.U32(uint32_t(t.c()));
    w.U32(uint32_t(t.h()));
    w.U32(uint32_t(t.w()));
    w.U64(offset);
    offset += uint64_t(t.numel());
  }
  w.U64(offset);
  for (const auto& [name, t] : tensors) {
    for (int64_t i = 0; i < t.numel(); ++i) w.F64(t[i]);
  }
  return w.Take();
}

inline std::map<std::string, Tensor4> DeserializeTensors(
    const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes);
  RequireDecode(r.U8() == 'P' && r.U8() == 'W' && r.U8() == 'N' &&
                    r.U8() == 'N',
                "not a PWNN container");
  RequireDecode(r.U16() == kPwnnVersion, "unsupported PWNN version");
  uint32_t count = r.U32();
  struct Entry {
    std::string name;
    Shape4 shape;
    uint64_t offset;
  };
  std::vector<Entry> entries;
  entries.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    Entry e;
    e.name = r.String();
    e.shape.n = int(r.U32());
    e.shape.c = int(r.U32());
    e.shape.h = int(r.U32());
    e.shape.w = int(r.U32());
    e.offset = r.U64();
    RequireDecode(e.shape.numel() > 0, "PWNN entry with empty shape");
    entries.push_back(std::move(e));
  }
  uint64_t total = r.U64();
  RequireDecode(r.remaining() == total * 8, "PWNN payload length mismatch");
  std::map<std::string, Tensor4> out;
  for (const Entry& e : entries) {
    RequireDecode(e.offset + uint64_t(e.shape.numel()) <= total,
                  "PWNN entry exceeds payload");
    Tensor4 t(e.shape);
    ByteReader pr(bytes.data() + r.pos() + e.offset * 8,
                  size_t(e.shape.numel()) * 8);
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = pr.F64();
    out.emplace(e.name, std::move(t));
  }
  return out;
}

inline std::map<std::string, Tensor4> ExportParams(const ParamStore& ps) {
  std::map<std::string, Tensor4> out;
  for (const auto& [name, v] : ps.All()) out.emplace(name, v->value);
  return out;
}

// Strict import: the stored and constructed parameter sets must agree on
// names and shapes exactly.
inline void ImportParams(const std::map<std::string, Tensor4>& tensors,
                         ParamStore* ps) {
  for (const auto& [name, v] : ps->All()) {
    auto it = tensors.find(name);
    RequireDecode(it != tensors.end(), "missing parameter in file: " + name);
    RequireDecode(it->second.shape() == v->value.shape(),
                  "parameter shape mismatch: " + name);
    v->value = it->second;
  }
  for (const auto& [name, t] : tensors) {
    RequireDecode(ps->Has(name), "unexpected parameter in file: " + name);
  }
}

inline void WriteBytesFile(const std::string& path,
                           const std::vector<uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for write: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          std::streamsize(bytes.size()));
  if (!f) throw IoError("write failed: " + path);
}

inline std::vector<uint8_t> ReadBytesFile(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw IoError("cannot open: " + path);
  std::streamsize size = f.tellg();
  f.seekg(0);
  std::vector<uint8_t> bytes(static_cast<size_t>(size));
  f.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!f) throw IoError("read failed: " + path);
  return bytes;
}

}  // namespace nn
}  // namespace pwavec

#endif  // PWAVEC_NN_SERIALIZE_HPP_
