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

#ifndef PWAVEC_RC_RANGE_CODER_HPP_
#define PWAVEC_RC_RANGE_CODER_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "pwavec/entropy/laplace.hpp"

namespace pwavec {
namespace rc {

// 32-bit renormalizing range coder with 16-bit cumulative frequency totals.
// Carry propagation uses the classic cache/cache-size scheme; the decoder
// consumes five priming bytes, the first of which is the encoder's initial
// zero cache byte.

constexpr uint32_t kTopValue = 1u << 24;

class RangeEncoder {
 public:
  void Encode(uint32_t start, uint32_t freq, uint32_t total) {
    range_ /= total;
    low_ += uint64_t(start) * range_;
    range_ *= freq;
    while (range_ < kTopValue) {
      range_ <<= 8;
      ShiftLow();
    }
  }

  void EncodeSymbol(const entropy::QuantizedCdf& cdf, int64_t v) {
    Encode(cdf.Start(v), cdf.Freq(v), entropy::kCdfTotal);
  }

  std::vector<uint8_t> Finish() {
    for (int i = 0; i < 5; ++i) ShiftLow();
    return std::move(bytes_);
  }

  size_t BytesWritten() const { return bytes_.size(); }

 private:
  void ShiftLow() {
    if (uint32_t(low_) < 0xFF000000u || (low_ >> 32) != 0) {
      uint8_t carry = uint8_t(low_ >> 32);
      do {
        bytes_.push_back(uint8_t(cache_ + carry));
        cache_ = 0xFF;
      } while (--cache_size_ != 0);
      cache_ = uint8_t(low_ >> 24);
    }
    ++cache_size_;
    low_ = (low_ << 8) & 0xFFFFFFFFull;
  }

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  std::vector<uint8_t> bytes_;
};

class RangeDecoder {
 public:
  RangeDecoder(const uint8_t* data, size_t size) : data_(data), size_(size) {
    for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | NextByte();
  }
  explicit RangeDecoder(const std::vector<uint8_t>& payload)
      : RangeDecoder(payload.data(), payload.size()) {}

  uint32_t DecodeFreq(uint32_t total) {
    range_ /= total;
    uint32_t f = code_ / range_;
    RequireDecode(f < total, "corrupt range-coded payload");
    return f;
  }

  void Consume(uint32_t start, uint32_t freq) {
    code_ -= start * range_;
    range_ *= freq;
    while (range_ < kTopValue) {
      code_ = (code_ << 8) | NextByte();
      range_ <<= 8;
    }
  }

  int64_t DecodeSymbol(const entropy::QuantizedCdf& cdf) {
    uint32_t f = DecodeFreq(entropy::kCdfTotal);
    int64_t v = cdf.Find(f);
    Consume(cdf.Start(v), cdf.Freq(v));
    return v;
  }

 private:
  uint8_t NextByte() {
    RequireDecode(pos_ < size_, "truncated range-coded payload");
    return data_[pos_++];
  }

  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
  uint32_t code_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
};

// Convenience wrappers for whole-sequence coding with a per-symbol table
// provider (the codec itself interleaves decoding with context building).
inline std::vector<uint8_t> EncodeSymbols(
    const std::vector<int64_t>& symbols,
    const std::function<const entropy::QuantizedCdf&(size_t)>& provider) {
  RangeEncoder enc;
  for (size_t i = 0; i < symbols.size(); ++i) {
    enc.EncodeSymbol(provider(i), symbols[i]);
  }
  return enc.Finish();
}

inline std::vector<int64_t> DecodeSymbols(
    const std::vector<uint8_t>& payload, size_t count,
    const std::function<const entropy::QuantizedCdf&(size_t)>& provider) {
  std::vector<int64_t> out;
  out.reserve(count);
  RangeDecoder dec(payload);
  for (size_t i = 0; i < count; ++i) {
    out.push_back(dec.DecodeSymbol(provider(i)));
  }
  return out;
}

}  // namespace rc
}  // namespace pwavec

#endif  // PWAVEC_RC_RANGE_CODER_HPP_
