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

#ifndef PWAVEC_VIDEO_MCTF_HPP_
#define PWAVEC_VIDEO_MCTF_HPP_

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "pwavec/codec/image.hpp"
#include "pwavec/io/image_io.hpp"

namespace pwavec {
namespace video {

// Motion-compensated temporal lifting: Haar lifting along the time axis with
// block motion compensation inside the predict step. A group of 8 frames is
// decomposed over 3 temporal levels (7 high-pass frames, 7 motion fields,
// one final low-pass frame).

constexpr int kBlockSize = 8;
constexpr int kSearchRange = 8;
constexpr int kGopSize = 8;
constexpr int kTemporalLevels = 3;
constexpr int kFieldsPerGop = 7;

inline int BlocksAcross(int n) { return (n + kBlockSize - 1) / kBlockSize; }

struct MotionField {
  int bw = 0, bh = 0;
  std::vector<int8_t> dy, dx;  // per block, row-major, each in [-8, 8]

  int8_t& DyAt(int by, int bx) { return dy[size_t(by) * size_t(bw) + bx]; }
  int8_t& DxAt(int by, int bx) { return dx[size_t(by) * size_t(bw) + bx]; }
  int8_t DyAt(int by, int bx) const {
    return dy[size_t(by) * size_t(bw) + bx];
  }
  int8_t DxAt(int by, int bx) const {
    return dx[size_t(by) * size_t(bw) + bx];
  }
};

inline int ClampCoord(int v, int n) { return std::min(n - 1, std::max(0, v)); }

// Full-search block matching of `cur` against `ref`. The zero vector wins
// ties, then the first candidate in raster scan order of (dy, dx).
inline MotionField EstimateMotion(const Tensor4& cur, const Tensor4& ref) {
  Require(cur.shape() == ref.shape(), "motion estimation shape mismatch");
  int h = cur.h(), w = cur.w();
  MotionField mv;
  mv.bw = BlocksAcross(w);
  mv.bh = BlocksAcross(h);
  mv.dy.assign(size_t(mv.bw) * size_t(mv.bh), 0);
  mv.dx.assign(size_t(mv.bw) * size_t(mv.bh), 0);
  for (int by = 0; by < mv.bh; ++by) {
    for (int bx = 0; bx < mv.bw; ++bx) {
      int y0 = by * kBlockSize, x0 = bx * kBlockSize;
      int y1 = std::min(h, y0 + kBlockSize), x1 = std::min(w, x0 + kBlockSize);
      auto sad = [&](int dy, int dx) {
        double acc = 0.0;
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) {
            double r = ref.At(0, 0, ClampCoord(y + dy, h),
                              ClampCoord(x + dx, w));
            acc += std::abs(cur.At(0, 0, y, x) - r);
          }
        }
        return acc;
      };
      double best = sad(0, 0);
      int bdy = 0, bdx = 0;
      for (int dy = -kSearchRange; dy <= kSearchRange; ++dy) {
        for (int dx = -kSearchRange; dx <= kSearchRange; ++dx) {
          double s = sad(dy, dx);
          if (s < best) {
            best = s;
            bdy = dy;
            bdx = dx;
          }
        }
      }
      mv.DyAt(by, bx) = int8_t(bdy);
      mv.DxAt(by, bx) = int8_t(bdx);
    }
  }
  return mv;
}

// Prediction of the current frame grid from `ref`, displaced per block.
// Out-of-frame reads replicate the edge.
inline Tensor4 MotionCompensate(const Tensor4& ref, const MotionField& mv) {
  int h = ref.h(), w = ref.w();
  Tensor4 out(ref.shape());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int by = y / kBlockSize, bx = x / kBlockSize;
      out.At(0, 0, y, x) =
          ref.At(0, 0, ClampCoord(y + mv.DyAt(by, bx), h),
                 ClampCoord(x + mv.DxAt(by, bx), w));
    }
  }
  return out;
}

// Update-step compensation: the same block grid with negated vectors.
inline Tensor4 InverseMotionCompensate(const Tensor4& hp,
                                       const MotionField& mv) {
  int h = hp.h(), w = hp.w();
  Tensor4 out(hp.shape());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int by = y / kBlockSize, bx = x / kBlockSize;
      out.At(0, 0, y, x) =
          hp.At(0, 0, ClampCoord(y - mv.DyAt(by, bx), h),
                ClampCoord(x - mv.DxAt(by, bx), w));
    }
  }
  return out;
}

// One temporal lifting step on a frame pair. In integer mode the update term
// is rounded, which makes the step exactly invertible on integer frames.
inline void TemporalLift(const Tensor4& even, const Tensor4& odd, bool integer,
                         MotionField* mv, Tensor4* low, Tensor4* high) {
  *mv = EstimateMotion(odd, even);
  Tensor4 pred = MotionCompensate(even, *mv);
  *high = Tensor4(even.shape());
  for (int64_t i = 0; i < high->numel(); ++i) {
    (*high)[i] = odd[i] - pred[i];
  }
  Tensor4 upd = InverseMotionCompensate(*high, *mv);
  *low = Tensor4(even.shape());
  for (int64_t i = 0; i < low->numel(); ++i) {
    double u = 0.5 * upd[i];
    (*low)[i] = even[i] + (integer ? nn::RoundAway(u) : u);
  }
}

inline void TemporalUnlift(const Tensor4& low, const Tensor4& high,
                           const MotionField& mv, bool integer, Tensor4* even,
                           Tensor4* odd) {
  Tensor4 upd = InverseMotionCompensate(high, mv);
  *even = Tensor4(low.shape());
  for (int64_t i = 0; i < even->numel(); ++i) {
    double u = 0.5 * upd[i];
    (*even)[i] = low[i] - (integer ? nn::RoundAway(u) : u);
  }
  Tensor4 pred = MotionCompensate(*even, mv);
  *odd = Tensor4(low.shape());
  for (int64_t i = 0; i < odd->numel(); ++i) {
    (*odd)[i] = high[i] + pred[i];
  }
}

// Analysis of one 8-frame group. High-pass frames and motion fields are kept
// in analysis order: four level-0 entries, two level-1, one level-2.
struct GopAnalysis {
  Tensor4 low;
  std::vector<Tensor4> high;
  std::vector<MotionField> mv;
};

inline GopAnalysis MctfForward(const std::vector<Tensor4>& frames,
                               bool integer) {
  Require(int(frames.size()) == kGopSize, "a group holds 8 frames");
  GopAnalysis g;
  g.high.resize(kFieldsPerGop);
  g.mv.resize(kFieldsPerGop);
  std::vector<Tensor4> cur = frames;
  int out = 0;
  for (int level = 0; level < kTemporalLevels; ++level) {
    std::vector<Tensor4> next(cur.size() / 2);
    for (size_t i = 0; i < next.size(); ++i) {
      TemporalLift(cur[2 * i], cur[2 * i + 1], integer, &g.mv[size_t(out)],
                   &next[i], &g.high[size_t(out)]);
      ++out;
    }
    cur = std::move(next);
  }
  g.low = std::move(cur[0]);
  return g;
}

inline std::vector<Tensor4> MctfInverse(const GopAnalysis& g, bool integer) {
  Require(int(g.high.size()) == kFieldsPerGop &&
              int(g.mv.size()) == kFieldsPerGop,
          "a group holds 7 high-pass frames and 7 motion fields");
  std::vector<Tensor4> cur(1);
  cur[0] = g.low;
  int in = kFieldsPerGop;
  for (int level = kTemporalLevels - 1; level >= 0; --level) {
    in -= int(cur.size());
    std::vector<Tensor4> next(cur.size() * 2);
    for (size_t i = 0; i < cur.size(); ++i) {
      TemporalUnlift(cur[i], g.high[size_t(in) + i], g.mv[size_t(in) + i],
                     integer, &next[2 * i], &next[2 * i + 1]);
    }
    cur = std::move(next);
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Motion field serialization: 10 bits per vector (5 bits per component,
// biased by 8), packed most significant bit first, byte-aligned per field.

inline void WriteMotionField(ByteWriter& w, const MotionField& mv) {
  uint32_t bits = 0;
  int nbits = 0;
  for (size_t i = 0; i < mv.dy.size(); ++i) {
    uint32_t v = (uint32_t(mv.dy[i] + kSearchRange) << 5) |
                 uint32_t(mv.dx[i] + kSearchRange);
    bits = (bits << 10) | v;
    nbits += 10;
    while (nbits >= 8) {
      nbits -= 8;
      w.U8(uint8_t(bits >> nbits));
    }
  }
  if (nbits > 0) w.U8(uint8_t(bits << (8 - nbits)));
}

inline MotionField ReadMotionField(ByteReader& r, int h, int w) {
  MotionField mv;
  mv.bw = BlocksAcross(w);
  mv.bh = BlocksAcross(h);
  size_t n = size_t(mv.bw) * size_t(mv.bh);
  mv.dy.resize(n);
  mv.dx.resize(n);
  uint32_t bits = 0;
  int nbits = 0;
  for (size_t i = 0; i < n; ++i) {
    while (nbits < 10) {
      bits = (bits << 8) | r.U8();
      nbits += 8;
    }
    uint32_t v = (bits >> (nbits - 10)) & 0x3FF;
    nbits -= 10;
    int dy = int((v >> 5) & 0x1F) - kSearchRange;
    int dx = int(v & 0x1F) - kSearchRange;
    RequireDecode(dy >= -kSearchRange && dy <= kSearchRange &&
                      dx >= -kSearchRange && dx <= kSearchRange,
                  "motion vector out of range");
    mv.dy[i] = int8_t(dy);
    mv.dx[i] = int8_t(dx);
  }
  return mv;
}

// ---------------------------------------------------------------------------
// Video container: temporal subband frames are coded as raw-domain planes by
// the image codec, the low-pass frame with the low-pass model, the seven
// high-pass frames with the high-pass model.

struct VideoEncodeOptions {
  codec::ContextModel context = codec::ContextModel::kFourStep;
  codec::LlContext ll_context = codec::LlContext::kAr;
  bool lossless = false;
  uint8_t lambda_id = 255;
};

struct VideoStats {
  int64_t motion_bytes = 0;
  int64_t payload_bytes = 0;
  int64_t total_bytes = 0;
  int64_t context_invocations = 0;
  int64_t symbols = 0;

  void Absorb(const codec::CodingStats& s) {
    payload_bytes += s.total_bytes;
    context_invocations += s.context_invocations;
    symbols += s.symbols;
  }
};

inline std::vector<uint8_t> EncodeVideo(const codec::CodecModel& model_low,
                                        const codec::CodecModel& model_high,
                                        const std::vector<io::GrayImage>& frames,
                                        const VideoEncodeOptions& vopts,
                                        VideoStats* stats = nullptr) {
  Require(!frames.empty(), "no frames to encode");
  int w = frames[0].w, h = frames[0].h;
  for (const io::GrayImage& f : frames) {
    Require(f.w == w && f.h == h, "frame size changes mid-stream");
  }

  codec::EncodeOptions popts;
  popts.context = vopts.context;
  popts.ll_context = vopts.ll_context;
  popts.lossless = vopts.lossless;
  popts.raw_domain = true;
  popts.lambda_id = vopts.lambda_id;

  ByteWriter bw;
  bw.Bytes(reinterpret_cast<const uint8_t*>("PWVV"), 4);
  bw.U16(1);
  bw.U32(uint32_t(frames.size()));
  bw.U32(uint32_t(w));
  bw.U32(uint32_t(h));
  bw.U8(kGopSize);
  bw.U8(kTemporalLevels);
  bw.U8(vopts.lossless ? 1 : 0);
  bw.U8(0);
  bw.U64(model_low.Hash());
  bw.U64(model_high.Hash());

  size_t ngops = (frames.size() + kGopSize - 1) / kGopSize;
  bw.U32(uint32_t(ngops));
  for (size_t gi = 0; gi < ngops; ++gi) {
    std::vector<Tensor4> planes(kGopSize);
    for (int i = 0; i < kGopSize; ++i) {
      // Short tail groups repeat the last frame.
      size_t fi = std::min(gi * kGopSize + size_t(i), frames.size() - 1);
      const io::GrayImage& img = frames[fi];
      Tensor4 p(Shape4{1, 1, h, w});
      for (int64_t j = 0; j < p.numel(); ++j) {
        p[j] = vopts.lossless ? double(img.pix[size_t(j)])
                              : img.pix[size_t(j)] / 255.0;
      }
      planes[size_t(i)] = std::move(p);
    }
    GopAnalysis g = MctfForward(planes, vopts.lossless);
    size_t motion_start = bw.data().size();
    for (const MotionField& mv : g.mv) WriteMotionField(bw, mv);
    if (stats != nullptr) {
      stats->motion_bytes += int64_t(bw.data().size() - motion_start);
    }
    auto emit = [&](const codec::CodecModel& m, const Tensor4& plane) {
      codec::CodingStats cs;
      std::vector<uint8_t> payload =
          codec::EncodePlane(m, plane, popts, stats ? &cs : nullptr);
      if (stats != nullptr) stats->Absorb(cs);
      bw.U32(uint32_t(payload.size()));
      bw.Bytes(payload);
    };
    emit(model_low, g.low);
    for (const Tensor4& hp : g.high) emit(model_high, hp);
  }
  std::vector<uint8_t> out = bw.Take();
  if (stats != nullptr) stats->total_bytes = int64_t(out.size());
  return out;
}

inline std::vector<io::GrayImage> DecodeVideo(
    const codec::CodecModel& model_low, const codec::CodecModel& model_high,
    const std::vector<uint8_t>& bytes, VideoStats* stats = nullptr) {
  ByteReader r(bytes);
  std::vector<uint8_t> magic = r.Bytes(4);
  RequireDecode(std::memcmp(magic.data(), "PWVV", 4) == 0,
                "not a video stream");
  RequireDecode(r.U16() == 1, "unsupported stream version");
  size_t nframes = r.U32();
  int w = int(r.U32()), h = int(r.U32());
  RequireDecode(nframes > 0 && w > 0 && h > 0, "empty video");
  RequireDecode(w <= 1 << 16 && h <= 1 << 16, "video frame too large");
  RequireDecode(r.U8() == kGopSize, "unsupported group size");
  RequireDecode(r.U8() == kTemporalLevels, "unsupported temporal depth");
  uint8_t flags = r.U8();
  RequireDecode(flags <= 1, "unknown stream flags");
  bool lossless = (flags & 1) != 0;
  r.U8();
  RequireDecode(r.U64() == model_low.Hash(),
                "stream was coded with different low-pass model weights");
  RequireDecode(r.U64() == model_high.Hash(),
                "stream was coded with different high-pass model weights");
  size_t ngops = r.U32();
  RequireDecode(ngops == (nframes + kGopSize - 1) / kGopSize,
                "group count does not match frame count");

  std::vector<io::GrayImage> frames;
  frames.reserve(nframes);
  for (size_t gi = 0; gi < ngops; ++gi) {
    GopAnalysis g;
    g.mv.resize(kFieldsPerGop);
    for (int i = 0; i < kFieldsPerGop; ++i) {
      g.mv[size_t(i)] = ReadMotionField(r, h, w);
    }
    auto take = [&](const codec::CodecModel& m) {
      uint32_t len = r.U32();
      std::vector<uint8_t> payload = r.Bytes(len);
      codec::CodingStats cs;
      Tensor4 p = codec::DecodePlane(m, payload, stats ? &cs : nullptr);
      if (stats != nullptr) stats->Absorb(cs);
      RequireDecode(p.h() == h && p.w() == w, "plane size mismatch in group");
      return p;
    };
    g.low = take(model_low);
    g.high.resize(kFieldsPerGop);
    for (int i = 0; i < kFieldsPerGop; ++i) g.high[size_t(i)] = take(model_high);
    std::vector<Tensor4> planes = MctfInverse(g, lossless);
    for (int i = 0; i < kGopSize && frames.size() < nframes; ++i) {
      io::GrayImage img;
      img.w = w;
      img.h = h;
      img.pix.resize(size_t(w) * size_t(h));
      const Tensor4& p = planes[size_t(i)];
      for (int64_t j = 0; j < p.numel(); ++j) {
        double v = lossless ? p[j] : p[j] * 255.0;
        img.pix[size_t(j)] = uint8_t(std::lround(std::min(255.0, std::max(0.0, v))));
      }
      frames.push_back(std::move(img));
    }
  }
  RequireDecode(r.remaining() == 0, "trailing bytes after payloads");
  if (stats != nullptr) stats->total_bytes = int64_t(bytes.size());
  return frames;
}

}  // namespace video
}  // namespace pwavec

#endif  // PWAVEC_VIDEO_MCTF_HPP_
