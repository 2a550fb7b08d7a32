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

#ifndef PWAVEC_CODEC_IMAGE_HPP_
#define PWAVEC_CODEC_IMAGE_HPP_

#include <array>
#include <cmath>
#include <cstring>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pwavec/codec/model.hpp"
#include "pwavec/rc/range_coder.hpp"

namespace pwavec {
namespace codec {

constexpr int kPadMultiple = 16;

inline int PadTo16(int v) { return (v + kPadMultiple - 1) / kPadMultiple * kPadMultiple; }

// Orthonormal-equivalent scaling per subband: multiplying a band by its gain
// before quantization equalizes the pixel-domain distortion caused by a unit
// quantization error across bands.
inline double BandGain(int band) {
  int level = wavelet::BandLevel(band);
  if (band == 0) return std::ldexp(1.0, level);
  int kind = (band - 1) % 3;
  return std::ldexp(1.0, kind == 2 ? level - 2 : level - 1);
}

inline Tensor4 PadReplicate(const Tensor4& p, int ph, int pw) {
  Require(p.n() == 1 && p.c() == 1, "plane expected");
  Require(ph >= p.h() && pw >= p.w(), "pad target smaller than plane");
  Tensor4 out(Shape4{1, 1, ph, pw});
  for (int y = 0; y < ph; ++y) {
    int sy = std::min(y, p.h() - 1);
    for (int x = 0; x < pw; ++x) {
      out.At(0, 0, y, x) = p.At(0, 0, sy, std::min(x, p.w() - 1));
    }
  }
  return out;
}

inline Tensor4 CropPlane(const Tensor4& p, int h, int w) {
  Require(h <= p.h() && w <= p.w(), "crop larger than plane");
  Tensor4 out(Shape4{1, 1, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.At(0, 0, y, x) = p.At(0, 0, y, x);
  }
  return out;
}

inline double PlaneMse(const Tensor4& a, const Tensor4& b) {
  Require(a.shape() == b.shape(), "mse shape mismatch");
  double acc = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / double(a.numel());
}

inline double PsnrFromMse(double mse, double peak = 1.0) {
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

// ---------------------------------------------------------------------------
// Per-stream options and counters.

struct EncodeOptions {
  ContextModel context = ContextModel::kFourStep;
  LlContext ll_context = LlContext::kAr;
  bool lossless = false;
  // Raw-domain planes (temporal subbands of the video layer) skip the 8-bit
  // display conventions: no 255 scaling, no output clamp, no postprocessing.
  bool raw_domain = false;
  uint8_t lambda_id = 255;
};

inline EncodeOptions OptionsFromModel(const CodecModel& m) {
  EncodeOptions o;
  o.context = m.cfg.context;
  o.ll_context = m.cfg.ll_context;
  o.lambda_id = m.cfg.lambda_id;
  return o;
}

struct CodingStats {
  // Number of context-model network invocations (full-map passes for the
  // four-step model, per-position patch evaluations on the decoder side of
  // the autoregressive model).
  int64_t context_invocations = 0;
  int64_t symbols = 0;
  std::array<int64_t, wavelet::kNumBands> band_bytes{};
  int64_t payload_bytes = 0;
  int64_t total_bytes = 0;
};

// CDF lookup shared by encoder and decoder: model outputs are snapped to the
// parameter grid first, so both sides derive the identical table from the
// identically reconstructed (mu, sigma).
class ParamCoder {
 public:
  const entropy::QuantizedCdf& Table(double mu, double sigma) {
    return cache_.Get(entropy::ParamGrid::MuIndex(mu),
                      entropy::ParamGrid::SigmaIndex(sigma));
  }

 private:
  entropy::CdfCache cache_;
};

// ---------------------------------------------------------------------------
// Quantization. Symbols are gain-scaled, step-divided and rounded; in integer
// (lossless) mode coefficients are already integers and pass through.

inline int64_t ClampSymbol(int64_t s) {
  return std::min<int64_t>(entropy::kAlphabetMax,
                           std::max<int64_t>(entropy::kAlphabetMin, s));
}

inline Tensor4 QuantizeBand(const Tensor4& coeff, double delta, double gain,
                            bool integer) {
  Tensor4 sym(coeff.shape());
  for (int64_t i = 0; i < coeff.numel(); ++i) {
    int64_t s;
    if (integer) {
      s = nn::RoundAwayI(coeff[i]);
      Require(s >= entropy::kAlphabetMin && s <= entropy::kAlphabetMax,
              "lossless coefficient exceeds the symbol alphabet");
    } else {
      s = ClampSymbol(nn::RoundAwayI(coeff[i] * gain / delta));
    }
    sym[i] = double(s);
  }
  return sym;
}

inline Tensor4 DequantizeBand(const Tensor4& sym, double delta, double gain,
                              bool integer) {
  Tensor4 coeff(sym.shape());
  for (int64_t i = 0; i < sym.numel(); ++i) {
    coeff[i] = integer ? sym[i] : sym[i] * delta / gain;
  }
  return coeff;
}

// ---------------------------------------------------------------------------
// Four-step band coding. Each of the four phases runs one full-map network
// pass; the encoder and decoder feed it the same visible tensor (symbols of
// previously coded phases, zero elsewhere), so their parameter maps match
// exactly.

inline void EncodeFourStepBand(const entropy::FourStepFusionNet& fusion,
                               const Tensor4& sym, const Tensor4& lctx_h,
                               ParamCoder& coder, rc::RangeEncoder& enc,
                               CodingStats* stats) {
  int h = sym.h(), w = sym.w();
  Tensor4 visible(sym.shape());
  Tensor4 mask(sym.shape());
  for (int phase = 0; phase < 4; ++phase) {
    Tensor4 raw =
        fusion.Step<nn::EvalBackend>(phase, visible, mask, lctx_h);
    if (stats != nullptr) ++stats->context_invocations;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (entropy::PhaseOf(y, x) != phase) continue;
        double mu = raw.At(0, 0, y, x);
        double sigma = entropy::SigmaFromRaw(raw.At(0, 1, y, x));
        enc.EncodeSymbol(coder.Table(mu, sigma),
                         int64_t(sym.At(0, 0, y, x)));
        visible.At(0, 0, y, x) = sym.At(0, 0, y, x);
        mask.At(0, 0, y, x) = 1.0;
        if (stats != nullptr) ++stats->symbols;
      }
    }
  }
}

inline Tensor4 DecodeFourStepBand(const entropy::FourStepFusionNet& fusion,
                                  int h, int w, const Tensor4& lctx_h,
                                  ParamCoder& coder, rc::RangeDecoder& dec,
                                  CodingStats* stats) {
  Tensor4 visible(Shape4{1, 1, h, w});
  Tensor4 mask(Shape4{1, 1, h, w});
  for (int phase = 0; phase < 4; ++phase) {
    Tensor4 raw =
        fusion.Step<nn::EvalBackend>(phase, visible, mask, lctx_h);
    if (stats != nullptr) ++stats->context_invocations;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (entropy::PhaseOf(y, x) != phase) continue;
        double mu = raw.At(0, 0, y, x);
        double sigma = entropy::SigmaFromRaw(raw.At(0, 1, y, x));
        int64_t s = dec.DecodeSymbol(coder.Table(mu, sigma));
        visible.At(0, 0, y, x) = double(s);
        mask.At(0, 0, y, x) = 1.0;
        if (stats != nullptr) ++stats->symbols;
      }
    }
  }
  return visible;
}

// ---------------------------------------------------------------------------
// Autoregressive band coding. The encoder runs one full masked pass (all
// symbols are known); the decoder evaluates the network once per position on
// the causal patch around it.

inline void EncodeArBand(const entropy::ARFusionNet& ar, const Tensor4& sym,
                         const Tensor4* lctx_h, ParamCoder& coder,
                         rc::RangeEncoder& enc, CodingStats* stats) {
  Tensor4 raw = ar.Forward<nn::EvalBackend>(sym, lctx_h);
  if (stats != nullptr) ++stats->context_invocations;
  for (int y = 0; y < sym.h(); ++y) {
    for (int x = 0; x < sym.w(); ++x) {
      double mu = raw.At(0, 0, y, x);
      double sigma = entropy::SigmaFromRaw(raw.At(0, 1, y, x));
      enc.EncodeSymbol(coder.Table(mu, sigma), int64_t(sym.At(0, 0, y, x)));
      if (stats != nullptr) ++stats->symbols;
    }
  }
}

inline Tensor4 DecodeArBand(const entropy::ARFusionNet& ar, int h, int w,
                            const Tensor4* lctx_h, ParamCoder& coder,
                            rc::RangeDecoder& dec, CodingStats* stats) {
  std::optional<Tensor4> ctx_feat;
  if (lctx_h != nullptr) {
    ctx_feat = nn::Conv2dForward(*lctx_h, ar.ctx.w->value, ar.ctx.b->value,
                                 ar.ctx.spec);
  }
  entropy::ArPatchEvaluator eval(ar);
  Tensor4 sym(Shape4{1, 1, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double mu = 0.0, sraw = 0.0;
      eval.At(sym, ctx_feat ? &*ctx_feat : nullptr, y, x, &mu, &sraw);
      if (stats != nullptr) ++stats->context_invocations;
      int64_t s =
          dec.DecodeSymbol(coder.Table(mu, entropy::SigmaFromRaw(sraw)));
      sym.At(0, 0, y, x) = double(s);
      if (stats != nullptr) ++stats->symbols;
    }
  }
  return sym;
}

// ---------------------------------------------------------------------------
// Single-plane encode/decode. Planes are grayscale in [0, 1]; lossless mode
// works on the 8-bit integer pixel domain with the integer transform.

inline bool BandUsesAr(int band, ContextModel context, LlContext ll_context) {
  if (context == ContextModel::kAr) return true;
  return band == 0 && ll_context == LlContext::kAr;
}

// Maps quantized subband symbols back to an output plane. Both codec sides
// call this same function, so the encoder's reference reconstruction and the
// decoder's output are one code path.
inline Tensor4 ReconstructFromSymbols(const CodecModel& model,
                                      const std::vector<Tensor4>& sym,
                                      double dl, double dh, bool lossless,
                                      bool raw_domain, int orig_h, int orig_w) {
  std::vector<Tensor4> bands(wavelet::kNumBands);
  for (int b = 0; b < wavelet::kNumBands; ++b) {
    bands[size_t(b)] = DequantizeBand(sym[size_t(b)], b == 0 ? dl : dh,
                                      lossless ? 1.0 : BandGain(b), lossless);
  }
  Tensor4 recon = model.wavelet.Inverse<nn::EvalBackend>(bands, lossless);
  if (raw_domain) return CropPlane(recon, orig_h, orig_w);
  if (lossless) {
    Tensor4 cropped = CropPlane(recon, orig_h, orig_w);
    return nn::PointwiseMap(cropped, [](double v) { return v / 255.0; });
  }
  Tensor4 enhanced =
      nn::EvalBackend::Add(recon, model.post.Forward<nn::EvalBackend>(recon));
  Tensor4 cropped = CropPlane(enhanced, orig_h, orig_w);
  return nn::PointwiseMap(cropped, [](double v) {
    return std::min(1.0, std::max(0.0, v));
  });
}

inline std::vector<uint8_t> EncodePlane(const CodecModel& model,
                                        const Tensor4& plane,
                                        const EncodeOptions& opts,
                                        CodingStats* stats = nullptr,
                                        std::vector<Tensor4>* sym_out = nullptr,
                                        Tensor4* recon_out = nullptr) {
  Require(plane.n() == 1 && plane.c() == 1, "plane expected");
  int oh = plane.h(), ow = plane.w();
  int ph = PadTo16(oh), pw = PadTo16(ow);
  Tensor4 work = plane;
  if (opts.lossless) {
    double s = opts.raw_domain ? 1.0 : 255.0;
    work = nn::PointwiseMap(plane,
                            [s](double v) { return nn::RoundAway(v * s); });
  }
  Tensor4 padded = PadReplicate(work, ph, pw);
  std::vector<Tensor4> bands =
      model.wavelet.Forward<nn::EvalBackend>(padded, opts.lossless);

  int dl_idx = entropy::ParamGrid::SigmaIndex(model.DeltaL());
  int dh_idx = entropy::ParamGrid::SigmaIndex(model.DeltaH());
  double dl = opts.lossless ? 1.0 : entropy::ParamGrid::SigmaFromIndex(dl_idx);
  double dh = opts.lossless ? 1.0 : entropy::ParamGrid::SigmaFromIndex(dh_idx);

  std::vector<Tensor4> sym(wavelet::kNumBands);
  for (int b = 0; b < wavelet::kNumBands; ++b) {
    sym[b] = QuantizeBand(bands[b], b == 0 ? dl : dh,
                          opts.lossless ? 1.0 : BandGain(b), opts.lossless);
  }

  ParamCoder coder;
  auto state = model.lctx.InitialState<nn::EvalBackend>(ph / 16, pw / 16);
  std::array<std::vector<uint8_t>, wavelet::kNumBands> payloads;
  for (int b = 0; b < wavelet::kNumBands; ++b) {
    rc::RangeEncoder enc;
    if (BandUsesAr(b, opts.context, opts.ll_context)) {
      EncodeArBand(model.ar, sym[b], b == 0 ? nullptr : &state.first, coder,
                   enc, stats);
    } else {
      Tensor4 zero_ctx(Shape4{1, model.cfg.width_lstm, sym[b].h(), sym[b].w()});
      EncodeFourStepBand(model.fusion, sym[b],
                         b == 0 ? zero_ctx : state.first, coder, enc, stats);
    }
    payloads[size_t(b)] = enc.Finish();
    if (b + 1 < wavelet::kNumBands) {
      Shape4 next = wavelet::BandShape(ph, pw, b + 1);
      state = model.lctx.Advance<nn::EvalBackend>(sym[b], state, next.h,
                                                  next.w);
    }
  }

  ByteWriter w;
  w.Bytes(reinterpret_cast<const uint8_t*>("PWVC"), 4);
  w.U16(1);
  w.U8(uint8_t(opts.context));
  w.U8(uint8_t(opts.ll_context));
  w.U8(uint8_t((opts.lossless ? 1 : 0) | (opts.raw_domain ? 2 : 0)));
  w.U8(uint8_t(model.cfg.base));
  w.U8(opts.lambda_id);
  w.U8(0);
  w.U16(uint16_t(dl_idx));
  w.U16(uint16_t(dh_idx));
  w.U32(uint32_t(ow));
  w.U32(uint32_t(oh));
  w.U32(uint32_t(pw));
  w.U32(uint32_t(ph));
  w.U64(model.Hash());
  for (int b = 0; b < wavelet::kNumBands; ++b) {
    const auto& p = payloads[size_t(b)];
    w.U32(uint32_t(p.size()));
    w.Bytes(p);
    if (stats != nullptr) {
      stats->band_bytes[size_t(b)] = int64_t(p.size());
      stats->payload_bytes += int64_t(p.size());
    }
  }
  std::vector<uint8_t> out = w.Take();
  if (stats != nullptr) stats->total_bytes = int64_t(out.size());
  if (recon_out != nullptr) {
    *recon_out = ReconstructFromSymbols(model, sym, dl, dh, opts.lossless,
                                        opts.raw_domain, oh, ow);
  }
  if (sym_out != nullptr) *sym_out = std::move(sym);
  return out;
}

struct StreamHeader {
  ContextModel context = ContextModel::kFourStep;
  LlContext ll_context = LlContext::kAr;
  bool lossless = false;
  bool raw_domain = false;
  wavelet::Base base = wavelet::Base::kCdf53;
  uint8_t lambda_id = 255;
  int dl_idx = 0, dh_idx = 0;
  int orig_w = 0, orig_h = 0;
  int pad_w = 0, pad_h = 0;
  uint64_t model_hash = 0;
};

inline StreamHeader ReadStreamHeader(ByteReader& r) {
  std::vector<uint8_t> magic = r.Bytes(4);
  RequireDecode(std::memcmp(magic.data(), "PWVC", 4) == 0,
                "not an image stream");
  RequireDecode(r.U16() == 1, "unsupported stream version");
  StreamHeader h;
  uint8_t ctx = r.U8();
  RequireDecode(ctx <= 1, "unknown context model id");
  h.context = ContextModel(ctx);
  uint8_t llc = r.U8();
  RequireDecode(llc <= 1, "unknown ll context id");
  h.ll_context = LlContext(llc);
  uint8_t flags = r.U8();
  RequireDecode(flags <= 3, "unknown stream flags");
  h.lossless = (flags & 1) != 0;
  h.raw_domain = (flags & 2) != 0;
  uint8_t base = r.U8();
  RequireDecode(base <= 1, "unknown wavelet base id");
  h.base = wavelet::Base(base);
  h.lambda_id = r.U8();
  r.U8();
  h.dl_idx = r.U16();
  h.dh_idx = r.U16();
  RequireDecode(h.dl_idx < entropy::ParamGrid::kSigmaLevels &&
                    h.dh_idx < entropy::ParamGrid::kSigmaLevels,
                "step size index out of range");
  h.orig_w = int(r.U32());
  h.orig_h = int(r.U32());
  h.pad_w = int(r.U32());
  h.pad_h = int(r.U32());
  RequireDecode(h.orig_w > 0 && h.orig_h > 0, "empty image");
  RequireDecode(h.pad_w >= h.orig_w && h.pad_h >= h.orig_h &&
                    h.pad_w % kPadMultiple == 0 && h.pad_h % kPadMultiple == 0,
                "invalid padded size");
  RequireDecode(h.pad_w <= 1 << 16 && h.pad_h <= 1 << 16, "image too large");
  h.model_hash = r.U64();
  return h;
}

inline Tensor4 DecodePlane(const CodecModel& model,
                           const std::vector<uint8_t>& bytes,
                           CodingStats* stats = nullptr,
                           std::vector<Tensor4>* sym_out = nullptr) {
  ByteReader r(bytes);
  StreamHeader hd = ReadStreamHeader(r);
  RequireDecode(hd.model_hash == model.Hash(),
                "stream was coded with different model weights");
  RequireDecode(hd.base == model.cfg.base, "wavelet base mismatch");
  double dl =
      hd.lossless ? 1.0 : entropy::ParamGrid::SigmaFromIndex(hd.dl_idx);
  double dh =
      hd.lossless ? 1.0 : entropy::ParamGrid::SigmaFromIndex(hd.dh_idx);

  std::array<std::vector<uint8_t>, wavelet::kNumBands> payloads;
  for (int b = 0; b < wavelet::kNumBands; ++b) {
    uint32_t len = r.U32();
    payloads[size_t(b)] = r.Bytes(len);
    if (stats != nullptr) {
      stats->band_bytes[size_t(b)] = int64_t(len);
      stats->payload_bytes += int64_t(len);
    }
  }
  RequireDecode(r.remaining() == 0, "trailing bytes after payloads");
  if (stats != nullptr) stats->total_bytes = int64_t(bytes.size());

  ParamCoder coder;
  auto state =
      model.lctx.InitialState<nn::EvalBackend>(hd.pad_h / 16, hd.pad_w / 16);
  std::vector<Tensor4> sym(wavelet::kNumBands);
  for (int b = 0; b < wavelet::kNumBands; ++b) {
    Shape4 bs = wavelet::BandShape(hd.pad_h, hd.pad_w, b);
    rc::RangeDecoder dec(payloads[size_t(b)]);
    if (BandUsesAr(b, hd.context, hd.ll_context)) {
      sym[size_t(b)] = DecodeArBand(model.ar, bs.h, bs.w,
                                    b == 0 ? nullptr : &state.first, coder,
                                    dec, stats);
    } else {
      Tensor4 zero_ctx(Shape4{1, model.cfg.width_lstm, bs.h, bs.w});
      sym[size_t(b)] = DecodeFourStepBand(model.fusion, bs.h, bs.w,
                                          b == 0 ? zero_ctx : state.first,
                                          coder, dec, stats);
    }
    if (b + 1 < wavelet::kNumBands) {
      Shape4 next = wavelet::BandShape(hd.pad_h, hd.pad_w, b + 1);
      state = model.lctx.Advance<nn::EvalBackend>(sym[size_t(b)], state,
                                                  next.h, next.w);
    }
  }

  Tensor4 out = ReconstructFromSymbols(model, sym, dl, dh, hd.lossless,
                                       hd.raw_domain, hd.orig_h, hd.orig_w);
  if (sym_out != nullptr) *sym_out = std::move(sym);
  return out;
}

// Header-only peek used by tools to report stream parameters.
inline StreamHeader PeekStreamHeader(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes);
  return ReadStreamHeader(r);
}

// ---------------------------------------------------------------------------
// Synthesis impulse responses: a unit coefficient at the center of each
// subband, run through the learned inverse transform on an otherwise zero
// pyramid. Visualizes what each band contributes to the reconstruction.

inline std::vector<Tensor4> SubbandImpulseResponses(const CodecModel& model,
                                                    int h, int w) {
  Require(h % kPadMultiple == 0 && w % kPadMultiple == 0,
          "canvas must be a multiple of 16");
  std::vector<Tensor4> out;
  out.reserve(wavelet::kNumBands);
  for (int b = 0; b < wavelet::kNumBands; ++b) {
    std::vector<Tensor4> bands;
    bands.reserve(wavelet::kNumBands);
    for (int j = 0; j < wavelet::kNumBands; ++j) {
      bands.emplace_back(wavelet::BandShape(h, w, j));
    }
    Shape4 bs = bands[size_t(b)].shape();
    bands[size_t(b)].At(0, 0, bs.h / 2, bs.w / 2) = 1.0;
    out.push_back(model.wavelet.Inverse<nn::EvalBackend>(bands, false));
  }
  return out;
}

}  // namespace codec
}  // namespace pwavec

#endif  // PWAVEC_CODEC_IMAGE_HPP_
