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

#ifndef PWAVEC_BENCH_BENCH_HPP_
#define PWAVEC_BENCH_BENCH_HPP_

#include <algorithm>
#include <chrono>
#include <fstream>
#include <string>
#include <vector>

#include "pwavec/codec/image.hpp"

namespace pwavec {
namespace bench {

inline double MedianOf(std::vector<double> v) {
  Require(!v.empty(), "median of an empty sample");
  std::sort(v.begin(), v.end());
  size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Decoder-side context-model invocations implied by the coding scheme: the
// four-step model runs four full-map passes per subband, the autoregressive
// model one patch evaluation per coefficient.
inline int64_t ExpectedDecodeInvocations(int pad_h, int pad_w,
                                         codec::ContextModel context,
                                         codec::LlContext ll_context) {
  if (context == codec::ContextModel::kAr) {
    return int64_t(pad_h) * int64_t(pad_w);
  }
  int64_t detail = 4 * (wavelet::kNumBands - 1);
  if (ll_context == codec::LlContext::kFourStep) return detail + 4;
  return detail + int64_t(pad_h / 16) * int64_t(pad_w / 16);
}

struct DecodeTiming {
  std::vector<double> seconds;
  double seconds_median = 0.0;
  codec::CodingStats stats;
  Tensor4 plane;
};

// Times DecodePlane alone: the stream is in memory and the model is loaded,
// so file I/O and weight parsing stay outside the measured region.
inline DecodeTiming TimeDecode(const codec::CodecModel& model,
                               const std::vector<uint8_t>& stream, int reps) {
  Require(reps >= 1, "at least one repetition");
  DecodeTiming t;
  for (int i = 0; i < reps; ++i) {
    codec::CodingStats cs;
    auto t0 = std::chrono::steady_clock::now();
    Tensor4 p = codec::DecodePlane(model, stream, &cs);
    auto t1 = std::chrono::steady_clock::now();
    t.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    if (i == 0) {
      t.plane = std::move(p);
      t.stats = cs;
    } else {
      Require(cs.context_invocations == t.stats.context_invocations,
              "invocation count drifted across repetitions");
    }
  }
  t.seconds_median = MedianOf(t.seconds);
  return t;
}

struct BenchResult {
  int w = 0, h = 0;
  int pad_w = 0, pad_h = 0;
  int reps = 0;
  double four_step_seconds = 0.0;
  double ar_seconds = 0.0;
  int64_t four_step_invocations = 0;
  int64_t ar_invocations = 0;
  double speedup_time = 0.0;
  double speedup_invocations = 0.0;
  double four_step_bpp = 0.0;
  double ar_bpp = 0.0;
  double four_step_psnr = 0.0;
  double ar_psnr = 0.0;
};

// Codes the plane once under each context model, then times decoding.
inline BenchResult RunDecodeBench(const codec::CodecModel& model,
                                  const Tensor4& plane, int reps,
                                  uint8_t lambda_id = 255) {
  BenchResult r;
  r.w = plane.w();
  r.h = plane.h();
  r.pad_w = codec::PadTo16(r.w);
  r.pad_h = codec::PadTo16(r.h);
  r.reps = reps;
  double npix = double(r.w) * double(r.h);

  codec::EncodeOptions fs = codec::OptionsFromModel(model);
  fs.context = codec::ContextModel::kFourStep;
  fs.ll_context = codec::LlContext::kAr;
  fs.lambda_id = lambda_id;
  codec::EncodeOptions ar = fs;
  ar.context = codec::ContextModel::kAr;

  std::vector<uint8_t> fs_stream = codec::EncodePlane(model, plane, fs);
  std::vector<uint8_t> ar_stream = codec::EncodePlane(model, plane, ar);
  r.four_step_bpp = 8.0 * double(fs_stream.size()) / npix;
  r.ar_bpp = 8.0 * double(ar_stream.size()) / npix;

  DecodeTiming fs_t = TimeDecode(model, fs_stream, reps);
  DecodeTiming ar_t = TimeDecode(model, ar_stream, reps);
  r.four_step_seconds = fs_t.seconds_median;
  r.ar_seconds = ar_t.seconds_median;
  r.four_step_invocations = fs_t.stats.context_invocations;
  r.ar_invocations = ar_t.stats.context_invocations;
  Require(r.four_step_invocations ==
              ExpectedDecodeInvocations(r.pad_h, r.pad_w, fs.context,
                                        fs.ll_context),
          "four-step invocation count diverges from the analytic count");
  Require(r.ar_invocations == ExpectedDecodeInvocations(
                                  r.pad_h, r.pad_w, ar.context, ar.ll_context),
          "autoregressive invocation count diverges from the analytic count");
  r.speedup_time = r.ar_seconds / r.four_step_seconds;
  r.speedup_invocations =
      double(r.ar_invocations) / double(r.four_step_invocations);
  r.four_step_psnr = codec::PsnrFromMse(codec::PlaneMse(fs_t.plane, plane));
  r.ar_psnr = codec::PsnrFromMse(codec::PlaneMse(ar_t.plane, plane));
  return r;
}

inline void WriteBenchCsv(const std::string& path, const BenchResult& r) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "# single-core decode timing, median of " << r.reps << " repetitions\n";
  f << "# context: reference GPU implementations report decode speedups "
       "around 354x for this scheme\n";
  f << "w,h,pad_w,pad_h,reps,four_step_s,ar_s,four_step_invocations,"
       "ar_invocations,speedup_time,speedup_invocations,four_step_bpp,"
       "ar_bpp,four_step_psnr,ar_psnr\n";
  f << r.w << "," << r.h << "," << r.pad_w << "," << r.pad_h << "," << r.reps
    << "," << r.four_step_seconds << "," << r.ar_seconds << ","
    << r.four_step_invocations << "," << r.ar_invocations << ","
    << r.speedup_time << "," << r.speedup_invocations << ","
    << r.four_step_bpp << "," << r.ar_bpp << "," << r.four_step_psnr << ","
    << r.ar_psnr << "\n";
  if (!f) throw IoError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// Corpus report: one row per image, context model, and repetition. The timed
// regions cover EncodePlane and DecodePlane on in-memory buffers; file I/O
// and model loading stay outside.

struct BenchRow {
  std::string image;
  codec::ContextModel context = codec::ContextModel::kFourStep;
  int rep = 0;
  double encode_seconds = 0.0;
  double decode_seconds = 0.0;
  int64_t encode_invocations = 0;
  int64_t decode_invocations = 0;
  double bpp = 0.0;
  double psnr = 0.0;
};

struct CorpusBench {
  std::vector<BenchRow> rows;
  int reps = 0;
  double four_step_seconds = 0.0;  // sum over images of per-image medians
  double ar_seconds = 0.0;
  double speedup_time = 0.0;
  double speedup_invocations = 0.0;
};

inline CorpusBench RunCorpusBench(const codec::CodecModel& model,
                                  const std::vector<std::string>& names,
                                  const std::vector<Tensor4>& planes, int reps,
                                  uint8_t lambda_id = 255) {
  Require(names.size() == planes.size(), "one name per plane");
  Require(!planes.empty(), "empty corpus");
  CorpusBench out;
  out.reps = reps;
  int64_t fs_inv = 0, ar_inv = 0;
  for (size_t i = 0; i < planes.size(); ++i) {
    const Tensor4& plane = planes[i];
    double npix = double(plane.w()) * double(plane.h());
    int pad_h = codec::PadTo16(plane.h());
    int pad_w = codec::PadTo16(plane.w());
    double medians[2] = {0.0, 0.0};
    for (codec::ContextModel ctx :
         {codec::ContextModel::kFourStep, codec::ContextModel::kAr}) {
      codec::EncodeOptions opts = codec::OptionsFromModel(model);
      opts.context = ctx;
      opts.ll_context = codec::LlContext::kAr;
      opts.lambda_id = lambda_id;
      std::vector<double> dec_s;
      for (int rep = 0; rep < reps; ++rep) {
        BenchRow row;
        row.image = names[i];
        row.context = ctx;
        row.rep = rep;
        codec::CodingStats enc_stats;
        auto t0 = std::chrono::steady_clock::now();
        std::vector<uint8_t> stream =
            codec::EncodePlane(model, plane, opts, &enc_stats);
        auto t1 = std::chrono::steady_clock::now();
        row.encode_seconds = std::chrono::duration<double>(t1 - t0).count();
        row.encode_invocations = enc_stats.context_invocations;
        codec::CodingStats dec_stats;
        auto t2 = std::chrono::steady_clock::now();
        Tensor4 rec = codec::DecodePlane(model, stream, &dec_stats);
        auto t3 = std::chrono::steady_clock::now();
        row.decode_seconds = std::chrono::duration<double>(t3 - t2).count();
        row.decode_invocations = dec_stats.context_invocations;
        Require(row.decode_invocations ==
                    ExpectedDecodeInvocations(pad_h, pad_w, ctx,
                                              opts.ll_context),
                "decoder invocation count diverges from the analytic count");
        row.bpp = 8.0 * double(stream.size()) / npix;
        row.psnr = codec::PsnrFromMse(codec::PlaneMse(rec, plane));
        dec_s.push_back(row.decode_seconds);
        out.rows.push_back(std::move(row));
      }
      medians[ctx == codec::ContextModel::kAr ? 1 : 0] = MedianOf(dec_s);
    }
    Require(medians[0] < medians[1],
            "four-step decode was not faster on " + names[i]);
    out.four_step_seconds += medians[0];
    out.ar_seconds += medians[1];
    fs_inv += ExpectedDecodeInvocations(pad_h, pad_w,
                                        codec::ContextModel::kFourStep,
                                        codec::LlContext::kAr);
    ar_inv += ExpectedDecodeInvocations(pad_h, pad_w, codec::ContextModel::kAr,
                                        codec::LlContext::kAr);
  }
  out.speedup_time = out.ar_seconds / out.four_step_seconds;
  out.speedup_invocations = double(ar_inv) / double(fs_inv);
  return out;
}

inline void WriteBenchReportCsv(const std::string& path,
                                const CorpusBench& report) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "# single-core timing of the in-memory encode and decode kernels "
       "(transform, entropy parameter estimation, range coding)\n";
  f << "# decode medians over " << report.reps
    << " repetitions: four_step " << report.four_step_seconds << " s, ar "
    << report.ar_seconds << " s, speedup " << report.speedup_time
    << "x wall clock, " << report.speedup_invocations << "x invocations\n";
  f << "# context: reference GPU implementations report decode speedups "
       "around 354x for this scheme\n";
  f << "image,context,rep,encode_s,decode_s,encode_invocations,"
       "decode_invocations,bpp,psnr\n";
  for (const BenchRow& r : report.rows) {
    f << r.image << ","
      << (r.context == codec::ContextModel::kAr ? "ar" : "four-step") << ","
      << r.rep << "," << r.encode_seconds << "," << r.decode_seconds << ","
      << r.encode_invocations << "," << r.decode_invocations << "," << r.bpp
      << "," << r.psnr << "\n";
  }
  if (!f) throw IoError("failed writing " + path);
}

}  // namespace bench
}  // namespace pwavec

#endif  // PWAVEC_BENCH_BENCH_HPP_
