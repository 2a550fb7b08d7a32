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

#ifndef PWAVEC_TRAIN_TRAINER_HPP_
#define PWAVEC_TRAIN_TRAINER_HPP_

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pwavec/codec/image.hpp"
#include "pwavec/io/image_io.hpp"
#include "pwavec/io/png_io.hpp"
#include "pwavec/nn/optimizer.hpp"
#include "pwavec/video/mctf.hpp"

namespace pwavec {
namespace train {

// Operating points of the rate-distortion tradeoff; streams record the index.
constexpr double kLambdaTable[] = {0.007, 0.01, 0.03, 0.05, 0.08};
constexpr int kNumLambdas = 5;

inline double LambdaFromId(int id) {
  Require(id >= 0 && id < kNumLambdas, "lambda id out of range");
  return kLambdaTable[id];
}

struct TrainConfig {
  int epochs = 1;
  int batch_size = 8;
  int patch_size = 64;
  double lr = 1e-4;
  double weight_decay = 1e-4;
  int lambda_id = 1;
  double lambda = 0.0;  // > 0 overrides the table entry for lambda_id
  uint64_t seed = 1;
  int max_steps_per_epoch = 0;  // 0 runs the full epoch
};

inline double EffectiveLambda(const TrainConfig& cfg) {
  if (cfg.lambda > 0.0) return cfg.lambda;
  return LambdaFromId(cfg.lambda_id);
}

struct StepMetrics {
  double loss = 0.0;
  double bpp = 0.0;
  double mse = 0.0;
};

struct EpochMetrics {
  int epoch = 0;
  int steps = 0;
  double loss = 0.0;
  double bpp = 0.0;
  double mse = 0.0;
  double psnr = 0.0;
};

inline Tensor4 TileMaskN(const Tensor4& m, int n) {
  Tensor4 out(Shape4{n, m.c(), m.h(), m.w()});
  int64_t plane = m.numel();
  for (int i = 0; i < n; ++i) {
    for (int64_t j = 0; j < plane; ++j) out[int64_t(i) * plane + j] = m[j];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rate-distortion loss over one batch, teacher-forced: the context models
// predict each symbol's distribution from the true quantized neighborhoods,
// so all four phases (or the full autoregressive map) train in one pass.
// Quantization uses the straight-through estimator (identity backward).

inline nn::VarPtr RdLoss(codec::CodecModel& model, const Tensor4& batch,
                         double lambda, StepMetrics* out = nullptr) {
  using B = nn::TapeBackend;
  Require(batch.c() == 1, "grayscale batch expected");
  int n = batch.n(), h = batch.h(), w = batch.w();
  Require(h % codec::kPadMultiple == 0 && w % codec::kPadMultiple == 0,
          "patch size must be a multiple of 16");
  auto x = nn::Constant(batch);
  std::vector<nn::VarPtr> bands = model.wavelet.Forward<B>(x, false);

  auto delta_l = nn::ExpV(model.theta_l);
  auto delta_h = nn::ExpV(model.theta_h);
  auto inv_l = nn::RecipScalar(delta_l);
  auto inv_h = nn::RecipScalar(delta_h);

  std::vector<nn::VarPtr> sym(wavelet::kNumBands), deq(wavelet::kNumBands);
  for (int b = 0; b < wavelet::kNumBands; ++b) {
    double gain = codec::BandGain(b);
    auto scaled = nn::Scale(bands[size_t(b)], gain);
    sym[size_t(b)] =
        nn::SteRound(nn::MulScalarVar(scaled, b == 0 ? inv_l : inv_h));
    deq[size_t(b)] = nn::Scale(
        nn::MulScalarVar(sym[size_t(b)], b == 0 ? delta_l : delta_h),
        1.0 / gain);
  }

  nn::VarPtr rate;
  auto add_rate = [&rate](const nn::VarPtr& term) {
    rate = rate ? nn::Add(rate, term) : term;
  };
  auto state = model.lctx.InitialState<B>(h / 16, w / 16, n);
  for (int b = 0; b < wavelet::kNumBands; ++b) {
    const Tensor4& sv = sym[size_t(b)]->value;
    int bh = sv.h(), bw = sv.w();
    if (codec::BandUsesAr(b, model.cfg.context, model.cfg.ll_context)) {
      auto raw =
          model.ar.Forward<B>(sym[size_t(b)], b == 0 ? nullptr : &state.first);
      auto [mu, sigma] = entropy::SplitParams<B>(raw);
      Tensor4 ones(sv.shape());
      ones.Fill(1.0);
      add_rate(entropy::LaplaceRateBits(sym[size_t(b)], mu, sigma,
                                        std::move(ones)));
    } else {
      nn::VarPtr lfeed =
          b == 0 ? nn::Constant(Tensor4(Shape4{n, model.cfg.width_lstm, bh, bw}))
                 : state.first;
      for (int k = 0; k < 4; ++k) {
        Tensor4 cum = TileMaskN(entropy::CodedMask(k, bh, bw), n);
        auto visible = nn::MulConstTensor(sym[size_t(b)], cum);
        auto mfeed = nn::Constant(cum);
        auto raw = model.fusion.Step<B>(k, visible, mfeed, lfeed);
        auto [mu, sigma] = entropy::SplitParams<B>(raw);
        add_rate(entropy::LaplaceRateBits(
            sym[size_t(b)], mu, sigma,
            TileMaskN(entropy::PhaseMask(k, bh, bw), n)));
      }
    }
    if (b + 1 < wavelet::kNumBands) {
      Shape4 next = wavelet::BandShape(h, w, b + 1);
      state = model.lctx.Advance<B>(sym[size_t(b)], state, next.h, next.w);
    }
  }

  auto recon = model.wavelet.Inverse<B>(deq, false);
  auto enhanced = nn::Add(recon, model.post.Forward<B>(recon));
  auto mse = nn::MeanSq(enhanced, x);
  double npix = double(n) * double(h) * double(w);
  auto loss = nn::Add(nn::Scale(rate, 1.0 / npix), nn::Scale(mse, lambda));
  if (out != nullptr) {
    out->loss = loss->value[0];
    out->bpp = rate->value[0] / npix;
    out->mse = mse->value[0];
  }
  return loss;
}

// One optimizer step; returns the number of parameters skipped because their
// gradients were not finite.
inline int TrainStep(codec::CodecModel& model, nn::AdamW& opt,
                     const Tensor4& batch, double lambda,
                     StepMetrics* out = nullptr) {
  model.ps.ZeroGrads();
  nn::VarPtr loss = RdLoss(model, batch, lambda, out);
  nn::Backward(loss);
  return opt.Step(model.ps);
}

// ---------------------------------------------------------------------------
// Dataset handling.

inline std::vector<Tensor4> LoadTrainingPlanes(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    if (ext == ".pgm" || ext == ".png") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  Require(!files.empty(), "no .pgm or .png images in " + dir);
  std::vector<Tensor4> planes;
  planes.reserve(files.size());
  for (const std::string& f : files) {
    try {
      io::GrayImage img = f.size() > 4 && f.substr(f.size() - 4) == ".png"
                              ? io::ReadPngGray(f)
                              : io::ReadPgm(f);
      planes.push_back(io::PlaneFromImage(img));
    } catch (const Error& e) {
      std::cerr << "warning: skipping " << f << ": " << e.what() << "\n";
    }
  }
  Require(!planes.empty(), "no decodable images in " + dir);
  return planes;
}

// Non-overlapping tiles; sources smaller than one tile are replicate-padded.
inline std::vector<Tensor4> PatchesFromPlanes(const std::vector<Tensor4>& planes,
                                              int patch) {
  Require(patch > 0 && patch % codec::kPadMultiple == 0,
          "patch size must be a positive multiple of 16");
  std::vector<Tensor4> out;
  for (const Tensor4& p : planes) {
    Tensor4 src = p;
    if (src.h() < patch || src.w() < patch) {
      src = codec::PadReplicate(src, std::max(src.h(), patch),
                                std::max(src.w(), patch));
    }
    for (int y0 = 0; y0 + patch <= src.h(); y0 += patch) {
      for (int x0 = 0; x0 + patch <= src.w(); x0 += patch) {
        Tensor4 t(Shape4{1, 1, patch, patch});
        for (int y = 0; y < patch; ++y) {
          for (int x = 0; x < patch; ++x) {
            t.At(0, 0, y, x) = src.At(0, 0, y0 + y, x0 + x);
          }
        }
        out.push_back(std::move(t));
      }
    }
  }
  Require(!out.empty(), "dataset produced no patches");
  return out;
}

inline Tensor4 BatchFromPatches(const std::vector<Tensor4>& patches,
                                const std::vector<size_t>& order, size_t i0,
                                int count) {
  int p = patches[order[i0]].h();
  Tensor4 batch(Shape4{count, 1, p, p});
  int64_t plane = int64_t(p) * p;
  for (int i = 0; i < count; ++i) {
    const Tensor4& src = patches[order[i0 + size_t(i)]];
    for (int64_t j = 0; j < plane; ++j) batch[int64_t(i) * plane + j] = src[j];
  }
  return batch;
}

// Temporal subband planes of a frame sequence, for training video models on
// the distributions the video layer actually codes.
struct TemporalPlanes {
  std::vector<Tensor4> low;
  std::vector<Tensor4> high;
};

inline TemporalPlanes MctfTrainingPlanes(
    const std::vector<io::GrayImage>& frames) {
  Require(!frames.empty(), "no frames");
  TemporalPlanes out;
  size_t ngops = (frames.size() + video::kGopSize - 1) / video::kGopSize;
  for (size_t gi = 0; gi < ngops; ++gi) {
    std::vector<Tensor4> planes(video::kGopSize);
    for (int i = 0; i < video::kGopSize; ++i) {
      size_t fi = std::min(gi * video::kGopSize + size_t(i), frames.size() - 1);
      planes[size_t(i)] = io::PlaneFromImage(frames[fi]);
    }
    video::GopAnalysis g = video::MctfForward(planes, false);
    out.low.push_back(std::move(g.low));
    for (Tensor4& hp : g.high) out.high.push_back(std::move(hp));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Epoch loop. The shuffle is a pure function of (seed, epoch), so resuming
// from a checkpoint replays the identical batch sequence.

inline EpochMetrics TrainEpoch(codec::CodecModel& model, nn::AdamW& opt,
                               const std::vector<Tensor4>& patches, int epoch,
                               const TrainConfig& cfg) {
  std::vector<size_t> order(patches.size());
  std::iota(order.begin(), order.end(), size_t(0));
  std::mt19937_64 rng(cfg.seed ^
                      (0x9E3779B97F4A7C15ull * uint64_t(epoch + 1)));
  std::shuffle(order.begin(), order.end(), rng);

  EpochMetrics em;
  em.epoch = epoch;
  double lambda = EffectiveLambda(cfg);
  for (size_t i0 = 0; i0 < order.size(); i0 += size_t(cfg.batch_size)) {
    int count = int(std::min(size_t(cfg.batch_size), order.size() - i0));
    Tensor4 batch = BatchFromPatches(patches, order, i0, count);
    StepMetrics sm;
    TrainStep(model, opt, batch, lambda, &sm);
    em.loss += sm.loss;
    em.bpp += sm.bpp;
    em.mse += sm.mse;
    ++em.steps;
    if (cfg.max_steps_per_epoch > 0 && em.steps >= cfg.max_steps_per_epoch) {
      break;
    }
  }
  Require(em.steps > 0, "epoch ran no steps");
  em.loss /= em.steps;
  em.bpp /= em.steps;
  em.mse /= em.steps;
  em.psnr = codec::PsnrFromMse(em.mse);
  return em;
}

inline void AppendMetricsCsv(const std::string& path, const EpochMetrics& m) {
  bool fresh = !std::filesystem::exists(path) ||
               std::filesystem::file_size(path) == 0;
  std::ofstream f(path, std::ios::app);
  if (!f) throw IoError("cannot open " + path + " for writing");
  if (fresh) f << "epoch,steps,loss,bpp,mse,psnr\n";
  f << m.epoch << "," << m.steps << "," << std::setprecision(10) << m.loss
    << "," << m.bpp << "," << m.mse << "," << m.psnr << "\n";
}

// ---------------------------------------------------------------------------
// Checkpoints: model weights plus optimizer state plus the epoch cursor.

inline void SaveCheckpoint(const std::string& path,
                           const codec::CodecModel& model, const nn::AdamW& opt,
                           int next_epoch, uint8_t lambda_id, uint64_t seed) {
  ByteWriter w;
  w.Bytes(reinterpret_cast<const uint8_t*>("PWCK"), 4);
  w.U16(1);
  w.U32(uint32_t(next_epoch));
  w.U8(lambda_id);
  w.U64(seed);
  std::vector<uint8_t> weights = model.Serialize();
  w.U32(uint32_t(weights.size()));
  w.Bytes(weights);
  std::vector<uint8_t> ostate = nn::SerializeTensors(opt.ExportState());
  w.U32(uint32_t(ostate.size()));
  w.Bytes(ostate);
  nn::WriteBytesFile(path, w.Take());
}

struct Checkpoint {
  int next_epoch = 0;
  uint8_t lambda_id = 255;
  uint64_t seed = 0;
  std::unique_ptr<codec::CodecModel> model;
  std::map<std::string, Tensor4> opt_state;
};

inline Checkpoint LoadCheckpoint(const std::string& path) {
  std::vector<uint8_t> bytes = nn::ReadBytesFile(path);
  ByteReader r(bytes);
  std::vector<uint8_t> magic = r.Bytes(4);
  RequireDecode(std::memcmp(magic.data(), "PWCK", 4) == 0,
                "not a checkpoint file");
  RequireDecode(r.U16() == 1, "unsupported checkpoint version");
  Checkpoint ck;
  ck.next_epoch = int(r.U32());
  ck.lambda_id = r.U8();
  ck.seed = r.U64();
  uint32_t wlen = r.U32();
  ck.model = codec::CodecModel::Load(r.Bytes(wlen));
  uint32_t olen = r.U32();
  ck.opt_state = nn::DeserializeTensors(r.Bytes(olen));
  RequireDecode(r.remaining() == 0, "trailing bytes in checkpoint");
  return ck;
}

// Starts a new operating point from a trained checkpoint: keeps the weights,
// resets the optimizer state and the epoch counter, and retargets lambda.
inline Checkpoint FinetuneFrom(const std::string& path, uint8_t lambda_id) {
  Checkpoint ck = LoadCheckpoint(path);
  ck.next_epoch = 0;
  ck.lambda_id = lambda_id;
  ck.opt_state.clear();
  return ck;
}

}  // namespace train
}  // namespace pwavec

#endif  // PWAVEC_TRAIN_TRAINER_HPP_
