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

// Command line front end: model initialization, training, image and video
// coding, the decode benchmark and the subband impulse response tool.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pwavec/bench/bench.hpp"
#include "pwavec/codec/image.hpp"
#include "pwavec/io/png_io.hpp"
#include "pwavec/io/y4m.hpp"
#include "pwavec/train/trainer.hpp"
#include "pwavec/video/mctf.hpp"

namespace {

using namespace pwavec;

wavelet::Base BaseFromString(const std::string& s) {
  if (s == "haar") return wavelet::Base::kHaar;
  if (s == "cdf53") return wavelet::Base::kCdf53;
  throw ConfigError("unknown wavelet base: " + s);
}

codec::ContextModel ContextFromString(const std::string& s) {
  if (s == "four-step") return codec::ContextModel::kFourStep;
  if (s == "ar") return codec::ContextModel::kAr;
  throw ConfigError("unknown context model: " + s);
}

codec::LlContext LlContextFromString(const std::string& s) {
  if (s == "ar") return codec::LlContext::kAr;
  if (s == "four-step") return codec::LlContext::kFourStep;
  throw ConfigError("unknown ll context: " + s);
}

bool HasExtension(const std::string& path, const char* ext) {
  return std::filesystem::path(path).extension().string() == ext;
}

io::GrayImage ReadImageAuto(const std::string& path) {
  if (HasExtension(path, ".png")) return io::ReadPngGray(path);
  return io::ReadPgm(path);
}

void WriteImageAuto(const std::string& path, const io::GrayImage& img) {
  if (HasExtension(path, ".png")) {
    io::WritePngGray(path, img);
    return;
  }
  io::WritePgm(path, img);
}

std::vector<std::string> ListImages(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    if (ext == ".pgm" || ext == ".png") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .pgm or .png images in " + dir);
  return files;
}

std::vector<io::GrayImage> ReadFramesAuto(const std::string& path) {
  if (std::filesystem::is_directory(path)) {
    std::vector<io::GrayImage> frames;
    for (const std::string& f : ListImages(path)) {
      frames.push_back(ReadImageAuto(f));
    }
    return frames;
  }
  return io::ReadY4mLuma(path);
}

void WriteFramesAuto(const std::string& path,
                     const std::vector<io::GrayImage>& frames) {
  if (HasExtension(path, ".y4m")) {
    io::WriteY4mMono(path, frames);
    return;
  }
  std::filesystem::create_directories(path);
  for (size_t i = 0; i < frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05zu.pgm", i);
    io::WritePgm((std::filesystem::path(path) / name).string(), frames[i]);
  }
}

std::string PathWithTag(const std::string& path, const std::string& tag) {
  std::filesystem::path p(path);
  std::filesystem::path out = p.parent_path();
  out /= p.stem().string() + tag + p.extension().string();
  return out.string();
}

void PrintCodingStats(const codec::CodingStats& stats, double npix) {
  std::cout << "  payload " << stats.payload_bytes << " bytes, total "
            << stats.total_bytes << " bytes, " << 8.0 * stats.total_bytes / npix
            << " bpp\n  context invocations " << stats.context_invocations
            << ", symbols " << stats.symbols << "\n";
  for (int b = 0; b < wavelet::kNumBands; ++b) {
    std::cout << "  " << wavelet::BandName(b) << " "
              << stats.band_bytes[size_t(b)] << " bytes\n";
  }
}

// ---------------------------------------------------------------------------
// Option blocks shared between subcommands.

struct ModelCliOpts {
  std::string base = "cdf53";
  std::string context = "four-step";
  std::string ll_context = "ar";
  int width_fusion = 6;
  int width_ar = 10;
  int width_lstm = 4;
  int width_lift = 4;
  int width_post = 4;
  uint64_t seed = 1;

  void Register(CLI::App* cmd) {
    cmd->add_option("--base", base, "wavelet base filter")
        ->check(CLI::IsMember({"haar", "cdf53"}));
    cmd->add_option("--context", context, "context model for detail subbands")
        ->check(CLI::IsMember({"four-step", "ar"}));
    cmd->add_option("--ll-context", ll_context, "context model for LL4")
        ->check(CLI::IsMember({"ar", "four-step"}));
    cmd->add_option("--width-fusion", width_fusion, "fusion net channels");
    cmd->add_option("--width-ar", width_ar, "autoregressive net channels");
    cmd->add_option("--width-lstm", width_lstm, "long-context channels");
    cmd->add_option("--width-lift", width_lift, "lifting filter channels");
    cmd->add_option("--width-post", width_post, "post-processing channels");
    cmd->add_option("--seed", seed, "parameter initialization seed");
  }

  codec::ModelConfig Config() const {
    codec::ModelConfig c;
    c.base = BaseFromString(base);
    c.context = ContextFromString(context);
    c.ll_context = LlContextFromString(ll_context);
    c.width_fusion = width_fusion;
    c.width_ar = width_ar;
    c.width_lstm = width_lstm;
    c.width_lift = width_lift;
    c.width_post = width_post;
    c.seed = seed;
    return c;
  }
};

// ---------------------------------------------------------------------------

struct InitModelCmd {
  ModelCliOpts mc;
  std::string out;

  void Register(CLI::App* cmd) {
    cmd->add_option("--out", out, "output model file")->required();
    mc.Register(cmd);
    cmd->callback([this] { Run(); });
  }

  void Run() const {
    codec::CodecModel model;
    model.Init(mc.Config());
    model.SaveFile(out);
    std::cout << "initialized " << model.ps.TotalParams()
              << " parameters, hash " << std::hex << model.Hash() << std::dec
              << "\n";
  }
};

struct TrainCmd {
  ModelCliOpts mc;
  train::TrainConfig cfg;
  std::string data, video, temporal = "low";
  std::string out, init, resume, finetune, checkpoint, csv;
  bool sweep = false;
  int finetune_epochs = 0;
  CLI::App* cmd = nullptr;

  void Register(CLI::App* c) {
    cmd = c;
    cmd->add_option("--data", data, "directory of training images");
    cmd->add_option("--video", video,
                    "train on temporal subbands of this video instead");
    cmd->add_option("--temporal", temporal, "which temporal subband to use")
        ->check(CLI::IsMember({"low", "high"}));
    cmd->add_option("--out", out, "output model file")->required();
    auto* oi = cmd->add_option("--init", init, "start from these weights");
    auto* orr = cmd->add_option("--resume", resume, "resume from a checkpoint");
    auto* of = cmd->add_option("--finetune", finetune,
                               "finetune from a checkpoint at a new lambda");
    orr->excludes(oi);
    orr->excludes(of);
    of->excludes(oi);
    cmd->add_option("--checkpoint", checkpoint, "checkpoint file to write");
    cmd->add_option("--csv", csv, "per-epoch metrics CSV");
    cmd->add_option("--epochs", cfg.epochs, "training epochs");
    cmd->add_option("--batch-size", cfg.batch_size, "patches per step");
    cmd->add_option("--patch-size", cfg.patch_size, "square patch side");
    cmd->add_option("--lr", cfg.lr, "AdamW learning rate");
    cmd->add_option("--weight-decay", cfg.weight_decay, "AdamW weight decay");
    cmd->add_option("--lambda-id", cfg.lambda_id, "operating point index")
        ->check(CLI::Range(0, train::kNumLambdas - 1));
    cmd->add_option("--lambda", cfg.lambda,
                    "explicit rate-distortion tradeoff, overrides --lambda-id");
    cmd->add_option("--train-seed", cfg.seed, "shuffle seed");
    cmd->add_option("--max-steps", cfg.max_steps_per_epoch,
                    "cap on steps per epoch, 0 for the full epoch");
    cmd->add_flag("--sweep", sweep,
                  "train the high-rate point, then finetune every other"
                  " operating point from it");
    cmd->add_option("--finetune-epochs", finetune_epochs,
                    "epochs per finetuned point in a sweep, 0 copies --epochs");
    mc.Register(cmd);
    cmd->callback([this] { Run(); });
  }

  std::vector<Tensor4> LoadPatches() const {
    std::vector<Tensor4> planes;
    if (!video.empty()) {
      train::TemporalPlanes tp =
          train::MctfTrainingPlanes(ReadFramesAuto(video));
      planes = temporal == "low" ? std::move(tp.low) : std::move(tp.high);
    } else {
      if (data.empty()) throw ConfigError("train needs --data or --video");
      planes = train::LoadTrainingPlanes(data);
    }
    std::vector<Tensor4> patches =
        train::PatchesFromPlanes(planes, cfg.patch_size);
    std::cout << "training on " << patches.size() << " patches of "
              << cfg.patch_size << "x" << cfg.patch_size << "\n";
    return patches;
  }

  void RunEpochs(codec::CodecModel& model, nn::AdamW& opt,
                 const std::vector<Tensor4>& patches, int start_epoch,
                 const train::TrainConfig& c, const std::string& csv_path,
                 const std::string& ckpt_path) const {
    for (int e = start_epoch; e < c.epochs; ++e) {
      train::EpochMetrics em = train::TrainEpoch(model, opt, patches, e, c);
      std::cout << "epoch " << em.epoch << ": loss " << em.loss << " bpp "
                << em.bpp << " mse " << em.mse << " psnr " << em.psnr << "\n";
      if (!csv_path.empty()) train::AppendMetricsCsv(csv_path, em);
      if (!ckpt_path.empty()) {
        train::SaveCheckpoint(ckpt_path, model, opt, e + 1,
                              uint8_t(c.lambda_id), c.seed);
      }
    }
  }

  nn::AdamW MakeOptimizer() const {
    nn::AdamWConfig oc;
    oc.lr = cfg.lr;
    oc.weight_decay = cfg.weight_decay;
    return nn::AdamW(oc);
  }

  void Run() {
    std::vector<Tensor4> patches = LoadPatches();
    if (sweep) {
      RunSweep(patches);
      return;
    }
    nn::AdamW opt = MakeOptimizer();
    std::unique_ptr<codec::CodecModel> model;
    int start_epoch = 0;
    if (!resume.empty()) {
      train::Checkpoint ck = train::LoadCheckpoint(resume);
      model = std::move(ck.model);
      opt.ImportState(ck.opt_state);
      start_epoch = ck.next_epoch;
      if (cmd->count("--lambda-id") == 0 && ck.lambda_id < train::kNumLambdas) {
        cfg.lambda_id = ck.lambda_id;
      }
      if (cmd->count("--train-seed") == 0) cfg.seed = ck.seed;
    } else if (!finetune.empty()) {
      train::Checkpoint ck =
          train::FinetuneFrom(finetune, uint8_t(cfg.lambda_id));
      model = std::move(ck.model);
    } else if (!init.empty()) {
      model = codec::CodecModel::LoadFile(init);
    } else {
      model = std::make_unique<codec::CodecModel>();
      model->Init(mc.Config());
    }
    model->cfg.lambda_id =
        cfg.lambda > 0.0 ? uint8_t(255) : uint8_t(cfg.lambda_id);
    RunEpochs(*model, opt, patches, start_epoch, cfg, csv, checkpoint);
    model->SaveFile(out);
  }

  // Trains the highest operating point from scratch, then finetunes each of
  // the remaining points from its weights with a fresh optimizer. Writes one
  // model (and checkpoint) per point, tagged _l0 through _l4.
  void RunSweep(const std::vector<Tensor4>& patches) {
    if (!resume.empty() || !finetune.empty()) {
      throw ConfigError("--sweep runs its own schedule");
    }
    train::TrainConfig base_cfg = cfg;
    base_cfg.lambda = 0.0;
    base_cfg.lambda_id = train::kNumLambdas - 1;
    std::unique_ptr<codec::CodecModel> high;
    if (!init.empty()) {
      high = codec::CodecModel::LoadFile(init);
    } else {
      high = std::make_unique<codec::CodecModel>();
      high->Init(mc.Config());
    }
    high->cfg.lambda_id = uint8_t(base_cfg.lambda_id);
    auto tagged = [](const std::string& path, int id) {
      return path.empty() ? path : PathWithTag(path, "_l" + std::to_string(id));
    };
    std::cout << "sweep point lambda "
              << train::LambdaFromId(base_cfg.lambda_id) << "\n";
    {
      nn::AdamW opt = MakeOptimizer();
      RunEpochs(*high, opt, patches, 0, base_cfg,
                tagged(csv, base_cfg.lambda_id),
                tagged(checkpoint, base_cfg.lambda_id));
    }
    high->SaveFile(tagged(out, base_cfg.lambda_id));
    std::vector<uint8_t> high_bytes = high->Serialize();
    for (int id = train::kNumLambdas - 2; id >= 0; --id) {
      std::cout << "sweep point lambda " << train::LambdaFromId(id) << "\n";
      std::unique_ptr<codec::CodecModel> m =
          codec::CodecModel::Load(high_bytes);
      m->cfg.lambda_id = uint8_t(id);
      train::TrainConfig c = base_cfg;
      c.lambda_id = id;
      if (finetune_epochs > 0) c.epochs = finetune_epochs;
      nn::AdamW opt = MakeOptimizer();
      RunEpochs(*m, opt, patches, 0, c, tagged(csv, id), tagged(checkpoint, id));
      m->SaveFile(tagged(out, id));
    }
  }
};

struct EncodeCmd {
  std::string model_path, input, output;
  std::string context, ll_context;
  bool lossless = false, stats = false;
  int lambda_id = -1;

  void Register(CLI::App* cmd) {
    cmd->add_option("--model", model_path, "model weights")->required();
    cmd->add_option("--context", context, "override the model's context")
        ->check(CLI::IsMember({"four-step", "ar"}));
    cmd->add_option("--ll-context", ll_context, "override the LL4 context")
        ->check(CLI::IsMember({"ar", "four-step"}));
    cmd->add_flag("--lossless", lossless, "integer transform, unit step size");
    cmd->add_flag("--stats", stats, "print per-subband sizes and PSNR");
    cmd->add_option("--lambda-id", lambda_id,
                    "operating point recorded in the header")
        ->check(CLI::Range(0, train::kNumLambdas - 1));
    cmd->add_option("input", input, "source image (.pgm or .png)")->required();
    cmd->add_option("output", output, "bitstream to write")->required();
    cmd->callback([this] { Run(); });
  }

  void Run() const {
    auto model = codec::CodecModel::LoadFile(model_path);
    io::GrayImage img = ReadImageAuto(input);
    Tensor4 plane = io::PlaneFromImage(img);
    codec::EncodeOptions opts = codec::OptionsFromModel(*model);
    if (!context.empty()) opts.context = ContextFromString(context);
    if (!ll_context.empty()) opts.ll_context = LlContextFromString(ll_context);
    opts.lossless = lossless;
    if (lambda_id >= 0) opts.lambda_id = uint8_t(lambda_id);
    codec::CodingStats cs;
    std::vector<uint8_t> stream = codec::EncodePlane(*model, plane, opts, &cs);
    nn::WriteBytesFile(output, stream);
    double npix = double(img.w) * img.h;
    std::cout << img.w << "x" << img.h << " -> " << stream.size()
              << " bytes (" << 8.0 * double(stream.size()) / npix << " bpp)\n";
    if (stats) {
      PrintCodingStats(cs, npix);
      Tensor4 rec = codec::DecodePlane(*model, stream);
      std::cout << "  psnr " << codec::PsnrFromMse(codec::PlaneMse(rec, plane))
                << " dB\n";
    }
  }
};

struct DecodeCmd {
  std::string model_path, input, output, reference;

  void Register(CLI::App* cmd) {
    cmd->add_option("--model", model_path, "model weights")->required();
    cmd->add_option("--reference", reference, "original image, prints PSNR");
    cmd->add_option("input", input, "bitstream to read")->required();
    cmd->add_option("output", output, "image to write (.pgm or .png)")
        ->required();
    cmd->callback([this] { Run(); });
  }

  void Run() const {
    auto model = codec::CodecModel::LoadFile(model_path);
    std::vector<uint8_t> stream = nn::ReadBytesFile(input);
    Tensor4 plane = codec::DecodePlane(*model, stream);
    WriteImageAuto(output, io::ImageFromPlane(plane));
    double npix = double(plane.w()) * double(plane.h());
    std::cout << "decoded " << plane.w() << "x" << plane.h() << " ("
              << 8.0 * double(stream.size()) / npix << " bpp)\n";
    if (!reference.empty()) {
      Tensor4 ref = io::PlaneFromImage(ReadImageAuto(reference));
      std::cout << "psnr " << codec::PsnrFromMse(codec::PlaneMse(plane, ref))
                << " dB\n";
    }
  }
};

struct EncodeVideoCmd {
  std::string model_low, model_high, input, output;
  std::string context, ll_context;
  bool lossless = false;
  int lambda_id = -1;

  void Register(CLI::App* cmd) {
    cmd->add_option("--model-low", model_low, "temporal lowpass model")
        ->required();
    cmd->add_option("--model-high", model_high, "temporal highpass model")
        ->required();
    cmd->add_option("--context", context, "override the context model")
        ->check(CLI::IsMember({"four-step", "ar"}));
    cmd->add_option("--ll-context", ll_context, "override the LL4 context")
        ->check(CLI::IsMember({"ar", "four-step"}));
    cmd->add_flag("--lossless", lossless, "lossless temporal and spatial path");
    cmd->add_option("--lambda-id", lambda_id,
                    "operating point recorded in the header")
        ->check(CLI::Range(0, train::kNumLambdas - 1));
    cmd->add_option("input", input, "source video (.y4m or directory of .pgm)")
        ->required();
    cmd->add_option("output", output, "bitstream to write")->required();
    cmd->callback([this] { Run(); });
  }

  void Run() const {
    auto low = codec::CodecModel::LoadFile(model_low);
    auto high = codec::CodecModel::LoadFile(model_high);
    std::vector<io::GrayImage> frames = ReadFramesAuto(input);
    video::VideoEncodeOptions opts;
    if (!context.empty()) opts.context = ContextFromString(context);
    if (!ll_context.empty()) opts.ll_context = LlContextFromString(ll_context);
    opts.lossless = lossless;
    if (lambda_id >= 0) opts.lambda_id = uint8_t(lambda_id);
    video::VideoStats stats;
    std::vector<uint8_t> stream =
        video::EncodeVideo(*low, *high, frames, opts, &stats);
    nn::WriteBytesFile(output, stream);
    double npix = double(frames[0].w) * frames[0].h * double(frames.size());
    std::cout << frames.size() << " frames " << frames[0].w << "x"
              << frames[0].h << " -> " << stream.size() << " bytes ("
              << 8.0 * double(stream.size()) / npix << " bpp, motion "
              << stats.motion_bytes << " bytes)\n";
  }
};

struct DecodeVideoCmd {
  std::string model_low, model_high, input, output;

  void Register(CLI::App* cmd) {
    cmd->add_option("--model-low", model_low, "temporal lowpass model")
        ->required();
    cmd->add_option("--model-high", model_high, "temporal highpass model")
        ->required();
    cmd->add_option("input", input, "bitstream to read")->required();
    cmd->add_option("output", output, "output video (.y4m or directory)")
        ->required();
    cmd->callback([this] { Run(); });
  }

  void Run() const {
    auto low = codec::CodecModel::LoadFile(model_low);
    auto high = codec::CodecModel::LoadFile(model_high);
    std::vector<io::GrayImage> frames =
        video::DecodeVideo(*low, *high, nn::ReadBytesFile(input));
    WriteFramesAuto(output, frames);
    std::cout << "decoded " << frames.size() << " frames " << frames[0].w
              << "x" << frames[0].h << "\n";
  }
};

struct BenchCmd {
  std::string model_path, input, csv;
  int reps = 3;
  int lambda_id = -1;

  void Register(CLI::App* cmd) {
    cmd->add_option("--model", model_path, "model weights")->required();
    cmd->add_option("--reps", reps, "repetitions per image and context")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--lambda-id", lambda_id, "operating point for encoding")
        ->check(CLI::Range(0, train::kNumLambdas - 1));
    cmd->add_option("--csv", csv, "report CSV to write");
    cmd->add_option("input", input, "image or directory of images")->required();
    cmd->callback([this] { Run(); });
  }

  void Run() const {
    auto model = codec::CodecModel::LoadFile(model_path);
    std::vector<std::string> files;
    if (std::filesystem::is_directory(input)) {
      files = ListImages(input);
    } else {
      files.push_back(input);
    }
    std::vector<std::string> names;
    std::vector<Tensor4> planes;
    for (const std::string& f : files) {
      names.push_back(std::filesystem::path(f).filename().string());
      planes.push_back(io::PlaneFromImage(ReadImageAuto(f)));
    }
    uint8_t lid = lambda_id >= 0 ? uint8_t(lambda_id) : model->cfg.lambda_id;
    bench::CorpusBench report =
        bench::RunCorpusBench(*model, names, planes, reps, lid);
    for (const bench::BenchRow& r : report.rows) {
      std::cout << r.image << " "
                << (r.context == codec::ContextModel::kAr ? "ar" : "four-step")
                << " rep " << r.rep << ": encode " << r.encode_seconds
                << " s, decode " << r.decode_seconds << " s, " << r.bpp
                << " bpp, " << r.psnr << " dB\n";
    }
    std::cout << "decode speedup: " << report.speedup_time
              << "x wall clock, " << report.speedup_invocations
              << "x invocations\n";
    if (!csv.empty()) bench::WriteBenchReportCsv(csv, report);
  }
};

struct ImpulseCmd {
  std::string model_path, out_dir;
  int size = 16;

  void Register(CLI::App* cmd) {
    cmd->add_option("--model", model_path, "model weights")->required();
    cmd->add_option("--out", out_dir, "directory for the 13 responses")
        ->required();
    cmd->add_option("--size", size, "synthesis plane side")
        ->check(CLI::PositiveNumber);
    cmd->callback([this] { Run(); });
  }

  // All 13 files share one symmetric scale so relative band amplitudes stay
  // comparable: 0 maps to 128 and the largest magnitude anywhere to 1 or 255.
  void Run() const {
    auto model = codec::CodecModel::LoadFile(model_path);
    std::filesystem::create_directories(out_dir);
    std::vector<Tensor4> responses =
        codec::SubbandImpulseResponses(*model, size, size);
    double peak = 0.0;
    for (const Tensor4& p : responses) {
      for (int64_t i = 0; i < p.numel(); ++i) {
        peak = std::max(peak, std::abs(p[i]));
      }
    }
    double scale = peak > 0.0 ? 127.0 / peak : 0.0;
    for (int b = 0; b < wavelet::kNumBands; ++b) {
      const Tensor4& p = responses[size_t(b)];
      io::GrayImage img;
      img.w = p.w();
      img.h = p.h();
      img.pix.resize(size_t(p.numel()));
      for (int64_t i = 0; i < p.numel(); ++i) {
        img.pix[size_t(i)] = uint8_t(std::lround(128.0 + scale * p[i]));
      }
      std::string name =
          std::string("impulse_") + wavelet::BandName(b) + ".pgm";
      io::WritePgm((std::filesystem::path(out_dir) / name).string(), img);
      std::cout << wavelet::BandName(b) << " written\n";
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pwavec: learned-wavelet image and video codec"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; flags win");

  InitModelCmd init_model;
  TrainCmd train_cmd;
  EncodeCmd encode;
  DecodeCmd decode;
  EncodeVideoCmd encode_video;
  DecodeVideoCmd decode_video;
  BenchCmd bench_cmd;
  ImpulseCmd impulse;

  init_model.Register(
      app.add_subcommand("init-model", "write untrained weights"));
  train_cmd.Register(app.add_subcommand("train", "rate-distortion training"));
  encode.Register(app.add_subcommand("encode", "compress one grayscale image"));
  decode.Register(app.add_subcommand("decode", "decompress a bitstream"));
  encode_video.Register(
      app.add_subcommand("encode-video", "compress a frame sequence"));
  decode_video.Register(
      app.add_subcommand("decode-video", "decompress a video bitstream"));
  bench_cmd.Register(
      app.add_subcommand("bench", "time decoding under both context models"));
  impulse.Register(
      app.add_subcommand("impulse", "write the 13 subband impulse responses"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
