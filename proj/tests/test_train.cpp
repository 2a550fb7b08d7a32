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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "catch_amalgamated.hpp"
#include "pwavec/train/trainer.hpp"

namespace codec = pwavec::codec;
namespace io = pwavec::io;
namespace nn = pwavec::nn;
namespace train = pwavec::train;
namespace fs = std::filesystem;
using pwavec::Shape4;
using pwavec::Tensor4;

namespace {

codec::ModelConfig SmallConfig() {
  codec::ModelConfig c;
  c.width_fusion = 3;
  c.width_ar = 4;
  c.width_lstm = 2;
  c.width_lift = 2;
  c.width_post = 2;
  c.seed = 5;
  return c;
}

Tensor4 RandomBatch(int n, int h, int w, std::mt19937_64& rng) {
  return Tensor4::RandomUniform(Shape4{n, 1, h, w}, 0.0, 1.0, rng);
}

std::vector<Tensor4> RandomPatches(int count, int size, std::mt19937_64& rng) {
  std::vector<Tensor4> out;
  for (int i = 0; i < count; ++i)
    out.push_back(Tensor4::RandomUniform(Shape4{1, 1, size, size}, 0.0, 1.0,
                                         rng));
  return out;
}

bool SameParams(const codec::CodecModel& a, const codec::CodecModel& b) {
  std::map<std::string, Tensor4> pa = nn::ExportParams(a.ps);
  std::map<std::string, Tensor4> pb = nn::ExportParams(b.ps);
  if (pa.size() != pb.size()) return false;
  for (const auto& [name, ta] : pa) {
    auto it = pb.find(name);
    if (it == pb.end()) return false;
    if (ta.shape() != it->second.shape()) return false;
    for (int64_t i = 0; i < ta.numel(); ++i)
      if (ta[i] != it->second[i]) return false;
  }
  return true;
}

fs::path FreshDir(const std::string& leaf) {
  fs::path dir = fs::temp_directory_path() / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("the lambda table drives the operating points", "[train]") {
  REQUIRE(train::LambdaFromId(0) == 0.007);
  REQUIRE(train::LambdaFromId(4) == 0.08);
  REQUIRE_THROWS_AS(train::LambdaFromId(5), pwavec::Error);
  REQUIRE_THROWS_AS(train::LambdaFromId(-1), pwavec::Error);

  train::TrainConfig cfg;
  cfg.lambda_id = 2;
  REQUIRE(train::EffectiveLambda(cfg) == 0.03);
  cfg.lambda = 0.5;
  REQUIRE(train::EffectiveLambda(cfg) == 0.5);
}

TEST_CASE("the loss is rate plus lambda times distortion", "[train]") {
  codec::CodecModel model;
  model.Init(SmallConfig());
  std::mt19937_64 rng(91);
  Tensor4 batch = RandomBatch(2, 16, 16, rng);

  train::StepMetrics a, b;
  train::RdLoss(model, batch, 0.01, &a);
  train::RdLoss(model, batch, 0.08, &b);

  // Rate and distortion do not depend on the tradeoff weight.
  REQUIRE(a.bpp == b.bpp);
  REQUIRE(a.mse == b.mse);
  REQUIRE(a.bpp > 0.0);
  REQUIRE(a.mse > 0.0);
  REQUIRE(a.loss == Catch::Approx(a.bpp + 0.01 * a.mse).epsilon(1e-12));
  REQUIRE(b.loss == Catch::Approx(b.bpp + 0.08 * b.mse).epsilon(1e-12));
  REQUIRE(b.loss - a.loss ==
          Catch::Approx((0.08 - 0.01) * a.mse).epsilon(1e-10));
}

TEST_CASE("the loss rejects unusable batches", "[train]") {
  codec::CodecModel model;
  model.Init(SmallConfig());
  std::mt19937_64 rng(92);
  Tensor4 odd_size = RandomBatch(1, 8, 8, rng);
  REQUIRE_THROWS_AS(train::RdLoss(model, odd_size, 0.01), pwavec::Error);
  Tensor4 two_channel(Shape4{1, 2, 16, 16});
  REQUIRE_THROWS_AS(train::RdLoss(model, two_channel, 0.01), pwavec::Error);
}

TEST_CASE("gradients reach every parameter group", "[train]") {
  codec::CodecModel model;
  model.Init(SmallConfig());
  std::mt19937_64 rng(93);
  Tensor4 batch = RandomBatch(2, 16, 16, rng);

  model.ps.ZeroGrads();
  nn::VarPtr loss = train::RdLoss(model, batch, 0.08);
  nn::Backward(loss);

  std::map<std::string, double> group_peak;
  for (const auto& [name, p] : model.ps.All()) {
    std::string group = name.substr(0, name.find('/'));
    Tensor4& g = p->EnsureGrad();
    double peak = 0.0;
    for (int64_t i = 0; i < g.numel(); ++i)
      peak = std::max(peak, std::fabs(g[i]));
    group_peak[group] = std::max(group_peak[group], peak);
  }
  for (const char* group : {"lift", "lstm", "fusion", "ar", "post", "quant"}) {
    INFO("group " << group);
    REQUIRE(group_peak.at(group) > 0.0);
  }
}

TEST_CASE("training steps are deterministic", "[train]") {
  std::mt19937_64 rng(94);
  Tensor4 batch = RandomBatch(2, 16, 16, rng);

  auto run = [&batch]() {
    codec::CodecModel model;
    model.Init(SmallConfig());
    nn::AdamWConfig oc;
    oc.lr = 1e-3;
    nn::AdamW opt(oc);
    train::StepMetrics sm;
    for (int step = 0; step < 2; ++step) {
      REQUIRE(train::TrainStep(model, opt, batch, 0.03, &sm) == 0);
      REQUIRE(std::isfinite(sm.loss));
    }
    return std::pair<std::map<std::string, Tensor4>, double>(
        nn::ExportParams(model.ps), sm.loss);
  };

  auto [pa, la] = run();
  auto [pb, lb] = run();
  REQUIRE(la == lb);
  REQUIRE(pa.size() == pb.size());
  for (const auto& [name, ta] : pa) {
    const Tensor4& tb = pb.at(name);
    for (int64_t i = 0; i < ta.numel(); ++i) REQUIRE(ta[i] == tb[i]);
  }
}

TEST_CASE("optimizer steps move the weights", "[train]") {
  codec::CodecModel model;
  model.Init(SmallConfig());
  codec::CodecModel before;
  before.Init(SmallConfig());
  std::mt19937_64 rng(95);
  Tensor4 batch = RandomBatch(2, 16, 16, rng);
  nn::AdamWConfig oc;
  oc.lr = 1e-3;
  nn::AdamW opt(oc);
  train::TrainStep(model, opt, batch, 0.03);
  REQUIRE_FALSE(SameParams(model, before));
}

TEST_CASE("an interrupted run resumes bit-exactly", "[train]") {
  std::mt19937_64 rng(96);
  std::vector<Tensor4> patches = RandomPatches(12, 16, rng);

  train::TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.patch_size = 16;
  cfg.lambda_id = 2;
  cfg.lr = 1e-3;
  cfg.seed = 9;

  nn::AdamWConfig oc;
  oc.lr = cfg.lr;
  oc.weight_decay = cfg.weight_decay;

  // Uninterrupted reference: two epochs in one process.
  codec::CodecModel ref;
  ref.Init(SmallConfig());
  nn::AdamW ref_opt(oc);
  train::EpochMetrics ref_e0 = train::TrainEpoch(ref, ref_opt, patches, 0, cfg);
  train::EpochMetrics ref_e1 = train::TrainEpoch(ref, ref_opt, patches, 1, cfg);
  REQUIRE(ref_e0.steps == 3);
  REQUIRE(std::isfinite(ref_e1.loss));

  // Interrupted run: one epoch, checkpoint to disk, reload, second epoch.
  codec::CodecModel part;
  part.Init(SmallConfig());
  nn::AdamW part_opt(oc);
  train::EpochMetrics part_e0 =
      train::TrainEpoch(part, part_opt, patches, 0, cfg);
  REQUIRE(part_e0.loss == ref_e0.loss);

  fs::path ck_path = FreshDir("pwavec_train_ck") / "ck.pwck";
  train::SaveCheckpoint(ck_path.string(), part, part_opt, 1,
                        uint8_t(cfg.lambda_id), cfg.seed);

  train::Checkpoint ck = train::LoadCheckpoint(ck_path.string());
  REQUIRE(ck.next_epoch == 1);
  REQUIRE(int(ck.lambda_id) == cfg.lambda_id);
  REQUIRE(ck.seed == cfg.seed);
  REQUIRE(SameParams(*ck.model, part));
  REQUIRE_FALSE(ck.opt_state.empty());

  nn::AdamW resumed_opt(oc);
  resumed_opt.ImportState(ck.opt_state);
  REQUIRE(resumed_opt.step_count() == part_opt.step_count());
  train::EpochMetrics res_e1 =
      train::TrainEpoch(*ck.model, resumed_opt, patches, ck.next_epoch, cfg);
  REQUIRE(res_e1.loss == ref_e1.loss);
  REQUIRE(SameParams(*ck.model, ref));
}

TEST_CASE("finetuning keeps weights and resets the schedule", "[train]") {
  codec::CodecModel model;
  model.Init(SmallConfig());
  nn::AdamW opt;
  std::mt19937_64 rng(97);
  Tensor4 batch = RandomBatch(1, 16, 16, rng);
  train::TrainStep(model, opt, batch, 0.03);

  fs::path ck_path = FreshDir("pwavec_train_ft") / "ck.pwck";
  train::SaveCheckpoint(ck_path.string(), model, opt, 7, 2, 9);

  train::Checkpoint ft = train::FinetuneFrom(ck_path.string(), 4);
  REQUIRE(ft.next_epoch == 0);
  REQUIRE(int(ft.lambda_id) == 4);
  REQUIRE(ft.opt_state.empty());
  REQUIRE(SameParams(*ft.model, model));
}

TEST_CASE("checkpoint files are validated", "[train]") {
  codec::CodecModel model;
  model.Init(SmallConfig());
  nn::AdamW opt;
  fs::path dir = FreshDir("pwavec_train_badck");
  fs::path good = dir / "good.pwck";
  train::SaveCheckpoint(good.string(), model, opt, 0, 1, 1);

  std::vector<uint8_t> bytes = nn::ReadBytesFile(good.string());
  bytes[0] = 'X';
  fs::path bad = dir / "bad.pwck";
  nn::WriteBytesFile(bad.string(), bytes);
  REQUIRE_THROWS_AS(train::LoadCheckpoint(bad.string()), pwavec::DecodeError);

  bytes = nn::ReadBytesFile(good.string());
  bytes.resize(bytes.size() / 2);
  nn::WriteBytesFile(bad.string(), bytes);
  REQUIRE_THROWS_AS(train::LoadCheckpoint(bad.string()), pwavec::Error);
}

TEST_CASE("patches tile planes with replication", "[train]") {
  std::mt19937_64 rng(98);
  Tensor4 big = Tensor4::RandomUniform(Shape4{1, 1, 32, 48}, 0.0, 1.0, rng);
  std::vector<Tensor4> patches = train::PatchesFromPlanes({big}, 16);
  REQUIRE(patches.size() == 6);
  REQUIRE(patches[0].shape() == (Shape4{1, 1, 16, 16}));
  // Tiles scan in row-major order; the second tile starts at column 16.
  REQUIRE(patches[1].At(0, 0, 3, 5) == big.At(0, 0, 3, 21));
  REQUIRE(patches[4].At(0, 0, 2, 7) == big.At(0, 0, 18, 23));

  Tensor4 small = Tensor4::RandomUniform(Shape4{1, 1, 8, 12}, 0.0, 1.0, rng);
  std::vector<Tensor4> padded = train::PatchesFromPlanes({small}, 16);
  REQUIRE(padded.size() == 1);
  REQUIRE(padded[0].At(0, 0, 15, 15) == small.At(0, 0, 7, 11));
  REQUIRE(padded[0].At(0, 0, 2, 3) == small.At(0, 0, 2, 3));

  std::vector<Tensor4> both = train::PatchesFromPlanes({big, small}, 16);
  REQUIRE(both.size() == 7);

  REQUIRE_THROWS_AS(train::PatchesFromPlanes({big}, 15), pwavec::Error);
  REQUIRE_THROWS_AS(train::PatchesFromPlanes({big}, 0), pwavec::Error);
}

TEST_CASE("batches gather patches in shuffle order", "[train]") {
  std::mt19937_64 rng(99);
  std::vector<Tensor4> patches = RandomPatches(3, 16, rng);
  std::vector<size_t> order = {2, 0, 1};
  Tensor4 batch = train::BatchFromPatches(patches, order, 1, 2);
  REQUIRE(batch.shape() == (Shape4{2, 1, 16, 16}));
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      REQUIRE(batch.At(0, 0, y, x) == patches[0].At(0, 0, y, x));
      REQUIRE(batch.At(1, 0, y, x) == patches[1].At(0, 0, y, x));
    }
  }
}

TEST_CASE("temporal planes cover every group", "[train]") {
  std::mt19937_64 rng(100);
  std::vector<io::GrayImage> frames(10);
  std::uniform_int_distribution<int> dist(0, 255);
  for (auto& f : frames) {
    f.w = 16;
    f.h = 16;
    f.pix.resize(256);
    for (auto& p : f.pix) p = uint8_t(dist(rng));
  }
  train::TemporalPlanes tp = train::MctfTrainingPlanes(frames);
  REQUIRE(tp.low.size() == 2);
  REQUIRE(tp.high.size() == 14);
  for (const Tensor4& t : tp.low) REQUIRE(t.shape() == (Shape4{1, 1, 16, 16}));
  for (const Tensor4& t : tp.high)
    REQUIRE(t.shape() == (Shape4{1, 1, 16, 16}));
}

TEST_CASE("metrics append to a csv with one header", "[train]") {
  fs::path path = FreshDir("pwavec_train_csv") / "metrics.csv";
  train::EpochMetrics m;
  m.epoch = 0;
  m.steps = 3;
  m.loss = 1.25;
  m.bpp = 1.0;
  m.mse = 0.5;
  m.psnr = 3.0103;
  train::AppendMetricsCsv(path.string(), m);
  m.epoch = 1;
  train::AppendMetricsCsv(path.string(), m);

  std::ifstream f(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(f, line)) lines.push_back(line);
  REQUIRE(lines.size() == 3);
  REQUIRE(lines[0] == "epoch,steps,loss,bpp,mse,psnr");
  REQUIRE(lines[1].rfind("0,3,", 0) == 0);
  REQUIRE(lines[2].rfind("1,3,", 0) == 0);
}

TEST_CASE("datasets skip unreadable files but never end up empty", "[train]") {
  fs::path dir = FreshDir("pwavec_train_data");
  REQUIRE_THROWS_AS(train::LoadTrainingPlanes(dir.string()), pwavec::Error);

  io::GrayImage img;
  img.w = 4;
  img.h = 4;
  img.pix.assign(16, 128);
  io::WritePgm((dir / "ok.pgm").string(), img);
  std::ofstream(dir / "broken.pgm") << "P5 not a real header";
  std::ofstream(dir / "notes.txt") << "ignored";

  std::vector<Tensor4> planes = train::LoadTrainingPlanes(dir.string());
  REQUIRE(planes.size() == 1);
  REQUIRE(planes[0].shape() == (Shape4{1, 1, 4, 4}));
}
