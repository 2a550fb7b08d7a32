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
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "catch_amalgamated.hpp"
#include "pwavec/bench/bench.hpp"
#include "pwavec/io/png_io.hpp"
#include "pwavec/io/y4m.hpp"

namespace bench = pwavec::bench;
namespace codec = pwavec::codec;
namespace io = pwavec::io;
namespace fs = std::filesystem;
using pwavec::ByteReader;
using pwavec::ByteWriter;
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

io::GrayImage RandomImage(int w, int h, std::mt19937_64& rng) {
  io::GrayImage img;
  img.w = w;
  img.h = h;
  img.pix.resize(size_t(w) * size_t(h));
  std::uniform_int_distribution<int> dist(0, 255);
  for (auto& p : img.pix) p = uint8_t(dist(rng));
  return img;
}

fs::path FreshDir(const std::string& leaf) {
  fs::path dir = fs::temp_directory_path() / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> FileLines(const fs::path& path) {
  std::ifstream f(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) lines.push_back(line);
  return lines;
}

size_t CountCommas(const std::string& s) {
  size_t n = 0;
  for (char c : s) n += c == ',';
  return n;
}

}  // namespace

TEST_CASE("medians of odd and even sample counts", "[bench]") {
  REQUIRE(bench::MedianOf({3.0}) == 3.0);
  REQUIRE(bench::MedianOf({5.0, 1.0, 4.0}) == 4.0);
  REQUIRE(bench::MedianOf({4.0, 1.0, 3.0, 2.0}) == 2.5);
  REQUIRE_THROWS_AS(bench::MedianOf({}), pwavec::Error);
}

TEST_CASE("the analytic decoder invocation counts", "[bench]") {
  using codec::ContextModel;
  using codec::LlContext;
  REQUIRE(bench::ExpectedDecodeInvocations(512, 768, ContextModel::kAr,
                                           LlContext::kAr) == 393216);
  REQUIRE(bench::ExpectedDecodeInvocations(512, 768, ContextModel::kFourStep,
                                           LlContext::kAr) == 1584);
  REQUIRE(bench::ExpectedDecodeInvocations(256, 384, ContextModel::kFourStep,
                                           LlContext::kAr) == 432);
  REQUIRE(bench::ExpectedDecodeInvocations(256, 384, ContextModel::kFourStep,
                                           LlContext::kFourStep) == 52);
  REQUIRE(bench::ExpectedDecodeInvocations(48, 48, ContextModel::kFourStep,
                                           LlContext::kAr) == 57);
}

TEST_CASE("the single-image bench reports consistent counts", "[bench]") {
  codec::CodecModel model;
  model.Init(SmallConfig());
  std::mt19937_64 rng(111);
  Tensor4 plane = Tensor4::RandomUniform(Shape4{1, 1, 48, 48}, 0.0, 1.0, rng);

  bench::BenchResult r = bench::RunDecodeBench(model, plane, 2);
  REQUIRE(r.pad_w == 48);
  REQUIRE(r.pad_h == 48);
  REQUIRE(r.four_step_invocations == 57);
  REQUIRE(r.ar_invocations == 2304);
  REQUIRE(r.speedup_invocations == Catch::Approx(2304.0 / 57.0));
  REQUIRE(r.four_step_seconds > 0.0);
  REQUIRE(r.ar_seconds > 0.0);
  REQUIRE(r.four_step_bpp > 0.0);
  REQUIRE(r.ar_bpp > 0.0);

  fs::path path = FreshDir("pwavec_bench_csv") / "bench.csv";
  bench::WriteBenchCsv(path.string(), r);
  std::vector<std::string> lines = FileLines(path);
  REQUIRE(lines.size() == 4);
  REQUIRE(lines[0][0] == '#');
  REQUIRE(lines[1].find("354x") != std::string::npos);
  REQUIRE(lines[2].rfind("w,h,", 0) == 0);
  REQUIRE(CountCommas(lines[3]) == CountCommas(lines[2]));
}

TEST_CASE("the corpus bench writes one row per image, context and rep",
          "[bench]") {
  codec::CodecModel model;
  model.Init(SmallConfig());
  std::mt19937_64 rng(112);
  std::vector<std::string> names = {"alpha", "beta"};
  std::vector<Tensor4> planes = {
      Tensor4::RandomUniform(Shape4{1, 1, 48, 48}, 0.0, 1.0, rng),
      Tensor4::RandomUniform(Shape4{1, 1, 40, 56}, 0.0, 1.0, rng)};

  bench::CorpusBench report = bench::RunCorpusBench(model, names, planes, 2);
  REQUIRE(report.rows.size() == 8);
  REQUIRE(report.reps == 2);
  // alpha pads to 48x48, beta to 48x64.
  REQUIRE(report.speedup_invocations ==
          Catch::Approx(double(2304 + 3072) / double(57 + 60)));
  REQUIRE(report.speedup_time > 1.0);
  for (const bench::BenchRow& row : report.rows) {
    bool ar = row.context == codec::ContextModel::kAr;
    int64_t want = row.image == "alpha" ? (ar ? 2304 : 57) : (ar ? 3072 : 60);
    REQUIRE(row.decode_invocations == want);
    REQUIRE(row.decode_seconds > 0.0);
    REQUIRE(row.bpp > 0.0);
  }

  fs::path path = FreshDir("pwavec_bench_report") / "report.csv";
  bench::WriteBenchReportCsv(path.string(), report);
  std::vector<std::string> lines = FileLines(path);
  REQUIRE(lines.size() == 4 + 8);
  REQUIRE(lines[0][0] == '#');
  REQUIRE(lines[1][0] == '#');
  REQUIRE(lines[2].find("354x") != std::string::npos);
  REQUIRE(lines[3] ==
          "image,context,rep,encode_s,decode_s,encode_invocations,"
          "decode_invocations,bpp,psnr");
  for (size_t i = 4; i < lines.size(); ++i)
    REQUIRE(CountCommas(lines[i]) == 8);
  REQUIRE(lines[4].rfind("alpha,four-step,0,", 0) == 0);
  REQUIRE(lines[6].rfind("alpha,ar,0,", 0) == 0);
}

TEST_CASE("repeated decodes of one stream agree on counts", "[bench]") {
  codec::CodecModel model;
  model.Init(SmallConfig());
  std::mt19937_64 rng(113);
  Tensor4 plane = Tensor4::RandomUniform(Shape4{1, 1, 16, 16}, 0.0, 1.0, rng);
  std::vector<uint8_t> stream =
      codec::EncodePlane(model, plane, codec::OptionsFromModel(model));
  bench::DecodeTiming t = bench::TimeDecode(model, stream, 3);
  REQUIRE(t.seconds.size() == 3);
  REQUIRE(t.seconds_median == bench::MedianOf(t.seconds));
  REQUIRE(t.plane.shape() == (Shape4{1, 1, 16, 16}));
  REQUIRE_THROWS_AS(bench::TimeDecode(model, stream, 0), pwavec::Error);
}

TEST_CASE("pgm files round trip", "[io]") {
  std::mt19937_64 rng(114);
  io::GrayImage img = RandomImage(5, 3, rng);
  fs::path dir = FreshDir("pwavec_io_pgm");
  fs::path path = dir / "img.pgm";
  io::WritePgm(path.string(), img);
  io::GrayImage back = io::ReadPgm(path.string());
  REQUIRE(back.w == img.w);
  REQUIRE(back.h == img.h);
  REQUIRE(back.pix == img.pix);

  // Headers may carry comments between tokens.
  std::ofstream f(dir / "comment.pgm", std::ios::binary);
  f << "P5\n# a comment\n3 # inline\n2\n255\n";
  const char payload[6] = {0, 50, 100, (char)150, (char)200, (char)250};
  f.write(payload, 6);
  f.close();
  io::GrayImage c = io::ReadPgm((dir / "comment.pgm").string());
  REQUIRE(c.w == 3);
  REQUIRE(c.h == 2);
  REQUIRE(c.pix[5] == 250);
}

TEST_CASE("malformed pgm files are rejected", "[io]") {
  fs::path dir = FreshDir("pwavec_io_badpgm");
  auto write = [&dir](const std::string& name, const std::string& content) {
    std::ofstream f(dir / name, std::ios::binary);
    f << content;
    return (dir / name).string();
  };
  REQUIRE_THROWS_AS(io::ReadPgm((dir / "missing.pgm").string()),
                    pwavec::IoError);
  REQUIRE_THROWS_AS(io::ReadPgm(write("p6.pgm", "P6\n2 2\n255\n0123")),
                    pwavec::IoError);
  REQUIRE_THROWS_AS(io::ReadPgm(write("deep.pgm", "P5\n2 2\n65535\n0123")),
                    pwavec::IoError);
  REQUIRE_THROWS_AS(io::ReadPgm(write("short.pgm", "P5\n2 2\n255\n01")),
                    pwavec::IoError);
  REQUIRE_THROWS_AS(io::ReadPgm(write("text.pgm", "P5\nhello\n255\n")),
                    pwavec::IoError);
}

TEST_CASE("png files round trip", "[io]") {
  std::mt19937_64 rng(115);
  io::GrayImage img = RandomImage(7, 5, rng);
  fs::path dir = FreshDir("pwavec_io_png");
  fs::path path = dir / "img.png";
  io::WritePngGray(path.string(), img);
  io::GrayImage back = io::ReadPngGray(path.string());
  REQUIRE(back.w == img.w);
  REQUIRE(back.h == img.h);
  REQUIRE(back.pix == img.pix);

  std::ofstream(dir / "junk.png", std::ios::binary) << "not a png";
  REQUIRE_THROWS_AS(io::ReadPngGray((dir / "junk.png").string()),
                    pwavec::IoError);
}

TEST_CASE("planes map to the unit interval and back", "[io]") {
  io::GrayImage img;
  img.w = 256;
  img.h = 1;
  img.pix.resize(256);
  for (int i = 0; i < 256; ++i) img.pix[size_t(i)] = uint8_t(i);

  Tensor4 p = io::PlaneFromImage(img);
  REQUIRE(p.shape() == (Shape4{1, 1, 1, 256}));
  REQUIRE(p[0] == 0.0);
  REQUIRE(p[255] == 1.0);
  REQUIRE(p[128] == 128.0 / 255.0);

  io::GrayImage back = io::ImageFromPlane(p);
  REQUIRE(back.pix == img.pix);

  Tensor4 wild(Shape4{1, 1, 1, 3});
  wild[0] = -0.2;
  wild[1] = 1.5;
  wild[2] = 0.5;
  io::GrayImage clamped = io::ImageFromPlane(wild);
  REQUIRE(clamped.pix[0] == 0);
  REQUIRE(clamped.pix[1] == 255);
  REQUIRE(clamped.pix[2] == 128);
}

TEST_CASE("y4m mono streams round trip", "[io]") {
  std::mt19937_64 rng(116);
  std::vector<io::GrayImage> frames;
  for (int i = 0; i < 3; ++i) frames.push_back(RandomImage(6, 4, rng));
  fs::path dir = FreshDir("pwavec_io_y4m");
  fs::path path = dir / "clip.y4m";
  io::WriteY4mMono(path.string(), frames);

  std::vector<io::GrayImage> back = io::ReadY4mLuma(path.string());
  REQUIRE(back.size() == 3);
  for (size_t i = 0; i < back.size(); ++i) {
    REQUIRE(back[i].w == 6);
    REQUIRE(back[i].h == 4);
    REQUIRE(back[i].pix == frames[i].pix);
  }
}

TEST_CASE("y4m reads 4:2:0 luma and rejects unknown chroma", "[io]") {
  fs::path dir = FreshDir("pwavec_io_y4m420");
  std::mt19937_64 rng(117);
  std::vector<io::GrayImage> frames = {RandomImage(6, 4, rng),
                                       RandomImage(6, 4, rng)};
  {
    std::ofstream f(dir / "c420.y4m", std::ios::binary);
    f << "YUV4MPEG2 W6 H4 F25:1 Ip A1:1 C420jpeg\n";
    std::vector<char> chroma(12, char(0xEE));
    for (const io::GrayImage& img : frames) {
      f << "FRAME\n";
      f.write(reinterpret_cast<const char*>(img.pix.data()), 24);
      f.write(chroma.data(), std::streamsize(chroma.size()));
    }
  }
  std::vector<io::GrayImage> back =
      io::ReadY4mLuma((dir / "c420.y4m").string());
  REQUIRE(back.size() == 2);
  REQUIRE(back[0].pix == frames[0].pix);
  REQUIRE(back[1].pix == frames[1].pix);

  auto write = [&dir](const std::string& name, const std::string& content) {
    std::ofstream f(dir / name, std::ios::binary);
    f << content;
    return (dir / name).string();
  };
  REQUIRE_THROWS_AS(
      io::ReadY4mLuma(write("c444.y4m", "YUV4MPEG2 W2 H2 C444\nFRAME\nabcd")),
      pwavec::IoError);
  REQUIRE_THROWS_AS(
      io::ReadY4mLuma(write("notag.y4m", "YUV4MPEG2 W2 H2 Cmono\nOOPS\nabcd")),
      pwavec::IoError);
  REQUIRE_THROWS_AS(
      io::ReadY4mLuma(write("short.y4m", "YUV4MPEG2 W2 H2 Cmono\nFRAME\nab")),
      pwavec::IoError);
  REQUIRE_THROWS_AS(io::ReadY4mLuma(write("other.y4m", "RIFF etc")),
                    pwavec::IoError);
  REQUIRE_THROWS_AS(
      io::ReadY4mLuma(write("empty.y4m", "YUV4MPEG2 W2 H2 Cmono\n")),
      pwavec::IoError);
}

TEST_CASE("byte streams round trip every scalar type", "[io]") {
  ByteWriter w;
  w.U8(0xAB);
  w.U16(0x1234);
  w.U32(0xDEADBEEF);
  w.U64(0x0123456789ABCDEFull);
  w.F64(-0.0);
  w.F64(std::numeric_limits<double>::quiet_NaN());
  w.String("pwavec");
  w.Bytes(std::vector<uint8_t>{1, 2, 3});
  std::vector<uint8_t> bytes = w.Take();
  REQUIRE(bytes.size() == 1 + 2 + 4 + 8 + 8 + 8 + 2 + 6 + 3);

  ByteReader r(bytes);
  REQUIRE(r.U8() == 0xAB);
  REQUIRE(r.U16() == 0x1234);
  REQUIRE(r.U32() == 0xDEADBEEF);
  REQUIRE(r.U64() == 0x0123456789ABCDEFull);
  double neg_zero = r.F64();
  REQUIRE(neg_zero == 0.0);
  REQUIRE(std::signbit(neg_zero));
  REQUIRE(std::isnan(r.F64()));
  REQUIRE(r.String() == "pwavec");
  REQUIRE(r.Bytes(3) == (std::vector<uint8_t>{1, 2, 3}));
  REQUIRE(r.remaining() == 0);
  REQUIRE_THROWS_AS(r.U8(), pwavec::DecodeError);

  ByteReader r2(bytes);
  r2.Bytes(bytes.size() - 1);
  REQUIRE_THROWS_AS(r2.U16(), pwavec::DecodeError);
}

TEST_CASE("the weight hash matches published fnv1a digests", "[io]") {
  REQUIRE(pwavec::Fnv1a64(nullptr, 0) == 0xcbf29ce484222325ull);
  std::vector<uint8_t> a = {'a'};
  REQUIRE(pwavec::Fnv1a64(a) == 0xaf63dc4c8601ec8cull);
  std::vector<uint8_t> foobar = {'f', 'o', 'o', 'b', 'a', 'r'};
  REQUIRE(pwavec::Fnv1a64(foobar) == 0x85944171f73967e8ull);
}
