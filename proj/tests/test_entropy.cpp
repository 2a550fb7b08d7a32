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
#include <random>
#include <vector>

#include "catch_amalgamated.hpp"
#include "pwavec/entropy/context.hpp"
#include "pwavec/entropy/laplace.hpp"
#include "pwavec/rc/range_coder.hpp"

namespace nn = pwavec::nn;
namespace entropy = pwavec::entropy;
namespace rc = pwavec::rc;
using pwavec::Shape4;
using pwavec::Tensor4;

namespace {

void PerturbParams(nn::ParamStore& ps, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  for (const auto& [name, v] : ps.All())
    for (int64_t i = 0; i < v->value.numel(); ++i) v->value[i] += dist(rng);
}

Tensor4 RandomSymbols(int h, int w, int mag, std::mt19937_64& rng) {
  Tensor4 t(Shape4{1, 1, h, w});
  std::uniform_int_distribution<int> dist(-mag, mag);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = double(dist(rng));
  return t;
}

}  // namespace

TEST_CASE("laplace distribution closed forms", "[entropy]") {
  REQUIRE(entropy::LaplaceCdf(0.0, 1.0) == 0.5);
  REQUIRE(entropy::LaplaceCdf(std::log(2.0), 1.0) ==
          Catch::Approx(0.75).epsilon(1e-14));
  REQUIRE(entropy::LaplaceCdf(-std::log(2.0), 1.0) ==
          Catch::Approx(0.25).epsilon(1e-14));

  // Central bin mass at mu = 0, b = 1: F(0.5) - F(-0.5) = 1 - e^{-1/2}.
  REQUIRE(entropy::LaplacePmf(0, 0.0, 1.0) ==
          Catch::Approx(0.3934693402873666).epsilon(1e-12));
}

TEST_CASE("laplace pmf is a proper symmetric distribution", "[entropy]") {
  for (double b : {0.04, 1.0, 37.5}) {
    double sum = 0.0;
    for (int v = entropy::kAlphabetMin; v <= entropy::kAlphabetMax; ++v)
      sum += entropy::LaplacePmf(v, 0.0, b);
    REQUIRE(sum == Catch::Approx(1.0).epsilon(1e-9));

    for (int v = 1; v <= 32; ++v)
      REQUIRE(entropy::LaplacePmf(v, 0.0, b) ==
              Catch::Approx(entropy::LaplacePmf(-v, 0.0, b))
                  .epsilon(1e-9)
                  .margin(1e-15));

    for (int v = 0; v < 64; ++v)
      REQUIRE(entropy::LaplacePmf(v, 0.0, b) >=
              entropy::LaplacePmf(v + 1, 0.0, b));
  }
}

TEST_CASE("edge bins absorb the tails", "[entropy]") {
  const int lo = entropy::kAlphabetMin;
  const int hi = entropy::kAlphabetMax;
  REQUIRE(entropy::LaplacePmf(lo, double(lo), 2.0) ==
          entropy::LaplaceCdf(0.5, 2.0));
  REQUIRE(entropy::LaplacePmf(hi, double(hi), 2.0) ==
          1.0 - entropy::LaplaceCdf(-0.5, 2.0));
}

TEST_CASE("pmf gradients match finite differences", "[entropy]") {
  const double h = 1e-6;
  struct Probe {
    int64_t v;
    double mu, b;
  };
  for (const Probe& p : {Probe{0, 0.25, 1.5}, Probe{3, -1.0, 0.8},
                         Probe{-7, 2.5, 4.0}, Probe{12, 11.75, 0.3}}) {
    double dp_dd = 0.0, dp_db = 0.0;
    entropy::LaplacePmfGrad(double(p.v), p.mu, p.b, entropy::kAlphabetMin,
                            entropy::kAlphabetMax, &dp_dd, &dp_db);
    double dmu = (entropy::LaplacePmf(p.v, p.mu + h, p.b) -
                  entropy::LaplacePmf(p.v, p.mu - h, p.b)) /
                 (2.0 * h);
    double db = (entropy::LaplacePmf(p.v, p.mu, p.b + h) -
                 entropy::LaplacePmf(p.v, p.mu, p.b - h)) /
                (2.0 * h);
    REQUIRE(-dp_dd == Catch::Approx(dmu).epsilon(1e-5).margin(1e-9));
    REQUIRE(dp_db == Catch::Approx(db).epsilon(1e-5).margin(1e-9));
  }
}

TEST_CASE("parameter grid round trips within its step size", "[entropy]") {
  using entropy::ParamGrid;
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> mus(-100.0, 100.0);
  for (int i = 0; i < 200; ++i) {
    double mu = mus(rng);
    int32_t idx = ParamGrid::MuIndex(mu);
    REQUIRE(std::fabs(ParamGrid::MuFromIndex(idx) - mu) <=
            0.5 / double(ParamGrid::kMuScale) + 1e-12);
  }
  // Exact grid points map to themselves.
  for (int32_t idx : {-640, -1, 0, 1, 37, 3200}) {
    REQUIRE(ParamGrid::MuIndex(ParamGrid::MuFromIndex(idx)) == idx);
  }

  double step = ParamGrid::SigmaLogStep();
  std::uniform_real_distribution<double> sigmas(
      std::log(ParamGrid::kSigmaMin), std::log(ParamGrid::kSigmaMax));
  for (int i = 0; i < 200; ++i) {
    double sigma = std::exp(sigmas(rng));
    int idx = ParamGrid::SigmaIndex(sigma);
    double snapped = ParamGrid::SigmaFromIndex(idx);
    REQUIRE(std::fabs(std::log(snapped) - std::log(sigma)) <= step + 1e-12);
  }

  REQUIRE(ParamGrid::SigmaIndex(0.0) == 0);
  REQUIRE(ParamGrid::SigmaIndex(1e9) == ParamGrid::kSigmaLevels - 1);
  REQUIRE(ParamGrid::SigmaFromIndex(0) ==
          Catch::Approx(ParamGrid::kSigmaMin).epsilon(1e-12));
  REQUIRE(ParamGrid::SigmaFromIndex(ParamGrid::kSigmaLevels - 1) ==
          Catch::Approx(ParamGrid::kSigmaMax).epsilon(1e-12));
  REQUIRE_THROWS_AS(ParamGrid::SigmaFromIndex(-1), pwavec::Error);
  REQUIRE_THROWS_AS(ParamGrid::SigmaFromIndex(ParamGrid::kSigmaLevels),
                    pwavec::Error);

  // Mu snapping stays inside the alphabet even for hopeless inputs.
  REQUIRE(ParamGrid::MuFromIndex(ParamGrid::MuIndex(1e9)) <=
          double(entropy::kAlphabetMax));
  REQUIRE(ParamGrid::MuFromIndex(ParamGrid::MuIndex(-1e9)) >=
          double(entropy::kAlphabetMin));
}

TEST_CASE("quantized cdf tables are exact partitions", "[entropy]") {
  struct Case {
    double mu, sigma;
  };
  for (const Case& c : {Case{0.0, 0.01}, Case{0.0, 1.0}, Case{17.3, 5.0},
                        Case{-200.0, 64.0}, Case{4000.0, 256.0}}) {
    entropy::QuantizedCdf cdf = entropy::BuildCdf(
        c.mu, c.sigma, entropy::kAlphabetMin, entropy::kAlphabetMax);
    int n = cdf.num_symbols();
    REQUIRE(n == entropy::kAlphabetMax - entropy::kAlphabetMin + 1);
    REQUIRE(cdf.cum.front() == 0u);
    REQUIRE(cdf.cum.back() == entropy::kCdfTotal);
    for (int v = entropy::kAlphabetMin; v <= entropy::kAlphabetMax; ++v) {
      REQUIRE(cdf.Freq(v) >= 1u);
      REQUIRE(cdf.Start(v) + cdf.Freq(v) ==
              (v == entropy::kAlphabetMax ? entropy::kCdfTotal
                                          : cdf.Start(v + 1)));
    }
    // The mode carries the largest frequency.
    int mode = int(std::lround(c.mu));
    uint32_t peak = 0;
    for (int v = std::max(entropy::kAlphabetMin, mode - 50);
         v <= std::min(entropy::kAlphabetMax, mode + 50); ++v)
      peak = std::max(peak, cdf.Freq(v));
    REQUIRE(cdf.Freq(mode) == peak);
  }
}

TEST_CASE("cdf lookup inverts the partition", "[entropy]") {
  entropy::QuantizedCdf cdf = entropy::BuildCdf(3.0, 2.5, -64, 63);
  for (int v = -64; v <= 63; ++v) {
    REQUIRE(cdf.Find(cdf.Start(v)) == v);
    REQUIRE(cdf.Find(cdf.Start(v) + cdf.Freq(v) - 1) == v);
    double bits = cdf.IdealBits(v);
    double want = -std::log2(double(cdf.Freq(v)) / double(entropy::kCdfTotal));
    REQUIRE(bits == Catch::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("cdf cache returns identical tables", "[entropy]") {
  entropy::CdfCache cache;
  const entropy::QuantizedCdf& a = cache.Get(32, 20);
  entropy::QuantizedCdf direct = entropy::BuildCdf(
      entropy::ParamGrid::MuFromIndex(32),
      entropy::ParamGrid::SigmaFromIndex(20), entropy::kAlphabetMin,
      entropy::kAlphabetMax);
  REQUIRE(a.cum == direct.cum);
  const entropy::QuantizedCdf& again = cache.Get(32, 20);
  REQUIRE(&a == &again);
}

TEST_CASE("range coder round trips random symbols", "[entropy]") {
  std::mt19937_64 rng(42);
  entropy::CdfCache cache;
  const int kCount = 20000;

  std::vector<int64_t> symbols(kCount);
  std::vector<std::pair<int32_t, int>> params(kCount);
  std::uniform_int_distribution<int32_t> mu_idx(-2048, 2048);
  std::uniform_int_distribution<int> sg_idx(0, 63);
  rc::RangeEncoder enc;
  for (int i = 0; i < kCount; ++i) {
    params[size_t(i)] = {mu_idx(rng), sg_idx(rng)};
    const entropy::QuantizedCdf& cdf =
        cache.Get(params[size_t(i)].first, params[size_t(i)].second);
    // Sample from the model itself so typical and rare symbols both occur.
    std::uniform_int_distribution<uint32_t> f(0, entropy::kCdfTotal - 1);
    symbols[size_t(i)] = cdf.Find(f(rng));
    enc.EncodeSymbol(cdf, symbols[size_t(i)]);
  }
  std::vector<uint8_t> payload = enc.Finish();

  rc::RangeDecoder dec(payload);
  for (int i = 0; i < kCount; ++i) {
    const entropy::QuantizedCdf& cdf =
        cache.Get(params[size_t(i)].first, params[size_t(i)].second);
    REQUIRE(dec.DecodeSymbol(cdf) == symbols[size_t(i)]);
  }
}

TEST_CASE("range coder output tracks the ideal rate", "[entropy]") {
  // 256 equiprobable symbols cost exactly one byte each in the limit.
  entropy::QuantizedCdf uniform;
  uniform.vmin = 0;
  uniform.cum.resize(257);
  for (int i = 0; i <= 256; ++i) uniform.cum[size_t(i)] = uint32_t(i) * 256u;

  std::mt19937_64 rng(43);
  std::uniform_int_distribution<int> sym(0, 255);
  const int kCount = 4096;
  rc::RangeEncoder enc;
  std::vector<int64_t> symbols(kCount);
  for (int i = 0; i < kCount; ++i) {
    symbols[size_t(i)] = sym(rng);
    enc.EncodeSymbol(uniform, symbols[size_t(i)]);
  }
  std::vector<uint8_t> payload = enc.Finish();
  REQUIRE(payload.size() >= size_t(kCount));
  REQUIRE(payload.size() <= size_t(kCount) + 6);

  rc::RangeDecoder dec(payload);
  for (int i = 0; i < kCount; ++i)
    REQUIRE(dec.DecodeSymbol(uniform) == symbols[size_t(i)]);

  // A heavily skewed source compresses far below one byte per symbol.
  entropy::QuantizedCdf skew;
  skew.vmin = 0;
  skew.cum = {0u, entropy::kCdfTotal - 1u, entropy::kCdfTotal};
  rc::RangeEncoder enc2;
  for (int i = 0; i < 1000; ++i) enc2.EncodeSymbol(skew, 0);
  REQUIRE(enc2.Finish().size() < 30u);
}

TEST_CASE("an empty stream is just the flush", "[entropy]") {
  rc::RangeEncoder enc;
  std::vector<uint8_t> payload = enc.Finish();
  REQUIRE(payload.size() == 5u);
}

TEST_CASE("symbol vector helpers round trip", "[entropy]") {
  entropy::CdfCache cache;
  auto provider = [&](size_t i) -> const entropy::QuantizedCdf& {
    return cache.Get(int32_t(i % 7) * 16, int(i % 13) + 8);
  };
  std::mt19937_64 rng(44);
  std::uniform_int_distribution<int> sym(-30, 30);
  std::vector<int64_t> symbols(500);
  for (auto& s : symbols) s = sym(rng);
  std::vector<uint8_t> payload = rc::EncodeSymbols(symbols, provider);
  std::vector<int64_t> back =
      rc::DecodeSymbols(payload, symbols.size(), provider);
  REQUIRE(back == symbols);
}

TEST_CASE("phases tile the plane in coding order", "[entropy]") {
  const int h = 16, w = 20;
  Tensor4 total(Shape4{1, 1, h, w});
  for (int p = 0; p < 4; ++p) {
    Tensor4 m = entropy::PhaseMask(p, h, w);
    double count = 0.0;
    for (int64_t i = 0; i < m.numel(); ++i) {
      REQUIRE((m[i] == 0.0 || m[i] == 1.0));
      total[i] += m[i];
      count += m[i];
    }
    REQUIRE(count == double(h * w) / 4.0);
  }
  for (int64_t i = 0; i < total.numel(); ++i) REQUIRE(total[i] == 1.0);

  for (int p = 0; p <= 4; ++p) {
    Tensor4 cm = entropy::CodedMask(p, h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        REQUIRE(cm.At(0, 0, y, x) ==
                (entropy::PhaseOf(y, x) < p ? 1.0 : 0.0));
  }
}

TEST_CASE("each step sees 0, 2, 6 and 8 coded neighbors", "[entropy]") {
  const int h = 12, w = 12;
  const int want[4] = {0, 2, 6, 8};
  for (int p = 0; p < 4; ++p) {
    Tensor4 coded = entropy::CodedMask(p, h, w);
    for (int y = 1; y + 1 < h; ++y) {
      for (int x = 1; x + 1 < w; ++x) {
        if (entropy::PhaseOf(y, x) != p) continue;
        int n = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            if ((dy != 0 || dx != 0) && coded.At(0, 0, y + dy, x + dx) == 1.0)
              ++n;
        REQUIRE(n == want[p]);
      }
    }
  }
}

TEST_CASE("four-step parameters ignore positions not yet coded", "[entropy]") {
  nn::ParamStore ps;
  entropy::FourStepFusionNet net;
  net.Init(ps, "fusion", 6, 4, 7);
  PerturbParams(ps, 45);

  const int h = 8, w = 8;
  std::mt19937_64 rng(46);
  Tensor4 sym = RandomSymbols(h, w, 20, rng);
  Tensor4 lctx = Tensor4::RandomUniform(Shape4{1, 4, h, w}, -1.0, 1.0, rng);

  std::uniform_int_distribution<int> coords(0, h * w - 1);
  std::uniform_real_distribution<double> bump(0.5, 25.0);
  for (int phase = 0; phase < 4; ++phase) {
    Tensor4 coded = entropy::CodedMask(phase, h, w);
    Tensor4 visible(sym.shape());
    for (int64_t i = 0; i < sym.numel(); ++i) visible[i] = sym[i] * coded[i];
    Tensor4 base =
        net.Step<nn::EvalBackend>(phase, visible, coded, lctx);

    for (int trial = 0; trial < 50; ++trial) {
      Tensor4 mutated = sym;
      int pos = coords(rng);
      int y = pos / w, x = pos % w;
      if (entropy::PhaseOf(y, x) < phase) continue;
      mutated.At(0, 0, y, x) += bump(rng);
      Tensor4 vis2(mutated.shape());
      for (int64_t i = 0; i < mutated.numel(); ++i)
        vis2[i] = mutated[i] * coded[i];
      Tensor4 out = net.Step<nn::EvalBackend>(phase, vis2, coded, lctx);
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx)
          if (entropy::PhaseOf(yy, xx) == phase)
            for (int ch = 0; ch < 2; ++ch)
              REQUIRE(out.At(0, ch, yy, xx) == base.At(0, ch, yy, xx));
    }
  }
}

TEST_CASE("the visibility guard rejects leaked values", "[entropy]") {
  nn::ParamStore ps;
  entropy::FourStepFusionNet net;
  net.Init(ps, "fusion", 6, 4, 7);

  const int h = 4, w = 4;
  Tensor4 coded = entropy::CodedMask(1, h, w);
  Tensor4 visible(Shape4{1, 1, h, w});
  Tensor4 lctx(Shape4{1, 4, h, w});
  // (0, 1) has phase 1, which is not coded yet at step 1.
  visible.At(0, 0, 0, 1) = 3.0;
  REQUIRE_THROWS_AS(
      net.Step<nn::EvalBackend>(1, visible, coded, lctx), pwavec::Error);
}

TEST_CASE("split params exponentiates a clamped sigma channel", "[entropy]") {
  Tensor4 raw(Shape4{1, 2, 2, 2});
  raw.At(0, 0, 0, 0) = -3.25;
  raw.At(0, 1, 0, 0) = 0.0;
  raw.At(0, 1, 0, 1) = 2.0;
  raw.At(0, 1, 1, 0) = -50.0;
  raw.At(0, 1, 1, 1) = 50.0;
  auto [mu, sigma] = entropy::SplitParams<nn::EvalBackend>(raw);
  REQUIRE(mu.shape() == Shape4{1, 1, 2, 2});
  REQUIRE(mu[0] == -3.25);
  REQUIRE(sigma[0] == 1.0);
  REQUIRE(sigma[1] == std::exp(2.0));
  REQUIRE(sigma[2] == std::exp(-10.0));
  REQUIRE(sigma[3] == std::exp(10.0));

  REQUIRE(entropy::SigmaFromRaw(0.0) == 1.0);
  REQUIRE(entropy::SigmaFromRaw(-50.0) == std::exp(-10.0));
  REQUIRE(entropy::SigmaFromRaw(50.0) == std::exp(10.0));
}

TEST_CASE("raster masks keep only causal taps", "[entropy]") {
  Tensor4 a = entropy::RasterMaskA(2, 1);
  REQUIRE(a.shape() == Shape4{2, 1, 5, 5});
  int ones = 0;
  for (int ky = 0; ky < 5; ++ky)
    for (int kx = 0; kx < 5; ++kx) {
      double want = (ky < 2 || (ky == 2 && kx < 2)) ? 1.0 : 0.0;
      REQUIRE(a.At(0, 0, ky, kx) == want);
      ones += int(want);
    }
  REQUIRE(ones == 12);
  REQUIRE(a.At(1, 0, 2, 2) == 0.0);

  Tensor4 b = entropy::RasterMaskB(1, 1);
  REQUIRE(b.At(0, 0, 1, 1) == 1.0);
  REQUIRE(b.At(0, 0, 1, 2) == 0.0);
  REQUIRE(b.At(0, 0, 2, 0) == 0.0);
  REQUIRE(b.At(0, 0, 0, 2) == 1.0);
}

TEST_CASE("ar parameters ignore the current and later positions",
          "[entropy]") {
  nn::ParamStore ps;
  entropy::ARFusionNet net;
  net.Init(ps, "ar", 8, 4, 9);
  PerturbParams(ps, 47);

  const int h = 8, w = 8;
  std::mt19937_64 rng(48);
  Tensor4 sym = RandomSymbols(h, w, 20, rng);
  Tensor4 lctx = Tensor4::RandomUniform(Shape4{1, 4, h, w}, -1.0, 1.0, rng);
  Tensor4 base = net.Forward<nn::EvalBackend>(sym, &lctx);

  std::uniform_int_distribution<int> coords(0, h * w - 1);
  std::uniform_real_distribution<double> bump(0.5, 25.0);
  for (int trial = 0; trial < 100; ++trial) {
    int pos = coords(rng);
    int r = pos / w, c = pos % w;
    Tensor4 mutated = sym;
    mutated.At(0, 0, r, c) += bump(rng);
    Tensor4 out = net.Forward<nn::EvalBackend>(mutated, &lctx);
    // Everything at or before (r, c) in raster order must be untouched.
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (y < r || (y == r && x <= c))
          for (int ch = 0; ch < 2; ++ch)
            REQUIRE(out.At(0, ch, y, x) == base.At(0, ch, y, x));
  }
}

TEST_CASE("patch evaluation reproduces the full pass bit for bit",
          "[entropy]") {
  std::mt19937_64 rng(49);
  for (bool with_ctx : {true, false}) {
    nn::ParamStore ps;
    entropy::ARFusionNet net;
    net.Init(ps, "ar", 8, 4, 11);
    PerturbParams(ps, with_ctx ? 50 : 51);

    const int h = 10, w = 14;
    Tensor4 sym = RandomSymbols(h, w, 50, rng);
    Tensor4 lctx = Tensor4::RandomUniform(Shape4{1, 4, h, w}, -1.0, 1.0, rng);

    Tensor4 full = net.Forward<nn::EvalBackend>(sym, with_ctx ? &lctx : nullptr);
    Tensor4 ctx_feat;
    if (with_ctx) {
      ctx_feat = nn::Conv2dForward(lctx, net.ctx.w->value, net.ctx.b->value,
                                   net.ctx.spec);
    }

    entropy::ArPatchEvaluator eval(net);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double mu = 0.0, sigma_raw = 0.0;
        eval.At(sym, with_ctx ? &ctx_feat : nullptr, r, c, &mu, &sigma_raw);
        REQUIRE(mu == full.At(0, 0, r, c));
        REQUIRE(sigma_raw == full.At(0, 1, r, c));
      }
    }
  }
}

TEST_CASE("long context state advances and upsamples", "[entropy]") {
  nn::ParamStore ps;
  entropy::LongContextModule lctx;
  lctx.Init(ps, 4, 13);
  PerturbParams(ps, 52);

  auto state = lctx.InitialState<nn::EvalBackend>(4, 4);
  for (int64_t i = 0; i < state.first.numel(); ++i) {
    REQUIRE(state.first[i] == 0.0);
    REQUIRE(state.second[i] == 0.0);
  }

  std::mt19937_64 rng(53);
  Tensor4 band = RandomSymbols(4, 4, 10, rng);
  auto same = lctx.Advance<nn::EvalBackend>(band, state, 4, 4);
  REQUIRE(same.first.shape() == Shape4{1, 4, 4, 4});

  auto doubled = lctx.Advance<nn::EvalBackend>(band, state, 8, 8);
  REQUIRE(doubled.first.shape() == Shape4{1, 4, 8, 8});
  // Nearest-neighbor upsampling repeats each state value in a 2x2 block.
  for (int ch = 0; ch < 4; ++ch)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        REQUIRE(doubled.first.At(0, ch, y, x) ==
                same.first.At(0, ch, y / 2, x / 2));

  REQUIRE_THROWS_AS(lctx.Advance<nn::EvalBackend>(band, state, 12, 12),
                    pwavec::Error);
  REQUIRE_THROWS_AS(lctx.Advance<nn::EvalBackend>(band, state, 8, 4),
                    pwavec::Error);
}

TEST_CASE("rate node value and gradients are consistent", "[entropy]") {
  std::mt19937_64 rng(54);
  Shape4 s{1, 1, 3, 3};
  Tensor4 sym_v = RandomSymbols(3, 3, 6, rng);
  Tensor4 mu_v = Tensor4::RandomUniform(s, -2.0, 2.0, rng);
  Tensor4 sg_v = Tensor4::RandomUniform(s, 0.5, 3.0, rng);
  Tensor4 mask(s, 1.0);
  mask[4] = 0.0;

  nn::VarPtr sym = nn::Leaf(sym_v);
  nn::VarPtr mu = nn::Leaf(mu_v);
  nn::VarPtr sg = nn::Leaf(sg_v);
  nn::VarPtr bits = entropy::LaplaceRateBits(sym, mu, sg, mask);

  double want = 0.0;
  for (int64_t i = 0; i < s.numel(); ++i) {
    if (mask[i] == 0.0) continue;
    want += -std::log2(
        entropy::LaplacePmf(nn::RoundAwayI(sym_v[i]), mu_v[i], sg_v[i]));
  }
  REQUIRE(bits->value[0] == Catch::Approx(want).epsilon(1e-12));

  nn::Backward(bits);
  REQUIRE(sym->grad[4] == 0.0);
  REQUIRE(mu->grad[4] == 0.0);
  REQUIRE(sg->grad[4] == 0.0);

  // Finite differences on mu and sigma; the value is smooth in both.
  const double h = 1e-6;
  for (int64_t i : {int64_t(0), int64_t(2), int64_t(7)}) {
    auto rate_at = [&](const Tensor4& m, const Tensor4& g) {
      double acc = 0.0;
      for (int64_t k = 0; k < s.numel(); ++k) {
        if (mask[k] == 0.0) continue;
        acc += -std::log2(
            entropy::LaplacePmf(nn::RoundAwayI(sym_v[k]), m[k], g[k]));
      }
      return acc;
    };
    Tensor4 mp = mu_v, mm = mu_v;
    mp[i] += h;
    mm[i] -= h;
    double dmu = (rate_at(mp, sg_v) - rate_at(mm, sg_v)) / (2.0 * h);
    REQUIRE(mu->grad[i] == Catch::Approx(dmu).epsilon(1e-4).margin(1e-8));

    Tensor4 gp = sg_v, gm = sg_v;
    gp[i] += h;
    gm[i] -= h;
    double dsg = (rate_at(mu_v, gp) - rate_at(mu_v, gm)) / (2.0 * h);
    REQUIRE(sg->grad[i] == Catch::Approx(dsg).epsilon(1e-4).margin(1e-8));
  }
}
