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

#ifndef PWAVEC_ENTROPY_CONTEXT_HPP_
#define PWAVEC_ENTROPY_CONTEXT_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "pwavec/entropy/laplace.hpp"
#include "pwavec/nn/modules.hpp"

namespace pwavec {
namespace entropy {

constexpr double kSigmaRawClamp = 10.0;

struct EntropyParams {
  Tensor4 mu;
  Tensor4 sigma;
};

// ---------------------------------------------------------------------------
// Step masks. The four coding phases are the pixel parity classes
//   phase 0: (even row, even col)   phase 1: (even row, odd col)
//   phase 2: (odd row, even col)    phase 3: (odd row, odd col)
// which is the unique parity assignment giving interior positions exactly
// 0, 2, 6 and 8 previously-coded neighbors inside a 3x3 window.

inline int PhaseOf(int y, int x) { return (y % 2) * 2 + (x % 2); }

inline Tensor4 PhaseMask(int phase, int h, int w) {
  Require(phase >= 0 && phase < 4, "phase out of range");
  Tensor4 m(Shape4{1, 1, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (PhaseOf(y, x) == phase) m.At(0, 0, y, x) = 1.0;
    }
  }
  return m;
}

// Positions coded strictly before `phase`.
inline Tensor4 CodedMask(int phase, int h, int w) {
  Require(phase >= 0 && phase <= 4, "phase out of range");
  Tensor4 m(Shape4{1, 1, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (PhaseOf(y, x) < phase) m.At(0, 0, y, x) = 1.0;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// ConvLSTM long-term context carried across subbands in coding order.

struct LongContextModule {
  int channels = 4;
  nn::ConvLayer embed;
  nn::ConvLstmCell cell;

  void Init(nn::ParamStore& ps, int c, uint64_t seed) {
    channels = c;
    embed.Init(ps, "lstm/embed", nn::ConvSpec{1, c, 3, 1, 1, 1}, seed);
    cell.Init(ps, "lstm", c, seed);
  }

  template <typename B>
  std::pair<typename B::V, typename B::V> InitialState(int h, int w,
                                                       int n = 1) const {
    Shape4 s{n, channels, h, w};
    return {B::FromConst(Tensor4(s)), B::FromConst(Tensor4(s))};
  }

  // Consumes a fully decoded subband (quantized symbols) and produces the
  // state for the next subband, upsampling x2 on a level transition.
  template <typename B>
  std::pair<typename B::V, typename B::V> Advance(
      const typename B::V& subband,
      const std::pair<typename B::V, typename B::V>& state, int next_h,
      int next_w) const {
    const Tensor4& sv = B::Value(subband);
    const Tensor4& hv = B::Value(state.first);
    Require(sv.h() == hv.h() && sv.w() == hv.w(),
            "long context state does not match subband size");
    auto x = B::Conv(embed, subband);
    auto [hn, cn] = cell.template Step<B>(x, state.first, state.second);
    if (next_h == sv.h() && next_w == sv.w()) {
      return {hn, cn};
    }
    Require(next_h == 2 * sv.h() && next_w == 2 * sv.w(),
            "long context advance: next size must match or double");
    return {B::Up2(hn), B::Up2(cn)};
  }
};

// ---------------------------------------------------------------------------
// Four-step fusion network. Step 0 sees only the long context; steps 1-3 see
// the masked subband (visible values at coded positions, zeros elsewhere), a
// binary coded mask and the long context. Each step emits a 2-channel map
// (mu, raw sigma).

struct FourStepFusionNet {
  int width = 6;
  int cl = 4;
  nn::ConvLayer in0;
  nn::DepthConvBlock d0a, d0b;
  nn::ConvLayer head0;
  struct StepNet {
    nn::ConvLayer in;
    nn::ResidualBlock rb0, rb1;
    nn::ConvLayer head;
  };
  StepNet steps[3];

  void Init(nn::ParamStore& ps, const std::string& name, int c, int cl_in,
            uint64_t seed) {
    width = c;
    cl = cl_in;
    in0.Init(ps, name + "/s0/in", nn::ConvSpec{cl, c, 3, 1, 1, 1}, seed);
    d0a.Init(ps, name + "/s0/dcb0", c, seed);
    d0b.Init(ps, name + "/s0/dcb1", c, seed);
    head0.Init(ps, name + "/s0/head", nn::ConvSpec{c, 2, 3, 1, 1, 1}, seed);
    for (int k = 0; k < 3; ++k) {
      std::string sn = name + "/s" + std::to_string(k + 1);
      steps[k].in.Init(ps, sn + "/in", nn::ConvSpec{2 + cl, c, 3, 1, 1, 1},
                       seed);
      steps[k].rb0.Init(ps, sn + "/rb0", c, seed);
      steps[k].rb1.Init(ps, sn + "/rb1", c, seed);
      steps[k].head.Init(ps, sn + "/head", nn::ConvSpec{c, 2, 3, 1, 1, 1},
                         seed);
    }
  }

  // Raw 2-channel output for one step over the full subband.
  template <typename B>
  typename B::V Step(int phase, const typename B::V& visible,
                     const typename B::V& coded_mask,
                     const typename B::V& lctx) const {
    Require(phase >= 0 && phase < 4, "phase out of range");
    if constexpr (std::is_same_v<B, nn::EvalBackend>) {
      // Contract check: a value at a not-yet-coded position would let the
      // encoder peek ahead of the decoder.
      const Tensor4& v = B::Value(visible);
      const Tensor4& m = B::Value(coded_mask);
      for (int64_t i = 0; i < v.numel(); ++i) {
        Require(m[i] != 0.0 || v[i] == 0.0,
                "visibility leak: value present at uncoded position");
      }
    }
    if (phase == 0) {
      auto h = B::Act(B::Conv(in0, lctx));
      h = d0a.template Forward<B>(h);
      h = d0b.template Forward<B>(h);
      return B::Conv(head0, h);
    }
    const StepNet& s = steps[phase - 1];
    auto input = B::Concat({visible, coded_mask, lctx});
    auto h = B::Act(B::Conv(s.in, input));
    h = s.rb0.template Forward<B>(h);
    h = s.rb1.template Forward<B>(h);
    return B::Conv(s.head, h);
  }
};

// sigma = exp(clamp(raw, -10, 10)); zero-initialized heads give sigma = 1.
template <typename B>
std::pair<typename B::V, typename B::V> SplitParams(const typename B::V& raw) {
  auto mu = B::Slice(raw, 0, 1);
  auto sigma = B::Exp(B::Clamp(B::Slice(raw, 1, 2), -kSigmaRawClamp,
                               kSigmaRawClamp));
  return {mu, sigma};
}

// ---------------------------------------------------------------------------
// Autoregressive fusion network: one raster-causal masked 5x5 convolution,
// an additive 3x3 long-context branch, two residual blocks whose 3x3
// convolutions are causally masked, and a 1x1 head. The receptive field of
// an output position spans 6 rows above and 6 columns around it.

constexpr int kArReach = 6;

inline Tensor4 RasterMaskA(int out_c, int in_c) {
  Tensor4 m(Shape4{out_c, in_c, 5, 5});
  for (int oc = 0; oc < out_c; ++oc) {
    for (int ic = 0; ic < in_c; ++ic) {
      for (int ky = 0; ky < 5; ++ky) {
        for (int kx = 0; kx < 5; ++kx) {
          bool causal = ky < 2 || (ky == 2 && kx < 2);
          m.At(oc, ic, ky, kx) = causal ? 1.0 : 0.0;
        }
      }
    }
  }
  return m;
}

inline Tensor4 RasterMaskB(int out_c, int in_c) {
  Tensor4 m(Shape4{out_c, in_c, 3, 3});
  for (int oc = 0; oc < out_c; ++oc) {
    for (int ic = 0; ic < in_c; ++ic) {
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          bool causal = ky < 1 || (ky == 1 && kx <= 1);
          m.At(oc, ic, ky, kx) = causal ? 1.0 : 0.0;
        }
      }
    }
  }
  return m;
}

struct ARFusionNet {
  int width = 10;
  int cl = 4;
  nn::ConvLayer l1, ctx, head;
  nn::ConvLayer rb0c1, rb0c2, rb1c1, rb1c2;
  Tensor4 mask_a, mask_b;

  void Init(nn::ParamStore& ps, const std::string& name, int c, int cl_in,
            uint64_t seed) {
    width = c;
    cl = cl_in;
    l1.Init(ps, name + "/l1", nn::ConvSpec{1, c, 5, 1, 2, 1}, seed);
    ctx.Init(ps, name + "/ctx", nn::ConvSpec{cl, c, 3, 1, 1, 1}, seed);
    rb0c1.Init(ps, name + "/rb0/c1", nn::ConvSpec{c, c, 3, 1, 1, 1}, seed);
    rb0c2.Init(ps, name + "/rb0/c2", nn::ConvSpec{c, c, 3, 1, 1, 1}, seed);
    rb1c1.Init(ps, name + "/rb1/c1", nn::ConvSpec{c, c, 3, 1, 1, 1}, seed);
    rb1c2.Init(ps, name + "/rb1/c2", nn::ConvSpec{c, c, 3, 1, 1, 1}, seed);
    head.Init(ps, name + "/head", nn::ConvSpec{c, 2, 1, 1, 0, 1}, seed);
    mask_a = RasterMaskA(c, 1);
    mask_b = RasterMaskB(c, c);
  }

  // Full-pass parameter maps; every output position depends only on raster-
  // preceding symbol positions. `lctx` may be null (LL subband).
  template <typename B>
  typename B::V Forward(const typename B::V& sym,
                        const typename B::V* lctx) const {
    auto f = B::ConvMaskedW(l1, sym, mask_a);
    if (lctx != nullptr) f = B::Add(f, B::Conv(ctx, *lctx));
    f = B::Act(f);
    auto t = B::Act(B::ConvMaskedW(rb0c1, f, mask_b));
    f = B::Add(f, B::ConvMaskedW(rb0c2, t, mask_b));
    t = B::Act(B::ConvMaskedW(rb1c1, f, mask_b));
    f = B::Add(f, B::ConvMaskedW(rb1c2, t, mask_b));
    return B::Conv(head, f);
  }
};

// Sequential decoder-side evaluator: one network invocation per position,
// evaluated densely on the causal patch covering that position's receptive
// field. No features are reused across invocations; the result at the target
// position is bit-identical to the full-pass maps above because the same
// convolution kernel runs over identical inputs in identical order.
class ArPatchEvaluator {
 public:
  explicit ArPatchEvaluator(const ARFusionNet& net) : net_(net) {
    mw1_ = MaskedCopy(net.l1.w->value, net.mask_a);
    mr_[0] = MaskedCopy(net.rb0c1.w->value, net.mask_b);
    mr_[1] = MaskedCopy(net.rb0c2.w->value, net.mask_b);
    mr_[2] = MaskedCopy(net.rb1c1.w->value, net.mask_b);
    mr_[3] = MaskedCopy(net.rb1c2.w->value, net.mask_b);
  }

  // (mu, raw sigma) at (r, c). `ctx_feat` is the precomputed long-context
  // branch (position-independent), or null for the LL subband.
  void At(const Tensor4& sym, const Tensor4* ctx_feat, int r, int c,
          double* mu, double* sigma_raw) {
    int h = sym.h(), w = sym.w();
    int r0 = std::max(0, r - kArReach);
    int c0 = std::max(0, c - kArReach);
    int c1 = std::min(w - 1, c + kArReach);
    int ph = r - r0 + 1, pw = c1 - c0 + 1;
    if (patch_.shape() != Shape4{1, 1, ph, pw}) {
      patch_ = Tensor4(Shape4{1, 1, ph, pw});
    }
    for (int y = 0; y < ph; ++y) {
      for (int x = 0; x < pw; ++x) {
        patch_.At(0, 0, y, x) = sym.At(0, 0, r0 + y, c0 + x);
      }
    }
    nn::ConvSpec s1 = net_.l1.spec;
    nn::Conv2dForward(patch_, mw1_, net_.l1.b->value, s1, &f_);
    if (ctx_feat != nullptr) {
      for (int ch = 0; ch < f_.c(); ++ch) {
        for (int y = 0; y < ph; ++y) {
          for (int x = 0; x < pw; ++x) {
            f_.At(0, ch, y, x) =
                f_.At(0, ch, y, x) + ctx_feat->At(0, ch, r0 + y, c0 + x);
          }
        }
      }
    }
    for (int64_t i = 0; i < f_.numel(); ++i) f_[i] = nn::LRelu(f_[i]);
    RunResidual(net_.rb0c1, net_.rb0c2, mr_[0], mr_[1]);
    RunResidual(net_.rb1c1, net_.rb1c2, mr_[2], mr_[3]);
    // 1x1 head, evaluated only at the target position.
    int ly = r - r0, lx = c - c0;
    const Tensor4& hw = net_.head.w->value;
    double m = net_.head.b->value[0];
    double sr = net_.head.b->value[1];
    for (int ic = 0; ic < f_.c(); ++ic) {
      m += hw.At(0, ic, 0, 0) * f_.At(0, ic, ly, lx);
      sr += hw.At(1, ic, 0, 0) * f_.At(0, ic, ly, lx);
    }
    *mu = m;
    *sigma_raw = sr;
  }

 private:
  static Tensor4 MaskedCopy(const Tensor4& w, const Tensor4& mask) {
    Tensor4 out(w.shape());
    for (int64_t i = 0; i < w.numel(); ++i) out[i] = w[i] * mask[i];
    return out;
  }

  void RunResidual(const nn::ConvLayer& c1, const nn::ConvLayer& c2,
                   const Tensor4& mw1, const Tensor4& mw2) {
    nn::Conv2dForward(f_, mw1, c1.b->value, c1.spec, &t_);
    for (int64_t i = 0; i < t_.numel(); ++i) t_[i] = nn::LRelu(t_[i]);
    nn::Conv2dForward(t_, mw2, c2.b->value, c2.spec, &t2_);
    for (int64_t i = 0; i < f_.numel(); ++i) f_[i] = f_[i] + t2_[i];
  }

  const ARFusionNet& net_;
  Tensor4 mw1_;
  Tensor4 mr_[4];
  Tensor4 patch_, f_, t_, t2_;
};

inline double SigmaFromRaw(double raw) {
  return std::exp(std::min(kSigmaRawClamp, std::max(-kSigmaRawClamp, raw)));
}

}  // namespace entropy
}  // namespace pwavec

#endif  // PWAVEC_ENTROPY_CONTEXT_HPP_
