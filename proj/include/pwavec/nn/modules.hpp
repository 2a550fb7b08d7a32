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

#ifndef PWAVEC_NN_MODULES_HPP_
#define PWAVEC_NN_MODULES_HPP_

#include <map>
#include <string>
#include <vector>

#include "pwavec/nn/autodiff.hpp"

namespace pwavec {
namespace nn {

// All trainable tensors live here, keyed by a hierarchical name. Values are
// autodiff leaves; the inference path reads their tensors directly.
class ParamStore {
 public:
  enum class Init { kFanIn, kZero };

  VarPtr Create(const std::string& name, Shape4 shape, Init init,
                int fan_in, uint64_t seed) {
    Require(params_.find(name) == params_.end(),
            "duplicate parameter: " + name);
    Tensor4 t(shape);
    if (init == Init::kFanIn) {
      // Per-tensor RNG derived from the name keeps initialization stable
      // under registration-order changes.
      std::mt19937_64 rng(seed ^ Fnv1a64(
          reinterpret_cast<const uint8_t*>(name.data()), name.size()));
      double bound = 1.0 / std::sqrt(double(std::max(1, fan_in)));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (int64_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
    }
    VarPtr v = Leaf(std::move(t));
    params_.emplace(name, v);
    return v;
  }

  VarPtr Get(const std::string& name) const {
    auto it = params_.find(name);
    Require(it != params_.end(), "unknown parameter: " + name);
    return it->second;
  }

  bool Has(const std::string& name) const {
    return params_.find(name) != params_.end();
  }

  const std::map<std::string, VarPtr>& All() const { return params_; }

  void ZeroGrads() {
    for (auto& [name, v] : params_) v->ZeroGrad();
  }

  int64_t TotalParams() const {
    int64_t n = 0;
    for (const auto& [name, v] : params_) n += v->value.numel();
    return n;
  }

 private:
  std::map<std::string, VarPtr> params_;
};

// ---------------------------------------------------------------------------
// Backends: the same module code runs either on plain tensors (coding) or on
// tape nodes (training). Values on both paths are bit-identical because the
// tape ops call the same kernels.

struct ConvLayer {
  ConvSpec spec;
  VarPtr w, b;

  void Init(ParamStore& ps, const std::string& name, const ConvSpec& s,
            uint64_t seed, bool zero_init = false) {
    spec = s;
    int fan_in = (s.in_c / s.groups) * s.k * s.k;
    w = ps.Create(name + "/w", Shape4{s.out_c, s.in_c / s.groups, s.k, s.k},
                  zero_init ? ParamStore::Init::kZero : ParamStore::Init::kFanIn,
                  fan_in, seed);
    b = ps.Create(name + "/b", Shape4{1, s.out_c, 1, 1},
                  ParamStore::Init::kZero, fan_in, seed);
  }
};

struct EvalBackend {
  using V = Tensor4;
  static V Conv(const ConvLayer& l, const V& x) {
    return Conv2dForward(x, l.w->value, l.b->value, l.spec);
  }
  static V ConvMaskedW(const ConvLayer& l, const V& x, const Tensor4& mask) {
    Tensor4 mw(l.w->value.shape());
    for (int64_t i = 0; i < mw.numel(); ++i) mw[i] = l.w->value[i] * mask[i];
    return Conv2dForward(x, mw, l.b->value, l.spec);
  }
  static V Act(const V& x) {
    return PointwiseMap(x, [](double v) { return LRelu(v); });
  }
  static V Sig(const V& x) {
    return PointwiseMap(x, [](double v) { return Sigmoid(v); });
  }
  static V Tanh(const V& x) {
    return PointwiseMap(x, [](double v) { return std::tanh(v); });
  }
  static V Add(const V& a, const V& b) {
    Require(a.shape() == b.shape(), "add shape mismatch");
    V out(a.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a[i] + b[i];
    return out;
  }
  static V Sub(const V& a, const V& b) {
    Require(a.shape() == b.shape(), "sub shape mismatch");
    V out(a.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a[i] - b[i];
    return out;
  }
  static V Mul(const V& a, const V& b) {
    Require(a.shape() == b.shape(), "mul shape mismatch");
    V out(a.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a[i] * b[i];
    return out;
  }
  static V Scale(const V& x, double c) {
    return PointwiseMap(x, [c](double v) { return c * v; });
  }
  static V Concat(const std::vector<V>& parts) {
    std::vector<const Tensor4*> ptrs;
    for (const V& p : parts) ptrs.push_back(&p);
    return ConcatChannels(ptrs);
  }
  static V Slice(const V& x, int c0, int c1) {
    return SliceChannels(x, c0, c1);
  }
  static V Up2(const V& x) { return UpsampleNearest2(x); }
  static V Shift(const V& x, Axis axis, int delta) {
    return ShiftSym(x, axis, delta);
  }
  static V Even(const V& x, Axis axis) {
    V e, o;
    SplitEvenOdd(x, axis, &e, &o);
    return e;
  }
  static V Odd(const V& x, Axis axis) {
    V e, o;
    SplitEvenOdd(x, axis, &e, &o);
    return o;
  }
  static V Merge(const V& e, const V& o, Axis axis) {
    return MergeEvenOdd(e, o, axis);
  }
  static V Round(const V& x) {
    return PointwiseMap(x, [](double v) { return RoundAway(v); });
  }
  static V Exp(const V& x) {
    return PointwiseMap(x, [](double v) { return std::exp(v); });
  }
  static V Clamp(const V& x, double lo, double hi) {
    return PointwiseMap(
        x, [lo, hi](double v) { return std::min(hi, std::max(lo, v)); });
  }
  static V FromConst(Tensor4 t) { return t; }
  static const Tensor4& Value(const V& x) { return x; }
};

struct TapeBackend {
  using V = VarPtr;
  static V Conv(const ConvLayer& l, const V& x) {
    return nn::Conv(x, l.w, l.b, l.spec);
  }
  static V ConvMaskedW(const ConvLayer& l, const V& x, const Tensor4& mask) {
    VarPtr mw = MulConstTensor(l.w, mask);
    return nn::Conv(x, mw, l.b, l.spec);
  }
  static V Act(const V& x) { return LeakyRelu(x); }
  static V Sig(const V& x) { return SigmoidV(x); }
  static V Tanh(const V& x) { return TanhV(x); }
  static V Add(const V& a, const V& b) { return nn::Add(a, b); }
  static V Sub(const V& a, const V& b) { return nn::Sub(a, b); }
  static V Mul(const V& a, const V& b) { return nn::Mul(a, b); }
  static V Scale(const V& x, double c) { return nn::Scale(x, c); }
  static V Concat(const std::vector<V>& parts) { return ConcatC(parts); }
  static V Slice(const V& x, int c0, int c1) { return SliceC(x, c0, c1); }
  static V Up2(const V& x) { return Upsample2(x); }
  static V Shift(const V& x, Axis axis, int delta) {
    return ShiftSymV(x, axis, delta);
  }
  static V Even(const V& x, Axis axis) { return EvenPart(x, axis); }
  static V Odd(const V& x, Axis axis) { return OddPart(x, axis); }
  static V Merge(const V& e, const V& o, Axis axis) {
    return MergeEO(e, o, axis);
  }
  static V Round(const V& x) { return SteRound(x); }
  static V Exp(const V& x) { return ExpV(x); }
  static V Clamp(const V& x, double lo, double hi) {
    return ClampConst(x, lo, hi);
  }
  static V FromConst(Tensor4 t) { return Constant(std::move(t)); }
  static const Tensor4& Value(const V& x) { return x->value; }
};

// ---------------------------------------------------------------------------
// Building blocks.

// Two 3x3 convolutions with a skip connection.
struct ResidualBlock {
  ConvLayer c1, c2;

  void Init(ParamStore& ps, const std::string& name, int c, uint64_t seed) {
    c1.Init(ps, name + "/c1", ConvSpec{c, c, 3, 1, 1, 1}, seed);
    c2.Init(ps, name + "/c2", ConvSpec{c, c, 3, 1, 1, 1}, seed);
  }

  template <typename B>
  typename B::V Forward(const typename B::V& x) const {
    return B::Add(x, B::Conv(c2, B::Act(B::Conv(c1, x))));
  }
};

// Residual block pair whose first part runs a depthwise 3x3 convolution
// (groups = channels) between two pointwise convolutions, and whose second
// part is purely pointwise.
struct DepthConvBlock {
  ConvLayer p1a, p1dw, p1b, p2a, p2b;

  void Init(ParamStore& ps, const std::string& name, int c, uint64_t seed) {
    p1a.Init(ps, name + "/p1a", ConvSpec{c, c, 1, 1, 0, 1}, seed);
    p1dw.Init(ps, name + "/p1dw", ConvSpec{c, c, 3, 1, 1, c}, seed);
    p1b.Init(ps, name + "/p1b", ConvSpec{c, c, 1, 1, 0, 1}, seed);
    p2a.Init(ps, name + "/p2a", ConvSpec{c, c, 1, 1, 0, 1}, seed);
    p2b.Init(ps, name + "/p2b", ConvSpec{c, c, 1, 1, 0, 1}, seed);
  }

  template <typename B>
  typename B::V Forward(const typename B::V& x) const {
    auto t = B::Conv(p1b, B::Act(B::Conv(p1dw, B::Act(B::Conv(p1a, x)))));
    auto y = B::Add(x, t);
    auto u = B::Conv(p2b, B::Act(B::Conv(p2a, y)));
    return B::Add(y, u);
  }
};

// 1 -> width -> 1 residual branch: input conv, two residual blocks, output
// conv. The output conv is zero-initialized so the branch starts as the zero
// function; callers add the result to a base prediction.
struct ResidualCnn {
  ConvLayer in, out;
  ResidualBlock rb0, rb1;

  void Init(ParamStore& ps, const std::string& name, int width,
            uint64_t seed) {
    in.Init(ps, name + "/in", ConvSpec{1, width, 3, 1, 1, 1}, seed);
    rb0.Init(ps, name + "/rb0", width, seed);
    rb1.Init(ps, name + "/rb1", width, seed);
    out.Init(ps, name + "/out", ConvSpec{width, 1, 3, 1, 1, 1}, seed,
             /*zero_init=*/true);
  }

  template <typename B>
  typename B::V Forward(const typename B::V& x) const {
    auto h = B::Act(B::Conv(in, x));
    h = rb0.Forward<B>(h);
    h = rb1.Forward<B>(h);
    return B::Conv(out, h);
  }
};

// Convolutional LSTM cell: gates come from one 3x3 convolution over the
// concatenated [input, hidden]; gate channel order is input, forget,
// candidate, output.
struct ConvLstmCell {
  int channels = 0;
  ConvLayer gates;

  void Init(ParamStore& ps, const std::string& name, int c, uint64_t seed) {
    channels = c;
    gates.Init(ps, name + "/gates", ConvSpec{2 * c, 4 * c, 3, 1, 1, 1}, seed);
  }

  template <typename B>
  std::pair<typename B::V, typename B::V> Step(const typename B::V& x,
                                               const typename B::V& h,
                                               const typename B::V& c) const {
    auto g = B::Conv(gates, B::Concat({x, h}));
    auto i = B::Sig(B::Slice(g, 0, channels));
    auto f = B::Sig(B::Slice(g, channels, 2 * channels));
    auto cand = B::Tanh(B::Slice(g, 2 * channels, 3 * channels));
    auto o = B::Sig(B::Slice(g, 3 * channels, 4 * channels));
    auto cn = B::Add(B::Mul(f, c), B::Mul(i, cand));
    auto hn = B::Mul(o, B::Tanh(cn));
    return {hn, cn};
  }
};

}  // namespace nn
}  // namespace pwavec

#endif  // PWAVEC_NN_MODULES_HPP_
