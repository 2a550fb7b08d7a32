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

#ifndef PWAVEC_WAVELET_LIFTING_HPP_
#define PWAVEC_WAVELET_LIFTING_HPP_

#include <array>
#include <string>
#include <vector>

#include "pwavec/nn/modules.hpp"

namespace pwavec {
namespace wavelet {

// Trainable lifting transform. Each 1D lifting step is
//   HP[m] = x_odd[m]  - P(x_even)[m]
//   LP[m] = x_even[m] + U(HP)[m]
// where P and U are a classical base filter plus a residual CNN. In integer
// mode the complete P and U outputs are rounded (ties away from zero), which
// makes the step exactly invertible on integer inputs:
//   x_even = LP - U(HP);  x_odd = HP + P(x_even).

enum class Base : uint8_t { kHaar = 0, kCdf53 = 1 };

constexpr int kLevels = 4;
constexpr int kNumBands = 13;

// Coding order, coarse to fine: LL4 HL4 LH4 HH4 HL3 LH3 HH3 ... HH1.
inline int BandLevel(int band) {
  Require(band >= 0 && band < kNumBands, "band index out of range");
  return band == 0 ? 4 : 4 - (band - 1) / 3;
}

inline const char* BandName(int band) {
  static const char* names[kNumBands] = {"LL4", "HL4", "LH4", "HH4", "HL3",
                                         "LH3", "HH3", "HL2", "LH2", "HH2",
                                         "HL1", "LH1", "HH1"};
  Require(band >= 0 && band < kNumBands, "band index out of range");
  return names[band];
}

inline Shape4 BandShape(int h, int w, int band) {
  int level = BandLevel(band);
  return Shape4{1, 1, h >> level, w >> level};
}

struct LiftingFilterPair {
  nn::ResidualCnn predict;
  nn::ResidualCnn update;

  void Init(nn::ParamStore& ps, const std::string& name, int width,
            uint64_t seed) {
    predict.Init(ps, name + "/p", width, seed);
    update.Init(ps, name + "/u", width, seed);
  }
};

class WaveletTransform {
 public:
  void Init(nn::ParamStore& ps, Base base, int width, uint64_t seed) {
    base_ = base;
    for (int l = 0; l < kLevels; ++l) {
      pairs_[l].Init(ps, "lift/l" + std::to_string(l), width, seed);
    }
  }

  Base base() const { return base_; }

  // One 1D lifting step along `axis`; x must have even extent there.
  template <typename B>
  std::pair<typename B::V, typename B::V> Lift(const typename B::V& x,
                                               nn::Axis axis, int level,
                                               bool integer) const {
    auto e = B::Even(x, axis);
    auto o = B::Odd(x, axis);
    auto pred = Predict<B>(e, axis, level, integer);
    auto hp = B::Sub(o, pred);
    auto upd = Update<B>(hp, axis, level, integer);
    auto lp = B::Add(e, upd);
    return {lp, hp};
  }

  template <typename B>
  typename B::V Unlift(const typename B::V& lp, const typename B::V& hp,
                       nn::Axis axis, int level, bool integer) const {
    auto upd = Update<B>(hp, axis, level, integer);
    auto e = B::Sub(lp, upd);
    auto pred = Predict<B>(e, axis, level, integer);
    auto o = B::Add(hp, pred);
    return B::Merge(e, o, axis);
  }

  // Full 4-level decomposition; returns the 13 subbands in coding order.
  // Row-wise lifting runs first, then column-wise on both halves.
  template <typename B>
  std::vector<typename B::V> Forward(const typename B::V& plane,
                                     bool integer) const {
    const Tensor4& v = B::Value(plane);
    Require(v.h() % 16 == 0 && v.w() % 16 == 0,
            "plane dimensions must be multiples of 16; pad at ingestion");
    std::vector<typename B::V> bands(kNumBands);
    typename B::V cur = plane;
    for (int l = 0; l < kLevels; ++l) {
      auto [lo, hi] = Lift<B>(cur, nn::Axis::kW, l, integer);
      auto [ll, lh] = Lift<B>(lo, nn::Axis::kH, l, integer);
      auto [hl, hh] = Lift<B>(hi, nn::Axis::kH, l, integer);
      int level = l + 1;
      int idx = level == 4 ? 1 : 4 + 3 * (3 - level);
      bands[idx] = hl;
      bands[idx + 1] = lh;
      bands[idx + 2] = hh;
      cur = ll;
    }
    bands[0] = cur;
    return bands;
  }

  template <typename B>
  typename B::V Inverse(const std::vector<typename B::V>& bands,
                        bool integer) const {
    Require(int(bands.size()) == kNumBands, "pyramid must have 13 subbands");
    typename B::V cur = bands[0];
    for (int l = kLevels - 1; l >= 0; --l) {
      int level = l + 1;
      int idx = level == 4 ? 1 : 4 + 3 * (3 - level);
      auto lo = Unlift<B>(cur, bands[idx + 1], nn::Axis::kH, l, integer);
      auto hi = Unlift<B>(bands[idx], bands[idx + 2], nn::Axis::kH, l,
                          integer);
      cur = Unlift<B>(lo, hi, nn::Axis::kW, l, integer);
    }
    return cur;
  }

 private:
  template <typename B>
  typename B::V Predict(const typename B::V& even, nn::Axis axis, int level,
                        bool integer) const {
    typename B::V base;
    if (base_ == Base::kHaar) {
      base = even;
    } else {
      base = B::Scale(B::Add(even, B::Shift(even, axis, +1)), 0.5);
    }
    auto out = B::Add(base, pairs_[level].predict.template Forward<B>(even));
    return integer ? B::Round(out) : out;
  }

  template <typename B>
  typename B::V Update(const typename B::V& hp, nn::Axis axis, int level,
                       bool integer) const {
    typename B::V base;
    if (base_ == Base::kHaar) {
      base = B::Scale(hp, 0.5);
    } else {
      base = B::Scale(B::Add(hp, B::Shift(hp, axis, -1)), 0.25);
    }
    auto out = B::Add(base, pairs_[level].update.template Forward<B>(hp));
    return integer ? B::Round(out) : out;
  }

  Base base_ = Base::kHaar;
  std::array<LiftingFilterPair, kLevels> pairs_;
};

}  // namespace wavelet
}  // namespace pwavec

#endif  // PWAVEC_WAVELET_LIFTING_HPP_
