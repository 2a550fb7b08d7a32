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

#ifndef PWAVEC_NN_KERNELS_HPP_
#define PWAVEC_NN_KERNELS_HPP_

#include <cmath>

#include "pwavec/tensor.hpp"

namespace pwavec {
namespace nn {

constexpr double kLeakySlope = 0.01;

struct ConvSpec {
  int in_c = 1;
  int out_c = 1;
  int k = 3;
  int stride = 1;
  int pad = 1;  // zero padding
  int groups = 1;
};

inline void CheckConv(const ConvSpec& s, const Shape4& x, const Shape4& w,
                      const Shape4& b) {
  Require(s.k % 2 == 1, "conv kernel size must be odd");
  Require(s.in_c % s.groups == 0 && s.out_c % s.groups == 0,
          "conv channels not divisible by groups");
  Require(x.c == s.in_c, "conv input channel mismatch");
  Require(w.n == s.out_c && w.c == s.in_c / s.groups && w.h == s.k &&
              w.w == s.k,
          "conv weight shape mismatch");
  Require(b.numel() == s.out_c, "conv bias shape mismatch");
}

inline Shape4 ConvOutShape(const ConvSpec& s, const Shape4& x) {
  int oh = (x.h + 2 * s.pad - s.k) / s.stride + 1;
  int ow = (x.w + 2 * s.pad - s.k) / s.stride + 1;
  Require(oh >= 1 && ow >= 1, "conv output collapses to zero size");
  return Shape4{x.n, s.out_c, oh, ow};
}

// Convolutions below this many multiply-accumulates run on the calling
// thread; pool dispatch costs more than the loop for decoder patches and the
// deepest pyramid levels. The partition never affects results because every
// row writes a disjoint output slice.
constexpr int64_t kSerialConvWork = 1 << 18;

inline void ParallelRows(int64_t n, int64_t work,
                         const std::function<void(int64_t, int64_t)>& fn) {
  if (work < kSerialConvWork) {
    fn(0, n);
    return;
  }
  ParallelFor(n, fn);
}

// Grouped 2D convolution. The accumulation order (input channel, then kernel
// row, then kernel column) is part of the bit-exactness contract between the
// encoder's full-pass evaluation and the decoder's patchwise evaluation, so
// it must not be reordered.
inline void Conv2dForward(const Tensor4& x, const Tensor4& w, const Tensor4& b,
                          const ConvSpec& s, Tensor4* out) {
  CheckConv(s, x.shape(), w.shape(), b.shape());
  Shape4 os = ConvOutShape(s, x.shape());
  if (out->shape() != os) *out = Tensor4(os);
  int cpg_in = s.in_c / s.groups;
  int cpg_out = s.out_c / s.groups;
  const double* xd = x.data();
  const double* wd = w.data();
  double* od = out->data();
  int64_t rows = int64_t(os.n) * os.c * os.h;
  int64_t work = rows * os.w * cpg_in * s.k * s.k;
  ParallelRows(rows, work, [&](int64_t r0, int64_t r1) {
    for (int64_t r = r0; r < r1; ++r) {
      int oy = int(r % os.h);
      int oc = int((r / os.h) % os.c);
      int n = int(r / (int64_t(os.h) * os.c));
      int ic0 = (oc / cpg_out) * cpg_in;
      const double* wrow = wd + int64_t(oc) * cpg_in * s.k * s.k;
      double bias = b[oc];
      for (int ox = 0; ox < os.w; ++ox) {
        double acc = bias;
        int iy0 = oy * s.stride - s.pad;
        int ix0 = ox * s.stride - s.pad;
        for (int icg = 0; icg < cpg_in; ++icg) {
          const double* xplane =
              xd + (int64_t(n) * x.c() + ic0 + icg) * x.h() * x.w();
          const double* wk = wrow + int64_t(icg) * s.k * s.k;
          for (int ky = 0; ky < s.k; ++ky) {
            int iy = iy0 + ky;
            if (iy < 0 || iy >= x.h()) continue;
            const double* xr = xplane + int64_t(iy) * x.w();
            for (int kx = 0; kx < s.k; ++kx) {
              int ix = ix0 + kx;
              if (ix < 0 || ix >= x.w()) continue;
              acc += wk[ky * s.k + kx] * xr[ix];
            }
          }
        }
        od[(r * os.w) + ox] = acc;
      }
    }
  });
}

inline Tensor4 Conv2dForward(const Tensor4& x, const Tensor4& w,
                             const Tensor4& b, const ConvSpec& s) {
  Tensor4 out;
  Conv2dForward(x, w, b, s, &out);
  return out;
}

// Gradients w.r.t. input (gather form, deterministic), weights and bias.
// Any of dx/dw/db may be null to skip that computation.
inline void Conv2dBackward(const Tensor4& x, const Tensor4& w,
                           const ConvSpec& s, const Tensor4& g, Tensor4* dx,
                           Tensor4* dw, Tensor4* db) {
  Shape4 os = ConvOutShape(s, x.shape());
  Require(g.shape() == os, "conv backward: gradient shape mismatch");
  int cpg_in = s.in_c / s.groups;
  int cpg_out = s.out_c / s.groups;
  if (dx != nullptr) {
    if (dx->shape() != x.shape()) *dx = Tensor4(x.shape());
    int64_t rows = int64_t(x.n()) * x.c() * x.h();
    int64_t work = rows * x.w() * cpg_out * s.k * s.k;
    ParallelRows(rows, work, [&](int64_t r0, int64_t r1) {
      for (int64_t r = r0; r < r1; ++r) {
        int iy = int(r % x.h());
        int ic = int((r / x.h()) % x.c());
        int n = int(r / (int64_t(x.h()) * x.c()));
        int gidx = ic / cpg_in;
        int icg = ic % cpg_in;
        for (int ix = 0; ix < x.w(); ++ix) {
          double acc = 0.0;
          for (int ky = 0; ky < s.k; ++ky) {
            int oy_num = iy + s.pad - ky;
            if (oy_num % s.stride != 0) continue;
            int oy = oy_num / s.stride;
            if (oy < 0 || oy >= os.h) continue;
            for (int kx = 0; kx < s.k; ++kx) {
              int ox_num = ix + s.pad - kx;
              if (ox_num % s.stride != 0) continue;
              int ox = ox_num / s.stride;
              if (ox < 0 || ox >= os.w) continue;
              for (int ocg = 0; ocg < cpg_out; ++ocg) {
                int oc = gidx * cpg_out + ocg;
                acc += w.At(oc, icg, ky, kx) * g.At(n, oc, oy, ox);
              }
            }
          }
          (*dx)[(r * x.w()) + ix] = acc;
        }
      }
    });
  }
  if (dw != nullptr) {
    if (dw->shape() != w.shape()) *dw = Tensor4(w.shape());
    int64_t work = int64_t(s.out_c) * cpg_in * s.k * s.k * os.n * os.h * os.w;
    ParallelRows(s.out_c, work, [&](int64_t c0, int64_t c1) {
      for (int oc = int(c0); oc < int(c1); ++oc) {
        int ic0 = (oc / cpg_out) * cpg_in;
        for (int icg = 0; icg < cpg_in; ++icg) {
          for (int ky = 0; ky < s.k; ++ky) {
            for (int kx = 0; kx < s.k; ++kx) {
              double acc = 0.0;
              for (int n = 0; n < os.n; ++n) {
                for (int oy = 0; oy < os.h; ++oy) {
                  int iy = oy * s.stride - s.pad + ky;
                  if (iy < 0 || iy >= x.h()) continue;
                  for (int ox = 0; ox < os.w; ++ox) {
                    int ix = ox * s.stride - s.pad + kx;
                    if (ix < 0 || ix >= x.w()) continue;
                    acc += g.At(n, oc, oy, ox) * x.At(n, ic0 + icg, iy, ix);
                  }
                }
              }
              dw->At(oc, icg, ky, kx) = acc;
            }
          }
        }
      }
    });
  }
  if (db != nullptr) {
    if (db->shape() != Shape4{1, s.out_c, 1, 1}) {
      *db = Tensor4(Shape4{1, s.out_c, 1, 1});
    }
    for (int oc = 0; oc < s.out_c; ++oc) {
      double acc = 0.0;
      for (int n = 0; n < os.n; ++n) {
        for (int oy = 0; oy < os.h; ++oy) {
          for (int ox = 0; ox < os.w; ++ox) acc += g.At(n, oc, oy, ox);
        }
      }
      (*db)[oc] = acc;
    }
  }
}

// ---------------------------------------------------------------------------
// Pointwise maps.

inline double LRelu(double v) { return v > 0.0 ? v : kLeakySlope * v; }
inline double LReluGrad(double v) { return v > 0.0 ? 1.0 : kLeakySlope; }
inline double Sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Nearest-integer rounding with ties away from zero; shared by quantization,
// integer lifting and symbol clamping.
inline double RoundAway(double v) { return std::round(v); }

inline int64_t RoundAwayI(double v) {
  return static_cast<int64_t>(std::llround(v));
}

template <typename F>
inline Tensor4 PointwiseMap(const Tensor4& x, F f) {
  Tensor4 out(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) out[i] = f(x[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Structural ops used by the lifting transform and the long-context chain.

enum class Axis { kH, kW };

inline void SplitEvenOdd(const Tensor4& x, Axis axis, Tensor4* even,
                         Tensor4* odd) {
  int len = axis == Axis::kW ? x.w() : x.h();
  Require(len % 2 == 0, "even/odd split needs even extent");
  Shape4 hs = x.shape();
  (axis == Axis::kW ? hs.w : hs.h) = len / 2;
  *even = Tensor4(hs);
  *odd = Tensor4(hs);
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      for (int y = 0; y < hs.h; ++y) {
        for (int xx = 0; xx < hs.w; ++xx) {
          if (axis == Axis::kW) {
            even->At(n, c, y, xx) = x.At(n, c, y, 2 * xx);
            odd->At(n, c, y, xx) = x.At(n, c, y, 2 * xx + 1);
          } else {
            even->At(n, c, y, xx) = x.At(n, c, 2 * y, xx);
            odd->At(n, c, y, xx) = x.At(n, c, 2 * y + 1, xx);
          }
        }
      }
    }
  }
}

inline Tensor4 MergeEvenOdd(const Tensor4& even, const Tensor4& odd,
                            Axis axis) {
  Require(even.shape() == odd.shape(), "even/odd merge shape mismatch");
  Shape4 fs = even.shape();
  (axis == Axis::kW ? fs.w : fs.h) *= 2;
  Tensor4 out(fs);
  for (int n = 0; n < fs.n; ++n) {
    for (int c = 0; c < fs.c; ++c) {
      for (int y = 0; y < even.h(); ++y) {
        for (int xx = 0; xx < even.w(); ++xx) {
          if (axis == Axis::kW) {
            out.At(n, c, y, 2 * xx) = even.At(n, c, y, xx);
            out.At(n, c, y, 2 * xx + 1) = odd.At(n, c, y, xx);
          } else {
            out.At(n, c, 2 * y, xx) = even.At(n, c, y, xx);
            out.At(n, c, 2 * y + 1, xx) = odd.At(n, c, y, xx);
          }
        }
      }
    }
  }
  return out;
}

// Mirror (whole-sample symmetric) index: ... 2 1 0 1 2 ... N-2 N-1 N-2 ...
inline int MirrorIndex(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

// out[i] = x[mirror(i + delta)] along the given axis.
inline Tensor4 ShiftSym(const Tensor4& x, Axis axis, int delta) {
  Tensor4 out(x.shape());
  int len = axis == Axis::kW ? x.w() : x.h();
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      for (int y = 0; y < x.h(); ++y) {
        for (int xx = 0; xx < x.w(); ++xx) {
          int src = MirrorIndex((axis == Axis::kW ? xx : y) + delta, len);
          out.At(n, c, y, xx) = axis == Axis::kW ? x.At(n, c, y, src)
                                                 : x.At(n, c, src, xx);
        }
      }
    }
  }
  return out;
}

inline Tensor4 UpsampleNearest2(const Tensor4& x) {
  Shape4 os = x.shape();
  os.h *= 2;
  os.w *= 2;
  Tensor4 out(os);
  for (int n = 0; n < os.n; ++n) {
    for (int c = 0; c < os.c; ++c) {
      for (int y = 0; y < os.h; ++y) {
        for (int xx = 0; xx < os.w; ++xx) {
          out.At(n, c, y, xx) = x.At(n, c, y / 2, xx / 2);
        }
      }
    }
  }
  return out;
}

inline Tensor4 ConcatChannels(const std::vector<const Tensor4*>& parts) {
  Require(!parts.empty(), "concat of zero tensors");
  Shape4 os = parts[0]->shape();
  os.c = 0;
  for (const Tensor4* p : parts) {
    Require(p->n() == os.n && p->h() == os.h && p->w() == os.w,
            "concat spatial mismatch");
    os.c += p->c();
  }
  Tensor4 out(os);
  int c0 = 0;
  for (const Tensor4* p : parts) {
    for (int n = 0; n < os.n; ++n) {
      for (int c = 0; c < p->c(); ++c) {
        for (int y = 0; y < os.h; ++y) {
          for (int xx = 0; xx < os.w; ++xx) {
            out.At(n, c0 + c, y, xx) = p->At(n, c, y, xx);
          }
        }
      }
    }
    c0 += p->c();
  }
  return out;
}

inline Tensor4 SliceChannels(const Tensor4& x, int c0, int c1) {
  Require(0 <= c0 && c0 < c1 && c1 <= x.c(), "channel slice out of range");
  Shape4 os = x.shape();
  os.c = c1 - c0;
  Tensor4 out(os);
  for (int n = 0; n < os.n; ++n) {
    for (int c = 0; c < os.c; ++c) {
      for (int y = 0; y < os.h; ++y) {
        for (int xx = 0; xx < os.w; ++xx) {
          out.At(n, c, y, xx) = x.At(n, c0 + c, y, xx);
        }
      }
    }
  }
  return out;
}

}  // namespace nn
}  // namespace pwavec

#endif  // PWAVEC_NN_KERNELS_HPP_
