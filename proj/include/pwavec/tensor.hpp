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

#ifndef PWAVEC_TENSOR_HPP_
#define PWAVEC_TENSOR_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pwavec/common.hpp"

namespace pwavec {

// Dense NCHW tensor of doubles. Everything in the library, from wavelet
// planes to convolution weights, is one of these; a single-channel image is
// simply (1, 1, H, W).
// A default-constructed shape is empty so that a default Tensor4 is
// distinguishable from any real (nonzero) allocation.
struct Shape4 {
  int n = 0, c = 0, h = 0, w = 0;

  int64_t numel() const {
    return int64_t(n) * c * h * w;
  }
  bool operator==(const Shape4& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
  bool operator!=(const Shape4& o) const { return !(*this == o); }
  std::string Str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape)
      : shape_(shape), data_(static_cast<size_t>(shape.numel()), 0.0) {}
  Tensor4(Shape4 shape, double fill)
      : shape_(shape), data_(static_cast<size_t>(shape.numel()), fill) {}

  const Shape4& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  int64_t numel() const { return shape_.numel(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  int64_t Index(int n, int c, int y, int x) const {
    return ((int64_t(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  double& At(int n, int c, int y, int x) { return data_[Index(n, c, y, x)]; }
  double At(int n, int c, int y, int x) const {
    return data_[Index(n, c, y, x)];
  }

  void Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool AllFinite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  // He-style fan-in scaled uniform init used for all convolution weights.
  static Tensor4 RandomUniform(Shape4 shape, double lo, double hi,
                               std::mt19937_64& rng) {
    Tensor4 t(shape);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
    return t;
  }

 private:
  Shape4 shape_;
  std::vector<double> data_;
};

using Plane = Tensor4;  // (1, 1, H, W)

inline Plane MakePlane(int h, int w) { return Plane(Shape4{1, 1, h, w}); }

}  // namespace pwavec

#endif  // PWAVEC_TENSOR_HPP_
