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

#ifndef PWAVEC_IO_IMAGE_IO_HPP_
#define PWAVEC_IO_IMAGE_IO_HPP_

#include <cctype>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "pwavec/tensor.hpp"

namespace pwavec {
namespace io {

struct GrayImage {
  int w = 0;
  int h = 0;
  std::vector<uint8_t> pix;  // row-major
};

inline Tensor4 PlaneFromImage(const GrayImage& img) {
  Tensor4 p(Shape4{1, 1, img.h, img.w});
  for (int64_t i = 0; i < p.numel(); ++i) p[i] = img.pix[size_t(i)] / 255.0;
  return p;
}

inline GrayImage ImageFromPlane(const Tensor4& p) {
  Require(p.n() == 1 && p.c() == 1, "plane expected");
  GrayImage img;
  img.w = p.w();
  img.h = p.h();
  img.pix.resize(size_t(p.numel()));
  for (int64_t i = 0; i < p.numel(); ++i) {
    double v = std::min(1.0, std::max(0.0, p[i])) * 255.0;
    img.pix[size_t(i)] = uint8_t(std::lround(v));
  }
  return img;
}

namespace detail {

inline int PnmToken(std::istream& in) {
  // Skips whitespace and '#' comments, then reads one unsigned decimal.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c)) throw IoError("malformed pnm header");
  int v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    if (v > 1 << 24) throw IoError("pnm header value out of range");
    c = in.get();
  }
  return v;
}

}  // namespace detail

inline GrayImage ReadPgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  char m0 = 0, m1 = 0;
  f.get(m0);
  f.get(m1);
  if (m0 != 'P' || m1 != '5') throw IoError(path + " is not a binary pgm");
  GrayImage img;
  img.w = detail::PnmToken(f);
  img.h = detail::PnmToken(f);
  int maxval = detail::PnmToken(f);
  if (maxval != 255) throw IoError("only 8-bit pgm is supported");
  if (img.w <= 0 || img.h <= 0) throw IoError("empty pgm");
  img.pix.resize(size_t(img.w) * size_t(img.h));
  f.read(reinterpret_cast<char*>(img.pix.data()),
         std::streamsize(img.pix.size()));
  if (size_t(f.gcount()) != img.pix.size()) {
    throw IoError("truncated pgm payload in " + path);
  }
  return img;
}

inline void WritePgm(const std::string& path, const GrayImage& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "P5\n" << img.w << " " << img.h << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.pix.data()),
          std::streamsize(img.pix.size()));
  if (!f) throw IoError("failed writing " + path);
}

}  // namespace io
}  // namespace pwavec

#endif  // PWAVEC_IO_IMAGE_IO_HPP_
