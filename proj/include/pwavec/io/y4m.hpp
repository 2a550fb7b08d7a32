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

#ifndef PWAVEC_IO_Y4M_HPP_
#define PWAVEC_IO_Y4M_HPP_

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pwavec/io/image_io.hpp"

namespace pwavec {
namespace io {

// Minimal YUV4MPEG2 reader covering the luma plane; chroma of 4:2:0 inputs
// is skipped. The writer emits monochrome streams.
inline std::vector<GrayImage> ReadY4mLuma(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::string header;
  if (!std::getline(f, header)) throw IoError("missing y4m header");
  std::istringstream hs(header);
  std::string tok;
  hs >> tok;
  if (tok != "YUV4MPEG2") throw IoError(path + " is not a y4m stream");
  int w = 0, h = 0;
  size_t chroma_bytes = 0;
  bool chroma_known = true;
  while (hs >> tok) {
    if (tok.size() < 2) continue;
    switch (tok[0]) {
      case 'W':
        w = std::stoi(tok.substr(1));
        break;
      case 'H':
        h = std::stoi(tok.substr(1));
        break;
      case 'C': {
        std::string c = tok.substr(1);
        if (c.rfind("420", 0) == 0) {
          chroma_bytes = 2;  // numerator over 4, filled in below
        } else if (c == "mono") {
          chroma_bytes = 0;
        } else {
          chroma_known = false;
        }
        break;
      }
      default:
        break;
    }
  }
  if (!chroma_known) throw IoError("unsupported y4m chroma subsampling");
  if (w <= 0 || h <= 0) throw IoError("invalid y4m frame size");
  size_t luma = size_t(w) * size_t(h);
  size_t skip = chroma_bytes == 0 ? 0 : luma / 2;
  std::vector<GrayImage> frames;
  std::string line;
  while (std::getline(f, line)) {
    if (line.rfind("FRAME", 0) != 0) throw IoError("malformed y4m frame tag");
    GrayImage img;
    img.w = w;
    img.h = h;
    img.pix.resize(luma);
    f.read(reinterpret_cast<char*>(img.pix.data()), std::streamsize(luma));
    if (size_t(f.gcount()) != luma) throw IoError("truncated y4m frame");
    f.ignore(std::streamsize(skip));
    frames.push_back(std::move(img));
  }
  if (frames.empty()) throw IoError("y4m stream has no frames");
  return frames;
}

inline void WriteY4mMono(const std::string& path,
                         const std::vector<GrayImage>& frames) {
  Require(!frames.empty(), "no frames to write");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "YUV4MPEG2 W" << frames[0].w << " H" << frames[0].h
    << " F25:1 Ip A1:1 Cmono\n";
  for (const GrayImage& img : frames) {
    Require(img.w == frames[0].w && img.h == frames[0].h,
            "frame size changes mid-stream");
    f << "FRAME\n";
    f.write(reinterpret_cast<const char*>(img.pix.data()),
            std::streamsize(img.pix.size()));
  }
  if (!f) throw IoError("failed writing " + path);
}

}  // namespace io
}  // namespace pwavec

#endif  // PWAVEC_IO_Y4M_HPP_
