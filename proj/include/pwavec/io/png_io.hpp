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

#ifndef PWAVEC_IO_PNG_IO_HPP_
#define PWAVEC_IO_PNG_IO_HPP_

#include <png.h>

#include <cstring>
#include <string>

#include "pwavec/io/image_io.hpp"

namespace pwavec {
namespace io {

// Reads any PNG as 8-bit grayscale via libpng's simplified API; color inputs
// are converted by the library.
inline GrayImage ReadPngGray(const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read png " + path + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  GrayImage img;
  img.w = int(image.width);
  img.h = int(image.height);
  img.pix.resize(size_t(img.w) * size_t(img.h));
  if (!png_image_finish_read(&image, nullptr, img.pix.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("failed decoding png " + path + ": " + image.message);
  }
  return img;
}

inline void WritePngGray(const std::string& path, const GrayImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = png_uint_32(img.w);
  image.height = png_uint_32(img.h);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.pix.data(), 0,
                               nullptr)) {
    throw IoError("failed writing png " + path + ": " + image.message);
  }
}

}  // namespace io
}  // namespace pwavec

#endif  // PWAVEC_IO_PNG_IO_HPP_
