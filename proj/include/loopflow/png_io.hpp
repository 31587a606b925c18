// Copyright 2026 The loopflow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// 8-bit PNG read/write through libpng's simplified API. Link PNG::PNG.

#pragma once

#include <png.h>

#include <string>

#include "loopflow/core.hpp"
#include "loopflow/image.hpp"

namespace loopflow {

inline void write_png(const std::string& path, const Image8& img) {
  if (img.channels != 1 && img.channels != 3) throw DataError("write_png: 1 or 3 channels expected");
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.dims.w);
  image.height = static_cast<png_uint_32>(img.dims.h);
  image.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.data.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DataError("write_png " + path + ": " + msg);
  }
}

// Reads any PNG as 8-bit gray (1 channel) or RGB (3 channels), matching
// the file's color type. Alpha is dropped.
inline Image8 read_png(const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("read_png " + path + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Image8 out(GridDims{static_cast<int>(image.height), static_cast<int>(image.width)}, color ? 3 : 1);
  if (!png_image_finish_read(&image, nullptr, out.data.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DataError("read_png " + path + ": " + msg);
  }
  return out;
}

inline ScalarField read_gray_png(const std::string& path) { return to_scalar(read_png(path)); }

}  // namespace loopflow
