// Copyright 2026 The nanonav Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Binary PGM (P5) images and conversion to network input.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nanonav/tensor.hpp"

namespace nanonav {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// 8-bit P5 only (maxval <= 255); comments in the header are skipped.
GrayImage parse_pgm(std::span<const std::uint8_t> bytes);
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

// Center-crops to shape.height x shape.width and scales pixels by 1/255.
// shape.channels must be 1. Throws ShapeError if the image is smaller.
FloatTensor image_to_input(const GrayImage& image, const TensorShape& shape);

}  // namespace nanonav
