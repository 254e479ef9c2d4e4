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

#include "nanonav/pgm.hpp"

#include <cctype>
#include <string>

#include "nanonav/container.hpp"
#include "nanonav/error.hpp"

namespace nanonav {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  int next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) throw IoError("malformed PGM header");
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000) throw IoError("PGM header value too large");
      ++pos_;
    }
    return static_cast<int>(v);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw IoError("malformed PGM header");
    return pos_ + 1;
  }

  std::size_t pos_ = 0;

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
};

}  // namespace

GrayImage parse_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw IoError("not a binary PGM (P5) image");
  HeaderReader r(bytes);
  r.pos_ = 2;
  GrayImage img;
  img.width = r.next_int();
  img.height = r.next_int();
  const int maxval = r.next_int();
  if (img.width < 1 || img.height < 1) throw IoError("PGM has empty dimensions");
  if (maxval < 1 || maxval > 255) throw IoError("only 8-bit PGM images are supported");
  const std::size_t start = r.raster_start();
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  if (bytes.size() - start < n) throw IoError("PGM raster is truncated");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                    bytes.begin() + static_cast<std::ptrdiff_t>(start + n));
  if (maxval != 255) {
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>((p * 255 + maxval / 2) / maxval);
  }
  return img;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return parse_pgm(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  const std::string header =
      "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), image.pixels.begin(), image.pixels.end());
  write_bytes(path, bytes);
}

FloatTensor image_to_input(const GrayImage& image, const TensorShape& shape) {
  if (shape.channels != 1) throw ShapeError("image input must have one channel");
  if (image.width < shape.width || image.height < shape.height) {
    throw ShapeError("image " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                     " is smaller than the network input " + shape.str());
  }
  const int y0 = (image.height - shape.height) / 2;
  const int x0 = (image.width - shape.width) / 2;
  FloatTensor t(shape);
  for (int y = 0; y < shape.height; ++y) {
    for (int x = 0; x < shape.width; ++x) t.at(0, y, x) = image.at(y0 + y, x0 + x) / 255.0;
  }
  return t;
}

}  // namespace nanonav
