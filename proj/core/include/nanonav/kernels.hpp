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

// Reference float kernels (double accumulation) and deterministic
// fixed-point kernels. A fixed-point conv/FC sums exact int64 products per
// output element and rounds once into the layer's output format, so results
// do not depend on evaluation order, tiling or worker count.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nanonav/fxp.hpp"
#include "nanonav/model.hpp"
#include "nanonav/tensor.hpp"

namespace nanonav::kernels {

// A band of rows [row_begin, row_begin + rows) and channels
// [ch_begin, ch_begin + channels) of a tensor of height full_height, stored
// densely as [channels][rows][width]. Coordinates passed to at() are
// absolute.
template <typename T>
struct InputWindow {
  std::span<const T> data;
  int ch_begin = 0;
  int channels = 0;
  int row_begin = 0;
  int rows = 0;
  int width = 0;
  int full_height = 0;

  const T& at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c - ch_begin) * rows + (y - row_begin)) * width + x];
  }
  bool contains_row(int y) const { return y >= row_begin && y < row_begin + rows; }
};

template <typename T>
InputWindow<T> whole(const BasicTensor<T>& t) {
  return InputWindow<T>{t.data, 0, t.shape.channels, 0, t.shape.height, t.shape.width, t.shape.height};
}

// Half-open output box.
struct OutputRegion {
  int ch_begin = 0;
  int ch_end = 0;
  int row_begin = 0;
  int row_end = 0;
};

inline OutputRegion full_region(const TensorShape& s) { return OutputRegion{0, s.channels, 0, s.height}; }

// Integer form of a quantized conv or FC layer for a given input format.
struct FxpLinearParams {
  std::vector<std::int16_t> weights;
  std::vector<std::int64_t> bias;  // already scaled to acc_frac_bits
  int acc_frac_bits = 0;
  fxp::QFormat out_fmt;
};

// Throws FormatError if the layer is not quantized or the bias format has
// more fractional bits than the accumulator.
FxpLinearParams prepare_fxp(const Conv2D& conv, fxp::QFormat in_fmt);
FxpLinearParams prepare_fxp(const FullyConnected& fc, fxp::QFormat in_fmt);

// Region kernels. The window must hold every non-padding input row the
// region reads. The fixed-point variant returns the saturation count.
void conv2d_region(const InputWindow<double>& in, const Conv2D& conv, const OutputRegion& region,
                   FloatTensor& out);
std::size_t conv2d_region(const InputWindow<std::int16_t>& in, const Conv2D& conv,
                          const FxpLinearParams& params, const OutputRegion& region, FxpTensor& out);

template <typename T>
void maxpool2x2_region(const InputWindow<T>& in, const OutputRegion& region, BasicTensor<T>& out) {
  for (int c = region.ch_begin; c < region.ch_end; ++c) {
    for (int oy = region.row_begin; oy < region.row_end; ++oy) {
      for (int ox = 0; ox < out.shape.width; ++ox) {
        const int y = 2 * oy;
        const int x = 2 * ox;
        out.at(c, oy, ox) = std::max(std::max(in.at(c, y, x), in.at(c, y, x + 1)),
                                     std::max(in.at(c, y + 1, x), in.at(c, y + 1, x + 1)));
      }
    }
  }
}

// Fully-connected over outputs [out_begin, out_end).
void fully_connected_range(std::span<const double> in, const FullyConnected& fc, int out_begin,
                           int out_end, FloatTensor& out);
std::size_t fully_connected_range(std::span<const std::int16_t> in, const FxpLinearParams& params,
                                  int in_dim, int out_begin, int out_end, FxpTensor& out);

// Whole-tensor kernels.
FloatTensor conv2d(const FloatTensor& in, const Conv2D& conv, std::size_t workers = 1);
FxpTensor conv2d(const FxpTensor& in, const Conv2D& conv, std::size_t workers = 1,
                 std::size_t* saturations = nullptr);

FloatTensor maxpool2x2(const FloatTensor& in);
FxpTensor maxpool2x2(const FxpTensor& in);

FloatTensor relu_quant(const FloatTensor& in, fxp::QFormat out_fmt);
FxpTensor relu_quant(const FxpTensor& in, fxp::QFormat out_fmt, std::size_t* saturations = nullptr);

FloatTensor batchnorm(const FloatTensor& in, const BNParams& bn);

FloatTensor fully_connected(const FloatTensor& in, const FullyConnected& fc);
FxpTensor fully_connected(const FxpTensor& in, const FullyConnected& fc, std::size_t* saturations = nullptr);

double sigmoid(double x);
FloatTensor sigmoid(const FloatTensor& in);

// Saturating same-shape addition; b is first converted to a's format.
FxpTensor add_saturating(const FxpTensor& a, const FxpTensor& b, std::size_t* saturations = nullptr);

// Per-layer callbacks fired after each layer (including layers nested in
// residual blocks and the block itself).
struct RunOptions {
  std::size_t workers = 1;
  std::function<void(const Layer&, const FloatTensor&)> on_float;
  std::function<void(const Layer&, const FxpTensor&, std::size_t saturations)> on_fxp;
};

FloatTensor forward(const Layer& layer, const FloatTensor& in, const RunOptions& options = {});
FxpTensor forward(const Layer& layer, const FxpTensor& in, const RunOptions& options = {});
FloatTensor forward(std::span<const Layer> layers, FloatTensor in, const RunOptions& options = {});
FxpTensor forward(std::span<const Layer> layers, FxpTensor in, const RunOptions& options = {});

FloatTensor resblock_forward(const FloatTensor& in, const ResBlock& rb, const RunOptions& options = {});
FxpTensor resblock_forward(const FxpTensor& in, const ResBlock& rb, const RunOptions& options = {},
                           std::size_t* saturations = nullptr);

}  // namespace nanonav::kernels
