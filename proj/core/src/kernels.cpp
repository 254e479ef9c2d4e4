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

#include "nanonav/kernels.hpp"

#include <cmath>

#include "nanonav/error.hpp"
#include "nanonav/parallel.hpp"

namespace nanonav::kernels {

namespace {

template <typename Layer>
FxpLinearParams prepare_linear(const Layer& layer, fxp::QFormat in_fmt, const char* what) {
  if (!layer.quantized()) throw FormatError(std::string(what) + " layer is not quantized");
  FxpLinearParams p;
  p.acc_frac_bits = in_fmt.frac_bits() + layer.weight_fmt->frac_bits();
  p.out_fmt = *layer.out_fmt;
  const int bias_shift = p.acc_frac_bits - layer.bias_fmt->frac_bits();
  if (bias_shift < 0) {
    throw FormatError(std::string(what) + " bias format " + layer.bias_fmt->name() +
                      " is finer than the accumulator");
  }
  p.weights.resize(layer.weights.size());
  for (std::size_t i = 0; i < layer.weights.size(); ++i) {
    p.weights[i] = fxp::quantize_raw(layer.weights[i], *layer.weight_fmt);
  }
  p.bias.resize(layer.bias.size());
  for (std::size_t i = 0; i < layer.bias.size(); ++i) {
    p.bias[i] = std::int64_t{fxp::quantize_raw(layer.bias[i], *layer.bias_fmt)} << bias_shift;
  }
  return p;
}

void check_input(const TensorShape& in, const Conv2D& conv) {
  (void)conv.output_shape(in);
}

}  // namespace

FxpLinearParams prepare_fxp(const Conv2D& conv, fxp::QFormat in_fmt) {
  return prepare_linear(conv, in_fmt, "conv");
}

FxpLinearParams prepare_fxp(const FullyConnected& fc, fxp::QFormat in_fmt) {
  return prepare_linear(fc, in_fmt, "fully-connected");
}

void conv2d_region(const InputWindow<double>& in, const Conv2D& conv, const OutputRegion& region,
                   FloatTensor& out) {
  const int out_w = out.shape.width;
  for (int oc = region.ch_begin; oc < region.ch_end; ++oc) {
    for (int oy = region.row_begin; oy < region.row_end; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        double acc = conv.bias[oc];
        for (int ic = 0; ic < conv.in_ch; ++ic) {
          for (int ky = 0; ky < conv.kernel_h; ++ky) {
            const int iy = oy * conv.stride - conv.padding + ky;
            if (iy < 0 || iy >= in.full_height) continue;
            for (int kx = 0; kx < conv.kernel_w; ++kx) {
              const int ix = ox * conv.stride - conv.padding + kx;
              if (ix < 0 || ix >= in.width) continue;
              acc += conv.weights[conv.weight_index(oc, ic, ky, kx)] * in.at(ic, iy, ix);
            }
          }
        }
        out.at(oc, oy, ox) = acc;
      }
    }
  }
}

std::size_t conv2d_region(const InputWindow<std::int16_t>& in, const Conv2D& conv,
                          const FxpLinearParams& params, const OutputRegion& region, FxpTensor& out) {
  const int out_w = out.shape.width;
  const int shift = params.acc_frac_bits - params.out_fmt.frac_bits();
  std::size_t saturations = 0;
  for (int oc = region.ch_begin; oc < region.ch_end; ++oc) {
    for (int oy = region.row_begin; oy < region.row_end; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        std::int64_t acc = params.bias[oc];
        for (int ic = 0; ic < conv.in_ch; ++ic) {
          for (int ky = 0; ky < conv.kernel_h; ++ky) {
            const int iy = oy * conv.stride - conv.padding + ky;
            if (iy < 0 || iy >= in.full_height) continue;
            const std::int16_t* w = &params.weights[conv.weight_index(oc, ic, ky, 0)];
            for (int kx = 0; kx < conv.kernel_w; ++kx) {
              const int ix = ox * conv.stride - conv.padding + kx;
              if (ix < 0 || ix >= in.width) continue;
              acc += std::int64_t{w[kx]} * std::int64_t{in.at(ic, iy, ix)};
            }
          }
        }
        bool sat = false;
        out.at(oc, oy, ox) = fxp::saturate16(fxp::shift_round_even(acc, shift), &sat);
        saturations += sat ? 1 : 0;
      }
    }
  }
  return saturations;
}

void fully_connected_range(std::span<const double> in, const FullyConnected& fc, int out_begin,
                           int out_end, FloatTensor& out) {
  for (int o = out_begin; o < out_end; ++o) {
    double acc = fc.bias[o];
    const double* w = &fc.weights[static_cast<std::size_t>(o) * fc.in_dim];
    for (int i = 0; i < fc.in_dim; ++i) acc += w[i] * in[i];
    out.data[o] = acc;
  }
}

std::size_t fully_connected_range(std::span<const std::int16_t> in, const FxpLinearParams& params,
                                  int in_dim, int out_begin, int out_end, FxpTensor& out) {
  const int shift = params.acc_frac_bits - params.out_fmt.frac_bits();
  std::size_t saturations = 0;
  for (int o = out_begin; o < out_end; ++o) {
    std::int64_t acc = params.bias[o];
    const std::int16_t* w = &params.weights[static_cast<std::size_t>(o) * in_dim];
    for (int i = 0; i < in_dim; ++i) acc += std::int64_t{w[i]} * std::int64_t{in[i]};
    bool sat = false;
    out.data[o] = fxp::saturate16(fxp::shift_round_even(acc, shift), &sat);
    saturations += sat ? 1 : 0;
  }
  return saturations;
}

FloatTensor conv2d(const FloatTensor& in, const Conv2D& conv, std::size_t workers) {
  check_input(in.shape, conv);
  FloatTensor out(conv.output_shape(in.shape));
  const auto window = whole(in);
  parallel_for(static_cast<std::size_t>(conv.out_ch), workers, [&](std::size_t b, std::size_t e) {
    OutputRegion r{static_cast<int>(b), static_cast<int>(e), 0, out.shape.height};
    conv2d_region(window, conv, r, out);
  });
  return out;
}

FxpTensor conv2d(const FxpTensor& in, const Conv2D& conv, std::size_t workers, std::size_t* saturations) {
  check_input(in.shape, conv);
  const auto params = prepare_fxp(conv, in.fmt);
  FxpTensor out(conv.output_shape(in.shape), params.out_fmt);
  const auto window = whole(in);
  // Channel blocks run in parallel; each writes a disjoint slice of out.
  const std::size_t n = std::max<std::size_t>(1, std::min<std::size_t>(workers, conv.out_ch));
  std::vector<std::size_t> sat(n, 0);
  parallel_for(n, n, [&](std::size_t wb, std::size_t we) {
    for (std::size_t w = wb; w < we; ++w) {
      const std::size_t c0 = conv.out_ch * w / n;
      const std::size_t c1 = conv.out_ch * (w + 1) / n;
      OutputRegion r{static_cast<int>(c0), static_cast<int>(c1), 0, out.shape.height};
      sat[w] = conv2d_region(window, conv, params, r, out);
    }
  });
  if (saturations) {
    for (auto s : sat) *saturations += s;
  }
  return out;
}

namespace {

template <typename Tensor>
Tensor maxpool_impl(const Tensor& in, Tensor out) {
  if (in.shape.height % 2 != 0 || in.shape.width % 2 != 0) {
    throw ShapeError("maxpool2x2 needs even height/width, got " + in.shape.str());
  }
  maxpool2x2_region(whole(in), full_region(out.shape), out);
  return out;
}

TensorShape pooled(const TensorShape& s) { return TensorShape{s.channels, std::max(1, s.height / 2), std::max(1, s.width / 2)}; }

}  // namespace

FloatTensor maxpool2x2(const FloatTensor& in) { return maxpool_impl(in, FloatTensor(pooled(in.shape))); }

FxpTensor maxpool2x2(const FxpTensor& in) { return maxpool_impl(in, FxpTensor(pooled(in.shape), in.fmt)); }

FloatTensor relu_quant(const FloatTensor& in, fxp::QFormat out_fmt) {
  FloatTensor out(in.shape);
  const double hi = out_fmt.max_value();
  for (std::size_t i = 0; i < in.data.size(); ++i) out.data[i] = std::min(std::max(in.data[i], 0.0), hi);
  return out;
}

FxpTensor relu_quant(const FxpTensor& in, fxp::QFormat out_fmt, std::size_t* saturations) {
  FxpTensor out(in.shape, out_fmt);
  std::size_t count = 0;
  for (std::size_t i = 0; i < in.data.size(); ++i) {
    const std::int16_t r = std::max<std::int16_t>(in.data[i], 0);
    bool sat = false;
    out.data[i] = fxp::convert_raw(r, in.fmt, out_fmt, &sat);
    count += sat ? 1 : 0;
  }
  if (saturations) *saturations += count;
  return out;
}

FloatTensor batchnorm(const FloatTensor& in, const BNParams& bn) {
  bn.validate();
  if (bn.channels() != static_cast<std::size_t>(in.shape.channels)) {
    throw ShapeError("batchnorm channel count does not match input " + in.shape.str());
  }
  FloatTensor out(in.shape);
  const std::size_t plane = static_cast<std::size_t>(in.shape.height) * in.shape.width;
  for (int c = 0; c < in.shape.channels; ++c) {
    const double scale = bn.gamma[c] / bn.sigma[c];
    for (std::size_t i = c * plane; i < (c + 1) * plane; ++i) {
      out.data[i] = scale * (in.data[i] - bn.mu[c]) + bn.bn_shift[c];
    }
  }
  return out;
}

FloatTensor fully_connected(const FloatTensor& in, const FullyConnected& fc) {
  if (in.size() != static_cast<std::size_t>(fc.in_dim)) {
    throw ShapeError("FC expects " + std::to_string(fc.in_dim) + " inputs, got " + in.shape.str());
  }
  FloatTensor out(TensorShape{fc.out_dim, 1, 1});
  fully_connected_range(in.data, fc, 0, fc.out_dim, out);
  return out;
}

FxpTensor fully_connected(const FxpTensor& in, const FullyConnected& fc, std::size_t* saturations) {
  if (in.size() != static_cast<std::size_t>(fc.in_dim)) {
    throw ShapeError("FC expects " + std::to_string(fc.in_dim) + " inputs, got " + in.shape.str());
  }
  const auto params = prepare_fxp(fc, in.fmt);
  FxpTensor out(TensorShape{fc.out_dim, 1, 1}, params.out_fmt);
  const auto sat = fully_connected_range(in.data, params, fc.in_dim, 0, fc.out_dim, out);
  if (saturations) *saturations += sat;
  return out;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

FloatTensor sigmoid(const FloatTensor& in) {
  FloatTensor out(in.shape);
  for (std::size_t i = 0; i < in.data.size(); ++i) out.data[i] = sigmoid(in.data[i]);
  return out;
}

FxpTensor add_saturating(const FxpTensor& a, const FxpTensor& b, std::size_t* saturations) {
  if (!(a.shape == b.shape)) {
    throw ShapeError("cannot add tensors of shape " + a.shape.str() + " and " + b.shape.str());
  }
  FxpTensor out(a.shape, a.fmt);
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    bool sat = false;
    const std::int16_t rb = fxp::convert_raw(b.data[i], b.fmt, a.fmt, &sat);
    out.data[i] = fxp::saturating_add(a.data[i], rb, &sat);
    count += sat ? 1 : 0;
  }
  if (saturations) *saturations += count;
  return out;
}

FloatTensor resblock_forward(const FloatTensor& in, const ResBlock& rb, const RunOptions& options) {
  FloatTensor main = forward(std::span<const Layer>(rb.main), in, options);
  FloatTensor bypass = forward(std::span<const Layer>(rb.bypass), in, options);
  if (!(main.shape == bypass.shape)) {
    throw ShapeError("resblock branch shapes differ: " + main.shape.str() + " vs " + bypass.shape.str());
  }
  for (std::size_t i = 0; i < main.data.size(); ++i) main.data[i] += bypass.data[i];
  if (rb.post) main = relu_quant(main, rb.post->out_fmt);
  return main;
}

FxpTensor resblock_forward(const FxpTensor& in, const ResBlock& rb, const RunOptions& options,
                           std::size_t* saturations) {
  const FxpTensor main = forward(std::span<const Layer>(rb.main), in, options);
  const FxpTensor bypass = forward(std::span<const Layer>(rb.bypass), in, options);
  FxpTensor sum = add_saturating(main, bypass, saturations);
  if (rb.post) sum = relu_quant(sum, rb.post->out_fmt, saturations);
  return sum;
}

FloatTensor forward(const Layer& layer, const FloatTensor& in, const RunOptions& options) {
  FloatTensor out = std::visit(
      [&](const auto& op) -> FloatTensor {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, Conv2D>) {
          return conv2d(in, op, options.workers);
        } else if constexpr (std::is_same_v<T, MaxPool>) {
          return maxpool2x2(in);
        } else if constexpr (std::is_same_v<T, ReLUQuant>) {
          return relu_quant(in, op.out_fmt);
        } else if constexpr (std::is_same_v<T, BatchNorm>) {
          return batchnorm(in, op.params);
        } else if constexpr (std::is_same_v<T, FullyConnected>) {
          return fully_connected(in, op);
        } else if constexpr (std::is_same_v<T, Sigmoid>) {
          return sigmoid(in);
        } else {
          return resblock_forward(in, op, options);
        }
      },
      layer.op);
  if (options.on_float) options.on_float(layer, out);
  return out;
}

FxpTensor forward(const Layer& layer, const FxpTensor& in, const RunOptions& options) {
  std::size_t sat = 0;
  FxpTensor out = std::visit(
      [&](const auto& op) -> FxpTensor {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, Conv2D>) {
          return conv2d(in, op, options.workers, &sat);
        } else if constexpr (std::is_same_v<T, MaxPool>) {
          return maxpool2x2(in);
        } else if constexpr (std::is_same_v<T, ReLUQuant>) {
          return relu_quant(in, op.out_fmt, &sat);
        } else if constexpr (std::is_same_v<T, BatchNorm>) {
          throw FormatError("layer '" + layer.name + "': BatchNorm must be folded before fixed-point execution");
        } else if constexpr (std::is_same_v<T, FullyConnected>) {
          return fully_connected(in, op, &sat);
        } else if constexpr (std::is_same_v<T, Sigmoid>) {
          throw FormatError("layer '" + layer.name + "': sigmoid runs on the dequantized logit");
        } else {
          return resblock_forward(in, op, options, &sat);
        }
      },
      layer.op);
  if (options.on_fxp) options.on_fxp(layer, out, sat);
  return out;
}

FloatTensor forward(std::span<const Layer> layers, FloatTensor in, const RunOptions& options) {
  for (const auto& layer : layers) in = forward(layer, in, options);
  return in;
}

FxpTensor forward(std::span<const Layer> layers, FxpTensor in, const RunOptions& options) {
  for (const auto& layer : layers) in = forward(layer, in, options);
  return in;
}

}  // namespace nanonav::kernels
