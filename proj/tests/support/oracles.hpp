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

// Reference implementations used as test oracles. They are written as plain
// loop nests over explicitly padded inputs and share no code with the
// library kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "nanonav/model.hpp"
#include "nanonav/tensor.hpp"

namespace nanonav::testing {

inline std::vector<double> zero_pad(const FloatTensor& in, int pad, int& ph, int& pw) {
  ph = in.shape.height + 2 * pad;
  pw = in.shape.width + 2 * pad;
  std::vector<double> out(static_cast<std::size_t>(in.shape.channels) * ph * pw, 0.0);
  for (int c = 0; c < in.shape.channels; ++c)
    for (int y = 0; y < in.shape.height; ++y)
      for (int x = 0; x < in.shape.width; ++x)
        out[(static_cast<std::size_t>(c) * ph + y + pad) * pw + x + pad] = in.at(c, y, x);
  return out;
}

inline FloatTensor ref_conv(const FloatTensor& in, const Conv2D& k) {
  int ph = 0;
  int pw = 0;
  const auto padded = zero_pad(in, k.padding, ph, pw);
  const int oh = (ph - k.kernel_h) / k.stride + 1;
  const int ow = (pw - k.kernel_w) / k.stride + 1;
  FloatTensor out(TensorShape{k.out_ch, oh, ow});
  for (int o = 0; o < k.out_ch; ++o)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        long double s = k.bias[o];
        for (int i = 0; i < k.in_ch; ++i)
          for (int a = 0; a < k.kernel_h; ++a)
            for (int b = 0; b < k.kernel_w; ++b)
              s += static_cast<long double>(
                       k.weights[((static_cast<std::size_t>(o) * k.in_ch + i) * k.kernel_h + a) * k.kernel_w + b]) *
                   padded[(static_cast<std::size_t>(i) * ph + y * k.stride + a) * pw + x * k.stride + b];
        out.at(o, y, x) = static_cast<double>(s);
      }
  return out;
}

inline FloatTensor ref_bn(const FloatTensor& in, const BNParams& bn) {
  FloatTensor out(in.shape);
  for (int c = 0; c < in.shape.channels; ++c)
    for (int y = 0; y < in.shape.height; ++y)
      for (int x = 0; x < in.shape.width; ++x)
        out.at(c, y, x) = bn.gamma[c] * (in.at(c, y, x) - bn.mu[c]) / bn.sigma[c] + bn.bn_shift[c];
  return out;
}

inline FloatTensor ref_maxpool(const FloatTensor& in) {
  FloatTensor out(TensorShape{in.shape.channels, in.shape.height / 2, in.shape.width / 2});
  for (int c = 0; c < out.shape.channels; ++c)
    for (int y = 0; y < out.shape.height; ++y)
      for (int x = 0; x < out.shape.width; ++x)
        out.at(c, y, x) = std::max({in.at(c, 2 * y, 2 * x), in.at(c, 2 * y, 2 * x + 1), in.at(c, 2 * y + 1, 2 * x),
                                    in.at(c, 2 * y + 1, 2 * x + 1)});
  return out;
}

inline FloatTensor ref_fc(const FloatTensor& in, const FullyConnected& fc) {
  FloatTensor out(TensorShape{fc.out_dim, 1, 1});
  for (int o = 0; o < fc.out_dim; ++o) {
    long double s = fc.bias[o];
    for (int i = 0; i < fc.in_dim; ++i) s += static_cast<long double>(fc.weights[static_cast<std::size_t>(o) * fc.in_dim + i]) * in.data[i];
    out.data[o] = static_cast<double>(s);
  }
  return out;
}

// Round-half-even of v / 2^s via truncating division and remainder.
inline std::int64_t ref_round_shift(std::int64_t v, int s) {
  if (s <= 0) return v * (std::int64_t{1} << -s);
  const std::int64_t d = std::int64_t{1} << s;
  std::int64_t q = v / d;
  std::int64_t r = v % d;
  if (r < 0) {
    q -= 1;
    r += d;
  }
  if (2 * r > d || (2 * r == d && (q % 2 != 0))) q += 1;
  return q;
}

inline std::int64_t ref_clamp16(std::int64_t v) { return std::clamp<std::int64_t>(v, -32768, 32767); }

// Raw code of x in a format with n fractional bits, via floor and fraction.
inline std::int64_t ref_quantize(double x, int n) {
  const double scaled = x * std::pow(2.0, n);
  const double fl = std::floor(scaled);
  const double frac = scaled - fl;
  double q = fl;
  if (frac > 0.5 || (frac == 0.5 && std::fmod(fl, 2.0) != 0.0)) q += 1.0;
  if (q > 32767.0) return 32767;
  if (q < -32768.0) return -32768;
  return static_cast<std::int64_t>(q);
}

// Fixed-point conv on raws: exact int64 sum of raw products plus the bias
// aligned to the product scale, then one round-half-even and a clamp.
inline FxpTensor ref_fxp_conv(const FxpTensor& in, const Conv2D& k) {
  const int nin = in.fmt.frac_bits();
  const int nw = k.weight_fmt->frac_bits();
  const int nb = k.bias_fmt->frac_bits();
  const int nout = k.out_fmt->frac_bits();
  const int oh = (in.shape.height + 2 * k.padding - k.kernel_h) / k.stride + 1;
  const int ow = (in.shape.width + 2 * k.padding - k.kernel_w) / k.stride + 1;
  FxpTensor out(TensorShape{k.out_ch, oh, ow}, *k.out_fmt);
  for (int o = 0; o < k.out_ch; ++o)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        std::int64_t acc = ref_quantize(k.bias[o], nb) * (std::int64_t{1} << (nin + nw - nb));
        for (int i = 0; i < k.in_ch; ++i)
          for (int a = 0; a < k.kernel_h; ++a)
            for (int b = 0; b < k.kernel_w; ++b) {
              const int iy = y * k.stride + a - k.padding;
              const int ix = x * k.stride + b - k.padding;
              if (iy < 0 || ix < 0 || iy >= in.shape.height || ix >= in.shape.width) continue;
              acc += ref_quantize(k.weights[k.weight_index(o, i, a, b)], nw) * in.at(i, iy, ix);
            }
        out.at(o, y, x) = static_cast<std::int16_t>(ref_clamp16(ref_round_shift(acc, nin + nw - nout)));
      }
  return out;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// max |a - b| / max(max |b|, floor).
inline double rel_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-12) {
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) num = std::max(num, std::abs(a[i] - b[i]));
  return num / std::max(max_abs(b), floor);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline FloatTensor random_tensor(Rng& rng, TensorShape s, double lo = -1.0, double hi = 1.0) {
  FloatTensor t(s);
  for (auto& v : t.data) v = uniform(rng, lo, hi);
  return t;
}

inline Conv2D random_conv(Rng& rng, int in_ch, int out_ch, int k, int stride, int pad, double scale = -1.0) {
  Conv2D c = Conv2D::make(in_ch, out_ch, k, stride, pad);
  const double s = scale > 0 ? scale : 1.0 / std::sqrt(static_cast<double>(c.fan_in()));
  for (auto& w : c.weights) w = uniform(rng, -s, s);
  for (auto& b : c.bias) b = uniform(rng, -0.1, 0.1);
  return c;
}

inline FullyConnected random_fc(Rng& rng, int in_dim, int out_dim) {
  FullyConnected f = FullyConnected::make(in_dim, out_dim);
  const double s = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (auto& w : f.weights) w = uniform(rng, -s, s);
  for (auto& b : f.bias) b = uniform(rng, -0.1, 0.1);
  return f;
}

inline BNParams random_bn(Rng& rng, int channels, bool positive_gamma = false) {
  BNParams bn;
  for (int c = 0; c < channels; ++c) {
    double g = uniform(rng, 0.5, 2.0);
    if (!positive_gamma && uniform(rng, 0.0, 1.0) < 0.3) g = -g;
    bn.gamma.push_back(g);
    bn.bn_shift.push_back(uniform(rng, -0.5, 0.5));
    bn.mu.push_back(uniform(rng, -0.5, 0.5));
    bn.sigma.push_back(uniform(rng, 0.3, 2.0));
  }
  return bn;
}

// Attaches formats and snaps parameters onto their grids.
template <typename Linear>
void snap_to_formats(Linear& l, fxp::QFormat w, fxp::QFormat b, fxp::QFormat out) {
  l.weight_fmt = w;
  l.bias_fmt = b;
  l.out_fmt = out;
  for (auto& v : l.weights) v = std::ldexp(static_cast<double>(ref_quantize(v, w.frac_bits())), -w.frac_bits());
  for (auto& v : l.bias) v = std::ldexp(static_cast<double>(ref_quantize(v, b.frac_bits())), -b.frac_bits());
}

// Random raws in fmt spanning roughly [lo, hi].
inline FxpTensor random_fxp(Rng& rng, TensorShape s, fxp::QFormat fmt, double lo, double hi) {
  FxpTensor t(s, fmt);
  for (auto& v : t.data) v = static_cast<std::int16_t>(ref_quantize(uniform(rng, lo, hi), fmt.frac_bits()));
  return t;
}

inline FloatTensor to_float(const FxpTensor& t) {
  FloatTensor out(t.shape);
  for (std::size_t i = 0; i < t.data.size(); ++i) out.data[i] = std::ldexp(static_cast<double>(t.data[i]), -t.fmt.frac_bits());
  return out;
}

inline Layer named(std::string name, LayerOp op) { return Layer{std::move(name), std::move(op)}; }

}  // namespace nanonav::testing
