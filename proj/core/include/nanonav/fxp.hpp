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

// 16-bit two's-complement fixed-point arithmetic.
//
// A QFormat Qm.n stores a value as raw * 2^-n in an int16_t, where m = 16 - n
// counts the integer bits including the sign. Conversions round to nearest
// with ties to even and saturate at the format bounds; products accumulate
// exactly in 64-bit accumulators and are rounded once when written back.

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

namespace nanonav::fxp {

inline constexpr int kTotalBits = 16;
inline constexpr std::int32_t kRawMin = std::numeric_limits<std::int16_t>::min();
inline constexpr std::int32_t kRawMax = std::numeric_limits<std::int16_t>::max();

class QFormat {
 public:
  // Q5.11, the activation format.
  constexpr QFormat() = default;
  // Throws FormatError unless 0 <= frac_bits <= 15.
  explicit QFormat(int frac_bits);

  constexpr int frac_bits() const { return frac_bits_; }
  constexpr int int_bits() const { return kTotalBits - frac_bits_; }
  static constexpr int total_bits() { return kTotalBits; }

  double step() const;
  double min_value() const;
  double max_value() const;
  bool covers(double lo, double hi) const { return lo >= min_value() && hi <= max_value(); }

  // "Q5.11"
  std::string name() const;
  // Accepts "Q5.11" (integer part must equal 16 - frac).
  static QFormat parse(std::string_view text);

  friend constexpr bool operator==(QFormat, QFormat) = default;

 private:
  struct Unchecked {};
  constexpr QFormat(int frac_bits, Unchecked) : frac_bits_(frac_bits) {}
  friend constexpr QFormat make_qformat_unchecked(int);

  int frac_bits_ = 11;
};

constexpr QFormat make_qformat_unchecked(int frac_bits) {
  return QFormat(frac_bits, QFormat::Unchecked{});
}

inline constexpr QFormat kQ5_11 = make_qformat_unchecked(11);
inline constexpr QFormat kQ2_14 = make_qformat_unchecked(14);
inline constexpr QFormat kQ9_7 = make_qformat_unchecked(7);
inline constexpr QFormat kActivationFormat = kQ5_11;

struct FxpScalar {
  std::int16_t raw = 0;
  QFormat fmt;

  double value() const;
  friend bool operator==(const FxpScalar&, const FxpScalar&) = default;
};

// Exact sum of 16x16-bit products. frac_bits is the sum of the operand
// formats' fractional bits. Every product is bounded by 2^30 in magnitude,
// so 2^32 products fit in the int64 raw without overflow; the largest layer
// in scope has a fan-in of 6272.
struct Accumulator {
  std::int64_t raw = 0;
  int frac_bits = 0;

  double value() const;
  friend bool operator==(const Accumulator&, const Accumulator&) = default;
};

inline constexpr std::int64_t kMaxExactProducts = std::int64_t{1} << 32;

// Nearest representable value, ties to even, saturating. *saturated is set
// (never cleared) when x lies outside the format range or is NaN.
FxpScalar quantize(double x, QFormat fmt, bool* saturated = nullptr);
std::int16_t quantize_raw(double x, QFormat fmt, bool* saturated = nullptr);

inline double dequantize(FxpScalar x) { return x.value(); }
double dequantize_raw(std::int16_t raw, QFormat fmt);

// acc.raw += a.raw * b.raw. Throws FormatError if acc.frac_bits differs from
// a.fmt.frac_bits + b.fmt.frac_bits.
Accumulator mac(Accumulator acc, FxpScalar a, FxpScalar b);

// Single rounding (ties to even) followed by saturation into out_fmt.
FxpScalar requantize(Accumulator acc, QFormat out_fmt, bool* saturated = nullptr);

// Integer helpers shared by the kernels.

// round(value * 2^-shift) with ties to even, for shift >= 0. For shift < 0
// shifts left (exact). Callers guarantee no int64 overflow.
std::int64_t shift_round_even(std::int64_t value, int shift);

inline std::int16_t saturate16(std::int64_t v, bool* saturated = nullptr) {
  if (v > kRawMax) {
    if (saturated) *saturated = true;
    return static_cast<std::int16_t>(kRawMax);
  }
  if (v < kRawMin) {
    if (saturated) *saturated = true;
    return static_cast<std::int16_t>(kRawMin);
  }
  return static_cast<std::int16_t>(v);
}

// Re-express raw from one format in another (one rounding, saturating).
std::int16_t convert_raw(std::int16_t raw, QFormat from, QFormat to, bool* saturated = nullptr);

// Same-format addition with saturation.
std::int16_t saturating_add(std::int16_t a, std::int16_t b, bool* saturated = nullptr);

}  // namespace nanonav::fxp
