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

#include "nanonav/fxp.hpp"

#include <cassert>
#include <cmath>
#include <charconv>

#include "nanonav/error.hpp"

namespace nanonav::fxp {

QFormat::QFormat(int frac_bits) : frac_bits_(frac_bits) {
  if (frac_bits < 0 || frac_bits >= kTotalBits) {
    throw FormatError("Q-format frac_bits must be in [0, 15], got " + std::to_string(frac_bits));
  }
}

double QFormat::step() const { return std::ldexp(1.0, -frac_bits_); }

double QFormat::min_value() const { return std::ldexp(static_cast<double>(kRawMin), -frac_bits_); }

double QFormat::max_value() const { return std::ldexp(static_cast<double>(kRawMax), -frac_bits_); }

std::string QFormat::name() const {
  return "Q" + std::to_string(int_bits()) + "." + std::to_string(frac_bits_);
}

QFormat QFormat::parse(std::string_view text) {
  auto fail = [&] { return FormatError("malformed Q-format '" + std::string(text) + "'"); };
  if (text.size() < 4 || (text[0] != 'Q' && text[0] != 'q')) throw fail();
  const auto dot = text.find('.');
  if (dot == std::string_view::npos) throw fail();
  int int_part = 0;
  int frac_part = 0;
  const char* begin = text.data();
  auto r1 = std::from_chars(begin + 1, begin + dot, int_part);
  auto r2 = std::from_chars(begin + dot + 1, begin + text.size(), frac_part);
  if (r1.ec != std::errc{} || r1.ptr != begin + dot || r2.ec != std::errc{} ||
      r2.ptr != begin + text.size()) {
    throw fail();
  }
  if (int_part + frac_part != kTotalBits) throw fail();
  return QFormat(frac_part);
}

double FxpScalar::value() const { return dequantize_raw(raw, fmt); }

double Accumulator::value() const { return std::ldexp(static_cast<double>(raw), -frac_bits); }

double dequantize_raw(std::int16_t raw, QFormat fmt) {
  return std::ldexp(static_cast<double>(raw), -fmt.frac_bits());
}

std::int16_t quantize_raw(double x, QFormat fmt, bool* saturated) {
  if (std::isnan(x)) {
    if (saturated) *saturated = true;
    return 0;
  }
  // Scaling by a power of two is exact; nearbyint uses the default
  // round-to-nearest-even mode.
  const double scaled = std::ldexp(x, fmt.frac_bits());
  if (scaled >= static_cast<double>(kRawMax) + 0.5) {
    if (saturated) *saturated = true;
    return static_cast<std::int16_t>(kRawMax);
  }
  if (scaled < static_cast<double>(kRawMin) - 0.5) {
    if (saturated) *saturated = true;
    return static_cast<std::int16_t>(kRawMin);
  }
  const double rounded = std::nearbyint(scaled);
  return saturate16(static_cast<std::int64_t>(rounded), saturated);
}

FxpScalar quantize(double x, QFormat fmt, bool* saturated) {
  return FxpScalar{quantize_raw(x, fmt, saturated), fmt};
}

Accumulator mac(Accumulator acc, FxpScalar a, FxpScalar b) {
  if (acc.frac_bits != a.fmt.frac_bits() + b.fmt.frac_bits()) {
    throw FormatError("accumulator frac_bits " + std::to_string(acc.frac_bits) +
                      " does not match operands " + a.fmt.name() + " x " + b.fmt.name());
  }
  const std::int64_t product = std::int64_t{a.raw} * std::int64_t{b.raw};
  assert(!(product > 0 && acc.raw > std::numeric_limits<std::int64_t>::max() - product));
  assert(!(product < 0 && acc.raw < std::numeric_limits<std::int64_t>::min() - product));
  acc.raw += product;
  return acc;
}

std::int64_t shift_round_even(std::int64_t value, int shift) {
  if (shift <= 0) return value * (std::int64_t{1} << -shift);
  assert(shift < 63);
  const std::int64_t q = value >> shift;  // floor division
  const std::int64_t r = value - (q * (std::int64_t{1} << shift));
  const std::int64_t half = std::int64_t{1} << (shift - 1);
  if (r > half || (r == half && (q & 1) != 0)) return q + 1;
  return q;
}

FxpScalar requantize(Accumulator acc, QFormat out_fmt, bool* saturated) {
  const int shift = acc.frac_bits - out_fmt.frac_bits();
  std::int64_t v;
  if (shift >= 0) {
    v = shift_round_even(acc.raw, shift);
  } else {
    // Left shift: saturate before it could overflow.
    const int up = -shift;
    const std::int64_t limit = std::int64_t{1} << (62 - up);
    if (acc.raw >= limit || acc.raw <= -limit) {
      v = acc.raw > 0 ? kRawMax + 1 : kRawMin - 1;
    } else {
      v = acc.raw * (std::int64_t{1} << up);
    }
  }
  return FxpScalar{saturate16(v, saturated), out_fmt};
}

std::int16_t convert_raw(std::int16_t raw, QFormat from, QFormat to, bool* saturated) {
  if (from == to) return raw;
  return requantize(Accumulator{raw, from.frac_bits()}, to, saturated).raw;
}

std::int16_t saturating_add(std::int16_t a, std::int16_t b, bool* saturated) {
  return saturate16(std::int64_t{a} + std::int64_t{b}, saturated);
}

}  // namespace nanonav::fxp
