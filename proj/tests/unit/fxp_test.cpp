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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "nanonav/error.hpp"
#include "oracles.hpp"

namespace nanonav::fxp {
namespace {

using testing::ref_clamp16;
using testing::ref_quantize;
using testing::ref_round_shift;
using testing::Rng;

TEST(QFormat, ActivationFormatSpansSixteen) {
  EXPECT_EQ(kQ5_11.int_bits(), 5);
  EXPECT_EQ(kQ5_11.frac_bits(), 11);
  EXPECT_DOUBLE_EQ(kQ5_11.step(), 1.0 / 2048.0);
  EXPECT_DOUBLE_EQ(kQ5_11.min_value(), -16.0);
  EXPECT_DOUBLE_EQ(kQ5_11.max_value(), 16.0 - 1.0 / 2048.0);
  EXPECT_EQ(QFormat{}, kActivationFormat);
}

TEST(QFormat, WeightFormatsSpanTwoAndTwoFiftySix) {
  EXPECT_DOUBLE_EQ(kQ2_14.min_value(), -2.0);
  EXPECT_DOUBLE_EQ(kQ2_14.max_value(), 2.0 - std::ldexp(1.0, -14));
  EXPECT_DOUBLE_EQ(kQ9_7.min_value(), -256.0);
}

TEST(QFormat, NameParseRoundTrip) {
  for (int n = 0; n <= 15; ++n) {
    const QFormat f(n);
    EXPECT_EQ(QFormat::parse(f.name()), f) << f.name();
  }
  EXPECT_EQ(kQ5_11.name(), "Q5.11");
}

TEST(QFormat, RejectsBadInput) {
  EXPECT_THROW(QFormat(16), FormatError);
  EXPECT_THROW(QFormat(-1), FormatError);
  EXPECT_THROW(QFormat::parse("Q4.11"), FormatError);
  EXPECT_THROW(QFormat::parse("Q5.x"), FormatError);
  EXPECT_THROW(QFormat::parse("5.11"), FormatError);
  EXPECT_THROW(QFormat::parse(""), FormatError);
}

TEST(Quantize, TiesGoToEven) {
  // 0.5 and 1.5 steps in Q15.1 -> raw 0.25*2=0.5 -> 0, 0.75*2 = 1.5 -> 2.
  EXPECT_EQ(quantize_raw(0.25, QFormat(1)), 0);
  EXPECT_EQ(quantize_raw(0.75, QFormat(1)), 2);
  EXPECT_EQ(quantize_raw(-0.25, QFormat(1)), 0);
  EXPECT_EQ(quantize_raw(-0.75, QFormat(1)), -2);
  EXPECT_EQ(quantize_raw(2.5 / 2048.0, kQ5_11), 2);
  EXPECT_EQ(quantize_raw(3.5 / 2048.0, kQ5_11), 4);
}

TEST(Quantize, SaturatesAndFlags) {
  bool sat = false;
  EXPECT_EQ(quantize_raw(16.0, kQ5_11, &sat), 32767);
  EXPECT_TRUE(sat);
  sat = false;
  EXPECT_EQ(quantize_raw(-16.0, kQ5_11, &sat), -32768);
  EXPECT_FALSE(sat);
  EXPECT_EQ(quantize_raw(-17.0, kQ5_11, &sat), -32768);
  EXPECT_TRUE(sat);
  sat = false;
  EXPECT_EQ(quantize_raw(std::numeric_limits<double>::quiet_NaN(), kQ5_11, &sat), 0);
  EXPECT_TRUE(sat);
  sat = false;
  EXPECT_EQ(quantize_raw(std::numeric_limits<double>::infinity(), kQ5_11, &sat), 32767);
  EXPECT_TRUE(sat);
}

TEST(QuantizeProperty, MatchesFloorFractionOracle) {
  Rng rng(7);
  for (int i = 0; i < 200000; ++i) {
    const int n = testing::uniform_int(rng, 0, 15);
    const QFormat f(n);
    double x = testing::uniform(rng, 1.2 * f.min_value(), 1.2 * f.max_value());
    if (i % 3 == 0) x = (std::floor(std::ldexp(x, n)) + 0.5) * std::ldexp(1.0, -n);  // exact tie
    EXPECT_EQ(quantize_raw(x, f), ref_quantize(x, n)) << x << " " << f.name();
  }
}

TEST(QuantizeProperty, InRangeErrorIsHalfStep) {
  Rng rng(8);
  for (int i = 0; i < 100000; ++i) {
    const QFormat f(testing::uniform_int(rng, 0, 15));
    const double x = testing::uniform(rng, f.min_value(), f.max_value());
    bool sat = false;
    const double back = dequantize(quantize(x, f, &sat));
    EXPECT_FALSE(sat);
    EXPECT_LE(std::abs(back - x), f.step() / 2);
  }
}

TEST(Mac, ExactAndFormatChecked) {
  Accumulator acc{0, 25};
  acc = mac(acc, FxpScalar{3, kQ5_11}, FxpScalar{-7, kQ2_14});
  acc = mac(acc, FxpScalar{32767, kQ5_11}, FxpScalar{32767, kQ2_14});
  EXPECT_EQ(acc.raw, -21 + std::int64_t{32767} * 32767);
  EXPECT_THROW(mac(acc, FxpScalar{1, kQ5_11}, FxpScalar{1, kQ5_11}), FormatError);
}

TEST(ShiftRoundEvenProperty, MatchesDivisionOracle) {
  Rng rng(9);
  std::uniform_int_distribution<std::int64_t> big(-(std::int64_t{1} << 45), std::int64_t{1} << 45);
  for (int i = 0; i < 200000; ++i) {
    const int s = testing::uniform_int(rng, 0, 30);
    std::int64_t v = big(rng);
    if (i % 4 == 0 && s > 0) v = (v >> s << s) + (std::int64_t{1} << (s - 1));  // exact half
    EXPECT_EQ(shift_round_even(v, s), ref_round_shift(v, s)) << v << " >> " << s;
  }
  EXPECT_EQ(shift_round_even(3, -2), 12);
}

TEST(RequantizeProperty, SingleRoundingThenClamp) {
  Rng rng(10);
  std::uniform_int_distribution<std::int64_t> acc(-(std::int64_t{1} << 40), std::int64_t{1} << 40);
  for (int i = 0; i < 100000; ++i) {
    const int af = testing::uniform_int(rng, 0, 30);
    const QFormat out(testing::uniform_int(rng, 0, 15));
    const std::int64_t raw = acc(rng) >> testing::uniform_int(rng, 0, 30);
    bool sat = false;
    const auto q = requantize(Accumulator{raw, af}, out, &sat);
    const std::int64_t exact = ref_round_shift(raw, af - out.frac_bits());
    EXPECT_EQ(q.raw, ref_clamp16(exact));
    EXPECT_EQ(sat, exact != ref_clamp16(exact));
  }
}

TEST(RequantizeProperty, DequantizedErrorBound) {
  Rng rng(11);
  std::uniform_int_distribution<std::int64_t> acc(-(std::int64_t{1} << 34), std::int64_t{1} << 34);
  for (int i = 0; i < 50000; ++i) {
    const int af = 25;
    const std::int64_t raw = acc(rng);
    bool sat = false;
    const auto q = requantize(Accumulator{raw, af}, kQ5_11, &sat);
    if (!sat) EXPECT_LE(std::abs(q.value() - std::ldexp(static_cast<double>(raw), -af)), kQ5_11.step() / 2);
  }
}

TEST(ConvertRaw, MatchesQuantizeOfValue) {
  Rng rng(12);
  for (int i = 0; i < 50000; ++i) {
    const QFormat from(testing::uniform_int(rng, 0, 15));
    const QFormat to(testing::uniform_int(rng, 0, 15));
    const auto raw = static_cast<std::int16_t>(testing::uniform_int(rng, -32768, 32767));
    EXPECT_EQ(convert_raw(raw, from, to), ref_quantize(dequantize_raw(raw, from), to.frac_bits()));
  }
}

TEST(SaturatingAdd, ClampsAndFlags) {
  bool sat = false;
  EXPECT_EQ(saturating_add(30000, 3000, &sat), 32767);
  EXPECT_TRUE(sat);
  sat = false;
  EXPECT_EQ(saturating_add(-30000, -3000, &sat), -32768);
  EXPECT_TRUE(sat);
  sat = false;
  EXPECT_EQ(saturating_add(100, -300, &sat), -200);
  EXPECT_FALSE(sat);
}

}  // namespace
}  // namespace nanonav::fxp
