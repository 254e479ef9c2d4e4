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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nanonav/fxp.hpp"

namespace nanonav {

struct TensorShape {
  int channels = 1;
  int height = 1;
  int width = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(width);
  }
  bool valid() const { return channels >= 1 && height >= 1 && width >= 1; }
  std::string str() const;

  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

// Throws ShapeError if any dimension is < 1.
void check_shape(const TensorShape& shape);

// Dense CHW tensor. Element type is double for the float path and int16_t
// (with one QFormat) for the fixed-point path.
template <typename T>
struct BasicTensor {
  TensorShape shape;
  std::vector<T> data;

  BasicTensor() = default;
  explicit BasicTensor(TensorShape s) : shape(s), data(s.size()) { check_shape(s); }
  BasicTensor(TensorShape s, std::vector<T> values) : shape(s), data(std::move(values)) {
    check_shape(s);
    check_size();
  }

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * shape.height + y) * shape.width + x;
  }
  T& at(int c, int y, int x) { return data[index(c, y, x)]; }
  const T& at(int c, int y, int x) const { return data[index(c, y, x)]; }
  std::size_t size() const { return data.size(); }

  void check_size() const;
};

struct FloatTensor : BasicTensor<double> {
  using BasicTensor::BasicTensor;
  friend bool operator==(const FloatTensor&, const FloatTensor&) = default;
};

struct FxpTensor : BasicTensor<std::int16_t> {
  fxp::QFormat fmt;

  FxpTensor() = default;
  FxpTensor(TensorShape s, fxp::QFormat f) : BasicTensor(s), fmt(f) {}
  FxpTensor(TensorShape s, fxp::QFormat f, std::vector<std::int16_t> raw)
      : BasicTensor(s, std::move(raw)), fmt(f) {}

  double value(int c, int y, int x) const { return fxp::dequantize_raw(at(c, y, x), fmt); }
  friend bool operator==(const FxpTensor&, const FxpTensor&) = default;
};

// Quantize elementwise; returns the number of saturated elements via *saturations.
FxpTensor quantize_tensor(const FloatTensor& t, fxp::QFormat fmt, std::size_t* saturations = nullptr);
FloatTensor dequantize_tensor(const FxpTensor& t);

}  // namespace nanonav
