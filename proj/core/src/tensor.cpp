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

#include "nanonav/tensor.hpp"

#include "nanonav/error.hpp"

namespace nanonav {

std::string TensorShape::str() const {
  return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
}

void check_shape(const TensorShape& shape) {
  if (!shape.valid()) throw ShapeError("invalid tensor shape " + shape.str());
}

template <typename T>
void BasicTensor<T>::check_size() const {
  if (data.size() != shape.size()) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                     shape.str());
  }
}

template struct BasicTensor<double>;
template struct BasicTensor<std::int16_t>;

FxpTensor quantize_tensor(const FloatTensor& t, fxp::QFormat fmt, std::size_t* saturations) {
  FxpTensor out(t.shape, fmt);
  std::size_t count = 0;
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    bool sat = false;
    out.data[i] = fxp::quantize_raw(t.data[i], fmt, &sat);
    count += sat ? 1 : 0;
  }
  if (saturations) *saturations += count;
  return out;
}

FloatTensor dequantize_tensor(const FxpTensor& t) {
  FloatTensor out(t.shape);
  for (std::size_t i = 0; i < t.data.size(); ++i) out.data[i] = fxp::dequantize_raw(t.data[i], t.fmt);
  return out;
}

}  // namespace nanonav
