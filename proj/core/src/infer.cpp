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

#include "nanonav/infer.hpp"

#include "nanonav/error.hpp"

namespace nanonav {

Mode parse_mode(std::string_view text) {
  if (text == "float") return Mode::kFloat;
  if (text == "fxp" || text == "fixed") return Mode::kFixed;
  throw Error("unknown inference mode '" + std::string(text) + "' (expected float or fxp)");
}

const char* mode_name(Mode mode) { return mode == Mode::kFloat ? "float" : "fxp"; }

namespace {

std::span<const Layer> trunk_layers(const NetworkGraph& g) {
  return std::span<const Layer>(g.layers().data(), g.trunk_size());
}

const Layer& sigmoid_layer(const NetworkGraph& g) { return g.layers()[g.heads().collision + 1]; }

}  // namespace

FloatTensor run_trunk(const NetworkGraph& g, const FloatTensor& input, const kernels::RunOptions& options) {
  if (!(input.shape == g.input_shape())) {
    throw ShapeError("input " + input.shape.str() + " does not match network input " + g.input_shape().str());
  }
  return kernels::forward(trunk_layers(g), input, options);
}

FxpTensor run_trunk(const NetworkGraph& g, const FxpTensor& input, const kernels::RunOptions& options) {
  if (!(input.shape == g.input_shape())) {
    throw ShapeError("input " + input.shape.str() + " does not match network input " + g.input_shape().str());
  }
  return kernels::forward(trunk_layers(g), input, options);
}

InferenceResult infer(const NetworkGraph& g, const FloatTensor& input, Mode mode,
                      const kernels::RunOptions& options) {
  const auto& layers = g.layers();
  const Layer& steer = layers[g.heads().steer];
  const Layer& coll = layers[g.heads().collision];
  InferenceResult r;
  if (mode == Mode::kFloat) {
    const FloatTensor features = run_trunk(g, input, options);
    r.steer_logit = kernels::forward(steer, features, options).data[0];
    const FloatTensor logit = kernels::forward(coll, features, options);
    r.collision_logit = logit.data[0];
    // Fires the sigmoid callback like any other layer.
    r.p_coll = kernels::forward(sigmoid_layer(g), logit, options).data[0];
  } else {
    if (!g.quantized()) throw FormatError("fixed-point inference needs a folded, quantized model");
    std::size_t input_sat = 0;
    const FxpTensor q = quantize_tensor(input, g.input_fmt(), &input_sat);
    const FxpTensor features = run_trunk(g, q, options);
    const FxpTensor steer_out = kernels::forward(steer, features, options);
    const FxpTensor coll_out = kernels::forward(coll, features, options);
    r.steer_logit = steer_out.value(0, 0, 0);
    r.collision_logit = coll_out.value(0, 0, 0);
    r.p_coll = kernels::sigmoid(r.collision_logit);
    if (options.on_float) {
      FloatTensor p(TensorShape{1, 1, 1}, {r.p_coll});
      options.on_float(sigmoid_layer(g), p);
    }
  }
  r.theta_steer = r.steer_logit;
  return r;
}

}  // namespace nanonav
