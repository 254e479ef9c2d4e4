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

#include <string_view>

#include "nanonav/kernels.hpp"
#include "nanonav/model.hpp"
#include "nanonav/tensor.hpp"

namespace nanonav {

enum class Mode { kFloat, kFixed };

// "float" or "fxp".
Mode parse_mode(std::string_view text);
const char* mode_name(Mode mode);

struct InferenceResult {
  // Steering head output, returned unclamped.
  double theta_steer = 0.0;
  double p_coll = 0.5;
  double steer_logit = 0.0;
  double collision_logit = 0.0;
};

// Runs the trunk and both heads. In fixed-point mode the input is quantized
// to g.input_fmt(), every layer runs on raws, and the sigmoid is evaluated in
// double precision on the dequantized collision logit.
InferenceResult infer(const NetworkGraph& g, const FloatTensor& input, Mode mode,
                      const kernels::RunOptions& options = {});

// Trunk output only (used by calibration and the tiled executor tests).
FloatTensor run_trunk(const NetworkGraph& g, const FloatTensor& input, const kernels::RunOptions& options = {});
FxpTensor run_trunk(const NetworkGraph& g, const FxpTensor& input, const kernels::RunOptions& options = {});

}  // namespace nanonav
