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

// Steering regression and collision classification metrics.

#include <vector>

namespace nanonav::harness {

struct Prediction {
  double steer = 0.0;
  double p_coll = 0.0;
};

struct Label {
  double steer = 0.0;
  int collision = 0;  // 0 or 1
};

struct EvalMetrics {
  double eva = 0.0;
  double rmse = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t samples = 0;
};

// p_coll >= threshold counts as a positive. Throws EvalError on a length
// mismatch, empty input, a label outside {0,1} or zero steering variance.
EvalMetrics evaluate(const std::vector<Prediction>& predictions, const std::vector<Label>& labels,
                     double threshold = 0.5);

}  // namespace nanonav::harness
