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

#include "nanonav/metrics.hpp"

#include <cmath>
#include <string>

#include "nanonav/error.hpp"

namespace nanonav::harness {

namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

}  // namespace

EvalMetrics evaluate(const std::vector<Prediction>& predictions, const std::vector<Label>& labels, double threshold) {
  if (predictions.size() != labels.size()) {
    throw EvalError("prediction count " + std::to_string(predictions.size()) + " does not match label count " +
                    std::to_string(labels.size()));
  }
  if (labels.empty()) throw EvalError("cannot evaluate an empty set");

  const std::size_t n = labels.size();
  std::vector<double> y(n);
  std::vector<double> err(n);
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t correct = 0;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i].collision != 0 && labels[i].collision != 1) {
      throw EvalError("collision label at row " + std::to_string(i) + " is not 0 or 1");
    }
    y[i] = labels[i].steer;
    err[i] = labels[i].steer - predictions[i].steer;
    sq += err[i] * err[i];
    const bool predicted = predictions[i].p_coll >= threshold;
    const bool actual = labels[i].collision == 1;
    correct += predicted == actual ? 1 : 0;
    tp += predicted && actual ? 1 : 0;
    fp += predicted && !actual ? 1 : 0;
    fn += !predicted && actual ? 1 : 0;
  }
  const double var_y = variance(y);
  if (var_y == 0.0) throw EvalError("steering labels have zero variance; explained variance is undefined");

  EvalMetrics m;
  m.samples = n;
  m.eva = 1.0 - variance(err) / var_y;
  m.rmse = std::sqrt(sq / static_cast<double>(n));
  m.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

}  // namespace nanonav::harness
