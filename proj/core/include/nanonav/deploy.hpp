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

// Deployment compiler: batch-norm folding (including the compensating
// inverse fold on residual bypass convolutions), activation range
// calibration, and Q-format assignment.

#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nanonav/fxp.hpp"
#include "nanonav/model.hpp"
#include "nanonav/tensor.hpp"

namespace nanonav::deploy {

// BN(conv(x)) == fold_bn(conv, bn)(x):
//   w'[oc] = gamma/sigma * w[oc],  b'[oc] = bn_shift + gamma/sigma * (b[oc] - mu)
// bn is indexed by output channel. Throws FoldError on sigma <= 0 or a size
// mismatch.
Conv2D fold_bn(const Conv2D& conv, const BNParams& bn);

// For a bypass conv whose input has been replaced by BN(x) through an
// upstream fold, returns conv'' with conv''(BN(x)) == conv'(x):
//   w''[.,ic] = sigma/gamma * w'[.,ic]
//   b''[oc]   = b'[oc] + sum_ic (mu[ic] - bn_shift[ic] * sigma[ic]/gamma[ic]) * sum_taps w'[oc,ic]
// bn is indexed by input channel. Throws FoldError if gamma has a zero, on a
// size mismatch, or if the conv is padded (padded taps would see zeros in
// the normalized domain).
Conv2D inverse_fold_bn(const Conv2D& bypass, const BNParams& bn);

struct FoldReport {
  std::size_t batchnorms_folded = 0;
  std::size_t bypass_inverse_folds = 0;
  std::vector<std::string> log;
};

// Removes every BatchNorm. Residual blocks are processed in order: the
// block-entry BN at the head of the main branch is folded into the layer
// producing the block input (through a MaxPool when its scale is positive,
// or into both final convs of a preceding block), the bypass conv is
// inverse-folded, and the remaining main-branch BNs fold into their
// preceding convs. A BN-free graph is returned unchanged. Throws FoldError
// for a BN without a foldable predecessor.
NetworkGraph fold_network(const NetworkGraph& g, FoldReport* report = nullptr);

struct Range {
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();

  bool empty() const { return min > max; }
  void include(double v) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  void merge(const Range& o) {
    if (o.min < min) min = o.min;
    if (o.max > max) max = o.max;
  }
  friend bool operator==(const Range&, const Range&) = default;
};

// Keyed by layer name; "input" is the network input and "<block>.sum" the
// residual sum of a block before its trailing ReLU.
using RangeTable = std::map<std::string, Range>;
inline constexpr const char* kInputTensor = "input";
std::string sum_tensor(const std::string& block_name);

// Running min/max of every activation over the images (float execution).
// Throws CalibrationError when images is empty.
RangeTable calibrate_ranges(const NetworkGraph& g, std::span<const FloatTensor> images, std::size_t workers = 1);

void save_ranges(const RangeTable& ranges, const std::filesystem::path& path);
RangeTable load_ranges(const std::filesystem::path& path);

// Activation format: Q5.11 whenever it covers the range, otherwise the
// covering format with the most fractional bits. Throws RangeError when no
// 16-bit format covers it.
fxp::QFormat activation_format(const Range& range);

// Covering format with the most fractional bits, at most max_frac_bits.
fxp::QFormat parameter_format(double lo, double hi, int max_frac_bits);

struct AssignOptions {
  int max_weight_frac_bits = 14;
};

// Quantizes a folded float graph: every conv/FC gets weight, bias and output
// formats, ReLUs get output formats, and all parameters are replaced by their
// quantized values. Throws FoldError if BatchNorm remains, CalibrationError if
// a tensor has no calibrated range.
NetworkGraph assign_qformats(const NetworkGraph& g, const RangeTable& ranges, const AssignOptions& options = {});

struct LayerQuantInfo {
  std::string name;
  std::string kind;
  std::string weight_fmt;
  std::string bias_fmt;
  std::string out_fmt;
  Range range;
  std::size_t saturations = 0;
};

// Per-layer formats and ranges; saturation counts come from fixed-point runs
// over images (may be empty).
std::vector<LayerQuantInfo> quantization_report(const NetworkGraph& quantized, const RangeTable& ranges,
                                                std::span<const FloatTensor> images);
std::string format_report(const std::vector<LayerQuantInfo>& rows);

}  // namespace nanonav::deploy
