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

// Typed network description, the DroNet topology builder and workload
// accounting.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nanonav/fxp.hpp"
#include "nanonav/tensor.hpp"

namespace nanonav {

// Per-channel batch-norm parameters: y = gamma / sigma * (x - mu) + bn_shift.
// sigma is the running standard deviation with any epsilon already folded in.
struct BNParams {
  std::vector<double> gamma;
  std::vector<double> bn_shift;
  std::vector<double> mu;
  std::vector<double> sigma;

  std::size_t channels() const { return gamma.size(); }
  // Throws GraphError on length mismatch or sigma <= 0.
  void validate() const;
  static BNParams identity(std::size_t channels);

  friend bool operator==(const BNParams&, const BNParams&) = default;
};

// Cross-correlation with zero padding. weights are [out_ch][in_ch][kh][kw].
// The optional formats are set once the layer has been quantized; from then
// on every weight/bias value is exactly representable in its format.
struct Conv2D {
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  int padding = 0;
  int in_ch = 1;
  int out_ch = 1;
  std::vector<double> weights;
  std::vector<double> bias;
  std::optional<fxp::QFormat> weight_fmt;
  std::optional<fxp::QFormat> bias_fmt;
  std::optional<fxp::QFormat> out_fmt;

  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_ch) * in_ch * kernel_h * kernel_w;
  }
  std::size_t weight_index(int oc, int ic, int ky, int kx) const {
    return ((static_cast<std::size_t>(oc) * in_ch + ic) * kernel_h + ky) * kernel_w + kx;
  }
  bool quantized() const { return weight_fmt && bias_fmt && out_fmt; }
  int fan_in() const { return in_ch * kernel_h * kernel_w; }
  TensorShape output_shape(const TensorShape& in) const;

  // Zero-initialized parameters.
  static Conv2D make(int in_ch, int out_ch, int kernel, int stride, int padding);

  friend bool operator==(const Conv2D&, const Conv2D&) = default;
};

// 2x2 window, stride 2.
struct MaxPool {
  friend bool operator==(const MaxPool&, const MaxPool&) = default;
};

// max(0, x) clamped to the positive bound of out_fmt.
struct ReLUQuant {
  fxp::QFormat out_fmt = fxp::kActivationFormat;
  friend bool operator==(const ReLUQuant&, const ReLUQuant&) = default;
};

struct BatchNorm {
  BNParams params;
  friend bool operator==(const BatchNorm&, const BatchNorm&) = default;
};

// Consumes its input flattened in CHW order. weights are [out_dim][in_dim].
struct FullyConnected {
  int in_dim = 1;
  int out_dim = 1;
  std::vector<double> weights;
  std::vector<double> bias;
  std::optional<fxp::QFormat> weight_fmt;
  std::optional<fxp::QFormat> bias_fmt;
  std::optional<fxp::QFormat> out_fmt;

  bool quantized() const { return weight_fmt && bias_fmt && out_fmt; }
  static FullyConnected make(int in_dim, int out_dim);

  friend bool operator==(const FullyConnected&, const FullyConnected&) = default;
};

struct Sigmoid {
  friend bool operator==(const Sigmoid&, const Sigmoid&) = default;
};

struct Layer;

// Output is main(x) + bypass(x), followed by the optional trailing ReLU. An
// empty bypass is the identity.
struct ResBlock {
  std::vector<Layer> main;
  std::vector<Layer> bypass;
  std::optional<ReLUQuant> post;

  friend bool operator==(const ResBlock&, const ResBlock&);
};

using LayerOp = std::variant<Conv2D, MaxPool, ReLUQuant, BatchNorm, FullyConnected, Sigmoid, ResBlock>;

struct Layer {
  std::string name;
  LayerOp op;

  Layer() = default;
  template <typename Op>
  Layer(std::string n, Op o) : name(std::move(n)), op(std::move(o)) {}

  template <typename Op>
  bool is() const { return std::holds_alternative<Op>(op); }
  template <typename Op>
  const Op& as() const { return std::get<Op>(op); }
  template <typename Op>
  Op& as() { return std::get<Op>(op); }

  friend bool operator==(const Layer&, const Layer&) = default;
};

const char* layer_kind(const LayerOp& op);

// Output shape of one layer; throws ShapeError when the input does not fit.
TensorShape layer_output_shape(const Layer& layer, const TensorShape& in);

struct HeadIndex {
  std::size_t steer = 0;
  std::size_t collision = 0;
  friend bool operator==(const HeadIndex&, const HeadIndex&) = default;
};

// A trunk followed by two scalar heads on the trunk output: the steering head
// (a linear FullyConnected) and the collision head (FullyConnected then
// Sigmoid). The constructor validates the whole shape chain, so every
// NetworkGraph object is consistent. Unnamed layers get path names ("L3",
// "L3.main1") and names must be unique.
class NetworkGraph {
 public:
  NetworkGraph(TensorShape input_shape, std::vector<Layer> layers, HeadIndex heads,
               fxp::QFormat input_fmt = fxp::kActivationFormat);

  const TensorShape& input_shape() const { return input_shape_; }
  fxp::QFormat input_fmt() const { return input_fmt_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const HeadIndex& heads() const { return heads_; }

  std::size_t trunk_size() const { return std::min(heads_.steer, heads_.collision); }
  const TensorShape& trunk_output_shape() const { return trunk_output_; }
  const FullyConnected& steer_head() const { return layers_[heads_.steer].as<FullyConnected>(); }
  const FullyConnected& collision_head() const {
    return layers_[heads_.collision].as<FullyConnected>();
  }

  // True when every conv/FC carries Q-formats and no BatchNorm remains.
  bool quantized() const;
  bool has_batchnorm() const;

  friend bool operator==(const NetworkGraph&, const NetworkGraph&) = default;

 private:
  TensorShape input_shape_;
  fxp::QFormat input_fmt_;
  std::vector<Layer> layers_;
  HeadIndex heads_;
  TensorShape trunk_output_;
};

// Visits every layer depth-first (ResBlock before its branches) with the
// shape flowing into it.
using LayerVisitor = std::function<void(const Layer&, const TensorShape& in, const TensorShape& out)>;
void visit_layers(const NetworkGraph& g, const LayerVisitor& fn);

struct DronetOptions {
  bool batch_norm = true;
  std::uint64_t seed = 1;
  // Multiplies the He-style weight initialization.
  double weight_gain = 1.0;
};

// 1x200x200 input; conv 5x5/2 (32); maxpool 2x2; three residual blocks
// 32->32, 32->64, 64->128 with 3x3 main convs and a 1x1/2 bypass; two
// 6272->1 heads, the collision head followed by a sigmoid. Parameters are
// drawn from a seeded generator; the topology is fixed.
NetworkGraph build_dronet(const DronetOptions& options = {});

inline constexpr int kDronetInputSize = 200;

std::uint64_t mac_count(const NetworkGraph& g);
std::uint64_t layer_mac_count(const Layer& layer, const TensorShape& in);

// Conv/FC weights and biases plus the four BatchNorm vectors per channel.
std::uint64_t param_count(const NetworkGraph& g);
inline std::uint64_t param_bytes16(const NetworkGraph& g) { return 2 * param_count(g); }

struct ShapeRecord {
  std::string name;
  std::string kind;
  TensorShape in;
  TensorShape out;
};
std::vector<ShapeRecord> trace_shapes(const NetworkGraph& g);

}  // namespace nanonav
