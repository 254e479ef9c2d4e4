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

#include "nanonav/model.hpp"

#include <cmath>
#include <random>
#include <set>

#include "nanonav/error.hpp"

namespace nanonav {

void BNParams::validate() const {
  const auto n = gamma.size();
  if (bn_shift.size() != n || mu.size() != n || sigma.size() != n) {
    throw GraphError("BatchNorm parameter arrays have unequal lengths");
  }
  if (n == 0) throw GraphError("BatchNorm has no channels");
  for (std::size_t c = 0; c < n; ++c) {
    if (!(sigma[c] > 0.0)) {
      throw GraphError("BatchNorm sigma[" + std::to_string(c) + "] must be > 0");
    }
  }
}

BNParams BNParams::identity(std::size_t channels) {
  return BNParams{std::vector<double>(channels, 1.0), std::vector<double>(channels, 0.0),
                  std::vector<double>(channels, 0.0), std::vector<double>(channels, 1.0)};
}

TensorShape Conv2D::output_shape(const TensorShape& in) const {
  if (in.channels != in_ch) {
    throw ShapeError("conv expects " + std::to_string(in_ch) + " input channels, got " + in.str());
  }
  const int eff_h = in.height + 2 * padding;
  const int eff_w = in.width + 2 * padding;
  if (eff_h < kernel_h || eff_w < kernel_w) {
    throw ShapeError("conv kernel larger than padded input " + in.str());
  }
  return TensorShape{out_ch, (eff_h - kernel_h) / stride + 1, (eff_w - kernel_w) / stride + 1};
}

Conv2D Conv2D::make(int in_ch, int out_ch, int kernel, int stride, int padding) {
  Conv2D c;
  c.kernel_h = c.kernel_w = kernel;
  c.stride = stride;
  c.padding = padding;
  c.in_ch = in_ch;
  c.out_ch = out_ch;
  c.weights.assign(c.weight_count(), 0.0);
  c.bias.assign(static_cast<std::size_t>(out_ch), 0.0);
  return c;
}

FullyConnected FullyConnected::make(int in_dim, int out_dim) {
  FullyConnected f;
  f.in_dim = in_dim;
  f.out_dim = out_dim;
  f.weights.assign(static_cast<std::size_t>(in_dim) * out_dim, 0.0);
  f.bias.assign(static_cast<std::size_t>(out_dim), 0.0);
  return f;
}

bool operator==(const ResBlock& a, const ResBlock& b) {
  return a.main == b.main && a.bypass == b.bypass && a.post == b.post;
}

const char* layer_kind(const LayerOp& op) {
  struct Kind {
    const char* operator()(const Conv2D&) const { return "conv2d"; }
    const char* operator()(const MaxPool&) const { return "maxpool2x2"; }
    const char* operator()(const ReLUQuant&) const { return "relu_quant"; }
    const char* operator()(const BatchNorm&) const { return "batchnorm"; }
    const char* operator()(const FullyConnected&) const { return "fully_connected"; }
    const char* operator()(const Sigmoid&) const { return "sigmoid"; }
    const char* operator()(const ResBlock&) const { return "resblock"; }
  };
  return std::visit(Kind{}, op);
}

namespace {

void check_param_format(const std::vector<double>& values, const std::optional<fxp::QFormat>& fmt,
                        const std::string& what) {
  if (!fmt) return;
  for (double v : values) {
    if (fxp::dequantize_raw(fxp::quantize_raw(v, *fmt), *fmt) != v) {
      throw GraphError(what + " holds a value not representable in " + fmt->name());
    }
  }
}

TensorShape chain_shapes(const std::vector<Layer>& layers, TensorShape shape) {
  for (const auto& layer : layers) shape = layer_output_shape(layer, shape);
  return shape;
}

}  // namespace

TensorShape layer_output_shape(const Layer& layer, const TensorShape& in) {
  check_shape(in);
  struct Visitor {
    const TensorShape& in;
    const Layer& layer;

    std::string where() const { return " in layer '" + layer.name + "'"; }

    TensorShape operator()(const Conv2D& c) const {
      if (c.kernel_h < 1 || c.kernel_w < 1 || c.stride < 1 || c.padding < 0 || c.in_ch < 1 ||
          c.out_ch < 1) {
        throw GraphError("invalid conv geometry" + where());
      }
      if (c.weights.size() != c.weight_count() || c.bias.size() != static_cast<std::size_t>(c.out_ch)) {
        throw GraphError("conv parameter length mismatch" + where());
      }
      check_param_format(c.weights, c.weight_fmt, "conv weights" + where());
      check_param_format(c.bias, c.bias_fmt, "conv bias" + where());
      try {
        return c.output_shape(in);
      } catch (const ShapeError& e) {
        throw ShapeError(e.what() + where());
      }
    }
    TensorShape operator()(const MaxPool&) const {
      if (in.height % 2 != 0 || in.width % 2 != 0) {
        throw ShapeError("maxpool2x2 needs even height/width, got " + in.str() + where());
      }
      return TensorShape{in.channels, in.height / 2, in.width / 2};
    }
    TensorShape operator()(const ReLUQuant&) const { return in; }
    TensorShape operator()(const BatchNorm& bn) const {
      try {
        bn.params.validate();
      } catch (const GraphError& e) {
        throw GraphError(e.what() + where());
      }
      if (bn.params.channels() != static_cast<std::size_t>(in.channels)) {
        throw ShapeError("batchnorm has " + std::to_string(bn.params.channels()) +
                         " channels, input is " + in.str() + where());
      }
      return in;
    }
    TensorShape operator()(const FullyConnected& f) const {
      if (f.in_dim < 1 || f.out_dim < 1) throw GraphError("invalid FC dims" + where());
      if (f.weights.size() != static_cast<std::size_t>(f.in_dim) * f.out_dim ||
          f.bias.size() != static_cast<std::size_t>(f.out_dim)) {
        throw GraphError("FC parameter length mismatch" + where());
      }
      check_param_format(f.weights, f.weight_fmt, "FC weights" + where());
      check_param_format(f.bias, f.bias_fmt, "FC bias" + where());
      if (in.size() != static_cast<std::size_t>(f.in_dim)) {
        throw ShapeError("FC expects " + std::to_string(f.in_dim) + " inputs, got " + in.str() +
                         where());
      }
      return TensorShape{f.out_dim, 1, 1};
    }
    TensorShape operator()(const Sigmoid&) const { return in; }
    TensorShape operator()(const ResBlock& rb) const {
      const TensorShape main_out = chain_shapes(rb.main, in);
      const TensorShape bypass_out = chain_shapes(rb.bypass, in);
      if (!(main_out == bypass_out)) {
        throw ShapeError("resblock branch shapes differ: main " + main_out.str() + ", bypass " +
                         bypass_out.str() + where());
      }
      return main_out;
    }
  };
  return std::visit(Visitor{in, layer}, layer.op);
}

namespace {

void assign_names(std::vector<Layer>& layers, const std::string& prefix, std::set<std::string>& seen) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& layer = layers[i];
    if (layer.name.empty()) layer.name = prefix + std::to_string(i);
    if (!seen.insert(layer.name).second) throw GraphError("duplicate layer name '" + layer.name + "'");
    if (auto* rb = std::get_if<ResBlock>(&layer.op)) {
      assign_names(rb->main, layer.name + ".main", seen);
      assign_names(rb->bypass, layer.name + ".bypass", seen);
    }
  }
}

bool any_layer(const std::vector<Layer>& layers, const std::function<bool(const Layer&)>& pred) {
  for (const auto& layer : layers) {
    if (pred(layer)) return true;
    if (const auto* rb = std::get_if<ResBlock>(&layer.op)) {
      if (any_layer(rb->main, pred) || any_layer(rb->bypass, pred)) return true;
    }
  }
  return false;
}

}  // namespace

NetworkGraph::NetworkGraph(TensorShape input_shape, std::vector<Layer> layers, HeadIndex heads,
                           fxp::QFormat input_fmt)
    : input_shape_(input_shape), input_fmt_(input_fmt), layers_(std::move(layers)), heads_(heads) {
  check_shape(input_shape_);
  std::set<std::string> seen;
  assign_names(layers_, "L", seen);

  const std::size_t n = layers_.size();
  if (heads_.steer >= n || heads_.collision >= n || heads_.steer == heads_.collision) {
    throw GraphError("head indices out of range or identical");
  }
  const std::size_t trunk = trunk_size();
  if (n != trunk + 3) {
    throw GraphError("graph must end with the two heads and the collision sigmoid");
  }
  if (heads_.collision + 1 >= n || !layers_[heads_.collision + 1].is<Sigmoid>()) {
    throw GraphError("collision head must be followed by a Sigmoid");
  }
  for (std::size_t head : {heads_.steer, heads_.collision}) {
    if (!layers_[head].is<FullyConnected>() || layers_[head].as<FullyConnected>().out_dim != 1) {
      throw GraphError("heads must be FullyConnected layers with one output");
    }
  }
  for (std::size_t i = 0; i < trunk; ++i) {
    if (layers_[i].is<Sigmoid>()) throw GraphError("Sigmoid is only allowed after the collision head");
  }

  trunk_output_ = input_shape_;
  for (std::size_t i = 0; i < trunk; ++i) trunk_output_ = layer_output_shape(layers_[i], trunk_output_);
  (void)layer_output_shape(layers_[heads_.steer], trunk_output_);
  (void)layer_output_shape(layers_[heads_.collision], trunk_output_);
}

bool NetworkGraph::has_batchnorm() const {
  return any_layer(layers_, [](const Layer& l) { return l.is<BatchNorm>(); });
}

bool NetworkGraph::quantized() const {
  if (has_batchnorm()) return false;
  return !any_layer(layers_, [](const Layer& l) {
    if (const auto* c = std::get_if<Conv2D>(&l.op)) return !c->quantized();
    if (const auto* f = std::get_if<FullyConnected>(&l.op)) return !f->quantized();
    return false;
  });
}

namespace {

void visit_sequence(const std::vector<Layer>& layers, TensorShape shape, const LayerVisitor& fn) {
  for (const auto& layer : layers) {
    const TensorShape out = layer_output_shape(layer, shape);
    fn(layer, shape, out);
    if (const auto* rb = std::get_if<ResBlock>(&layer.op)) {
      visit_sequence(rb->main, shape, fn);
      visit_sequence(rb->bypass, shape, fn);
    }
    shape = out;
  }
}

}  // namespace

void visit_layers(const NetworkGraph& g, const LayerVisitor& fn) {
  const auto& layers = g.layers();
  const std::size_t trunk = g.trunk_size();
  std::vector<Layer> trunk_layers(layers.begin(), layers.begin() + static_cast<std::ptrdiff_t>(trunk));
  visit_sequence(trunk_layers, g.input_shape(), fn);
  const TensorShape head_in = g.trunk_output_shape();
  for (std::size_t i = trunk; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    const TensorShape in = layer.is<Sigmoid>() ? TensorShape{1, 1, 1} : head_in;
    fn(layer, in, layer_output_shape(layer, in));
  }
}

std::uint64_t layer_mac_count(const Layer& layer, const TensorShape& in) {
  if (const auto* c = std::get_if<Conv2D>(&layer.op)) {
    const TensorShape out = c->output_shape(in);
    return static_cast<std::uint64_t>(out.size()) * static_cast<std::uint64_t>(c->fan_in());
  }
  if (const auto* f = std::get_if<FullyConnected>(&layer.op)) {
    return static_cast<std::uint64_t>(f->in_dim) * static_cast<std::uint64_t>(f->out_dim);
  }
  return 0;
}

std::uint64_t mac_count(const NetworkGraph& g) {
  std::uint64_t total = 0;
  visit_layers(g, [&](const Layer& layer, const TensorShape& in, const TensorShape&) {
    total += layer_mac_count(layer, in);
  });
  return total;
}

std::uint64_t param_count(const NetworkGraph& g) {
  std::uint64_t total = 0;
  visit_layers(g, [&](const Layer& layer, const TensorShape&, const TensorShape&) {
    if (const auto* c = std::get_if<Conv2D>(&layer.op)) total += c->weights.size() + c->bias.size();
    if (const auto* f = std::get_if<FullyConnected>(&layer.op)) total += f->weights.size() + f->bias.size();
    if (const auto* bn = std::get_if<BatchNorm>(&layer.op)) total += 4 * bn->params.channels();
  });
  return total;
}

std::vector<ShapeRecord> trace_shapes(const NetworkGraph& g) {
  std::vector<ShapeRecord> records;
  visit_layers(g, [&](const Layer& layer, const TensorShape& in, const TensorShape& out) {
    records.push_back(ShapeRecord{layer.name, layer_kind(layer.op), in, out});
  });
  return records;
}

namespace {

class ParamInit {
 public:
  explicit ParamInit(std::uint64_t seed, double gain) : rng_(seed), gain_(gain) {}

  void conv(Conv2D& c) {
    std::normal_distribution<double> w(0.0, gain_ * std::sqrt(2.0 / c.fan_in()));
    std::uniform_real_distribution<double> b(-0.05, 0.05);
    for (auto& v : c.weights) v = w(rng_);
    for (auto& v : c.bias) v = b(rng_);
  }

  void fc(FullyConnected& f) {
    std::normal_distribution<double> w(0.0, gain_ * std::sqrt(1.0 / f.in_dim));
    for (auto& v : f.weights) v = w(rng_);
    for (auto& v : f.bias) v = 0.0;
  }

  BatchNorm bn(int channels) {
    std::uniform_real_distribution<double> scale(0.8, 1.2);
    std::uniform_real_distribution<double> offset(-0.1, 0.1);
    BNParams p;
    for (int c = 0; c < channels; ++c) {
      p.gamma.push_back(scale(rng_));
      p.bn_shift.push_back(offset(rng_));
      p.mu.push_back(offset(rng_));
      p.sigma.push_back(scale(rng_));
    }
    return BatchNorm{std::move(p)};
  }

 private:
  std::mt19937_64 rng_;
  double gain_;
};

Layer res_block(ParamInit& init, const std::string& name, int in_ch, int out_ch, bool batch_norm,
                bool trailing_relu) {
  ResBlock rb;
  auto conv_a = Conv2D::make(in_ch, out_ch, 3, 2, 1);
  auto conv_b = Conv2D::make(out_ch, out_ch, 3, 1, 1);
  auto bypass = Conv2D::make(in_ch, out_ch, 1, 2, 0);
  init.conv(conv_a);
  init.conv(conv_b);
  init.conv(bypass);
  if (batch_norm) rb.main.emplace_back(name + ".bn_a", init.bn(in_ch));
  rb.main.emplace_back(name + ".relu_a", ReLUQuant{});
  rb.main.emplace_back(name + ".conv_a", std::move(conv_a));
  if (batch_norm) rb.main.emplace_back(name + ".bn_b", init.bn(out_ch));
  rb.main.emplace_back(name + ".relu_b", ReLUQuant{});
  rb.main.emplace_back(name + ".conv_b", std::move(conv_b));
  rb.bypass.emplace_back(name + ".bypass", std::move(bypass));
  if (trailing_relu) rb.post = ReLUQuant{};
  return Layer(name, std::move(rb));
}

}  // namespace

NetworkGraph build_dronet(const DronetOptions& options) {
  ParamInit init(options.seed, options.weight_gain);
  std::vector<Layer> layers;

  auto conv1 = Conv2D::make(1, 32, 5, 2, 2);
  init.conv(conv1);
  layers.emplace_back("conv1", std::move(conv1));
  layers.emplace_back("pool1", MaxPool{});
  layers.push_back(res_block(init, "res1", 32, 32, options.batch_norm, false));
  layers.push_back(res_block(init, "res2", 32, 64, options.batch_norm, false));
  layers.push_back(res_block(init, "res3", 64, 128, options.batch_norm, true));

  constexpr int kFlat = 128 * 7 * 7;
  auto steer = FullyConnected::make(kFlat, 1);
  auto coll = FullyConnected::make(kFlat, 1);
  init.fc(steer);
  init.fc(coll);
  const std::size_t trunk = layers.size();
  layers.emplace_back("fc_steer", std::move(steer));
  layers.emplace_back("fc_coll", std::move(coll));
  layers.emplace_back("sigmoid", Sigmoid{});

  return NetworkGraph(TensorShape{1, kDronetInputSize, kDronetInputSize}, std::move(layers),
                      HeadIndex{trunk, trunk + 1});
}

}  // namespace nanonav
