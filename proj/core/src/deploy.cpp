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

#include "nanonav/deploy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "nanonav/container.hpp"
#include "nanonav/error.hpp"
#include "nanonav/infer.hpp"
#include "nanonav/kernels.hpp"
#include "nanonav/parallel.hpp"

namespace nanonav::deploy {

namespace {

void check_bn(const BNParams& bn, std::size_t channels, const char* what) {
  const auto n = bn.gamma.size();
  if (bn.bn_shift.size() != n || bn.mu.size() != n || bn.sigma.size() != n) {
    throw FoldError(std::string(what) + ": BatchNorm arrays have unequal lengths");
  }
  if (n != channels) {
    throw FoldError(std::string(what) + ": BatchNorm has " + std::to_string(n) + " channels, conv has " +
                    std::to_string(channels));
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (!(bn.sigma[c] > 0.0)) throw FoldError(std::string(what) + ": sigma must be > 0");
  }
}

}  // namespace

Conv2D fold_bn(const Conv2D& conv, const BNParams& bn) {
  check_bn(bn, static_cast<std::size_t>(conv.out_ch), "fold_bn");
  Conv2D out = conv;
  out.weight_fmt.reset();
  out.bias_fmt.reset();
  out.out_fmt.reset();
  const std::size_t per_oc = static_cast<std::size_t>(conv.in_ch) * conv.kernel_h * conv.kernel_w;
  for (int oc = 0; oc < conv.out_ch; ++oc) {
    const double scale = bn.gamma[oc] / bn.sigma[oc];
    for (std::size_t i = oc * per_oc; i < (oc + 1) * per_oc; ++i) out.weights[i] = scale * conv.weights[i];
    out.bias[oc] = bn.bn_shift[oc] + scale * (conv.bias[oc] - bn.mu[oc]);
  }
  return out;
}

Conv2D inverse_fold_bn(const Conv2D& bypass, const BNParams& bn) {
  check_bn(bn, static_cast<std::size_t>(bypass.in_ch), "inverse_fold_bn");
  for (double g : bn.gamma) {
    if (g == 0.0) throw FoldError("inverse_fold_bn: gamma contains zero");
  }
  if (bypass.padding != 0) throw FoldError("inverse_fold_bn: bypass conv must be unpadded");
  Conv2D out = bypass;
  out.weight_fmt.reset();
  out.bias_fmt.reset();
  out.out_fmt.reset();
  for (int oc = 0; oc < bypass.out_ch; ++oc) {
    double correction = 0.0;
    for (int ic = 0; ic < bypass.in_ch; ++ic) {
      const double inv = bn.sigma[ic] / bn.gamma[ic];
      double tap_sum = 0.0;
      for (int ky = 0; ky < bypass.kernel_h; ++ky) {
        for (int kx = 0; kx < bypass.kernel_w; ++kx) {
          const auto idx = bypass.weight_index(oc, ic, ky, kx);
          tap_sum += bypass.weights[idx];
          out.weights[idx] = inv * bypass.weights[idx];
        }
      }
      correction += bn.mu[ic] * tap_sum - bn.bn_shift[ic] * inv * tap_sum;
    }
    out.bias[oc] = bypass.bias[oc] + correction;
  }
  return out;
}

namespace {

class Folder {
 public:
  explicit Folder(FoldReport& report) : report_(report) {}

  std::vector<Layer> fold_sequence(const std::vector<Layer>& layers) {
    std::vector<Layer> emitted;
    for (const auto& layer : layers) {
      if (const auto* bn = std::get_if<BatchNorm>(&layer.op)) {
        fold_into_producer(emitted, bn->params, layer.name);
        ++report_.batchnorms_folded;
      } else if (const auto* rb = std::get_if<ResBlock>(&layer.op)) {
        emitted.emplace_back(layer.name, fold_block(emitted, *rb, layer.name));
      } else {
        emitted.push_back(layer);
      }
    }
    return emitted;
  }

 private:
  ResBlock fold_block(std::vector<Layer>& emitted, const ResBlock& rb, const std::string& name) {
    std::vector<Layer> main(rb.main.begin(), rb.main.end());
    std::vector<Layer> bypass = rb.bypass;
    if (!main.empty() && main.front().is<BatchNorm>()) {
      const Layer entry = main.front();
      const BNParams& bn = entry.as<BatchNorm>().params;
      main.erase(main.begin());
      fold_into_producer(emitted, bn, entry.name);
      ++report_.batchnorms_folded;
      if (bypass.empty() || !bypass.front().is<Conv2D>()) {
        throw FoldError(entry.name + ": block '" + name +
                        "' normalizes its main-branch input but has no bypass conv to inverse-fold");
      }
      bypass.front().as<Conv2D>() = inverse_fold_bn(bypass.front().as<Conv2D>(), bn);
      ++report_.bypass_inverse_folds;
      report_.log.push_back("inverse-folded " + entry.name + " out of " + bypass.front().name);
    }
    ResBlock out;
    out.main = fold_sequence(main);
    out.bypass = fold_sequence(bypass);
    out.post = rb.post;
    return out;
  }

  void fold_into_producer(std::vector<Layer>& emitted, const BNParams& bn, const std::string& bn_name) {
    for (auto it = emitted.rbegin(); it != emitted.rend(); ++it) {
      Layer& l = *it;
      if (auto* conv = std::get_if<Conv2D>(&l.op)) {
        *conv = fold_bn(*conv, bn);
        report_.log.push_back("folded " + bn_name + " into " + l.name);
        return;
      }
      if (l.is<MaxPool>()) {
        for (std::size_t c = 0; c < bn.channels(); ++c) {
          if (!(bn.gamma[c] / bn.sigma[c] > 0.0)) {
            throw FoldError(bn_name + ": cannot fold through maxpool '" + l.name +
                            "' with a non-positive BN scale");
          }
        }
        continue;
      }
      if (auto* rb = std::get_if<ResBlock>(&l.op)) {
        if (rb->post) {
          throw FoldError(bn_name + ": producer block '" + l.name + "' ends with a ReLU");
        }
        if (rb->bypass.empty()) {
          throw FoldError(bn_name + ": producer block '" + l.name + "' has an identity bypass");
        }
        // BN(m + p) = (s*m + shift - s*mu) + s*p: the full BN folds into the
        // main branch, the bare scale into the bypass.
        BNParams scale_only{bn.gamma, std::vector<double>(bn.channels(), 0.0),
                            std::vector<double>(bn.channels(), 0.0), bn.sigma};
        fold_into_producer(rb->main, bn, bn_name);
        fold_into_producer(rb->bypass, scale_only, bn_name);
        return;
      }
      throw FoldError(bn_name + ": cannot fold through " + layer_kind(l.op) + " '" + l.name + "'");
    }
    throw FoldError(bn_name + ": BatchNorm has no foldable predecessor");
  }

  FoldReport& report_;
};

}  // namespace

NetworkGraph fold_network(const NetworkGraph& g, FoldReport* report) {
  FoldReport local;
  FoldReport& r = report ? *report : local;
  if (!g.has_batchnorm()) return g;
  Folder folder(r);
  const auto& layers = g.layers();
  const std::size_t trunk = g.trunk_size();
  std::vector<Layer> trunk_layers(layers.begin(), layers.begin() + static_cast<std::ptrdiff_t>(trunk));
  std::vector<Layer> folded = folder.fold_sequence(trunk_layers);
  const std::size_t new_trunk = folded.size();
  folded.insert(folded.end(), layers.begin() + static_cast<std::ptrdiff_t>(trunk), layers.end());
  HeadIndex heads{g.heads().steer - trunk + new_trunk, g.heads().collision - trunk + new_trunk};
  return NetworkGraph(g.input_shape(), std::move(folded), heads, g.input_fmt());
}

std::string sum_tensor(const std::string& block_name) { return block_name + ".sum"; }

namespace {

void record(RangeTable& table, const std::string& key, const FloatTensor& t) {
  auto& r = table[key];
  for (double v : t.data) r.include(v);
}

FloatTensor calibrate_sequence(std::span<const Layer> layers, FloatTensor x, RangeTable& table) {
  for (const auto& layer : layers) {
    if (const auto* rb = std::get_if<ResBlock>(&layer.op)) {
      FloatTensor main = calibrate_sequence(rb->main, x, table);
      const FloatTensor bypass = calibrate_sequence(rb->bypass, x, table);
      for (std::size_t i = 0; i < main.data.size(); ++i) main.data[i] += bypass.data[i];
      record(table, sum_tensor(layer.name), main);
      x = rb->post ? kernels::relu_quant(main, rb->post->out_fmt) : std::move(main);
    } else {
      x = kernels::forward(layer, x);
    }
    record(table, layer.name, x);
  }
  return x;
}

void calibrate_one(const NetworkGraph& g, const FloatTensor& image, RangeTable& table) {
  if (!(image.shape == g.input_shape())) {
    throw ShapeError("calibration image " + image.shape.str() + " does not match input " + g.input_shape().str());
  }
  record(table, kInputTensor, image);
  const auto& layers = g.layers();
  const FloatTensor features =
      calibrate_sequence(std::span<const Layer>(layers.data(), g.trunk_size()), image, table);
  for (std::size_t head : {g.heads().steer, g.heads().collision}) {
    const FloatTensor out = kernels::forward(layers[head], features);
    record(table, layers[head].name, out);
    if (head == g.heads().collision) record(table, layers[head + 1].name, kernels::sigmoid(out));
  }
}

}  // namespace

RangeTable calibrate_ranges(const NetworkGraph& g, std::span<const FloatTensor> images, std::size_t workers) {
  if (images.empty()) throw CalibrationError("calibration set is empty");
  const std::size_t n = std::max<std::size_t>(1, std::min(workers, images.size()));
  std::vector<RangeTable> partial(n);
  std::vector<std::string> errors(n);
  parallel_for(n, n, [&](std::size_t wb, std::size_t we) {
    for (std::size_t w = wb; w < we; ++w) {
      try {
        for (std::size_t i = images.size() * w / n; i < images.size() * (w + 1) / n; ++i) {
          calibrate_one(g, images[i], partial[w]);
        }
      } catch (const std::exception& e) {
        errors[w] = e.what();
      }
    }
  });
  for (const auto& e : errors) {
    if (!e.empty()) throw CalibrationError(e);
  }
  RangeTable merged;
  for (const auto& table : partial) {
    for (const auto& [key, range] : table) merged[key].merge(range);
  }
  return merged;
}

void save_ranges(const RangeTable& ranges, const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, r] : ranges) j[key] = {{"min", r.min}, {"max", r.max}};
  const std::string text = nlohmann::json{{"ranges", j}}.dump(2) + "\n";
  write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

RangeTable load_ranges(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  RangeTable table;
  try {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    for (const auto& [key, r] : j.at("ranges").items()) {
      table[key] = Range{r.at("min").get<double>(), r.at("max").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw CalibrationError("malformed range table " + path.string() + ": " + e.what());
  }
  return table;
}

fxp::QFormat activation_format(const Range& range) {
  if (range.empty()) throw CalibrationError("empty activation range");
  if (fxp::kActivationFormat.covers(range.min, range.max)) return fxp::kActivationFormat;
  for (int f = fxp::kActivationFormat.frac_bits() - 1; f >= 0; --f) {
    const fxp::QFormat fmt(f);
    if (fmt.covers(range.min, range.max)) return fmt;
  }
  throw RangeError("activation range [" + std::to_string(range.min) + ", " + std::to_string(range.max) +
                   "] exceeds every 16-bit format");
}

fxp::QFormat parameter_format(double lo, double hi, int max_frac_bits) {
  for (int f = std::min(max_frac_bits, fxp::kTotalBits - 1); f >= 0; --f) {
    const fxp::QFormat fmt(f);
    if (fmt.covers(lo, hi)) return fmt;
  }
  throw RangeError("parameter range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                   "] exceeds every 16-bit format");
}

namespace {

std::pair<double, double> extrema(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return {*lo, *hi};
}

void quantize_values(std::vector<double>& v, fxp::QFormat fmt) {
  for (auto& x : v) x = fxp::dequantize_raw(fxp::quantize_raw(x, fmt), fmt);
}

class Assigner {
 public:
  Assigner(const RangeTable& ranges, const AssignOptions& options) : ranges_(ranges), options_(options) {}

  const Range& range(const std::string& key) const {
    const auto it = ranges_.find(key);
    if (it == ranges_.end() || it->second.empty()) {
      throw CalibrationError("no calibrated range for tensor '" + key + "'");
    }
    return it->second;
  }

  template <typename Linear>
  fxp::QFormat linear(Linear& layer, const std::string& name, fxp::QFormat in_fmt) {
    const auto [wlo, whi] = extrema(layer.weights);
    const auto [blo, bhi] = extrema(layer.bias);
    try {
      layer.weight_fmt = parameter_format(wlo, whi, options_.max_weight_frac_bits);
      const int acc_frac = in_fmt.frac_bits() + layer.weight_fmt->frac_bits();
      layer.bias_fmt = parameter_format(blo, bhi, std::min(options_.max_weight_frac_bits, acc_frac));
      layer.out_fmt = activation_format(range(name));
    } catch (const RangeError& e) {
      throw RangeError("layer '" + name + "': " + e.what());
    }
    quantize_values(layer.weights, *layer.weight_fmt);
    quantize_values(layer.bias, *layer.bias_fmt);
    return *layer.out_fmt;
  }

  fxp::QFormat sequence(std::vector<Layer>& layers, fxp::QFormat fmt) {
    for (auto& layer : layers) fmt = one(layer, fmt);
    return fmt;
  }

  fxp::QFormat one(Layer& layer, fxp::QFormat in_fmt) {
    if (auto* c = std::get_if<Conv2D>(&layer.op)) return linear(*c, layer.name, in_fmt);
    if (auto* f = std::get_if<FullyConnected>(&layer.op)) return linear(*f, layer.name, in_fmt);
    if (auto* r = std::get_if<ReLUQuant>(&layer.op)) {
      r->out_fmt = activation_format(range(layer.name));
      return r->out_fmt;
    }
    if (layer.is<BatchNorm>()) throw FoldError("layer '" + layer.name + "': fold BatchNorm before quantization");
    if (auto* rb = std::get_if<ResBlock>(&layer.op)) {
      fxp::QFormat sum_fmt = sequence(rb->main, in_fmt);
      (void)sequence(rb->bypass, in_fmt);
      // The residual add happens in the main branch's output format.
      if (!rb->main.empty()) {
        Layer& last = rb->main.back();
        Range r = range(last.name);
        r.merge(range(sum_tensor(layer.name)));
        const fxp::QFormat f = activation_format(r);
        if (auto* c = std::get_if<Conv2D>(&last.op)) {
          c->out_fmt = f;
          sum_fmt = f;
        } else if (auto* relu = std::get_if<ReLUQuant>(&last.op)) {
          relu->out_fmt = f;
          sum_fmt = f;
        }
      }
      if (rb->post) {
        rb->post->out_fmt = activation_format(range(layer.name));
        return rb->post->out_fmt;
      }
      return sum_fmt;
    }
    return in_fmt;  // MaxPool, Sigmoid
  }

 private:
  const RangeTable& ranges_;
  const AssignOptions& options_;
};

}  // namespace

NetworkGraph assign_qformats(const NetworkGraph& g, const RangeTable& ranges, const AssignOptions& options) {
  if (g.has_batchnorm()) throw FoldError("assign_qformats needs a folded graph");
  Assigner assigner(ranges, options);
  const fxp::QFormat input_fmt = activation_format(assigner.range(kInputTensor));
  std::vector<Layer> layers = g.layers();
  const std::size_t trunk = g.trunk_size();
  std::vector<Layer> trunk_layers(layers.begin(), layers.begin() + static_cast<std::ptrdiff_t>(trunk));
  const fxp::QFormat feature_fmt = assigner.sequence(trunk_layers, input_fmt);
  std::copy(trunk_layers.begin(), trunk_layers.end(), layers.begin());
  for (std::size_t i = trunk; i < layers.size(); ++i) (void)assigner.one(layers[i], feature_fmt);
  return NetworkGraph(g.input_shape(), std::move(layers), g.heads(), input_fmt);
}

namespace {

template <typename Linear>
void fill_formats(LayerQuantInfo& row, const Linear& l) {
  if (l.weight_fmt) row.weight_fmt = l.weight_fmt->name();
  if (l.bias_fmt) row.bias_fmt = l.bias_fmt->name();
  if (l.out_fmt) row.out_fmt = l.out_fmt->name();
}

}  // namespace

std::vector<LayerQuantInfo> quantization_report(const NetworkGraph& quantized, const RangeTable& ranges,
                                                std::span<const FloatTensor> images) {
  std::map<std::string, std::size_t> saturations;
  if (!images.empty()) {
    kernels::RunOptions options;
    options.on_fxp = [&](const Layer& layer, const FxpTensor&, std::size_t sat) { saturations[layer.name] += sat; };
    for (const auto& image : images) (void)infer(quantized, image, Mode::kFixed, options);
  }
  std::vector<LayerQuantInfo> rows;
  visit_layers(quantized, [&](const Layer& layer, const TensorShape&, const TensorShape&) {
    LayerQuantInfo row;
    row.name = layer.name;
    row.kind = layer_kind(layer.op);
    if (const auto* c = std::get_if<Conv2D>(&layer.op)) fill_formats(row, *c);
    if (const auto* f = std::get_if<FullyConnected>(&layer.op)) fill_formats(row, *f);
    if (const auto* r = std::get_if<ReLUQuant>(&layer.op)) row.out_fmt = r->out_fmt.name();
    if (const auto* rb = std::get_if<ResBlock>(&layer.op); rb && rb->post) row.out_fmt = rb->post->out_fmt.name();
    if (const auto it = ranges.find(layer.name); it != ranges.end()) row.range = it->second;
    if (const auto it = saturations.find(layer.name); it != saturations.end()) row.saturations = it->second;
    rows.push_back(std::move(row));
  });
  return rows;
}

std::string format_report(const std::vector<LayerQuantInfo>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "layer" << std::setw(16) << "kind" << std::setw(8) << "weight"
     << std::setw(8) << "bias" << std::setw(8) << "out" << std::setw(26) << "range"
     << "saturations\n";
  for (const auto& r : rows) {
    std::ostringstream range;
    if (!r.range.empty()) range << std::setprecision(5) << "[" << r.range.min << ", " << r.range.max << "]";
    os << std::left << std::setw(16) << r.name << std::setw(16) << r.kind << std::setw(8)
       << (r.weight_fmt.empty() ? "-" : r.weight_fmt) << std::setw(8) << (r.bias_fmt.empty() ? "-" : r.bias_fmt)
       << std::setw(8) << (r.out_fmt.empty() ? "-" : r.out_fmt) << std::setw(26) << range.str()
       << r.saturations << "\n";
  }
  return os.str();
}

}  // namespace nanonav::deploy
