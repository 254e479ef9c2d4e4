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

#include "nanonav/container.hpp"

#include <bit>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

#include "nanonav/error.hpp"

namespace nanonav {

using nlohmann::json;
namespace fs = std::filesystem;

void append_q16le(std::vector<std::uint8_t>& out, std::span<const std::int16_t> values) {
  out.reserve(out.size() + 2 * values.size());
  for (std::int16_t v : values) {
    const auto u = static_cast<std::uint16_t>(v);
    out.push_back(static_cast<std::uint8_t>(u & 0xFF));
    out.push_back(static_cast<std::uint8_t>(u >> 8));
  }
}

void append_f64le(std::vector<std::uint8_t>& out, std::span<const double> values) {
  out.reserve(out.size() + 8 * values.size());
  for (double v : values) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
  }
}

std::vector<std::int16_t> decode_q16le(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 2 != 0) throw BlobLengthError("q16le blob length is odd");
  std::vector<std::int16_t> out(bytes.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto u = static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
    out[i] = static_cast<std::int16_t>(u);
  }
  return out;
}

std::vector<double> decode_f64le(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 8 != 0) throw BlobLengthError("f64le blob length is not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) u |= std::uint64_t{bytes[8 * i + b]} << (8 * b);
    out[i] = std::bit_cast<double>(u);
  }
  return out;
}

std::vector<double> decode_f32le(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 4 != 0) throw BlobLengthError("f32le blob length is not a multiple of 4");
  std::vector<double> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= std::uint32_t{bytes[4 * i + b]} << (8 * b);
    out[i] = static_cast<double>(std::bit_cast<float>(u));
  }
  return out;
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing " + path.string());
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

namespace {

json fmt_json(const std::optional<fxp::QFormat>& fmt) {
  return fmt ? json(fmt->frac_bits()) : json(nullptr);
}

class BlobWriter {
 public:
  json tensor(std::span<const double> values, const std::optional<fxp::QFormat>& fmt) {
    json t;
    t["offset"] = blob_.size();
    t["count"] = values.size();
    if (fmt) {
      std::vector<std::int16_t> raw(values.size());
      for (std::size_t i = 0; i < values.size(); ++i) raw[i] = fxp::quantize_raw(values[i], *fmt);
      append_q16le(blob_, raw);
      t["dtype"] = "q16le";
      t["frac_bits"] = fmt->frac_bits();
    } else {
      append_f64le(blob_, values);
      t["dtype"] = "f64le";
    }
    t["length"] = blob_.size() - t["offset"].get<std::size_t>();
    return t;
  }

  json layers(const std::vector<Layer>& layers) {
    json arr = json::array();
    for (const auto& l : layers) arr.push_back(layer(l));
    return arr;
  }

  json layer(const Layer& l) {
    json j;
    j["name"] = l.name;
    j["kind"] = layer_kind(l.op);
    std::visit(
        [&](const auto& op) {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, Conv2D>) {
            j["kernel"] = {op.kernel_h, op.kernel_w};
            j["stride"] = op.stride;
            j["padding"] = op.padding;
            j["in_ch"] = op.in_ch;
            j["out_ch"] = op.out_ch;
            j["out_frac_bits"] = fmt_json(op.out_fmt);
            j["weights"] = tensor(op.weights, op.weight_fmt);
            j["bias"] = tensor(op.bias, op.bias_fmt);
          } else if constexpr (std::is_same_v<T, FullyConnected>) {
            j["in_dim"] = op.in_dim;
            j["out_dim"] = op.out_dim;
            j["out_frac_bits"] = fmt_json(op.out_fmt);
            j["weights"] = tensor(op.weights, op.weight_fmt);
            j["bias"] = tensor(op.bias, op.bias_fmt);
          } else if constexpr (std::is_same_v<T, ReLUQuant>) {
            j["out_frac_bits"] = op.out_fmt.frac_bits();
          } else if constexpr (std::is_same_v<T, BatchNorm>) {
            j["channels"] = op.params.channels();
            j["gamma"] = tensor(op.params.gamma, std::nullopt);
            j["bn_shift"] = tensor(op.params.bn_shift, std::nullopt);
            j["mu"] = tensor(op.params.mu, std::nullopt);
            j["sigma"] = tensor(op.params.sigma, std::nullopt);
          } else if constexpr (std::is_same_v<T, ResBlock>) {
            j["main"] = layers(op.main);
            j["bypass"] = layers(op.bypass);
            j["post"] = op.post ? json{{"out_frac_bits", op.post->out_fmt.frac_bits()}} : json(nullptr);
          }
        },
        l.op);
    return j;
  }

  const std::vector<std::uint8_t>& blob() const { return blob_; }

 private:
  std::vector<std::uint8_t> blob_;
};

class BlobReader {
 public:
  explicit BlobReader(std::vector<std::uint8_t> blob) : blob_(std::move(blob)) {}

  std::vector<double> tensor(const json& t, std::size_t expected_count,
                             std::optional<fxp::QFormat>* fmt_out, const std::string& what) {
    const auto offset = get<std::size_t>(t, "offset", what);
    const auto length = get<std::size_t>(t, "length", what);
    const auto count = get<std::size_t>(t, "count", what);
    const auto dtype = get<std::string>(t, "dtype", what);
    if (count != expected_count) {
      throw BlobLengthError(what + ": manifest count " + std::to_string(count) + " but layer needs " +
                            std::to_string(expected_count));
    }
    std::size_t elem = 0;
    if (dtype == "q16le") {
      elem = 2;
    } else if (dtype == "f64le") {
      elem = 8;
    } else if (dtype == "f32le") {
      elem = 4;
    } else {
      throw ManifestError(what + ": unsupported dtype '" + dtype + "'");
    }
    if (length != count * elem) {
      throw BlobLengthError(what + ": length " + std::to_string(length) + " does not match " +
                            std::to_string(count) + " x " + dtype);
    }
    if (offset > blob_.size() || length > blob_.size() - offset) {
      throw BlobLengthError(what + ": tensor [" + std::to_string(offset) + ", +" +
                            std::to_string(length) + ") exceeds weights.bin size " +
                            std::to_string(blob_.size()));
    }
    consumed_ = std::max(consumed_, offset + length);
    const std::span<const std::uint8_t> bytes(blob_.data() + offset, length);
    if (dtype == "q16le") {
      const fxp::QFormat fmt(get<int>(t, "frac_bits", what));
      if (fmt_out == nullptr) throw ManifestError(what + ": quantized dtype not allowed here");
      *fmt_out = fmt;
      const auto raw = decode_q16le(bytes);
      std::vector<double> values(raw.size());
      for (std::size_t i = 0; i < raw.size(); ++i) values[i] = fxp::dequantize_raw(raw[i], fmt);
      return values;
    }
    if (fmt_out) fmt_out->reset();
    return dtype == "f64le" ? decode_f64le(bytes) : decode_f32le(bytes);
  }

  std::vector<Layer> layers(const json& arr, const std::string& what) {
    if (!arr.is_array()) throw ManifestError(what + ": expected a layer array");
    std::vector<Layer> out;
    for (const auto& j : arr) out.push_back(layer(j));
    return out;
  }

  Layer layer(const json& j) {
    const auto name = get<std::string>(j, "name", "layer");
    const auto kind = get<std::string>(j, "kind", "layer '" + name + "'");
    const std::string what = "layer '" + name + "'";
    if (kind == "conv2d") {
      Conv2D c;
      const auto kernel = get<std::vector<int>>(j, "kernel", what);
      if (kernel.size() != 2) throw ManifestError(what + ": kernel must have two entries");
      c.kernel_h = kernel[0];
      c.kernel_w = kernel[1];
      c.stride = get<int>(j, "stride", what);
      c.padding = get<int>(j, "padding", what);
      c.in_ch = get<int>(j, "in_ch", what);
      c.out_ch = get<int>(j, "out_ch", what);
      if (c.kernel_h < 1 || c.kernel_w < 1 || c.in_ch < 1 || c.out_ch < 1) {
        throw ManifestError(what + ": invalid conv geometry");
      }
      c.out_fmt = opt_fmt(j, "out_frac_bits");
      c.weights = tensor(at(j, "weights", what), c.weight_count(), &c.weight_fmt, what + " weights");
      c.bias = tensor(at(j, "bias", what), static_cast<std::size_t>(c.out_ch), &c.bias_fmt, what + " bias");
      return Layer(name, std::move(c));
    }
    if (kind == "fully_connected") {
      FullyConnected f;
      f.in_dim = get<int>(j, "in_dim", what);
      f.out_dim = get<int>(j, "out_dim", what);
      if (f.in_dim < 1 || f.out_dim < 1) throw ManifestError(what + ": invalid FC dims");
      f.out_fmt = opt_fmt(j, "out_frac_bits");
      f.weights = tensor(at(j, "weights", what), static_cast<std::size_t>(f.in_dim) * f.out_dim,
                         &f.weight_fmt, what + " weights");
      f.bias = tensor(at(j, "bias", what), static_cast<std::size_t>(f.out_dim), &f.bias_fmt, what + " bias");
      return Layer(name, std::move(f));
    }
    if (kind == "maxpool2x2") return Layer(name, MaxPool{});
    if (kind == "sigmoid") return Layer(name, Sigmoid{});
    if (kind == "relu_quant") return Layer(name, ReLUQuant{fxp::QFormat(get<int>(j, "out_frac_bits", what))});
    if (kind == "batchnorm") {
      const auto n = get<std::size_t>(j, "channels", what);
      BNParams p;
      p.gamma = tensor(at(j, "gamma", what), n, nullptr, what + " gamma");
      p.bn_shift = tensor(at(j, "bn_shift", what), n, nullptr, what + " bn_shift");
      p.mu = tensor(at(j, "mu", what), n, nullptr, what + " mu");
      p.sigma = tensor(at(j, "sigma", what), n, nullptr, what + " sigma");
      return Layer(name, BatchNorm{std::move(p)});
    }
    if (kind == "resblock") {
      ResBlock rb;
      rb.main = layers(at(j, "main", what), what + " main");
      rb.bypass = layers(at(j, "bypass", what), what + " bypass");
      const auto& post = at(j, "post", what);
      if (!post.is_null()) rb.post = ReLUQuant{fxp::QFormat(get<int>(post, "out_frac_bits", what))};
      return Layer(name, std::move(rb));
    }
    throw UnknownLayerError(what + ": unknown layer kind '" + kind + "'");
  }

  std::size_t consumed() const { return consumed_; }
  std::size_t size() const { return blob_.size(); }

  static const json& at(const json& j, const char* key, const std::string& what) {
    if (!j.is_object() || !j.contains(key)) throw ManifestError(what + ": missing field '" + key + "'");
    return j.at(key);
  }

  template <typename T>
  static T get(const json& j, const char* key, const std::string& what) {
    try {
      return at(j, key, what).get<T>();
    } catch (const json::exception& e) {
      throw ManifestError(what + ": field '" + key + "' has the wrong type (" + e.what() + ")");
    }
  }

  static std::optional<fxp::QFormat> opt_fmt(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_number_integer()) throw ManifestError(std::string("field '") + key + "' must be an integer");
    return fxp::QFormat(j.at(key).get<int>());
  }

 private:
  std::vector<std::uint8_t> blob_;
  std::size_t consumed_ = 0;
};

}  // namespace

void save_model(const NetworkGraph& g, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  BlobWriter writer;
  json m;
  m["format"] = "nanonav-model";
  m["version"] = kContainerVersion;
  m["input"] = {{"shape", {g.input_shape().channels, g.input_shape().height, g.input_shape().width}},
                {"frac_bits", g.input_fmt().frac_bits()}};
  m["heads"] = {{"steer", g.heads().steer}, {"collision", g.heads().collision}};
  m["layers"] = writer.layers(g.layers());
  m["blob"] = {{"file", kBlobName}, {"length", writer.blob().size()}};

  const std::string text = m.dump(2) + "\n";
  write_bytes(dir / kManifestName,
              std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  write_bytes(dir / kBlobName, writer.blob());
}

NetworkGraph load_model(const fs::path& dir) {
  const auto manifest_path = dir / kManifestName;
  if (!fs::exists(manifest_path)) throw ManifestError("missing " + manifest_path.string());
  const auto manifest_bytes = read_bytes(manifest_path);
  json m;
  try {
    m = json::parse(manifest_bytes.begin(), manifest_bytes.end());
  } catch (const json::parse_error& e) {
    throw ManifestError("manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!m.is_object()) throw ManifestError("manifest must be a JSON object");
  if (BlobReader::get<std::string>(m, "format", "manifest") != "nanonav-model") {
    throw ManifestError("manifest format tag is not 'nanonav-model'");
  }
  const int version = BlobReader::get<int>(m, "version", "manifest");
  if (version != kContainerVersion) {
    throw VersionError("unsupported container version " + std::to_string(version));
  }

  const auto blob_path = dir / kBlobName;
  if (!fs::exists(blob_path)) throw BlobLengthError("missing " + blob_path.string());
  BlobReader reader(read_bytes(blob_path));
  const auto& blob_info = BlobReader::at(m, "blob", "manifest");
  const auto declared = BlobReader::get<std::size_t>(blob_info, "length", "manifest blob");
  if (declared != reader.size()) {
    throw BlobLengthError("weights.bin is " + std::to_string(reader.size()) + " bytes, manifest declares " +
                          std::to_string(declared));
  }

  const auto& input = BlobReader::at(m, "input", "manifest");
  const auto shape = BlobReader::get<std::vector<int>>(input, "shape", "manifest input");
  if (shape.size() != 3) throw ManifestError("input shape must have three dims");
  const fxp::QFormat input_fmt(BlobReader::get<int>(input, "frac_bits", "manifest input"));
  const auto& heads = BlobReader::at(m, "heads", "manifest");
  HeadIndex head_index{BlobReader::get<std::size_t>(heads, "steer", "manifest heads"),
                       BlobReader::get<std::size_t>(heads, "collision", "manifest heads")};

  auto layers = reader.layers(BlobReader::at(m, "layers", "manifest"), "manifest layers");
  if (reader.consumed() != reader.size()) {
    throw BlobLengthError("weights.bin has " + std::to_string(reader.size() - reader.consumed()) +
                          " trailing bytes not referenced by the manifest");
  }
  return NetworkGraph(TensorShape{shape[0], shape[1], shape[2]}, std::move(layers), head_index, input_fmt);
}

ActivationDump::ActivationDump(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
}

std::string ActivationDump::blob_name(const std::string& name) const {
  std::string safe = name;
  for (auto& ch : safe) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.')) ch = '_';
  }
  char prefix[16];
  std::snprintf(prefix, sizeof prefix, "%03zu_", entries_.size());
  return prefix + safe + ".bin";
}

void ActivationDump::add(const std::string& name, const FloatTensor& t) {
  std::vector<std::uint8_t> bytes;
  append_f64le(bytes, t.data);
  Entry e{name, blob_name(name), t.shape, "f64le", -1};
  write_bytes(dir_ / e.file, bytes);
  entries_.push_back(std::move(e));
}

void ActivationDump::add(const std::string& name, const FxpTensor& t) {
  std::vector<std::uint8_t> bytes;
  append_q16le(bytes, t.data);
  Entry e{name, blob_name(name), t.shape, "q16le", t.fmt.frac_bits()};
  write_bytes(dir_ / e.file, bytes);
  entries_.push_back(std::move(e));
}

void ActivationDump::finish() {
  if (finished_) return;
  finished_ = true;
  json arr = json::array();
  for (const auto& e : entries_) {
    json j{{"name", e.name},
           {"file", e.file},
           {"shape", {e.shape.channels, e.shape.height, e.shape.width}},
           {"dtype", e.dtype}};
    if (e.frac_bits >= 0) j["frac_bits"] = e.frac_bits;
    arr.push_back(std::move(j));
  }
  const std::string text = json{{"activations", arr}}.dump(2) + "\n";
  write_bytes(dir_ / "index.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

ActivationDump::~ActivationDump() {
  try {
    finish();
  } catch (...) {
  }
}

}  // namespace nanonav
