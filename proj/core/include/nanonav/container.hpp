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

// On-disk model container: a directory holding manifest.json (topology,
// Q-formats, blob offsets) and weights.bin (little-endian tensors laid out
// back to back). Quantized tensors are stored as q16le raws; float tensors
// as f64le so that a save/load round trip is bit-exact. f32le is accepted on
// load.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nanonav/model.hpp"
#include "nanonav/tensor.hpp"

namespace nanonav {

inline constexpr int kContainerVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kBlobName = "weights.bin";

void save_model(const NetworkGraph& g, const std::filesystem::path& dir);

// Throws ManifestError, BlobLengthError, UnknownLayerError, VersionError or
// FormatError depending on what is wrong with the container; GraphError /
// ShapeError when the decoded graph is inconsistent.
NetworkGraph load_model(const std::filesystem::path& dir);

// Little-endian encoders shared with the activation dump.
void append_q16le(std::vector<std::uint8_t>& out, std::span<const std::int16_t> values);
void append_f64le(std::vector<std::uint8_t>& out, std::span<const double> values);
std::vector<std::int16_t> decode_q16le(std::span<const std::uint8_t> bytes);
std::vector<double> decode_f64le(std::span<const std::uint8_t> bytes);
std::vector<double> decode_f32le(std::span<const std::uint8_t> bytes);

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

// One blob per activation tensor: "<index>_<name>.bin" plus index.json with
// shapes and formats.
class ActivationDump {
 public:
  explicit ActivationDump(std::filesystem::path dir);
  void add(const std::string& name, const FloatTensor& t);
  void add(const std::string& name, const FxpTensor& t);
  // Writes index.json. Called by the destructor if not called explicitly.
  void finish();
  ~ActivationDump();

  ActivationDump(const ActivationDump&) = delete;
  ActivationDump& operator=(const ActivationDump&) = delete;

  std::size_t count() const { return entries_.size(); }

 private:
  struct Entry {
    std::string name;
    std::string file;
    TensorShape shape;
    std::string dtype;
    int frac_bits = -1;
  };
  std::string blob_name(const std::string& name) const;

  std::filesystem::path dir_;
  std::vector<Entry> entries_;
  bool finished_ = false;
};

}  // namespace nanonav
