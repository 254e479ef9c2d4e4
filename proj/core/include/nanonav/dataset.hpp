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

// Labeled image sets: a directory of PGM frames plus labels.csv with the
// header "path,steer,collision". Paths are relative to the directory.

#include <filesystem>
#include <string>
#include <vector>

#include "nanonav/metrics.hpp"
#include "nanonav/tensor.hpp"

namespace nanonav::harness {

struct Sample {
  std::string path;
  Label label;
};

struct Dataset {
  std::filesystem::path root;
  std::vector<Sample> samples;

  std::vector<Label> labels() const;
  // Center-cropped, [0,1]-scaled input for sample i.
  FloatTensor input(std::size_t i, const TensorShape& shape) const;
};

// Throws IoError when labels.csv is missing or malformed.
Dataset load_dataset(const std::filesystem::path& dir);

void write_labels(const std::filesystem::path& dir, const std::vector<Sample>& samples);

}  // namespace nanonav::harness
