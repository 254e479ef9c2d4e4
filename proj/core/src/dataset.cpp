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

#include "nanonav/dataset.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "nanonav/error.hpp"
#include "nanonav/pgm.hpp"

namespace nanonav::harness {

namespace {

constexpr const char* kLabelsFile = "labels.csv";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const std::string& where) {
  if (s.empty()) throw IoError(where + ": empty numeric field");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end != s.c_str() + s.size()) throw IoError(where + ": bad number '" + s + "'");
  return v;
}

}  // namespace

std::vector<Label> Dataset::labels() const {
  std::vector<Label> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

FloatTensor Dataset::input(std::size_t i, const TensorShape& shape) const {
  return image_to_input(read_pgm(root / samples.at(i).path), shape);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto file = dir / kLabelsFile;
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line) || split(line) != std::vector<std::string>{"path", "steer", "collision"}) {
    throw IoError(file.string() + ": header must be 'path,steer,collision'");
  }
  Dataset ds;
  ds.root = dir;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    const std::string where = file.string() + ":" + std::to_string(row);
    if (fields.size() != 3) throw IoError(where + ": expected 3 fields");
    const double collision = parse_number(fields[2], where);
    if (collision != 0.0 && collision != 1.0) throw IoError(where + ": collision must be 0 or 1");
    ds.samples.push_back({fields[0], {parse_number(fields[1], where), static_cast<int>(collision)}});
  }
  return ds;
}

void write_labels(const std::filesystem::path& dir, const std::vector<Sample>& samples) {
  std::ofstream out(dir / kLabelsFile);
  if (!out) throw IoError("cannot write " + (dir / kLabelsFile).string());
  out.precision(17);
  out << "path,steer,collision\n";
  for (const auto& s : samples) out << s.path << ',' << s.label.steer << ',' << s.label.collision << '\n';
  if (!out) throw IoError("write failed for " + (dir / kLabelsFile).string());
}

}  // namespace nanonav::harness
