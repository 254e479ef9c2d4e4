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

// L1/L2 memory model and per-layer tiling. Activations stream through the L1
// scratchpad in tiles of (output-channel block x output-row block), each
// with the input rows its receptive field needs (the halo). Weights are
// L2-resident and the slice for a tile's channel block is staged in L1.

#include <cstddef>
#include <string>
#include <vector>

#include "nanonav/model.hpp"
#include "nanonav/tensor.hpp"

namespace nanonav::planner {

inline constexpr std::size_t kBytesPerElement = 2;

struct MemoryBudget {
  std::size_t l1_bytes = 64 * 1024;
  std::size_t l2_bytes = 512 * 1024;
  bool l3_present = true;

  // Throws PlanError unless 0 < l1_bytes < l2_bytes.
  void validate() const;
};

enum class Buffering {
  kAuto,    // double-buffered when feasible, otherwise single-buffered
  kSingle,
  kDouble,
};

struct Tile {
  // Output box (full width).
  int row_begin = 0;
  int row_end = 0;
  int ch_begin = 0;
  int ch_end = 0;
  // Input rows/channels staged into L1.
  int in_row_begin = 0;
  int in_row_end = 0;
  int in_ch_begin = 0;
  int in_ch_end = 0;
  std::size_t input_bytes = 0;
  std::size_t weight_bytes = 0;
  std::size_t output_bytes = 0;

  std::size_t working_set() const { return input_bytes + weight_bytes + output_bytes; }
  friend bool operator==(const Tile&, const Tile&) = default;
};

enum class TransferDir { kL2ToL1, kL1ToL2 };

struct Transfer {
  std::size_t tile = 0;
  TransferDir dir = TransferDir::kL2ToL1;
  std::string what;  // "input", "weights" or "output"
  std::size_t bytes = 0;
};

struct TilePlan {
  std::string layer_id;
  std::string kind;
  TensorShape input_shape;
  TensorShape output_shape;
  int row_block = 1;
  int channel_block = 1;
  std::vector<Tile> tiles;
  bool double_buffered = false;
  std::size_t peak_l1_bytes = 0;
  std::vector<Transfer> transfers;

  std::size_t tile_volume() const { return static_cast<std::size_t>(row_block) * channel_block; }
};

struct Violation {
  enum class Kind { kShape, kCoverage, kOverlap, kHalo, kBufferSize, kBudget };
  Kind kind = Kind::kShape;
  std::string message;
  std::size_t excess_bytes = 0;
};

const char* violation_name(Violation::Kind kind);

// Builds the tiling for the given block sizes (channel-block-major tile
// order). double_buffered only takes effect with more than one tile.
TilePlan make_plan(const Layer& layer, const TensorShape& in, int row_block, int channel_block,
                   bool double_buffered);

// Largest legal tile (row_block x channel_block volume, then fewer tiles,
// then more rows). Throws PlanError if the layer is not conv/pool/FC, or if
// even the minimum working set exceeds the budget.
TilePlan plan_layer(const Layer& layer, const TensorShape& in, const MemoryBudget& budget,
                    Buffering buffering = Buffering::kAuto);

// Re-derives every buffer size from the layer geometry and checks coverage,
// overlap, halo rows and the L1 budget. Empty means the plan is legal.
std::vector<Violation> validate_plan(const TilePlan& plan, const Layer& layer, const TensorShape& in,
                                     const MemoryBudget& budget);

// Runs the layer tile by tile, copying each tile's input band into a local
// buffer first. Output equals the untiled kernel bit for bit.
FloatTensor execute_tiled(const Layer& layer, const FloatTensor& in, const TilePlan& plan,
                          std::size_t workers = 1);
FxpTensor execute_tiled(const Layer& layer, const FxpTensor& in, const TilePlan& plan, std::size_t workers = 1,
                        std::size_t* saturations = nullptr);

std::vector<TilePlan> plan_network(const NetworkGraph& g, const MemoryBudget& budget,
                                   Buffering buffering = Buffering::kAuto);

// JSON text: one object per plan (tile dims, bytes, transfer counts).
std::string describe_plans(const std::vector<TilePlan>& plans, const MemoryBudget& budget);

}  // namespace nanonav::planner
