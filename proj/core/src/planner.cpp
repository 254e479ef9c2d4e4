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

#include "nanonav/planner.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <nlohmann/json.hpp>

#include "nanonav/error.hpp"
#include "nanonav/kernels.hpp"
#include "nanonav/parallel.hpp"

namespace nanonav::planner {

void MemoryBudget::validate() const {
  if (l1_bytes == 0 || l1_bytes >= l2_bytes) {
    throw PlanError("memory budget needs 0 < l1_bytes < l2_bytes (got l1=" + std::to_string(l1_bytes) +
                    ", l2=" + std::to_string(l2_bytes) + ")");
  }
}

const char* violation_name(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::kShape: return "shape";
    case Violation::Kind::kCoverage: return "coverage";
    case Violation::Kind::kOverlap: return "overlap";
    case Violation::Kind::kHalo: return "halo";
    case Violation::Kind::kBufferSize: return "buffer-size";
    case Violation::Kind::kBudget: return "budget";
  }
  return "unknown";
}

namespace {

enum class Kind { kConv, kPool, kFc };

struct Geometry {
  Kind kind = Kind::kConv;
  TensorShape in;
  TensorShape out;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  int padding = 0;
  std::size_t weights_per_out = 0;  // weights + bias per output channel
};

Geometry geometry_of(const Layer& layer, const TensorShape& in) {
  Geometry g;
  g.in = in;
  g.out = layer_output_shape(layer, in);
  if (const auto* c = std::get_if<Conv2D>(&layer.op)) {
    g.kind = Kind::kConv;
    g.kernel_h = c->kernel_h;
    g.kernel_w = c->kernel_w;
    g.stride = c->stride;
    g.padding = c->padding;
    g.weights_per_out = static_cast<std::size_t>(c->fan_in()) + 1;
  } else if (layer.is<MaxPool>()) {
    g.kind = Kind::kPool;
    g.kernel_h = g.kernel_w = g.stride = 2;
  } else if (const auto* f = std::get_if<FullyConnected>(&layer.op)) {
    g.kind = Kind::kFc;
    g.weights_per_out = static_cast<std::size_t>(f->in_dim) + 1;
  } else {
    throw PlanError("layer '" + layer.name + "' (" + layer_kind(layer.op) + ") is not tileable");
  }
  return g;
}

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::kConv: return "conv2d";
    case Kind::kPool: return "maxpool2x2";
    case Kind::kFc: return "fully_connected";
  }
  return "";
}

Tile tile_for(const Geometry& g, int r0, int r1, int c0, int c1) {
  Tile t;
  t.row_begin = r0;
  t.row_end = r1;
  t.ch_begin = c0;
  t.ch_end = c1;
  const auto chs = static_cast<std::size_t>(c1 - c0);
  switch (g.kind) {
    case Kind::kConv: {
      const int lo = std::max(0, r0 * g.stride - g.padding);
      const int hi = std::min(g.in.height, (r1 - 1) * g.stride - g.padding + g.kernel_h);
      t.in_row_begin = std::min(lo, g.in.height);
      t.in_row_end = std::max(t.in_row_begin, hi);
      t.in_ch_begin = 0;
      t.in_ch_end = g.in.channels;
      break;
    }
    case Kind::kPool:
      t.in_row_begin = 2 * r0;
      t.in_row_end = 2 * r1;
      t.in_ch_begin = c0;
      t.in_ch_end = c1;
      break;
    case Kind::kFc:
      t.in_row_begin = 0;
      t.in_row_end = g.in.height;
      t.in_ch_begin = 0;
      t.in_ch_end = g.in.channels;
      break;
  }
  t.input_bytes = kBytesPerElement * static_cast<std::size_t>(t.in_ch_end - t.in_ch_begin) *
                  static_cast<std::size_t>(t.in_row_end - t.in_row_begin) * static_cast<std::size_t>(g.in.width);
  t.weight_bytes = kBytesPerElement * chs * g.weights_per_out;
  t.output_bytes = kBytesPerElement * chs * static_cast<std::size_t>(r1 - r0) * static_cast<std::size_t>(g.out.width);
  return t;
}

std::size_t peak_of(const std::vector<Tile>& tiles, bool double_buffered) {
  std::size_t peak = 0;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    std::size_t ws = tiles[i].working_set();
    if (double_buffered && i + 1 < tiles.size()) ws += tiles[i + 1].working_set();
    peak = std::max(peak, ws);
  }
  return peak;
}

std::vector<Tile> build_tiles(const Geometry& g, int row_block, int channel_block) {
  std::vector<Tile> tiles;
  for (int c0 = 0; c0 < g.out.channels; c0 += channel_block) {
    const int c1 = std::min(g.out.channels, c0 + channel_block);
    for (int r0 = 0; r0 < g.out.height; r0 += row_block) {
      tiles.push_back(tile_for(g, r0, std::min(g.out.height, r0 + row_block), c0, c1));
    }
  }
  return tiles;
}

TilePlan assemble(const Layer& layer, const Geometry& g, int row_block, int channel_block, bool double_buffered) {
  TilePlan plan;
  plan.layer_id = layer.name;
  plan.kind = kind_name(g.kind);
  plan.input_shape = g.in;
  plan.output_shape = g.out;
  plan.row_block = row_block;
  plan.channel_block = channel_block;
  plan.tiles = build_tiles(g, row_block, channel_block);
  plan.double_buffered = double_buffered && plan.tiles.size() > 1;
  plan.peak_l1_bytes = peak_of(plan.tiles, plan.double_buffered);
  int last_block = -1;
  for (std::size_t i = 0; i < plan.tiles.size(); ++i) {
    const Tile& t = plan.tiles[i];
    if (t.weight_bytes > 0 && t.ch_begin != last_block) {
      plan.transfers.push_back({i, TransferDir::kL2ToL1, "weights", t.weight_bytes});
      last_block = t.ch_begin;
    }
    plan.transfers.push_back({i, TransferDir::kL2ToL1, "input", t.input_bytes});
    plan.transfers.push_back({i, TransferDir::kL1ToL2, "output", t.output_bytes});
  }
  return plan;
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

struct Candidate {
  int rows = 0;
  int channels = 0;
  std::size_t tiles = 0;
};

std::optional<Candidate> search(const Geometry& g, std::size_t budget, bool double_buffered) {
  std::optional<Candidate> best;
  for (int rows = g.out.height; rows >= 1; --rows) {
    for (int chs = g.out.channels; chs >= 1; --chs) {
      const auto volume = static_cast<std::size_t>(rows) * chs;
      Candidate c{rows, chs, static_cast<std::size_t>(ceil_div(g.out.height, rows)) * ceil_div(g.out.channels, chs)};
      if (best) {
        const auto best_volume = static_cast<std::size_t>(best->rows) * best->channels;
        if (volume < best_volume) continue;
        if (volume == best_volume && c.tiles >= best->tiles) continue;
      }
      const auto tiles = build_tiles(g, rows, chs);
      if (peak_of(tiles, double_buffered && tiles.size() > 1) <= budget) best = c;
    }
  }
  return best;
}

}  // namespace

TilePlan make_plan(const Layer& layer, const TensorShape& in, int row_block, int channel_block,
                   bool double_buffered) {
  const Geometry g = geometry_of(layer, in);
  if (row_block < 1 || row_block > g.out.height || channel_block < 1 || channel_block > g.out.channels) {
    throw PlanError("block sizes out of range for layer '" + layer.name + "'");
  }
  return assemble(layer, g, row_block, channel_block, double_buffered);
}

TilePlan plan_layer(const Layer& layer, const TensorShape& in, const MemoryBudget& budget, Buffering buffering) {
  budget.validate();
  const Geometry g = geometry_of(layer, in);
  std::optional<Candidate> best;
  bool double_buffered = buffering != Buffering::kSingle;
  best = search(g, budget.l1_bytes, double_buffered);
  if (!best && buffering == Buffering::kAuto) {
    double_buffered = false;
    best = search(g, budget.l1_bytes, false);
  }
  if (!best) {
    const auto minimum = peak_of(build_tiles(g, 1, 1), false);
    throw PlanError("layer '" + layer.name + "' is infeasible: minimum working set " + std::to_string(minimum) +
                    " bytes exceeds the L1 budget of " + std::to_string(budget.l1_bytes) + " bytes");
  }
  return assemble(layer, g, best->rows, best->channels, double_buffered);
}

std::vector<Violation> validate_plan(const TilePlan& plan, const Layer& layer, const TensorShape& in,
                                     const MemoryBudget& budget) {
  std::vector<Violation> v;
  using K = Violation::Kind;
  Geometry g;
  try {
    g = geometry_of(layer, in);
  } catch (const Error& e) {
    v.push_back({K::kShape, e.what(), 0});
    return v;
  }
  if (!(plan.input_shape == g.in) || !(plan.output_shape == g.out) || plan.kind != kind_name(g.kind)) {
    v.push_back({K::kShape, "plan shapes/kind do not match layer '" + layer.name + "'", 0});
    return v;
  }

  std::vector<int> cover(static_cast<std::size_t>(g.out.channels) * g.out.height, 0);
  std::vector<Tile> derived;
  for (std::size_t i = 0; i < plan.tiles.size(); ++i) {
    const Tile& t = plan.tiles[i];
    const std::string tag = "tile " + std::to_string(i);
    if (t.row_begin < 0 || t.row_end > g.out.height || t.row_begin >= t.row_end || t.ch_begin < 0 ||
        t.ch_end > g.out.channels || t.ch_begin >= t.ch_end) {
      v.push_back({K::kCoverage, tag + " lies outside the output", 0});
      continue;
    }
    for (int c = t.ch_begin; c < t.ch_end; ++c) {
      for (int r = t.row_begin; r < t.row_end; ++r) ++cover[static_cast<std::size_t>(c) * g.out.height + r];
    }
    const Tile need = tile_for(g, t.row_begin, t.row_end, t.ch_begin, t.ch_end);
    if (t.in_row_begin > need.in_row_begin || t.in_row_end < need.in_row_end || t.in_ch_begin > need.in_ch_begin ||
        t.in_ch_end < need.in_ch_end) {
      v.push_back({K::kHalo, tag + " stages input rows [" + std::to_string(t.in_row_begin) + ", " +
                                 std::to_string(t.in_row_end) + ") but needs [" + std::to_string(need.in_row_begin) +
                                 ", " + std::to_string(need.in_row_end) + ")",
                   0});
    }
    if (t.input_bytes != need.input_bytes || t.weight_bytes != need.weight_bytes ||
        t.output_bytes != need.output_bytes) {
      v.push_back({K::kBufferSize, tag + " buffer sizes differ from the layer geometry", 0});
    }
    derived.push_back(need);
  }
  std::size_t uncovered = 0;
  std::size_t overlapped = 0;
  for (int c : cover) {
    uncovered += c == 0 ? 1 : 0;
    overlapped += c > 1 ? 1 : 0;
  }
  if (uncovered > 0) {
    v.push_back({K::kCoverage, std::to_string(uncovered) + " output rows are not covered by any tile", 0});
  }
  if (overlapped > 0) {
    v.push_back({K::kOverlap, std::to_string(overlapped) + " output rows are covered by more than one tile", 0});
  }

  const bool db = plan.double_buffered && derived.size() > 1;
  const std::size_t peak = peak_of(derived, db);
  if (peak != plan.peak_l1_bytes) {
    v.push_back({K::kBufferSize,
                 "recorded peak " + std::to_string(plan.peak_l1_bytes) + " differs from derived " + std::to_string(peak),
                 0});
  }
  if (peak > budget.l1_bytes) {
    v.push_back({K::kBudget,
                 std::string(db ? "double-buffered" : "single-buffered") + " peak " + std::to_string(peak) +
                     " bytes exceeds L1 budget " + std::to_string(budget.l1_bytes),
                 peak - budget.l1_bytes});
  }
  return v;
}

namespace {

void require_structurally_valid(const TilePlan& plan, const Layer& layer, const TensorShape& in) {
  MemoryBudget unbounded{std::numeric_limits<std::size_t>::max() / 2, std::numeric_limits<std::size_t>::max(), true};
  const auto violations = validate_plan(plan, layer, in, unbounded);
  if (!violations.empty()) {
    throw PlanError("plan for '" + layer.name + "' is not legal: " + violations.front().message);
  }
}

template <typename T>
kernels::InputWindow<T> stage(const BasicTensor<T>& in, const Tile& t, std::vector<T>& buffer) {
  const int chs = t.in_ch_end - t.in_ch_begin;
  const int rows = t.in_row_end - t.in_row_begin;
  const int w = in.shape.width;
  buffer.resize(static_cast<std::size_t>(chs) * rows * w);
  for (int c = 0; c < chs; ++c) {
    for (int r = 0; r < rows; ++r) {
      const auto src = in.data.begin() + static_cast<std::ptrdiff_t>(in.index(t.in_ch_begin + c, t.in_row_begin + r, 0));
      std::copy(src, src + w, buffer.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(c) * rows + r) * w));
    }
  }
  return kernels::InputWindow<T>{buffer, t.in_ch_begin, chs, t.in_row_begin, rows, w, in.shape.height};
}

}  // namespace

FloatTensor execute_tiled(const Layer& layer, const FloatTensor& in, const TilePlan& plan, std::size_t workers) {
  require_structurally_valid(plan, layer, in.shape);
  FloatTensor out(plan.output_shape);
  parallel_for(plan.tiles.size(), workers, [&](std::size_t b, std::size_t e) {
    std::vector<double> buffer;
    for (std::size_t i = b; i < e; ++i) {
      const Tile& t = plan.tiles[i];
      const auto window = stage(in, t, buffer);
      const kernels::OutputRegion region{t.ch_begin, t.ch_end, t.row_begin, t.row_end};
      if (const auto* c = std::get_if<Conv2D>(&layer.op)) {
        kernels::conv2d_region(window, *c, region, out);
      } else if (layer.is<MaxPool>()) {
        kernels::maxpool2x2_region(window, region, out);
      } else {
        kernels::fully_connected_range(window.data, layer.as<FullyConnected>(), t.ch_begin, t.ch_end, out);
      }
    }
  });
  return out;
}

FxpTensor execute_tiled(const Layer& layer, const FxpTensor& in, const TilePlan& plan, std::size_t workers,
                        std::size_t* saturations) {
  require_structurally_valid(plan, layer, in.shape);
  kernels::FxpLinearParams params;
  fxp::QFormat out_fmt = in.fmt;
  if (const auto* c = std::get_if<Conv2D>(&layer.op)) {
    params = kernels::prepare_fxp(*c, in.fmt);
    out_fmt = params.out_fmt;
  } else if (const auto* f = std::get_if<FullyConnected>(&layer.op)) {
    params = kernels::prepare_fxp(*f, in.fmt);
    out_fmt = params.out_fmt;
  }
  FxpTensor out(plan.output_shape, out_fmt);
  const std::size_t n = std::max<std::size_t>(1, std::min(workers, plan.tiles.size()));
  std::vector<std::size_t> sat(n, 0);
  parallel_for(n, n, [&](std::size_t wb, std::size_t we) {
    std::vector<std::int16_t> buffer;
    for (std::size_t w = wb; w < we; ++w) {
      for (std::size_t i = plan.tiles.size() * w / n; i < plan.tiles.size() * (w + 1) / n; ++i) {
        const Tile& t = plan.tiles[i];
        const auto window = stage(in, t, buffer);
        const kernels::OutputRegion region{t.ch_begin, t.ch_end, t.row_begin, t.row_end};
        if (const auto* c = std::get_if<Conv2D>(&layer.op)) {
          sat[w] += kernels::conv2d_region(window, *c, params, region, out);
        } else if (layer.is<MaxPool>()) {
          kernels::maxpool2x2_region(window, region, out);
        } else {
          sat[w] += kernels::fully_connected_range(window.data, params, layer.as<FullyConnected>().in_dim,
                                                   t.ch_begin, t.ch_end, out);
        }
      }
    }
  });
  if (saturations) {
    for (auto s : sat) *saturations += s;
  }
  return out;
}

std::vector<TilePlan> plan_network(const NetworkGraph& g, const MemoryBudget& budget, Buffering buffering) {
  std::vector<TilePlan> plans;
  visit_layers(g, [&](const Layer& layer, const TensorShape& in, const TensorShape&) {
    if (layer.is<Conv2D>() || layer.is<MaxPool>() || layer.is<FullyConnected>()) {
      plans.push_back(plan_layer(layer, in, budget, buffering));
    }
  });
  return plans;
}

std::string describe_plans(const std::vector<TilePlan>& plans, const MemoryBudget& budget) {
  using nlohmann::json;
  json arr = json::array();
  for (const auto& p : plans) {
    std::size_t in_bytes = 0;
    std::size_t w_bytes = 0;
    std::size_t out_bytes = 0;
    for (const auto& t : p.transfers) {
      if (t.what == "input") in_bytes += t.bytes;
      if (t.what == "weights") w_bytes += t.bytes;
      if (t.what == "output") out_bytes += t.bytes;
    }
    const Tile& first = p.tiles.front();
    arr.push_back({{"layer", p.layer_id},
                   {"kind", p.kind},
                   {"input_shape", {p.input_shape.channels, p.input_shape.height, p.input_shape.width}},
                   {"output_shape", {p.output_shape.channels, p.output_shape.height, p.output_shape.width}},
                   {"row_block", p.row_block},
                   {"channel_block", p.channel_block},
                   {"tiles", p.tiles.size()},
                   {"double_buffered", p.double_buffered},
                   {"peak_l1_bytes", p.peak_l1_bytes},
                   {"tile_bytes", {{"input", first.input_bytes}, {"weights", first.weight_bytes}, {"output", first.output_bytes}}},
                   {"transfers", {{"count", p.transfers.size()},
                                  {"l2_to_l1_bytes", in_bytes + w_bytes},
                                  {"l1_to_l2_bytes", out_bytes}}}});
  }
  json doc{{"budget", {{"l1_bytes", budget.l1_bytes}, {"l2_bytes", budget.l2_bytes}, {"l3_present", budget.l3_present}}},
           {"plans", arr}};
  return doc.dump(2) + "\n";
}

}  // namespace nanonav::planner
