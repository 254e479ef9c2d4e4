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

#include "nanonav/pipeline.hpp"

#include <algorithm>
#include <sstream>

#include "nanonav/error.hpp"

namespace nanonav::planner {

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::kAcquire: return "acquire";
    case Stage::kTransfer: return "transfer";
    case Stage::kCompute: return "compute";
  }
  return "unknown";
}

std::int64_t period_bound(std::int64_t t_acquire, std::int64_t t_compute, std::int64_t t_transfer, int buffers) {
  if (buffers <= 1) return t_acquire + t_transfer + t_compute;
  return std::max(t_acquire + t_transfer, t_compute);
}

PipelineSchedule schedule_pipeline(std::int64_t t_acquire, std::int64_t t_compute, std::int64_t t_transfer,
                                   int n_frames, int buffers) {
  if (t_acquire < 0 || t_compute < 0 || t_transfer < 0 || t_acquire + t_compute + t_transfer <= 0) {
    throw PlanError("pipeline stage durations must be non-negative with a positive total");
  }
  if (n_frames < 1) throw PlanError("pipeline needs at least one frame");
  if (buffers < 1) throw PlanError("pipeline needs at least one buffer");

  PipelineSchedule s;
  s.t_acquire = t_acquire;
  s.t_transfer = t_transfer;
  s.t_compute = t_compute;
  s.buffers = buffers;
  s.events.reserve(static_cast<std::size_t>(n_frames) * 3);

  std::vector<std::int64_t> compute_end;
  compute_end.reserve(static_cast<std::size_t>(n_frames));
  std::int64_t io_free = 0;
  std::int64_t cluster_free = 0;
  for (int i = 0; i < n_frames; ++i) {
    const int buffer = i % buffers;
    std::int64_t start = io_free;
    if (i >= buffers) start = std::max(start, compute_end[static_cast<std::size_t>(i - buffers)]);
    const std::int64_t acquired = start + t_acquire;
    const std::int64_t transferred = acquired + t_transfer;
    io_free = transferred;
    const std::int64_t compute_start = std::max(transferred, cluster_free);
    const std::int64_t done = compute_start + t_compute;
    cluster_free = done;
    compute_end.push_back(done);
    s.events.push_back({i, Stage::kAcquire, start, acquired, buffer});
    s.events.push_back({i, Stage::kTransfer, acquired, transferred, buffer});
    s.events.push_back({i, Stage::kCompute, compute_start, done, buffer});
  }
  s.fill_latency = compute_end.front();
  s.makespan = compute_end.back();
  s.steady_period = n_frames >= 2 ? compute_end[compute_end.size() - 1] - compute_end[compute_end.size() - 2]
                                  : period_bound(t_acquire, t_compute, t_transfer, buffers);
  return s;
}

std::vector<std::string> check_buffer_exclusivity(const PipelineSchedule& schedule) {
  struct Owner {
    int frame;
    int buffer;
    std::int64_t start;
    std::int64_t end;
  };
  std::vector<Owner> owners;
  for (const auto& e : schedule.events) {
    if (owners.empty() || owners.back().frame != e.frame) {
      owners.push_back({e.frame, e.buffer, e.start, e.end});
    } else {
      owners.back().start = std::min(owners.back().start, e.start);
      owners.back().end = std::max(owners.back().end, e.end);
    }
  }
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < owners.size(); ++i) {
    for (std::size_t j = i + 1; j < owners.size(); ++j) {
      const auto& a = owners[i];
      const auto& b = owners[j];
      if (a.buffer != b.buffer) continue;
      if (a.start < b.end && b.start < a.end) {
        problems.push_back("frames " + std::to_string(a.frame) + " and " + std::to_string(b.frame) +
                           " overlap on buffer " + std::to_string(a.buffer));
      }
    }
  }
  return problems;
}

std::string schedule_csv(const PipelineSchedule& schedule) {
  std::ostringstream out;
  out << "frame,stage,start,end\n";
  for (const auto& e : schedule.events) {
    out << e.frame << ',' << stage_name(e.stage) << ',' << e.start << ',' << e.end << '\n';
  }
  return out.str();
}

}  // namespace nanonav::planner
