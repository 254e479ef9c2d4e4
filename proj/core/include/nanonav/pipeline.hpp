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

// Discrete-event model of the acquire -> transfer -> compute frame pipeline.
// Acquisition and transfer share the I/O path; compute runs on the cluster.
// A frame owns its buffer from acquisition start until its compute ends.

#include <cstdint>
#include <string>
#include <vector>

namespace nanonav::planner {

enum class Stage { kAcquire, kTransfer, kCompute };

const char* stage_name(Stage stage);

struct PipelineEvent {
  int frame = 0;
  Stage stage = Stage::kAcquire;
  std::int64_t start = 0;
  std::int64_t end = 0;
  int buffer = 0;
};

struct PipelineSchedule {
  std::int64_t t_acquire = 0;
  std::int64_t t_transfer = 0;
  std::int64_t t_compute = 0;
  int buffers = 2;
  std::vector<PipelineEvent> events;  // frame-major, stage order within a frame
  std::int64_t fill_latency = 0;      // end of the first compute
  std::int64_t steady_period = 0;     // gap between the last two compute ends
  std::int64_t makespan = 0;

  double throughput() const { return steady_period > 0 ? 1.0 / static_cast<double>(steady_period) : 0.0; }
};

// max(t_acquire + t_transfer, t_compute) for two or more buffers, the sum of
// all stages for a single buffer.
std::int64_t period_bound(std::int64_t t_acquire, std::int64_t t_compute, std::int64_t t_transfer, int buffers = 2);

// Durations must be >= 0 with a positive total; n_frames >= 1; buffers >= 1.
// Throws PlanError otherwise. With one frame, steady_period is the bound.
PipelineSchedule schedule_pipeline(std::int64_t t_acquire, std::int64_t t_compute, std::int64_t t_transfer,
                                   int n_frames, int buffers = 2);

// Messages for every pair of frames whose buffer-ownership intervals
// [acquire start, compute end) overlap on the same buffer. Empty when clean.
std::vector<std::string> check_buffer_exclusivity(const PipelineSchedule& schedule);

// "frame,stage,start,end" rows.
std::string schedule_csv(const PipelineSchedule& schedule);

}  // namespace nanonav::planner
