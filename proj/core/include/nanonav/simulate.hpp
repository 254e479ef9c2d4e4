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

// 1-D closed-loop braking model: a vehicle flying straight at an obstacle,
// perception feeding the controller with one frame of latency.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nanonav/control.hpp"

namespace nanonav::harness {

// Maps (position, time) to a collision probability in [0, 1].
using Detector = std::function<double(double position, double time)>;

struct SimConfig {
  double frame_rate = 6.0;          // control ticks per second
  double obstacle_distance = 2.0;   // m, from the start position
  double cruise_speed = 1.5;        // m/s, initial speed and initial target
  double max_decel = 3.0;           // m/s^2; infinity gives an instantaneous stop
  std::optional<double> max_accel;  // defaults to max_decel
  std::optional<double> detection_range;  // m; defaults to obstacle_distance
  int substeps = 16;                // integration steps per control period
  double max_time = 60.0;           // s
  Detector detector;                // overrides the range detector when set

  // Throws ControlError on non-positive or non-finite settings.
  void validate() const;
  double accel_limit() const { return max_accel.value_or(max_decel); }
  double visible_range() const { return detection_range.value_or(obstacle_distance); }
};

struct KinematicState {
  double position = 0.0;
  double velocity = 0.0;
  double time = 0.0;
};

struct FlightRecord {
  double t = 0.0;
  double p_coll = 0.0;      // perceived this tick, acted on next tick
  double v_desired = 0.0;   // controller target in force this period
  double v_estimated = 0.0; // actual speed at the tick
  double position = 0.0;
};

struct FlightLog {
  std::vector<FlightRecord> records;

  // "t,p_coll,v_desired,v_estimated,position" rows.
  std::string csv() const;
};

struct BrakingResult {
  bool collided = false;
  double stop_margin = 0.0;  // obstacle_distance - final position; 0 on collision
  std::optional<double> collision_time;
  KinematicState final_state;
  FlightLog log;
};

// The default detector returns 1 once the obstacle is within
// visible_range() of the vehicle, 0 before. At tick 0 the controller has no
// perception yet and holds cruise; tick k >= 1 acts on the p read at k-1.
BrakingResult simulate_braking(const SimConfig& cfg, const control::ControlParams& params);

// Largest cruise speed with v/f + v^2/(2 a) <= d, d the visible distance.
double max_safe_speed(const SimConfig& cfg);

// Bisection over simulate_braking (v_max raised to the trial speed).
double max_safe_speed_search(const SimConfig& cfg, const control::ControlParams& params, double tolerance = 1e-6);

}  // namespace nanonav::harness
