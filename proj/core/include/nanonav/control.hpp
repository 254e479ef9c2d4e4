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

// Reactive control law: low-pass filtered forward velocity and yaw rate,
// with a hard stop above the critical collision probability.

namespace nanonav::control {

struct ControlParams {
  double alpha = 0.3;
  double beta_smooth = 0.5;
  double v_max = 1.5;   // m/s
  double p_crit = 0.7;

  // Throws ControlError unless alpha, beta_smooth in (0,1], v_max > 0 and
  // p_crit in (0,1).
  void validate() const;
};

struct ControlState {
  double v_x_target = 0.0;
  double omega_yaw_target = 0.0;  // normalized units
  long t = 0;
};

// p_coll must be in [0,1] and theta_steer finite (ControlError otherwise).
ControlState control_step(const ControlState& state, double p_coll, double theta_steer, const ControlParams& params);

struct SteadyState {
  double v = 0.0;
  double omega = 0.0;
};

SteadyState steady_state(const ControlParams& params, double p_coll, double theta_steer);

}  // namespace nanonav::control
