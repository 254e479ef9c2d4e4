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

#include "nanonav/control.hpp"

#include <cmath>
#include <string>

#include "nanonav/error.hpp"

namespace nanonav::control {

namespace {

void check_inputs(double p_coll, double theta_steer) {
  if (!(p_coll >= 0.0 && p_coll <= 1.0)) {
    throw ControlError("collision probability " + std::to_string(p_coll) + " is outside [0, 1]");
  }
  if (!std::isfinite(theta_steer)) throw ControlError("steering angle is not finite");
}

}  // namespace

void ControlParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ControlError("alpha must be in (0, 1]");
  if (!(beta_smooth > 0.0 && beta_smooth <= 1.0)) throw ControlError("beta must be in (0, 1]");
  if (!(v_max > 0.0) || !std::isfinite(v_max)) throw ControlError("v_max must be positive");
  if (!(p_crit > 0.0 && p_crit < 1.0)) throw ControlError("p_crit must be in (0, 1)");
}

ControlState control_step(const ControlState& state, double p_coll, double theta_steer, const ControlParams& params) {
  params.validate();
  check_inputs(p_coll, theta_steer);
  ControlState next;
  next.t = state.t + 1;
  if (p_coll > params.p_crit) {
    next.v_x_target = 0.0;
  } else {
    next.v_x_target = params.alpha * params.v_max * (1.0 - p_coll) + (1.0 - params.alpha) * state.v_x_target;
  }
  next.omega_yaw_target = params.beta_smooth * theta_steer + (1.0 - params.beta_smooth) * state.omega_yaw_target;
  return next;
}

SteadyState steady_state(const ControlParams& params, double p_coll, double theta_steer) {
  params.validate();
  check_inputs(p_coll, theta_steer);
  return {p_coll > params.p_crit ? 0.0 : params.v_max * (1.0 - p_coll), theta_steer};
}

}  // namespace nanonav::control
