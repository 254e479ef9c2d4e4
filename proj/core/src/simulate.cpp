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

#include "nanonav/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nanonav/error.hpp"

namespace nanonav::harness {

namespace {

bool positive(double v) { return v > 0.0 && !std::isnan(v); }

// Moves toward target under the accel limits; constant-acceleration phases
// are integrated exactly.
void advance(KinematicState& s, double target, double accel, double decel, double dt) {
  const double dv = target - s.velocity;
  const double limit = dv >= 0.0 ? accel : decel;
  if (std::isinf(limit)) {
    s.velocity = target;
    s.position += target * dt;
  } else {
    const double reach = std::abs(dv) / limit;
    const double ramp = std::min(reach, dt);
    const double a = dv >= 0.0 ? limit : -limit;
    s.position += s.velocity * ramp + 0.5 * a * ramp * ramp;
    s.velocity = ramp < reach ? s.velocity + a * ramp : target;
    s.position += s.velocity * (dt - ramp);
  }
  s.velocity = std::max(0.0, s.velocity);
  s.time += dt;
}

}  // namespace

void SimConfig::validate() const {
  if (!positive(frame_rate) || std::isinf(frame_rate)) throw ControlError("frame rate must be positive");
  if (!(obstacle_distance >= 0.0) || std::isinf(obstacle_distance)) {
    throw ControlError("obstacle distance must be non-negative");
  }
  if (!(cruise_speed >= 0.0) || std::isinf(cruise_speed)) throw ControlError("cruise speed must be non-negative");
  if (!positive(max_decel) || !positive(accel_limit())) throw ControlError("acceleration limits must be positive");
  if (!(visible_range() >= 0.0)) throw ControlError("detection range must be non-negative");
  if (substeps < 1) throw ControlError("substeps must be >= 1");
  if (!positive(max_time)) throw ControlError("max time must be positive");
}

std::string FlightLog::csv() const {
  std::ostringstream out;
  out.precision(9);
  out << "t,p_coll,v_desired,v_estimated,position\n";
  for (const auto& r : records) {
    out << r.t << ',' << r.p_coll << ',' << r.v_desired << ',' << r.v_estimated << ',' << r.position << '\n';
  }
  return out.str();
}

BrakingResult simulate_braking(const SimConfig& cfg, const control::ControlParams& params) {
  cfg.validate();
  params.validate();
  const double period = 1.0 / cfg.frame_rate;
  const double dt = period / cfg.substeps;
  const double range = cfg.visible_range();
  const Detector detect = cfg.detector ? cfg.detector : Detector([&](double position, double) {
    return cfg.obstacle_distance - position <= range ? 1.0 : 0.0;
  });

  BrakingResult result;
  KinematicState s{0.0, cfg.cruise_speed, 0.0};
  control::ControlState ctl{cfg.cruise_speed, 0.0, 0};
  double perceived = 0.0;
  if (cfg.obstacle_distance <= 0.0) {
    result.collided = true;
    result.collision_time = 0.0;
  }
  for (long tick = 0; !result.collided; ++tick) {
    s.time = static_cast<double>(tick) * period;
    if (tick > 0) ctl = control::control_step(ctl, perceived, 0.0, params);
    perceived = detect(s.position, s.time);
    result.log.records.push_back({s.time, perceived, ctl.v_x_target, s.velocity, s.position});
    if (s.velocity == 0.0 && ctl.v_x_target == 0.0 && tick > 0) break;
    if (s.time >= cfg.max_time) break;
    for (int k = 0; k < cfg.substeps; ++k) {
      const KinematicState before = s;
      advance(s, ctl.v_x_target, cfg.accel_limit(), cfg.max_decel, dt);
      if (s.position >= cfg.obstacle_distance) {
        // Bisect the crossing time within the substep.
        double lo = 0.0;
        double hi = dt;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          KinematicState probe = before;
          advance(probe, ctl.v_x_target, cfg.accel_limit(), cfg.max_decel, mid);
          (probe.position >= cfg.obstacle_distance ? hi : lo) = mid;
        }
        result.collided = true;
        result.collision_time = before.time + hi;
        break;
      }
    }
  }
  result.final_state = s;
  result.stop_margin = result.collided ? 0.0 : cfg.obstacle_distance - s.position;
  return result;
}

double max_safe_speed(const SimConfig& cfg) {
  cfg.validate();
  const double d = std::min(cfg.visible_range(), cfg.obstacle_distance);
  if (d <= 0.0) return 0.0;
  const double f = cfg.frame_rate;
  const double a = cfg.max_decel;
  if (std::isinf(a)) return d * f;
  return a * (-1.0 / f + std::sqrt(1.0 / (f * f) + 2.0 * d / a));
}

double max_safe_speed_search(const SimConfig& cfg, const control::ControlParams& params, double tolerance) {
  cfg.validate();
  const auto safe = [&](double v) {
    SimConfig trial = cfg;
    trial.cruise_speed = v;
    control::ControlParams p = params;
    p.v_max = std::max(params.v_max, v);
    return !simulate_braking(trial, p).collided;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (safe(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) return std::numeric_limits<double>::infinity();
  }
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    (safe(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace nanonav::harness
