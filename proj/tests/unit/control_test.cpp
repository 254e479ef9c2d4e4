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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nanonav/error.hpp"

namespace nanonav::control {
namespace {

TEST(ControlStep, FirstStepFromRest) {
  const auto s = control_step({}, 0.0, 0.0, ControlParams{});
  EXPECT_DOUBLE_EQ(s.v_x_target, 0.45);
  EXPECT_DOUBLE_EQ(s.omega_yaw_target, 0.0);
  EXPECT_EQ(s.t, 1);
}

TEST(ControlStep, ThresholdZeroesVelocity) {
  const ControlState fast{1.5, 0.2, 7};
  EXPECT_EQ(control_step(fast, 1.0, 0.0, ControlParams{}).v_x_target, 0.0);
  EXPECT_EQ(control_step(fast, 0.7000001, 0.0, ControlParams{}).v_x_target, 0.0);
  // At exactly p_crit the filter still runs.
  EXPECT_DOUBLE_EQ(control_step(fast, 0.7, 0.0, ControlParams{}).v_x_target, 0.3 * 1.5 * 0.3 + 0.7 * 1.5);
}

TEST(ControlStep, YawFilter) {
  EXPECT_DOUBLE_EQ(control_step({}, 0.0, 0.4, ControlParams{}).omega_yaw_target, 0.2);
}

TEST(ControlStep, GeometricApproachFromRest) {
  ControlParams p;
  ControlState s;
  for (int k = 1; k <= 60; ++k) {
    s = control_step(s, 0.0, 0.0, p);
    EXPECT_NEAR(s.v_x_target, 1.5 * (1.0 - std::pow(0.7, k)), 1e-12);
  }
}

TEST(ControlProperty, ConvergesAtRateOneMinusAlpha) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    ControlParams p;
    p.alpha = 0.05 + 0.95 * u(rng);
    const double prob = p.p_crit * u(rng);
    const double target = p.v_max * (1.0 - prob);
    ControlState s{p.v_max * u(rng), 0.0, 0};
    const double d0 = s.v_x_target - target;
    for (int t = 1; t <= 40; ++t) {
      s = control_step(s, prob, 0.0, p);
      EXPECT_NEAR(s.v_x_target - target, std::pow(1.0 - p.alpha, t) * d0, 1e-12);
    }
  }
}

TEST(ControlProperty, BoundedAndThresholdDominant) {
  std::mt19937_64 rng(62);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ControlParams p;
  ControlState s;
  double theta_lo = 0.0;
  double theta_hi = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double prob = u(rng);
    const double theta = 2.0 * u(rng) - 1.0;
    theta_lo = std::min(theta_lo, theta);
    theta_hi = std::max(theta_hi, theta);
    s = control_step(s, prob, theta, p);
    EXPECT_GE(s.v_x_target, 0.0);
    EXPECT_LE(s.v_x_target, p.v_max);
    EXPECT_GE(s.omega_yaw_target, theta_lo);
    EXPECT_LE(s.omega_yaw_target, theta_hi);
    if (prob > p.p_crit) EXPECT_EQ(s.v_x_target, 0.0);
  }
}

TEST(ControlStep, Errors) {
  EXPECT_THROW(control_step({}, -0.1, 0.0, ControlParams{}), ControlError);
  EXPECT_THROW(control_step({}, 1.1, 0.0, ControlParams{}), ControlError);
  EXPECT_THROW(control_step({}, std::nan(""), 0.0, ControlParams{}), ControlError);
  EXPECT_THROW(control_step({}, 0.5, INFINITY, ControlParams{}), ControlError);
  EXPECT_THROW(control_step({}, 0.5, 0.0, ControlParams{.alpha = 0.0}), ControlError);
  EXPECT_THROW(control_step({}, 0.5, 0.0, ControlParams{.p_crit = 1.0}), ControlError);
  EXPECT_THROW(control_step({}, 0.5, 0.0, ControlParams{.v_max = -1.0}), ControlError);
}

TEST(SteadyState, ClosedForms) {
  const ControlParams p;
  EXPECT_DOUBLE_EQ(steady_state(p, 0.0, 0.0).v, 1.5);
  EXPECT_DOUBLE_EQ(steady_state(p, 0.5, 0.0).v, 0.75);
  EXPECT_DOUBLE_EQ(steady_state(p, 0.9, 0.0).v, 0.0);
  EXPECT_DOUBLE_EQ(steady_state(p, 0.0, 0.3).omega, 0.3);
}

TEST(SteadyState, IsTheFilterFixedPoint) {
  const ControlParams p;
  ControlState s;
  for (int i = 0; i < 400; ++i) s = control_step(s, 0.25, -0.6, p);
  EXPECT_NEAR(s.v_x_target, steady_state(p, 0.25, -0.6).v, 1e-12);
  EXPECT_NEAR(s.omega_yaw_target, -0.6, 1e-12);
}

}  // namespace
}  // namespace nanonav::control
