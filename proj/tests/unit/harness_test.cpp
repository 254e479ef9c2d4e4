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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "nanonav/dataset.hpp"
#include "nanonav/error.hpp"
#include "nanonav/metrics.hpp"
#include "nanonav/pgm.hpp"
#include "nanonav/simulate.hpp"

namespace nanonav::harness {
namespace {

using control::ControlParams;

TEST(Braking, DefaultsStopWithMargin) {
  const auto r = simulate_braking(SimConfig{}, ControlParams{});
  EXPECT_FALSE(r.collided);
  // 1.5/6 m of latency, then 1.5^2/(2*3) m of braking.
  EXPECT_NEAR(r.stop_margin, 2.0 - (0.25 + 0.375), 1e-9);
  EXPECT_EQ(r.final_state.velocity, 0.0);
}

TEST(Braking, BlindDetectorCollides) {
  SimConfig cfg;
  cfg.detector = [](double, double) { return 0.0; };
  const auto r = simulate_braking(cfg, ControlParams{});
  EXPECT_TRUE(r.collided);
  ASSERT_TRUE(r.collision_time.has_value());
  EXPECT_NEAR(*r.collision_time, 2.0 / 1.5, 1e-9);
  EXPECT_EQ(r.stop_margin, 0.0);
}

TEST(Braking, InstantStopTravelsOneFrame) {
  SimConfig cfg;
  cfg.max_decel = std::numeric_limits<double>::infinity();
  const auto r = simulate_braking(cfg, ControlParams{});
  EXPECT_FALSE(r.collided);
  EXPECT_NEAR(r.final_state.position, 1.5 / 6.0, 1e-12);
}

TEST(Braking, LateDetection) {
  SimConfig cfg;
  cfg.detection_range = 0.6;
  const auto r = simulate_braking(cfg, ControlParams{});
  // Seen at x = 1.5 (tick 6), braking starts at x = 1.75 and needs 0.375 m.
  EXPECT_TRUE(r.collided);
  cfg.max_decel = 20.0;
  const auto r2 = simulate_braking(cfg, ControlParams{});
  EXPECT_FALSE(r2.collided);
  EXPECT_NEAR(r2.stop_margin, 2.0 - (1.75 + 1.5 * 1.5 / 40.0), 1e-9);
}

TEST(Braking, SubstepsDoNotChangeMargin) {
  SimConfig cfg;
  cfg.substeps = 1;
  const double coarse = simulate_braking(cfg, ControlParams{}).stop_margin;
  for (int n : {4, 64, 1024}) {
    cfg.substeps = n;
    EXPECT_LT(std::abs(simulate_braking(cfg, ControlParams{}).stop_margin - coarse), 0.01);
  }
}

TEST(BrakingProperty, MarginMonotonicity) {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    SimConfig cfg;
    cfg.cruise_speed = 0.2 + 2.0 * u(rng);
    cfg.max_decel = 1.0 + 5.0 * u(rng);
    cfg.frame_rate = 3.0 + 20.0 * u(rng);
    ControlParams p;
    p.v_max = 5.0;
    const double base = simulate_braking(cfg, p).stop_margin;
    SimConfig faster = cfg;
    faster.cruise_speed *= 1.0 + 0.5 * u(rng);
    EXPECT_LE(simulate_braking(faster, p).stop_margin, base + 1e-12);
    SimConfig stronger = cfg;
    stronger.max_decel *= 1.0 + u(rng);
    EXPECT_GE(simulate_braking(stronger, p).stop_margin, base - 1e-12);
    SimConfig quicker = cfg;
    quicker.frame_rate *= 1.0 + u(rng);
    EXPECT_GE(simulate_braking(quicker, p).stop_margin, base - 1e-12);
  }
}

TEST(Braking, LogIntegrity) {
  SimConfig cfg;
  cfg.detection_range = 1.2;
  const ControlParams p;
  const auto r = simulate_braking(cfg, p);
  const auto& rec = r.log.records;
  ASSERT_GT(rec.size(), 2u);
  for (std::size_t i = 1; i < rec.size(); ++i) {
    EXPECT_NEAR(rec[i].t - rec[i - 1].t, 1.0 / 6.0, 1e-12);
    EXPECT_LE(rec[i].v_estimated, p.v_max + 1e-12);
    EXPECT_GE(rec[i].v_estimated - rec[i - 1].v_estimated, -cfg.max_decel / 6.0 - 1e-12);
  }
  std::istringstream csv(r.log.csv());
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "t,p_coll,v_desired,v_estimated,position");
}

TEST(MaxSafeSpeed, ClosedForm) {
  EXPECT_NEAR(max_safe_speed(SimConfig{}), 3.0, 1e-12);
  SimConfig inf;
  inf.max_decel = std::numeric_limits<double>::infinity();
  EXPECT_DOUBLE_EQ(max_safe_speed(inf), 12.0);
  SimConfig zero;
  zero.obstacle_distance = 0.0;
  EXPECT_EQ(max_safe_speed(zero), 0.0);
  // v/f + v^2/(2a) equals the distance at the returned speed.
  SimConfig other;
  other.frame_rate = 18;
  other.max_decel = 4.5;
  const double v = max_safe_speed(other);
  EXPECT_NEAR(v / 18 + v * v / 9.0, 2.0, 1e-12);
}

TEST(MaxSafeSpeed, BisectionAgrees) {
  for (double fps : {6.0, 12.0, 18.0}) {
    SimConfig cfg;
    cfg.frame_rate = fps;
    EXPECT_NEAR(max_safe_speed_search(cfg, ControlParams{}), max_safe_speed(cfg), 1e-4) << fps;
  }
}

TEST(SimConfig, Validation) {
  SimConfig cfg;
  cfg.frame_rate = 0;
  EXPECT_THROW(simulate_braking(cfg, ControlParams{}), ControlError);
  cfg = SimConfig{};
  cfg.max_decel = -1;
  EXPECT_THROW(simulate_braking(cfg, ControlParams{}), ControlError);
}

TEST(Metrics, Perfect) {
  const std::vector<Prediction> p{{0.1, 0.9}, {-0.3, 0.1}, {0.5, 0.8}};
  const std::vector<Label> l{{0.1, 1}, {-0.3, 0}, {0.5, 1}};
  const auto m = evaluate(p, l);
  EXPECT_DOUBLE_EQ(m.eva, 1.0);
  EXPECT_DOUBLE_EQ(m.rmse, 0.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(m.f1, 1.0);
}

TEST(Metrics, MeanPredictorHasZeroEva) {
  const std::vector<Label> l{{0.0, 1}, {1.0, 1}, {0.0, 0}, {1.0, 0}};
  const std::vector<Prediction> p{{0.5, 0.9}, {0.5, 0.4}, {0.5, 0.2}, {0.5, 0.6}};
  const auto m = evaluate(p, l);
  EXPECT_NEAR(m.eva, 0.0, 1e-12);
  EXPECT_NEAR(m.rmse, 0.5, 1e-12);
  EXPECT_NEAR(m.accuracy, 0.5, 1e-12);
  EXPECT_NEAR(m.precision, 0.5, 1e-12);
  EXPECT_NEAR(m.recall, 0.5, 1e-12);
  EXPECT_NEAR(m.f1, 0.5, 1e-12);
}

TEST(Metrics, NoPositivesGivesZeroF1) {
  const std::vector<Label> l{{0.0, 0}, {1.0, 0}};
  const std::vector<Prediction> p{{0.0, 0.1}, {1.0, 0.2}};
  EXPECT_EQ(evaluate(p, l).f1, 0.0);
  EXPECT_EQ(evaluate(p, l).accuracy, 1.0);
}

TEST(Metrics, Errors) {
  EXPECT_THROW(evaluate({{0, 0}}, {}), EvalError);
  EXPECT_THROW(evaluate({}, {}), EvalError);
  EXPECT_THROW(evaluate({{0, 0}, {0, 0}}, {{1, 0}, {1, 1}}), EvalError);
  EXPECT_THROW(evaluate({{0, 0}, {0, 0}}, {{1, 0}, {2, 3}}), EvalError);
}

// Single-pass Welford re-implementation.
EvalMetrics streaming(const std::vector<Prediction>& p, const std::vector<Label>& l, double thr) {
  double my = 0, m2y = 0, me = 0, m2e = 0, sq = 0;
  double tp = 0, fp = 0, fn = 0, ok = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double n = static_cast<double>(i + 1);
    const double y = l[i].steer;
    const double e = l[i].steer - p[i].steer;
    const double dy = y - my;
    my += dy / n;
    m2y += dy * (y - my);
    const double de = e - me;
    me += de / n;
    m2e += de * (e - me);
    sq += e * e;
    const bool pp = p[i].p_coll >= thr;
    const bool aa = l[i].collision == 1;
    ok += pp == aa;
    tp += pp && aa;
    fp += pp && !aa;
    fn += !pp && aa;
  }
  EvalMetrics m;
  m.eva = 1.0 - m2e / m2y;
  m.rmse = std::sqrt(sq / static_cast<double>(p.size()));
  m.accuracy = ok / static_cast<double>(p.size());
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0;
  m.recall = tp + fn > 0 ? tp / (tp + fn) : 0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0;
  return m;
}

TEST(MetricsProperty, AgreesWithStreamingImplementation) {
  std::mt19937_64 rng(72);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 300; ++t) {
    const int n = 2 + static_cast<int>(u(rng) * 500);
    std::vector<Prediction> p(n);
    std::vector<Label> l(n);
    for (int i = 0; i < n; ++i) {
      l[i] = {2 * u(rng) - 1, u(rng) < 0.4 ? 1 : 0};
      p[i] = {l[i].steer + 0.3 * (u(rng) - 0.5), u(rng)};
    }
    const auto a = evaluate(p, l);
    const auto b = streaming(p, l, 0.5);
    EXPECT_NEAR(a.eva, b.eva, 1e-12);
    EXPECT_NEAR(a.rmse, b.rmse, 1e-12);
    EXPECT_NEAR(a.accuracy, b.accuracy, 1e-12);
    EXPECT_NEAR(a.f1, b.f1, 1e-12);
    EXPECT_LE(a.eva, 1.0);
    EXPECT_GE(a.rmse, 0.0);
  }
}

TEST(Dataset, LoadsLabelsAndFrames) {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / ("nanonav_ds_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  GrayImage img{6, 4, std::vector<std::uint8_t>(24, 0)};
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(10 * i);
  write_pgm(dir / "a.pgm", img);
  write_labels(dir, {{"a.pgm", {0.25, 1}}});
  const auto ds = load_dataset(dir);
  ASSERT_EQ(ds.samples.size(), 1u);
  EXPECT_EQ(ds.labels()[0].collision, 1);
  EXPECT_DOUBLE_EQ(ds.labels()[0].steer, 0.25);
  const auto x = ds.input(0, TensorShape{1, 2, 2});
  // Center crop of the 6x4 frame starts at column 2, row 1.
  EXPECT_DOUBLE_EQ(x.at(0, 0, 0), 80.0 / 255.0);
  EXPECT_THROW(ds.input(0, TensorShape{1, 8, 8}), ShapeError);
  std::ofstream(dir / "labels.csv") << "file,steer,collision\n";
  EXPECT_THROW(load_dataset(dir), IoError);
  std::ofstream(dir / "labels.csv") << "path,steer,collision\na.pgm,0.1,2\n";
  EXPECT_THROW(load_dataset(dir), IoError);
  fs::remove_all(dir);
}

TEST(Pgm, RoundTripAndErrors) {
  GrayImage img{3, 2, {0, 1, 2, 253, 254, 255}};
  const auto p = std::filesystem::temp_directory_path() / ("nanonav_img_" + std::to_string(::getpid()) + ".pgm");
  write_pgm(p, img);
  const auto back = read_pgm(p);
  EXPECT_EQ(back.pixels, img.pixels);
  EXPECT_EQ(back.width, 3);
  std::filesystem::remove(p);
  const auto bytes = [](const std::string& s) { return std::vector<std::uint8_t>(s.begin(), s.end()); };
  EXPECT_THROW(parse_pgm(bytes("P2\n1 1\n255\n0")), IoError);
  EXPECT_THROW(parse_pgm(bytes("P5\n2 2\n255\nab")), IoError);
  EXPECT_EQ(parse_pgm(bytes(std::string("P5\n# hi\n1 1\n255\n") + '\x07')).pixels[0], 7);
}

}  // namespace
}  // namespace nanonav::harness
