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

#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nanonav/container.hpp"
#include "nanonav/control.hpp"
#include "nanonav/dataset.hpp"
#include "nanonav/deploy.hpp"
#include "nanonav/error.hpp"
#include "nanonav/infer.hpp"
#include "nanonav/model.hpp"
#include "nanonav/parallel.hpp"
#include "nanonav/pgm.hpp"
#include "nanonav/pipeline.hpp"
#include "nanonav/planner.hpp"
#include "nanonav/simulate.hpp"

namespace nanonav::cli {

namespace {

using nlohmann::json;

constexpr const char* kEnvPrefix = "NANONAV_";

std::string env_name(const std::string& flag) {
  std::string name = kEnvPrefix;
  for (char c : flag.substr(flag.find_first_not_of('-'))) {
    name += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return name;
}

template <typename T>
CLI::Option* opt(CLI::App* app, const std::string& flag, T& value, const std::string& help) {
  return app->add_option(flag, value, help)->envname(env_name(flag));
}

CLI::Option* flag(CLI::App* app, const std::string& name, bool& value, const std::string& help) {
  return app->add_flag(name, value, help)->envname(env_name(name));
}

std::vector<FloatTensor> random_inputs(const TensorShape& shape, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<FloatTensor> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    FloatTensor t(shape);
    for (auto& v : t.data) v = u(rng);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<FloatTensor> dataset_inputs(const std::string& dir, const TensorShape& shape) {
  const auto ds = harness::load_dataset(dir);
  std::vector<FloatTensor> out;
  out.reserve(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) out.push_back(ds.input(i, shape));
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << text;
  if (!f) throw IoError("write failed for " + path);
}

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

struct Options {
  // shared
  std::string in_dir;
  std::string out_path;
  std::string model_dir;
  std::string data_dir;
  std::string mode = "float";
  std::size_t workers = 1;
  std::uint64_t seed = 1;
  // build-model
  bool no_bn = false;
  double gain = 1.0;
  // calibrate / quantize
  std::size_t random_count = 0;
  std::string ranges_path;
  int max_weight_frac = 14;
  // infer
  std::string image_path;
  std::string dump_dir;
  // eval
  double threshold = 0.5;
  // plan
  std::size_t l1 = planner::MemoryBudget{}.l1_bytes;
  std::size_t l2 = planner::MemoryBudget{}.l2_bytes;
  std::string buffering = "auto";
  // pipeline
  std::int64_t t_acquire = 10;
  std::int64_t t_transfer = 0;
  std::int64_t t_compute = 50;
  int frames = 8;
  int buffers = 2;
  // simulate
  double speed = harness::SimConfig{}.cruise_speed;
  double obstacle = harness::SimConfig{}.obstacle_distance;
  double fps = harness::SimConfig{}.frame_rate;
  double decel = harness::SimConfig{}.max_decel;
  std::optional<double> accel;
  std::optional<double> range;
  int substeps = harness::SimConfig{}.substeps;
  double alpha = control::ControlParams{}.alpha;
  double beta = control::ControlParams{}.beta_smooth;
  std::optional<double> vmax;
  double pcrit = control::ControlParams{}.p_crit;
  std::string log_path;
  // bench
  int iterations = 5;
};

NetworkGraph model_or_dronet(const Options& o) {
  return o.model_dir.empty() ? build_dronet() : load_model(o.model_dir);
}

int cmd_build_model(const Options& o, std::ostream& out) {
  DronetOptions d;
  d.batch_norm = !o.no_bn;
  d.seed = o.seed;
  d.weight_gain = o.gain;
  const NetworkGraph g = build_dronet(d);
  save_model(g, o.out_path);
  out << "wrote " << o.out_path << ": " << g.layers().size() << " top-level layers, " << mac_count(g) << " MACs, "
      << param_count(g) << " parameters\n";
  return 0;
}

int cmd_fold(const Options& o, std::ostream& out) {
  deploy::FoldReport report;
  const NetworkGraph folded = deploy::fold_network(load_model(o.in_dir), &report);
  save_model(folded, o.out_path);
  for (const auto& line : report.log) out << line << '\n';
  out << "folded " << report.batchnorms_folded << " batchnorm layers (" << report.bypass_inverse_folds
      << " bypass inverse folds) into " << o.out_path << '\n';
  return 0;
}

std::vector<FloatTensor> calibration_set(const Options& o, const TensorShape& shape) {
  if (!o.data_dir.empty()) return dataset_inputs(o.data_dir, shape);
  if (o.random_count > 0) return random_inputs(shape, o.random_count, o.seed);
  return {};
}

int cmd_calibrate(const Options& o, std::ostream& out) {
  const NetworkGraph g = load_model(o.model_dir);
  const auto images = calibration_set(o, g.input_shape());
  if (images.empty()) throw CalibrationError("calibrate needs --data or --random N");
  const auto ranges = deploy::calibrate_ranges(g, images, o.workers);
  deploy::save_ranges(ranges, o.out_path);
  out << "calibrated " << ranges.size() << " tensors over " << images.size() << " images into " << o.out_path
      << '\n';
  return 0;
}

int cmd_quantize(const Options& o, std::ostream& out) {
  const NetworkGraph g = load_model(o.model_dir);
  const auto ranges = deploy::load_ranges(o.ranges_path);
  deploy::AssignOptions a;
  a.max_weight_frac_bits = o.max_weight_frac;
  const NetworkGraph q = deploy::assign_qformats(g, ranges, a);
  save_model(q, o.out_path);
  const auto images = calibration_set(o, g.input_shape());
  out << deploy::format_report(deploy::quantization_report(q, ranges, images));
  return 0;
}

int cmd_infer(const Options& o, std::ostream& out) {
  const NetworkGraph g = load_model(o.model_dir);
  const Mode mode = parse_mode(o.mode);
  const FloatTensor input = o.image_path.empty() ? random_inputs(g.input_shape(), 1, o.seed).front()
                                                 : image_to_input(read_pgm(o.image_path), g.input_shape());
  kernels::RunOptions run;
  run.workers = o.workers;
  std::optional<ActivationDump> dump;
  if (!o.dump_dir.empty()) {
    dump.emplace(o.dump_dir);
    if (mode == Mode::kFixed) {
      dump->add("input", quantize_tensor(input, g.input_fmt()));
      run.on_fxp = [&](const Layer& l, const FxpTensor& t, std::size_t) { dump->add(l.name, t); };
    } else {
      dump->add("input", input);
    }
    run.on_float = [&](const Layer& l, const FloatTensor& t) { dump->add(l.name, t); };
  }
  const auto r = infer(g, input, mode, run);
  json j{{"mode", mode_name(mode)},
         {"theta_steer", r.theta_steer},
         {"p_coll", r.p_coll},
         {"steer_logit", r.steer_logit},
         {"collision_logit", r.collision_logit}};
  if (dump) {
    dump->finish();
    j["activations"] = dump->count();
  }
  out << j.dump(2) << '\n';
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const NetworkGraph g = load_model(o.model_dir);
  const Mode mode = parse_mode(o.mode);
  const auto ds = harness::load_dataset(o.data_dir);
  std::vector<harness::Prediction> preds(ds.samples.size());
  parallel_for(ds.samples.size(), o.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto r = infer(g, ds.input(i, g.input_shape()), mode);
      preds[i] = {r.theta_steer, r.p_coll};
    }
  });
  const auto m = harness::evaluate(preds, ds.labels(), o.threshold);
  json j{{"samples", m.samples}, {"eva", m.eva},           {"rmse", m.rmse},
         {"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall},
         {"f1", m.f1}};
  out << j.dump(2) << '\n';
  return 0;
}

planner::Buffering parse_buffering(const std::string& s) {
  if (s == "auto") return planner::Buffering::kAuto;
  if (s == "single") return planner::Buffering::kSingle;
  if (s == "double") return planner::Buffering::kDouble;
  throw PlanError("unknown buffering policy '" + s + "' (auto, single, double)");
}

int cmd_plan(const Options& o, std::ostream& out) {
  const NetworkGraph g = model_or_dronet(o);
  planner::MemoryBudget budget;
  budget.l1_bytes = o.l1;
  budget.l2_bytes = o.l2;
  const auto plans = planner::plan_network(g, budget, parse_buffering(o.buffering));
  const std::string text = planner::describe_plans(plans, budget);
  if (o.out_path.empty()) {
    out << text;
  } else {
    write_text(o.out_path, text);
    out << "wrote " << plans.size() << " layer plans to " << o.out_path << '\n';
  }
  return 0;
}

int cmd_pipeline(const Options& o, std::ostream& out) {
  const auto s = planner::schedule_pipeline(o.t_acquire, o.t_compute, o.t_transfer, o.frames, o.buffers);
  const std::string csv = planner::schedule_csv(s);
  if (o.out_path.empty()) {
    out << csv;
  } else {
    write_text(o.out_path, csv);
    out << "steady_period " << s.steady_period << "\nfill_latency " << s.fill_latency << "\nmakespan "
        << s.makespan << '\n';
  }
  return 0;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  harness::SimConfig cfg;
  cfg.cruise_speed = o.speed;
  cfg.obstacle_distance = o.obstacle;
  cfg.frame_rate = o.fps;
  cfg.max_decel = o.decel;
  cfg.max_accel = o.accel;
  cfg.detection_range = o.range;
  cfg.substeps = o.substeps;
  control::ControlParams p;
  p.alpha = o.alpha;
  p.beta_smooth = o.beta;
  p.v_max = o.vmax.value_or(std::max(o.speed, p.v_max));
  p.p_crit = o.pcrit;
  const auto r = harness::simulate_braking(cfg, p);
  if (!o.log_path.empty()) write_text(o.log_path, r.log.csv());
  if (r.collided) {
    out << "collision at t=" << num(*r.collision_time) << " s\n";
  } else {
    out << "no collision\n";
  }
  out << "stop margin " << num(r.stop_margin) << " m\n";
  out << "final position " << num(r.final_state.position) << " m after " << num(r.final_state.time) << " s\n";
  out << "max safe speed " << num(harness::max_safe_speed(cfg)) << " m/s\n";
  return 0;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const NetworkGraph base = model_or_dronet(o);
  const Mode mode = parse_mode(o.mode);
  NetworkGraph g = base;
  if (mode == Mode::kFixed && !g.quantized()) {
    // Self-contained fixed-point benchmark: fold and calibrate on random frames.
    g = deploy::fold_network(g);
    const auto calib = random_inputs(g.input_shape(), 4, o.seed);
    g = deploy::assign_qformats(g, deploy::calibrate_ranges(g, calib, o.workers));
  }
  const auto input = random_inputs(g.input_shape(), 1, o.seed + 1).front();
  kernels::RunOptions run;
  run.workers = o.workers;
  std::vector<double> ms;
  for (int i = 0; i < o.iterations; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    (void)infer(g, input, mode, run);
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(ms.begin(), ms.end());
  const double macs = static_cast<double>(mac_count(g));
  out << "mode " << mode_name(mode) << ", workers " << o.workers << ", iterations " << o.iterations << '\n';
  out << "min " << num(ms.front()) << " ms, median " << num(ms[ms.size() / 2]) << " ms\n";
  out << "throughput " << num(macs / (ms.front() * 1e3)) << " MMAC/s\n";
  return 0;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"nanonav: fixed-point DroNet-style inference, deployment and closed-loop tools"};
  app.name("nanonav");
  app.require_subcommand(1, 1);
  Options o;

  auto* build = app.add_subcommand("build-model", "write a randomly initialized DroNet model");
  opt(build, "--out", o.out_path, "output model directory")->required();
  opt(build, "--seed", o.seed, "initialization seed");
  opt(build, "--gain", o.gain, "convolution weight gain");
  flag(build, "--no-bn", o.no_bn, "omit batch normalization layers");

  auto* fold = app.add_subcommand("fold", "fold batch normalization into convolutions");
  opt(fold, "--in", o.in_dir, "input model directory")->required();
  opt(fold, "--out", o.out_path, "output model directory")->required();

  auto* calibrate = app.add_subcommand("calibrate", "record activation ranges");
  opt(calibrate, "--model", o.model_dir, "model directory")->required();
  opt(calibrate, "--data", o.data_dir, "dataset directory (labels.csv + PGM frames)");
  opt(calibrate, "--random", o.random_count, "use N random frames instead of a dataset");
  opt(calibrate, "--seed", o.seed, "seed for random frames");
  opt(calibrate, "--workers", o.workers, "worker threads");
  opt(calibrate, "--out", o.out_path, "output ranges JSON")->required();

  auto* quantize = app.add_subcommand("quantize", "assign Q-formats and quantize parameters");
  opt(quantize, "--model", o.model_dir, "folded model directory")->required();
  opt(quantize, "--ranges", o.ranges_path, "ranges JSON from calibrate")->required();
  opt(quantize, "--out", o.out_path, "output model directory")->required();
  opt(quantize, "--max-weight-frac", o.max_weight_frac, "cap on weight fractional bits");
  opt(quantize, "--data", o.data_dir, "dataset for the saturation report");
  opt(quantize, "--random", o.random_count, "random frames for the saturation report");
  opt(quantize, "--seed", o.seed, "seed for random frames");

  auto* inf = app.add_subcommand("infer", "run one frame through a model");
  opt(inf, "--model", o.model_dir, "model directory")->required();
  opt(inf, "--image", o.image_path, "P5 PGM frame (random frame when absent)");
  opt(inf, "--seed", o.seed, "seed for the random frame");
  opt(inf, "--mode", o.mode, "float or fxp");
  opt(inf, "--workers", o.workers, "worker threads");
  opt(inf, "--dump-activations", o.dump_dir, "directory for per-layer activation blobs");

  auto* eval = app.add_subcommand("eval", "score a model on a labeled dataset");
  opt(eval, "--model", o.model_dir, "model directory")->required();
  opt(eval, "--data", o.data_dir, "dataset directory")->required();
  opt(eval, "--mode", o.mode, "float or fxp");
  opt(eval, "--threshold", o.threshold, "collision classification threshold");
  opt(eval, "--workers", o.workers, "worker threads");

  auto* plan = app.add_subcommand("plan", "tile every layer under an L1/L2 budget");
  opt(plan, "--model", o.model_dir, "model directory (default DroNet when absent)");
  opt(plan, "--l1", o.l1, "L1 bytes");
  opt(plan, "--l2", o.l2, "L2 bytes");
  opt(plan, "--buffering", o.buffering, "auto, single or double");
  opt(plan, "--out", o.out_path, "write JSON here instead of stdout");

  auto* pipe = app.add_subcommand("pipeline", "schedule the acquire/transfer/compute pipeline");
  opt(pipe, "--acquire", o.t_acquire, "acquisition time units");
  opt(pipe, "--transfer", o.t_transfer, "transfer time units");
  opt(pipe, "--compute", o.t_compute, "compute time units");
  opt(pipe, "--frames", o.frames, "number of frames");
  opt(pipe, "--buffers", o.buffers, "frame buffers");
  opt(pipe, "--out", o.out_path, "write CSV here instead of stdout");

  auto* sim = app.add_subcommand("simulate", "closed-loop braking simulation");
  opt(sim, "--speed", o.speed, "cruise speed, m/s");
  opt(sim, "--obstacle", o.obstacle, "obstacle distance, m");
  opt(sim, "--fps", o.fps, "control frame rate");
  opt(sim, "--decel", o.decel, "maximum deceleration, m/s^2");
  opt(sim, "--accel", o.accel, "maximum acceleration, m/s^2 (default: --decel)");
  opt(sim, "--range", o.range, "detection range, m (default: --obstacle)");
  opt(sim, "--substeps", o.substeps, "integration substeps per frame");
  opt(sim, "--alpha", o.alpha, "velocity smoothing");
  opt(sim, "--beta", o.beta, "yaw smoothing");
  opt(sim, "--vmax", o.vmax, "maximum forward velocity (default: max(1.5, --speed))");
  opt(sim, "--pcrit", o.pcrit, "critical collision probability");
  opt(sim, "--log", o.log_path, "flight log CSV");

  auto* bench = app.add_subcommand("bench", "time end-to-end inference");
  opt(bench, "--model", o.model_dir, "model directory (default DroNet when absent)");
  opt(bench, "--mode", o.mode, "float or fxp");
  opt(bench, "--iterations", o.iterations, "timed runs")->check(CLI::PositiveNumber);
  opt(bench, "--workers", o.workers, "worker threads");
  opt(bench, "--seed", o.seed, "seed for frames");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "nanonav: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  try {
    if (build->parsed()) return cmd_build_model(o, out);
    if (fold->parsed()) return cmd_fold(o, out);
    if (calibrate->parsed()) return cmd_calibrate(o, out);
    if (quantize->parsed()) return cmd_quantize(o, out);
    if (inf->parsed()) return cmd_infer(o, out);
    if (eval->parsed()) return cmd_eval(o, out);
    if (plan->parsed()) return cmd_plan(o, out);
    if (pipe->parsed()) return cmd_pipeline(o, out);
    if (sim->parsed()) return cmd_simulate(o, out);
    if (bench->parsed()) return cmd_bench(o, out);
  } catch (const Error& e) {
    err << "nanonav: error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "nanonav: error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace nanonav::cli
