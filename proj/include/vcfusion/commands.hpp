#pragma once

#include "vcfusion/closed_loop.hpp"
#include "vcfusion/config.hpp"
#include "vcfusion/corpus.hpp"
#include "vcfusion/dataset.hpp"
#include "vcfusion/evaluation.hpp"
#include "vcfusion/io.hpp"
#include "vcfusion/mlp.hpp"
#include "vcfusion/random.hpp"
#include "vcfusion/scene.hpp"
#include "vcfusion/sensing.hpp"
#include "vcfusion/twinlink.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vcfusion
{

namespace fs = std::filesystem;

inline constexpr const char * effective_config_file = "effective_config.json";

inline std::string seed_dir_name(std::uint64_t seed) { return fmt::format("seed_{}", seed); }

inline fs::path make_dir(const fs::path & p)
{
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) {
    throw Error(ErrorCode::io, "cannot create " + p.string() + ": " + ec.message());
  }
  return p;
}

// ---------------------------------------------------------------------------
// simulate

/// Runs the scenario for one seed and writes its logs under `dir`.
inline void simulate_seed(const RunConfig & cfg, std::uint64_t seed, const fs::path & dir)
{
  ScenarioConfig sc_cfg = cfg.scenario;
  sc_cfg.seed = seed;
  Scenario sc(sc_cfg);
  TwinStore store(PositionSource{cfg.reference, cfg.gnss_sigma, derive_seed(seed, "gnss")});

  const std::size_t sense_stride = detail::ticks_per(cfg.guidance_period, sc_cfg.dt_sim);
  const std::size_t publish_stride = detail::ticks_per(cfg.channel.publish_period, sc_cfg.dt_sim);
  std::string detections = detections_csv_header();
  std::string twins = twin_csv_header();
  const fs::path depth_dir = dir / "depth";
  if (cfg.depth_every > 0) make_dir(depth_dir);

  std::size_t frame_index = 0;
  while (!sc.finished()) {
    const std::size_t k = sc.step_count();
    const double t = sc.time();
    if (k % publish_stride == 0) {
      for (const auto & v : sc.vehicles()) {
        store.publish(v, t);
        append_twin_row(twins, t, *store.find(v.id, t), std::nullopt);
      }
    }
    if (k % sense_stride == 0) {
      const SensorFrame frame = sense(t, sc.vehicles(), sc.ego_id(), cfg.sensing, derive_seed(seed, "sensor", k));
      append_detections(detections, frame);
      if (cfg.depth_every > 0 && frame_index % static_cast<std::size_t>(cfg.depth_every) == 0) {
        write_depth_map(depth_dir / fmt::format("depth_{:06d}.dpt", frame_index), frame.depth);
      }
      ++frame_index;
    }
    sc.step();
  }
  const TrajectoryLog log = sc.take_log();
  write_file(dir / "trajectory.csv", trajectory_csv(log));
  write_file(dir / "maneuvers.csv", maneuver_csv(log.maneuvers));
  write_file(dir / "detections.csv", detections);
  write_file(dir / "twins.csv", twins);
}

inline void cmd_simulate(const RunConfig & cfg, const fs::path & out, std::ostream & log)
{
  for (std::uint64_t seed : cfg.seeds) {
    simulate_seed(cfg, seed, make_dir(out / seed_dir_name(seed)));
    log << "simulate: seed " << seed << " done\n";
  }
}

// ---------------------------------------------------------------------------
// fuse-eval

inline constexpr double reference_threshold = 0.7;

struct FuseEvalSummary
{
  std::uint64_t seed{0};
  int frames{0};
  int overlap_frames{0};
  double fused_at_reference{0.0};
  double baseline_at_reference{0.0};
  bool fused_never_below{true};  // over the configured thresholds
};

inline nlohmann::json to_json(const FuseEvalSummary & s)
{
  return {
    {"seed", s.seed},
    {"frames", s.frames},
    {"overlap_frames", s.overlap_frames},
    {"threshold", reference_threshold},
    {"accuracy_fused", s.fused_at_reference},
    {"accuracy_baseline", s.baseline_at_reference},
    {"gap", s.fused_at_reference - s.baseline_at_reference},
    {"fused_never_below_baseline", s.fused_never_below}};
}

inline FuseEvalSummary fuse_eval_seed(const RunConfig & cfg, std::uint64_t seed, const fs::path & dir)
{
  const auto corpus = build_corpus(cfg.corpus_for(seed));
  const auto scored = evaluate_corpus(corpus, cfg.fusion);
  const auto curve = identification_accuracy(scored, cfg.thresholds);
  const std::vector<double> reference{reference_threshold};
  const auto at_ref = identification_accuracy(scored, reference);

  FuseEvalSummary s;
  s.seed = seed;
  s.frames = static_cast<int>(corpus.size());
  for (const auto & f : corpus) s.overlap_frames += f.overlap_pair ? 1 : 0;
  s.fused_at_reference = at_ref.accuracy.at(MatchMethod::fused)[0];
  s.baseline_at_reference = at_ref.accuracy.at(MatchMethod::baseline)[0];
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    if (curve.accuracy.at(MatchMethod::fused)[i] < curve.accuracy.at(MatchMethod::baseline)[i]) {
      s.fused_never_below = false;
    }
  }

  std::string ident = identification_csv_header();
  for (const auto & r : scored) append_identification(ident, r);
  write_file(dir / "curve.csv", curve_csv(curve));
  write_file(dir / "identifications.csv", ident);
  write_json(dir / "summary.json", to_json(s));
  return s;
}

inline void cmd_fuse_eval(const RunConfig & cfg, const fs::path & out, std::ostream & log)
{
  nlohmann::json all = nlohmann::json::array();
  for (std::uint64_t seed : cfg.seeds) {
    const auto s = fuse_eval_seed(cfg, seed, make_dir(out / seed_dir_name(seed)));
    all.push_back(to_json(s));
    log << fmt::format(
      "fuse-eval: seed {} accuracy at {}: fused {:.3f} baseline {:.3f}\n", seed, reference_threshold,
      s.fused_at_reference, s.baseline_at_reference);
  }
  write_json(out / "summary.json", all);
}

// ---------------------------------------------------------------------------
// train / predict-eval

/// Trains on the configured training seeds and writes the dataset and model.
inline MlpModel train_model(const RunConfig & cfg, const fs::path & out, std::ostream & log)
{
  const auto samples = build_training_samples(cfg.scenario, cfg.training_seeds, cfg.dataset_options());
  const Dataset data = to_dataset(samples);
  MlpModel model;
  try {
    model = train(data, cfg.training);
  } catch (const Error & e) {
    if (e.code() != ErrorCode::degenerate_dataset) throw;
    throw Error(
      ErrorCode::degenerate_dataset,
      fmt::format("{} samples from {} training seeds; add training seeds", samples.size(), cfg.training_seeds.size()));
  }
  std::size_t positives = 0;
  std::vector<int> predicted;
  for (std::size_t r = 0; r < data.size(); ++r) {
    positives += data.y[r] == 1 ? 1 : 0;
    predicted.push_back(predict_label(model, data.row(r)));
  }
  write_file(out / "dataset.csv", dataset_csv(samples));
  write_json(out / "model.json", to_json(model));
  write_json(
    out / "training_summary.json",
    {{"training_seeds", cfg.training_seeds.size()},
     {"samples", data.size()},
     {"positives", positives},
     {"training_metrics", to_json(classification_metrics(predicted, data.y))}});
  log << fmt::format("train: {} samples, {} positive\n", data.size(), positives);
  return model;
}

inline void cmd_train(const RunConfig & cfg, const fs::path & out, std::ostream & log)
{
  train_model(cfg, out, log);
}

/// The configured model file, or a freshly trained one when none is given.
inline MlpModel obtain_model(const RunConfig & cfg, const fs::path & out, std::ostream & log)
{
  if (cfg.model_path) {
    try {
      return model_from_json(nlohmann::json::parse(read_file(*cfg.model_path)));
    } catch (const nlohmann::json::exception & e) {
      throw Error(ErrorCode::io, *cfg.model_path + ": " + e.what());
    }
  }
  return train_model(cfg, make_dir(out / "model"), log);
}

inline void cmd_predict_eval(const RunConfig & cfg, const fs::path & out, std::ostream & log)
{
  const MlpModel model = obtain_model(cfg, out, log);
  const auto ev = evaluate_prediction(model, cfg.scenario, cfg.seeds, cfg.dataset_options(), cfg.filters);
  std::map<std::uint64_t, std::string> traces;
  for (const auto & vt : ev.traces) {
    auto & text = traces[vt.seed];
    if (text.empty()) text = trace_csv_header();
    append_trace(text, vt.raw, vt.aggressive, vt.conservative);
  }
  for (std::uint64_t seed : cfg.seeds) {
    const auto it = traces.find(seed);
    write_file(make_dir(out / seed_dir_name(seed)) / "traces.csv", it == traces.end() ? trace_csv_header() : it->second);
  }
  write_json(
    out / "metrics.json",
    {{"seeds", cfg.seeds},
     {"raw", to_json(ev.raw)},
     {"aggressive", to_json(ev.aggressive)},
     {"conservative", to_json(ev.conservative)}});
  log << fmt::format(
    "predict-eval: accuracy raw {:.3f} aggressive {:.3f} conservative {:.3f}\n", ev.raw.accuracy,
    ev.aggressive.accuracy, ev.conservative.accuracy);
}

// ---------------------------------------------------------------------------
// closed-loop

inline void cmd_closed_loop(const RunConfig & cfg, const fs::path & out, std::ostream & log)
{
  const MlpModel model = obtain_model(cfg, out, log);
  const auto paired = run_paired(cfg.closed_loop(), model, cfg.seeds);
  const fs::path reports = make_dir(out / "reports");
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    write_json(reports / fmt::format("seed_{}_guided.json", cfg.seeds[i]), to_json(paired.guided[i]));
    write_json(reports / fmt::format("seed_{}_baseline.json", cfg.seeds[i]), to_json(paired.baseline[i]));
  }
  write_json(out / "comparison.json", to_json(paired.comparison));
  const auto & c = paired.comparison;
  log << fmt::format(
    "closed-loop: {} pairs, guided improves ttc {:.2f} accel {:.2f} jerk {:.2f} of pairs\n", c.pairs,
    c.ttc.improved_fraction, c.mean_abs_accel.improved_fraction, c.max_jerk.improved_fraction);
}

// ---------------------------------------------------------------------------
// dispatch

inline const std::vector<std::string> & command_names()
{
  static const std::vector<std::string> names{"simulate", "fuse-eval", "train", "predict-eval", "closed-loop"};
  return names;
}

inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 2;
inline constexpr int exit_runtime_error = 3;

struct CommandRequest
{
  std::string command;
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::string> seeds;
};

/// Loads and validates everything before the first write, so a bad config
/// leaves no output behind. Returns the process exit code.
inline int run_command(const CommandRequest & req, std::ostream & err)
{
  RunConfig cfg;
  fs::path out;
  try {
    if (std::find(command_names().begin(), command_names().end(), req.command) == command_names().end()) {
      throw Error(ErrorCode::config, "unknown command '" + req.command + "'");
    }
    cfg = parse_config(read_file(req.config_path), req.config_path);
    if (req.seeds) {
      const auto seeds = parse_seed_list(*req.seeds);
      if (req.command == "train") {
        cfg.training_seeds = seeds;
      } else {
        cfg.seeds = seeds;
      }
    }
    if (req.out) {
      out = *req.out;
    } else if (cfg.output_dir) {
      out = *cfg.output_dir;
    } else {
      throw Error(ErrorCode::config, "no output directory: pass --out or set output_dir");
    }
  } catch (const Error & e) {
    err << e.what() << "\n";
    return exit_config_error;
  }

  try {
    make_dir(out);
    write_json(out / effective_config_file, to_json(cfg));
    if (req.command == "simulate") {
      cmd_simulate(cfg, out, err);
    } else if (req.command == "fuse-eval") {
      cmd_fuse_eval(cfg, out, err);
    } else if (req.command == "train") {
      cmd_train(cfg, out, err);
    } else if (req.command == "predict-eval") {
      cmd_predict_eval(cfg, out, err);
    } else {
      cmd_closed_loop(cfg, out, err);
    }
  } catch (const std::exception & e) {
    err << e.what() << "\n";
    return exit_runtime_error;
  }
  return exit_ok;
}

}  // namespace vcfusion
