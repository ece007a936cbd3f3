#pragma once

#include "vcfusion/error.hpp"
#include "vcfusion/evaluation.hpp"
#include "vcfusion/mlp.hpp"
#include "vcfusion/prediction.hpp"
#include "vcfusion/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace vcfusion
{

struct DatasetOptions
{
  WindowParams window;
  ExtractionParams extraction;
  // extra negatives from vehicles that never change lanes, one per second
  bool include_non_changers{false};
};

/// Labeled samples from one simulated run. Events come from the log alone.
inline std::vector<LabeledSample> label_run(const TrajectoryLog & log, const DatasetOptions & opt)
{
  const auto events = extract_lane_changes(log, opt.extraction);
  auto samples = label_windows(events, log, opt.window);
  if (opt.include_non_changers && !log.empty()) {
    for (const auto & veh : log.frames.front()) {
      if (veh.kind != VehicleKind::car) continue;
      const bool changes = std::any_of(
        events.begin(), events.end(), [&](const ManeuverPlan & e) { return e.vehicle_id == veh.id; });
      if (changes) continue;
      for (double t = log.times.front(); t <= log.times.back() + 1e-9; t += 1.0 / opt.window.sample_rate) {
        samples.push_back({extract_features(log, veh.id, t), 0, t, veh.id});
      }
    }
  }
  return samples;
}

inline Dataset to_dataset(std::span<const LabeledSample> samples)
{
  Dataset d;
  d.dims = feature_count;
  for (const auto & s : samples) {
    d.add(s.features, s.label);
  }
  return d;
}

/// Simulates every seed and labels the resulting logs.
inline std::vector<LabeledSample> build_training_samples(
  ScenarioConfig scenario, std::span<const std::uint64_t> seeds, const DatasetOptions & opt)
{
  std::vector<LabeledSample> out;
  scenario.driver.policy = DriverPolicy::baseline;
  for (std::uint64_t seed : seeds) {
    scenario.seed = seed;
    const auto samples = label_run(simulate(scenario), opt);
    out.insert(out.end(), samples.begin(), samples.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// trace evaluation

struct FilterParams
{
  int tau_a{3};
  int tau_c{3};
  double thres{0.5};
};

struct VehicleTraces
{
  std::uint64_t seed{0};
  PredictionTrace raw;
  PredictionTrace aggressive;
  PredictionTrace conservative;
  std::vector<int> truth;
};

/// Per-second inference over a log for one vehicle, then both filters.
inline VehicleTraces trace_vehicle(
  const MlpModel & model, const TrajectoryLog & log, int id, std::span<const ManeuverPlan> events,
  const WindowParams & w, const FilterParams & f)
{
  VehicleTraces vt;
  vt.raw.vehicle_id = id;
  const double step = 1.0 / w.sample_rate;
  const auto count = static_cast<std::size_t>(std::floor((log.times.back() - log.times.front()) / step + 1e-9)) + 1;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = log.times.front() + step * static_cast<double>(k);
    const auto x = extract_features(log, id, t);
    const double p = infer(model, x);
    vt.raw.records.push_back({t, p, p >= 0.5 ? 1 : 0});
    vt.truth.push_back(ground_truth_label(events, id, t, w));
  }
  vt.aggressive = aggressive_filter(vt.raw, f.tau_a);
  vt.conservative = conservative_filter(vt.raw, f.tau_c, f.thres);
  return vt;
}

struct PredictionEvaluation
{
  std::vector<VehicleTraces> traces;
  ClassificationMetrics raw;
  ClassificationMetrics aggressive;
  ClassificationMetrics conservative;
};

/// Pooled classification metrics over every car on the held-out seeds.
inline PredictionEvaluation evaluate_prediction(
  const MlpModel & model, ScenarioConfig scenario, std::span<const std::uint64_t> seeds,
  const DatasetOptions & opt, const FilterParams & f)
{
  PredictionEvaluation ev;
  std::vector<int> truth, raw, aggr, cons;
  scenario.driver.policy = DriverPolicy::baseline;
  for (std::uint64_t seed : seeds) {
    scenario.seed = seed;
    const TrajectoryLog log = simulate(scenario);
    if (log.empty()) continue;
    const auto events = extract_lane_changes(log, opt.extraction);
    for (const auto & veh : log.frames.front()) {
      if (veh.kind != VehicleKind::car) continue;
      auto vt = trace_vehicle(model, log, veh.id, events, opt.window, f);
      vt.seed = seed;
      const auto r = vt.raw.predictions();
      const auto a = vt.aggressive.predictions();
      const auto c = vt.conservative.predictions();
      truth.insert(truth.end(), vt.truth.begin(), vt.truth.end());
      raw.insert(raw.end(), r.begin(), r.end());
      aggr.insert(aggr.end(), a.begin(), a.end());
      cons.insert(cons.end(), c.begin(), c.end());
      ev.traces.push_back(std::move(vt));
    }
  }
  ev.raw = classification_metrics(raw, truth);
  ev.aggressive = classification_metrics(aggr, truth);
  ev.conservative = classification_metrics(cons, truth);
  return ev;
}

}  // namespace vcfusion
