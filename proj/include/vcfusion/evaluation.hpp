#pragma once

#include "vcfusion/error.hpp"
#include "vcfusion/fusion.hpp"
#include "vcfusion/geometry.hpp"
#include "vcfusion/prediction.hpp"
#include "vcfusion/scene.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vcfusion
{

// ---------------------------------------------------------------------------
// identification accuracy

struct ScoredIdentification
{
  IdentificationResult result;
  Box2D truth;  // ground-truth box of the queried target
  int truth_id{-1};
};

struct AccuracyCurve
{
  std::vector<double> thresholds;
  std::map<MatchMethod, std::vector<double>> accuracy;

  double at(MatchMethod m, double threshold) const
  {
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      if (std::abs(thresholds[i] - threshold) < 1e-9) return accuracy.at(m)[i];
    }
    throw Error(ErrorCode::invalid_argument, "threshold not on the curve");
  }
};

/// A frame is correct at threshold theta iff a box was chosen and its IoU
/// with the ground-truth target box is >= theta.
inline AccuracyCurve identification_accuracy(
  std::span<const ScoredIdentification> results, std::span<const double> thresholds)
{
  if (results.empty()) {
    throw Error(ErrorCode::empty_results, "no identification results to score");
  }
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (thresholds[i] < 0.0 || thresholds[i] > 1.0 || (i > 0 && thresholds[i] <= thresholds[i - 1])) {
      throw Error(ErrorCode::invalid_argument, "thresholds must be strictly increasing in [0, 1]");
    }
  }
  AccuracyCurve curve;
  curve.thresholds.assign(thresholds.begin(), thresholds.end());
  std::map<MatchMethod, std::vector<std::size_t>> correct;
  std::map<MatchMethod, std::size_t> total;
  for (const auto & r : results) {
    auto & c = correct[r.result.method];
    c.resize(thresholds.size(), 0);
    ++total[r.result.method];
    if (!r.result.chosen) continue;
    const double overlap = iou(r.result.chosen->box, r.truth);
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      if (overlap >= thresholds[i]) ++c[i];
    }
  }
  for (const auto & [method, counts] : correct) {
    auto & acc = curve.accuracy[method];
    for (std::size_t n : counts) {
      acc.push_back(static_cast<double>(n) / static_cast<double>(total[method]));
    }
  }
  return curve;
}

// ---------------------------------------------------------------------------
// safety / comfort

inline constexpr double metric_period = 0.1;

struct TtcSeries
{
  std::vector<double> times;
  std::vector<double> values;
  std::optional<double> average;  // undefined when nothing qualifies
};

/// TTC from the instant the target's center first enters the ego lane until
/// the end of the log, at closing samples only (bumper gap / closing speed).
inline TtcSeries ttc_series(const TrajectoryLog & log, int ego_id, int target_id)
{
  const std::size_t ei = log.require_vehicle(ego_id);
  const std::size_t ti = log.require_vehicle(target_id);
  TtcSeries out;
  bool relevant = false;
  double sum = 0.0;
  for (std::size_t k = 0; k < log.size(); ++k) {
    const auto & ego = log.frames[k][ei];
    const auto & tgt = log.frames[k][ti];
    if (!relevant && log.lanes.lane_of(tgt.y) == log.lanes.lane_of(ego.y)) {
      relevant = true;
    }
    if (!relevant) continue;
    const double gap = bumper_gap(ego, tgt);
    const double closing = ego.v - tgt.v;
    if (gap > 0.0 && closing > 0.0) {
      out.times.push_back(log.times[k]);
      out.values.push_back(gap / closing);
      sum += gap / closing;
    }
  }
  if (!out.values.empty()) {
    out.average = sum / static_cast<double>(out.values.size());
  }
  return out;
}

struct AccelJerk
{
  double mean_abs_accel{0.0};
  double max_jerk{0.0};
};

/// Mean |a| and max |da/dt| of a vehicle over samples [begin, end) of a log
/// already on the metric grid. Jerk is the central difference at each
/// interval midpoint, (a[k+1] - a[k]) / dt.
inline AccelJerk accel_jerk_metrics(
  const TrajectoryLog & log, int id, std::size_t begin = 0,
  std::size_t end = std::numeric_limits<std::size_t>::max())
{
  const std::size_t vi = log.require_vehicle(id);
  end = std::min(end, log.size());
  AccelJerk out;
  if (begin >= end) return out;
  double sum = 0.0;
  for (std::size_t k = begin; k < end; ++k) {
    sum += std::abs(log.frames[k][vi].a);
    if (k + 1 < end) {
      const double jerk = (log.frames[k + 1][vi].a - log.frames[k][vi].a) / log.dt;
      out.max_jerk = std::max(out.max_jerk, std::abs(jerk));
    }
  }
  out.mean_abs_accel = sum / static_cast<double>(end - begin);
  return out;
}

struct SafetyReport
{
  std::uint64_t seed{0};
  DriverPolicy policy{DriverPolicy::baseline};
  std::optional<int> target_id;
  std::optional<double> avg_ttc;
  double mean_abs_accel{0.0};
  double max_jerk{0.0};
  bool collision{false};
  double trip_duration{0.0};
  std::optional<double> deceleration_onset;  // first a <= -0.1 m/s^2
};

inline nlohmann::json to_json(const SafetyReport & r)
{
  nlohmann::json j;
  j["seed"] = r.seed;
  j["policy"] = std::string(to_string(r.policy));
  j["target_id"] = r.target_id ? nlohmann::json(*r.target_id) : nlohmann::json(nullptr);
  j["avg_ttc"] = r.avg_ttc ? nlohmann::json(*r.avg_ttc) : nlohmann::json(nullptr);
  j["mean_abs_accel"] = r.mean_abs_accel;
  j["max_jerk"] = r.max_jerk;
  j["collision"] = r.collision;
  j["trip_duration"] = r.trip_duration;
  j["deceleration_onset"] =
    r.deceleration_onset ? nlohmann::json(*r.deceleration_onset) : nlohmann::json(nullptr);
  return j;
}

/// The vehicle whose center first enters the ego lane ahead of the ego.
inline std::optional<int> first_cut_in(const TrajectoryLog & log, int ego_id)
{
  const std::size_t ei = log.require_vehicle(ego_id);
  if (log.empty()) return std::nullopt;
  const std::size_t n = log.frames.front().size();
  std::vector<bool> was_inside(n, false);
  for (std::size_t vi = 0; vi < n; ++vi) {
    was_inside[vi] = log.lanes.lane_of(log.frames.front()[vi].y) == log.lanes.lane_of(log.frames.front()[ei].y);
  }
  for (std::size_t k = 1; k < log.size(); ++k) {
    const auto & frame = log.frames[k];
    const int ego_lane = log.lanes.lane_of(frame[ei].y);
    for (std::size_t vi = 0; vi < n; ++vi) {
      if (vi == ei) continue;
      const bool inside = log.lanes.lane_of(frame[vi].y) == ego_lane;
      if (inside && !was_inside[vi] && frame[vi].s > frame[ei].s) {
        return frame[vi].id;
      }
      was_inside[vi] = inside;
    }
  }
  return std::nullopt;
}

/// Safety/comfort summary of the ego over its trip (until it covers the road
/// length, or the end of the log), on the 0.1 s metric grid.
inline SafetyReport safety_report(
  const TrajectoryLog & log, int ego_id, std::uint64_t seed, DriverPolicy policy)
{
  SafetyReport r;
  r.seed = seed;
  r.policy = policy;
  const TrajectoryLog grid = log.resampled(metric_period);
  const std::size_t ei = grid.require_vehicle(ego_id);
  std::size_t trip_end = grid.size();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid.frames[k][ei].s >= grid.lanes.length) {
      trip_end = k;
      break;
    }
  }
  r.trip_duration = trip_end == 0 ? 0.0 : grid.times[trip_end - 1] - grid.times.front() + grid.dt;
  const auto aj = accel_jerk_metrics(grid, ego_id, 0, trip_end);
  r.mean_abs_accel = aj.mean_abs_accel;
  r.max_jerk = aj.max_jerk;
  r.target_id = first_cut_in(grid, ego_id);
  if (r.target_id) {
    r.avg_ttc = ttc_series(grid, ego_id, *r.target_id).average;
  }
  for (const auto & c : log.collisions) {
    if (c.first_id == ego_id || c.second_id == ego_id) r.collision = true;
  }
  const std::size_t raw_ei = log.require_vehicle(ego_id);
  for (std::size_t k = 0; k < log.size(); ++k) {
    if (log.frames[k][raw_ei].a <= -0.1) {
      r.deceleration_onset = log.times[k];
      break;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// classification

struct ClassificationMetrics
{
  double accuracy{0.0};
  std::optional<double> true_positive_rate;   // undefined without positives
  std::optional<double> false_positive_rate;  // undefined without negatives
  std::size_t count{0};
};

inline ClassificationMetrics classification_metrics(
  std::span<const int> predictions, std::span<const int> truth)
{
  if (predictions.size() != truth.size()) {
    throw Error(ErrorCode::length_mismatch, "prediction and label counts differ");
  }
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predictions[i] == 1;
    const bool t = truth[i] == 1;
    if (p && t) ++tp;
    else if (p) ++fp;
    else if (t) ++fn;
    else ++tn;
  }
  ClassificationMetrics m;
  m.count = truth.size();
  m.accuracy = truth.empty() ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(truth.size());
  if (tp + fn > 0) m.true_positive_rate = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (fp + tn > 0) m.false_positive_rate = static_cast<double>(fp) / static_cast<double>(fp + tn);
  return m;
}

inline ClassificationMetrics classification_metrics(
  const PredictionTrace & trace, std::span<const int> truth)
{
  const auto preds = trace.predictions();
  return classification_metrics(preds, truth);
}

inline nlohmann::json to_json(const ClassificationMetrics & m)
{
  auto opt = [](const std::optional<double> & v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {
    {"accuracy", m.accuracy},
    {"true_positive_rate", opt(m.true_positive_rate)},
    {"false_positive_rate", opt(m.false_positive_rate)},
    {"count", m.count}};
}

// ---------------------------------------------------------------------------
// paired comparison

struct MetricComparison
{
  std::string name;
  std::vector<double> differences;  // guided - baseline, per usable pair
  double median_difference{0.0};
  double median_relative_change{0.0};  // median of (guided - baseline) / baseline
  double median_improvement{0.0};      // sign-adjusted: positive means guided is better
  double improved_fraction{0.0};
  std::size_t pairs_used{0};
};

struct PairedComparison
{
  std::size_t pairs{0};
  MetricComparison ttc;
  MetricComparison mean_abs_accel;
  MetricComparison max_jerk;
  std::size_t guided_collisions{0};
  std::size_t baseline_collisions{0};
};

inline double median(std::vector<double> v)
{
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace detail
{
// higher_is_better: TTC; otherwise lower is better
inline MetricComparison compare_metric(
  std::string name, std::span<const std::optional<double>> guided,
  std::span<const std::optional<double>> baseline, bool higher_is_better)
{
  MetricComparison mc;
  mc.name = std::move(name);
  std::vector<double> relative;
  std::vector<double> improvement;
  std::size_t improved = 0;
  for (std::size_t i = 0; i < guided.size(); ++i) {
    if (!guided[i] || !baseline[i]) continue;
    const double diff = *guided[i] - *baseline[i];
    mc.differences.push_back(diff);
    relative.push_back(*baseline[i] != 0.0 ? diff / std::abs(*baseline[i]) : 0.0);
    const double gain = higher_is_better ? diff : -diff;
    improvement.push_back(gain);
    if (gain > 0.0) ++improved;
  }
  mc.pairs_used = mc.differences.size();
  mc.median_difference = median(mc.differences);
  mc.median_relative_change = median(relative);
  mc.median_improvement = median(improvement);
  mc.improved_fraction =
    mc.pairs_used == 0 ? 0.0 : static_cast<double>(improved) / static_cast<double>(mc.pairs_used);
  return mc;
}
}  // namespace detail

/// Pairwise comparison of guided against baseline runs on the same seeds.
/// Pairs with an undefined TTC on either side are left out of the TTC row.
inline PairedComparison compare_paired_runs(
  std::span<const SafetyReport> guided, std::span<const SafetyReport> baseline)
{
  if (guided.size() != baseline.size()) {
    throw Error(ErrorCode::pair_mismatch, "run lists differ in length");
  }
  std::vector<std::optional<double>> gt, bt, ga, ba, gj, bj;
  PairedComparison pc;
  pc.pairs = guided.size();
  for (std::size_t i = 0; i < guided.size(); ++i) {
    if (guided[i].seed != baseline[i].seed) {
      throw Error(ErrorCode::pair_mismatch, "pair " + std::to_string(i) + " has different seeds");
    }
    gt.push_back(guided[i].avg_ttc);
    bt.push_back(baseline[i].avg_ttc);
    ga.push_back(guided[i].mean_abs_accel);
    ba.push_back(baseline[i].mean_abs_accel);
    gj.push_back(guided[i].max_jerk);
    bj.push_back(baseline[i].max_jerk);
    pc.guided_collisions += guided[i].collision ? 1 : 0;
    pc.baseline_collisions += baseline[i].collision ? 1 : 0;
  }
  pc.ttc = detail::compare_metric("avg_ttc", gt, bt, true);
  pc.mean_abs_accel = detail::compare_metric("mean_abs_accel", ga, ba, false);
  pc.max_jerk = detail::compare_metric("max_jerk", gj, bj, false);
  return pc;
}

inline nlohmann::json to_json(const MetricComparison & m)
{
  return {
    {"name", m.name},
    {"pairs_used", m.pairs_used},
    {"median_difference", m.median_difference},
    {"median_relative_change", m.median_relative_change},
    {"median_improvement", m.median_improvement},
    {"improved_fraction", m.improved_fraction},
    {"differences", m.differences}};
}

inline nlohmann::json to_json(const PairedComparison & pc)
{
  return {
    {"pairs", pc.pairs},
    {"guided_collisions", pc.guided_collisions},
    {"baseline_collisions", pc.baseline_collisions},
    {"metrics", {to_json(pc.ttc), to_json(pc.mean_abs_accel), to_json(pc.max_jerk)}}};
}

}  // namespace vcfusion
