#pragma once

#include "vcfusion/error.hpp"
#include "vcfusion/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace vcfusion
{

inline constexpr std::size_t feature_count = 13;
inline constexpr double absent_gap = 200.0;

/// [speed, then (dv, gap) for own-lead, own-lag, left-lead, left-lag,
/// right-lead, right-lag]. dv = neighbor speed - subject speed; gap is
/// bumper to bumper. Absent neighbors read (0, 200).
using FeatureVector = std::array<double, feature_count>;

enum class NeighborSlot { own_lead, own_lag, left_lead, left_lag, right_lead, right_lag };

inline constexpr std::size_t slot_offset(NeighborSlot slot)
{
  return 1 + 2 * static_cast<std::size_t>(slot);
}

inline FeatureVector extract_features(
  std::span<const VehicleState> snapshot, int id, const LaneSpec & lanes)
{
  const auto subject_it = std::find_if(
    snapshot.begin(), snapshot.end(), [id](const VehicleState & s) { return s.id == id; });
  if (subject_it == snapshot.end()) {
    throw Error(ErrorCode::unknown_vehicle, "vehicle " + std::to_string(id));
  }
  const VehicleState & me = *subject_it;
  const int lane = lanes.lane_of(me.y);

  FeatureVector f{};
  f[0] = me.v;
  for (std::size_t k = 1; k < feature_count; k += 2) {
    f[k] = 0.0;
    f[k + 1] = absent_gap;
  }

  auto fill = [&](int slot_lane, NeighborSlot lead_slot, NeighborSlot lag_slot) {
    if (slot_lane < 0 || slot_lane >= lanes.lane_count) {
      return;
    }
    const VehicleState * lead = nullptr;
    const VehicleState * lag = nullptr;
    for (const auto & other : snapshot) {
      if (other.id == id || lanes.lane_of(other.y) != slot_lane) {
        continue;
      }
      if (other.s >= me.s) {
        if (lead == nullptr || other.s < lead->s) lead = &other;
      } else {
        if (lag == nullptr || other.s > lag->s) lag = &other;
      }
    }
    if (lead != nullptr) {
      f[slot_offset(lead_slot)] = lead->v - me.v;
      f[slot_offset(lead_slot) + 1] = bumper_gap(me, *lead);
    }
    if (lag != nullptr) {
      f[slot_offset(lag_slot)] = lag->v - me.v;
      f[slot_offset(lag_slot) + 1] = bumper_gap(*lag, me);
    }
  };
  fill(lane, NeighborSlot::own_lead, NeighborSlot::own_lag);
  fill(lane + 1, NeighborSlot::left_lead, NeighborSlot::left_lag);
  fill(lane - 1, NeighborSlot::right_lead, NeighborSlot::right_lag);
  return f;
}

inline FeatureVector extract_features(const TrajectoryLog & log, int id, double t)
{
  log.require_vehicle(id);
  return extract_features(log.frames[log.index_at(t)], id, log.lanes);
}

struct LabeledSample
{
  FeatureVector features{};
  int label{0};  // 1 = lane change
  double t{0.0};
  int vehicle_id{0};
};

struct WindowParams
{
  double tau{5.0};
  double tau_gap{3.0};
  double sample_rate{1.0};  // Hz

  bool is_valid() const { return tau > 0.0 && tau_gap >= 0.0 && sample_rate > 0.0; }
};

/// Sample instants t_end - k / rate for k = 0..floor(tau * rate), shifted
/// back by `offset`, keeping those inside the log.
inline std::vector<double> window_times(
  double t_end, double offset, const WindowParams & w, double t_first, double t_last)
{
  std::vector<double> ts;
  const auto count = static_cast<long>(std::floor(w.tau * w.sample_rate + 1e-9));
  for (long k = count; k >= 0; --k) {
    const double t = t_end - offset - static_cast<double>(k) / w.sample_rate;
    if (t >= t_first - 1e-9 && t <= t_last + 1e-9) {
      ts.push_back(t);
    }
  }
  return ts;
}

/// Time-window labeling: positives over [t_end - tau, t_end], negatives over
/// the same-sized window shifted back by tau + tau_gap.
inline std::vector<LabeledSample> label_windows(
  std::span<const ManeuverPlan> events, const TrajectoryLog & log, const WindowParams & w)
{
  if (!w.is_valid()) {
    throw Error(ErrorCode::invalid_argument, "invalid window parameters");
  }
  std::vector<LabeledSample> out;
  if (log.empty()) {
    return out;
  }
  const double t_first = log.times.front();
  const double t_last = log.times.back();
  for (const auto & ev : events) {
    for (int label : {1, 0}) {
      const double offset = label == 1 ? 0.0 : w.tau + w.tau_gap;
      for (double t : window_times(ev.t_end, offset, w, t_first, t_last)) {
        out.push_back({extract_features(log, ev.vehicle_id, t), label, t, ev.vehicle_id});
      }
    }
  }
  return out;
}

/// Per-timestep ground truth matching the positive window definition.
inline int ground_truth_label(std::span<const ManeuverPlan> events, int id, double t, const WindowParams & w)
{
  for (const auto & ev : events) {
    if (ev.vehicle_id == id && t >= ev.t_end - w.tau - 1e-9 && t <= ev.t_end + 1e-9) {
      return 1;
    }
  }
  return 0;
}

struct TraceRecord
{
  double t{0.0};
  double probability{0.0};
  int prediction{0};
};

struct PredictionTrace
{
  int vehicle_id{0};
  std::vector<TraceRecord> records;

  std::vector<int> predictions() const
  {
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto & r : records) out.push_back(r.prediction);
    return out;
  }
};

/// Builds a trace from bare binary predictions (probabilities mirror them).
inline PredictionTrace make_trace(int id, std::span<const int> preds, double t0 = 1.0, double step = 1.0)
{
  PredictionTrace tr{id, {}};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    tr.records.push_back({t0 + step * static_cast<double>(i), static_cast<double>(preds[i]), preds[i]});
  }
  return tr;
}

/// Each positive also marks the following tau_a timesteps, clipped at the end.
inline PredictionTrace aggressive_filter(const PredictionTrace & trace, int tau_a)
{
  if (tau_a < 0) {
    throw Error(ErrorCode::invalid_argument, "tau_a must be >= 0");
  }
  PredictionTrace out = trace;
  const std::size_t n = trace.records.size();
  for (auto & r : out.records) r.prediction = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (trace.records[t].prediction != 1) continue;
    for (std::size_t k = 0; k <= static_cast<std::size_t>(tau_a) && t + k < n; ++k) {
      out.records[t + k].prediction = 1;
    }
  }
  return out;
}

/// Positive at t iff the mean of the raw predictions over t - tau_c .. t
/// exceeds `thres`. The first tau_c timesteps (incomplete window) stay 0.
inline PredictionTrace conservative_filter(const PredictionTrace & trace, int tau_c, double thres)
{
  if (tau_c < 0 || thres < 0.0 || thres > 1.0) {
    throw Error(ErrorCode::invalid_argument, "tau_c must be >= 0 and thres in [0, 1]");
  }
  PredictionTrace out = trace;
  const std::size_t n = trace.records.size();
  for (auto & r : out.records) r.prediction = 0;
  const auto window = static_cast<std::size_t>(tau_c);
  for (std::size_t t = window; t < n; ++t) {
    int sum = 0;
    for (std::size_t k = 0; k <= window; ++k) {
      sum += trace.records[t - k].prediction;
    }
    const double avg = static_cast<double>(sum) / static_cast<double>(window + 1);
    if (avg > thres) {
      out.records[t].prediction = 1;
    }
  }
  return out;
}

}  // namespace vcfusion
