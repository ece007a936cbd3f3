#pragma once

#include "vcfusion/dataset.hpp"
#include "vcfusion/error.hpp"
#include "vcfusion/evaluation.hpp"
#include "vcfusion/fusion.hpp"
#include "vcfusion/mlp.hpp"
#include "vcfusion/prediction.hpp"
#include "vcfusion/random.hpp"
#include "vcfusion/scene.hpp"
#include "vcfusion/sensing.hpp"
#include "vcfusion/twinlink.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

namespace vcfusion
{

enum class OnlineFilter { raw, aggressive, conservative };

inline std::string_view to_string(OnlineFilter f)
{
  switch (f) {
    case OnlineFilter::raw: return "raw";
    case OnlineFilter::aggressive: return "aggressive";
    case OnlineFilter::conservative: return "conservative";
  }
  return "raw";
}

/// Causal form of the trace filters, fed one inference at a time. Produces
/// the same outputs as aggressive_filter / conservative_filter on the full
/// trace.
class OnlinePredictionFilter
{
public:
  OnlinePredictionFilter(OnlineFilter kind, const FilterParams & params) : kind_(kind), params_(params)
  {
  }

  /// Returns the filtered prediction for this inference.
  int push(double probability)
  {
    const int raw = probability >= 0.5 ? 1 : 0;
    if (raw == 1) {
      last_positive_ = probability;
    }
    switch (kind_) {
      case OnlineFilter::raw:
        return raw;
      case OnlineFilter::aggressive:
        if (raw == 1) {
          hold_ = params_.tau_a;
          return 1;
        }
        if (hold_ > 0) {
          --hold_;
          return 1;
        }
        return 0;
      case OnlineFilter::conservative: {
        window_.push_back(raw);
        if (window_.size() > static_cast<std::size_t>(params_.tau_c) + 1) {
          window_.pop_front();
        }
        if (window_.size() < static_cast<std::size_t>(params_.tau_c) + 1) {
          return 0;
        }
        int sum = 0;
        for (int r : window_) sum += r;
        return static_cast<double>(sum) / static_cast<double>(window_.size()) > params_.thres ? 1 : 0;
      }
    }
    return raw;
  }

  /// Probability carried by an advisory while the filter output is positive.
  double advisory_probability(double probability) const
  {
    return probability >= 0.5 ? probability : last_positive_;
  }

private:
  OnlineFilter kind_;
  FilterParams params_;
  int hold_{0};
  std::deque<int> window_;
  double last_positive_{0.0};
};

struct ClosedLoopConfig
{
  ScenarioConfig scenario;
  SensingConfig sensing;
  ChannelConfig channel;
  PositionSource positions;  // seed is replaced per run
  FusionParams fusion;
  OnlineFilter filter{OnlineFilter::aggressive};
  FilterParams filters;
  double inference_period{1.0};
  double guidance_period{0.1};
  double identify_range{80.0};  // D_g beyond which no frame is processed

  bool is_valid() const
  {
    return scenario.is_valid() && channel.is_valid() && inference_period > 0.0 &&
           guidance_period > 0.0 && identify_range > 0.0 && positions.gnss_sigma >= 0.0 &&
           filters.tau_a >= 0 && filters.tau_c >= 0 && filters.thres >= 0.0 && filters.thres <= 1.0;
  }
};

/// What happened at one guidance tick, for logging and file output.
struct TickRecord
{
  double t{0.0};
  const Scenario * scenario{nullptr};
  const TwinStore * store{nullptr};
  const SensorFrame * frame{nullptr};  // null when no frame was rendered
  const GuidanceFrame * guidance{nullptr};
  std::span<const IdentificationResult> identifications;
};

struct ClosedLoopRun
{
  std::uint64_t seed{0};
  DriverPolicy policy{DriverPolicy::baseline};
  TrajectoryLog log;
  SafetyReport report;
  std::vector<CloudAdvisory> advisories;
  std::vector<IdentificationResult> identifications;
  std::size_t frames_rendered{0};
};

namespace detail
{
inline std::size_t ticks_per(double period, double dt)
{
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(period / dt)));
}
}  // namespace detail

/// One seeded run of the accident scenario with the cloud loop attached:
/// twins published every guidance tick, per-vehicle inference every
/// inference period, and (guided driver only) overlay identification of
/// every live advisory above p_trigger.
inline ClosedLoopRun run_closed_loop(
  const ClosedLoopConfig & cfg, const MlpModel & model, DriverPolicy policy, std::uint64_t seed,
  const std::function<void(const TickRecord &)> & on_tick = {})
{
  if (!cfg.is_valid()) {
    throw Error(ErrorCode::invalid_argument, "invalid closed-loop configuration");
  }
  ScenarioConfig sc_cfg = cfg.scenario;
  sc_cfg.seed = seed;
  sc_cfg.driver.policy = policy;
  Scenario sc(sc_cfg);
  PositionSource positions = cfg.positions;
  positions.seed = derive_seed(seed, "gnss");
  TwinStore store(positions);

  ClosedLoopRun run;
  run.seed = seed;
  run.policy = policy;

  const std::size_t guidance_stride = detail::ticks_per(cfg.guidance_period, sc_cfg.dt_sim);
  const std::size_t inference_stride = detail::ticks_per(cfg.inference_period, sc_cfg.dt_sim);
  std::map<int, OnlinePredictionFilter> filters;
  std::map<int, std::pair<double, int>> overlay;  // advised id -> (issued_t, chosen source)
  const bool needs_guidance = policy == DriverPolicy::guided;

  while (!sc.finished()) {
    const std::size_t k = sc.step_count();
    if (k % guidance_stride != 0) {
      sc.step();
      continue;
    }
    const double t = sc.time();
    const int ego_id = sc.ego_id();
    for (const auto & v : sc.vehicles()) {
      store.publish(v, t);
    }

    if (k % inference_stride == 0) {
      for (const auto & v : sc.vehicles()) {
        if (v.kind != VehicleKind::car) continue;
        const double p = infer(model, extract_features(sc.vehicles(), v.id, sc_cfg.lanes));
        auto it = filters.try_emplace(v.id, cfg.filter, cfg.filters).first;
        if (it->second.push(p) == 1) {
          CloudAdvisory adv{v.id, store.find(v.id, t)->position, it->second.advisory_probability(p), t};
          store.publish_advisory(adv);
          run.advisories.push_back(adv);
        }
      }
    }

    GuidanceFrame guidance;
    guidance.t = t;
    std::optional<SensorFrame> frame;
    const std::size_t ident_begin = run.identifications.size();
    if (needs_guidance) {
      const auto & ego = sc.ego();
      const WorldPoint cam_pos = camera_position(ego, cfg.sensing.mount);
      for (int id : store.advised_ids()) {
        if (id == ego_id) continue;
        const auto adv = query_advisory(store, id, t, cfg.channel);
        // live only until the next inference round
        if (!adv || t - cfg.channel.latency - adv->issued_t > cfg.inference_period - 1e-9) continue;
        if (!(adv->lane_change_probability > sc_cfg.driver.p_trigger)) continue;
        const TwinRecord * twin = store.find(id, t - cfg.channel.latency);
        if (twin == nullptr) continue;
        const double d_g = gnss_distance(cam_pos, *twin);
        if (d_g > cfg.identify_range) continue;
        // the overlay stays on the box picked when the advisory first arrived
        auto latched = overlay.find(id);
        if (latched == overlay.end() || latched->second.first != adv->issued_t) {
          if (!frame) {
            frame = sense(t, sc.vehicles(), ego_id, cfg.sensing, derive_seed(seed, "sensor", k));
            ++run.frames_rendered;
          }
          auto res = identify(
            *frame, *twin, d_g, MatchMethod::fused, cfg.fusion,
            derive_seed(seed, "sampler", (static_cast<std::uint64_t>(k) << 20U) + static_cast<std::uint64_t>(id)));
          const int chosen = res.chosen ? res.chosen->source_id : -1;
          latched = overlay.insert_or_assign(id, std::pair{adv->issued_t, chosen}).first;
          run.identifications.push_back(std::move(res));
        }
        if (latched->second.second >= 0) {
          guidance.advisories.emplace_back(latched->second.second, adv->lane_change_probability);
        }
      }
    }
    if (on_tick) {
      on_tick(TickRecord{
        t, &sc, &store, frame ? &*frame : nullptr, &guidance,
        std::span<const IdentificationResult>(run.identifications).subspan(ident_begin)});
    }
    sc.step(&guidance);
  }
  run.log = sc.take_log();
  run.report = safety_report(run.log, 0, seed, policy);
  return run;
}

struct PairedRuns
{
  std::vector<SafetyReport> guided;
  std::vector<SafetyReport> baseline;
  PairedComparison comparison;
};

inline PairedRuns run_paired(
  const ClosedLoopConfig & cfg, const MlpModel & model, std::span<const std::uint64_t> seeds)
{
  PairedRuns out;
  for (std::uint64_t seed : seeds) {
    out.guided.push_back(run_closed_loop(cfg, model, DriverPolicy::guided, seed).report);
    out.baseline.push_back(run_closed_loop(cfg, model, DriverPolicy::baseline, seed).report);
  }
  out.comparison = compare_paired_runs(out.guided, out.baseline);
  return out;
}

}  // namespace vcfusion
