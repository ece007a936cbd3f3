#pragma once

#include "vcfusion/error.hpp"
#include "vcfusion/evaluation.hpp"
#include "vcfusion/fusion.hpp"
#include "vcfusion/random.hpp"
#include "vcfusion/scene.hpp"
#include "vcfusion/sensing.hpp"
#include "vcfusion/twinlink.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

namespace vcfusion
{

/// Synthetic corner-case corpus for target identification: a share of the
/// frames holds two vehicles in the same lane, one behind the other, whose
/// boxes overlap in the image. The rest are clutter frames with separated
/// boxes.
struct CorpusConfig
{
  int frames{500};
  double overlap_fraction{1.0};
  std::uint64_t seed{1};
  LaneSpec lanes;
  SensingConfig sensing;
  FusionParams fusion;
  // pair geometry
  double near_min{10.0};  // center s of the nearer vehicle, ego at s = 0
  double near_max{30.0};
  double pair_gap_min{1.5};  // bumper gap within the pair
  double pair_gap_max{10.0};
  double lateral_spread{0.8};  // max offset from the lane center
  int max_distractors{2};
  // generic frames
  double generic_min{10.0};
  double generic_max{80.0};
  int generic_max_vehicles{4};
  // draws where the target or a pair member shows less than this share of
  // its box are redrawn
  double min_visible{0.3};
  ReferencePoint reference{ReferencePoint::rear_center};
  double gnss_sigma{0.75};  // horizontal error of reported positions, m
  // pair frames keep only draws where the target's exact anchor lies in
  // both pair boxes
  bool require_shared_anchor{true};
  WorldPoint twin_offset{0.0, 0.0, 0.0};  // added to every reported position

  bool is_valid() const
  {
    return frames >= 0 && overlap_fraction >= 0.0 && overlap_fraction <= 1.0 && lanes.is_valid() &&
           near_max >= near_min && pair_gap_max >= pair_gap_min && pair_gap_min >= 0.0 &&
           lateral_spread >= 0.0 && max_distractors >= 0 && generic_max >= generic_min &&
           generic_max_vehicles >= 1 && gnss_sigma >= 0.0 && min_visible >= 0.0 && min_visible <= 1.0;
  }
};

struct CorpusFrame
{
  int index{0};
  bool overlap_pair{false};
  std::vector<VehicleState> vehicles;  // ego first
  int target_id{0};
  SensorFrame sensor;
  TwinRecord twin;
  double d_g{0.0};
  Box2D truth;
  std::uint64_t seed{0};
};

namespace detail
{

inline VehicleState corpus_car(
  int id, double s, double y, const VehicleDims & dims, double v, const LaneSpec & lanes)
{
  VehicleState st;
  st.id = id;
  st.kind = VehicleKind::car;
  st.dims = dims;
  st.s = s;
  st.y = y;
  st.v = v;
  st.lane = lanes.lane_of(y);
  return st;
}

inline bool physically_clear(const std::vector<VehicleState> & vs, const VehicleState & cand)
{
  for (const auto & o : vs) {
    const bool lateral = std::abs(o.y - cand.y) < 0.5 * (o.dims.width + cand.dims.width) + 0.2;
    const bool longitudinal = o.rear() < cand.front() + 1.0 && cand.rear() < o.front() + 1.0;
    if (lateral && longitudinal) {
      return false;
    }
  }
  return true;
}

/// Share of a vehicle's silhouette that shows that vehicle in a noiseless map.
inline double visible_fraction(
  std::span<const VehicleState> others, const Camera & cam, int id)
{
  const auto truth = render_truth(others, cam);
  const DepthMap map = render_depth_map(others, cam);
  for (const auto & tb : truth) {
    if (tb.vehicle_id != id) continue;
    long total = 0;
    long shown = 0;
    const auto depth = static_cast<float>(tb.rear_depth);
    for_each_hull_pixel(tb, cam.intrinsics, [&](int u, int v) {
      ++total;
      if (map.at(u, v) == depth) ++shown;
    });
    return total == 0 ? 0.0 : static_cast<double>(shown) / static_cast<double>(total);
  }
  return 0.0;
}

}  // namespace detail

/// Draws one corpus frame. Returns nullopt when the draw is rejected.
inline std::optional<CorpusFrame> draw_corpus_frame(
  const CorpusConfig & cfg, bool overlap_pair, Rng & rng)
{
  const auto & lanes = cfg.lanes;
  const VehicleDims dims{};
  const int ego_lane = lanes.lane_count / 2;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto lateral = [&](int lane) {
    return lanes.lane_center(lane) + uniform(-cfg.lateral_spread, cfg.lateral_spread);
  };

  CorpusFrame f;
  f.overlap_pair = overlap_pair;
  VehicleState ego = detail::corpus_car(0, 0.0, lanes.lane_center(ego_lane), dims, 15.0, lanes);
  ego.kind = VehicleKind::ego;
  f.vehicles.push_back(ego);
  int next_id = 1;

  if (overlap_pair) {
    std::uniform_int_distribution<int> lane_pick(
      std::max(0, ego_lane - 1), std::min(lanes.lane_count - 1, ego_lane + 1));
    const int lane = lane_pick(rng);
    const double s1 = uniform(cfg.near_min, cfg.near_max);
    const double s2 = s1 + dims.length + uniform(cfg.pair_gap_min, cfg.pair_gap_max);
    f.vehicles.push_back(detail::corpus_car(next_id++, s1, lateral(lane), dims, 15.0, lanes));
    f.vehicles.push_back(detail::corpus_car(next_id++, s2, lateral(lane), dims, 15.0, lanes));
    f.target_id = unit(rng) < 0.5 ? 1 : 2;
    std::uniform_int_distribution<int> extra(0, cfg.max_distractors);
    const int distractors = extra(rng);
    std::uniform_int_distribution<int> any_lane(0, lanes.lane_count - 1);
    for (int k = 0; k < distractors; ++k) {
      const int dl = any_lane(rng);
      if (dl == lane) continue;
      auto cand = detail::corpus_car(next_id, uniform(cfg.generic_min, cfg.generic_max), lateral(dl), dims, 15.0, lanes);
      if (detail::physically_clear(f.vehicles, cand)) {
        f.vehicles.push_back(cand);
        ++next_id;
      }
    }
  } else {
    std::uniform_int_distribution<int> count(1, cfg.generic_max_vehicles);
    std::uniform_int_distribution<int> any_lane(0, lanes.lane_count - 1);
    const int n = count(rng);
    for (int k = 0; k < n; ++k) {
      auto cand = detail::corpus_car(
        next_id, uniform(cfg.generic_min, cfg.generic_max), lateral(any_lane(rng)), dims, 15.0, lanes);
      if (detail::physically_clear(f.vehicles, cand)) {
        f.vehicles.push_back(cand);
        ++next_id;
      }
    }
    std::uniform_int_distribution<int> pick(1, next_id - 1);
    f.target_id = pick(rng);
  }

  const std::vector<VehicleState> others(f.vehicles.begin() + 1, f.vehicles.end());
  const Camera cam = camera_on(ego, cfg.sensing.mount, cfg.sensing.intrinsics);
  const auto truth = render_truth(others, cam);
  const auto target_it = std::find_if(
    truth.begin(), truth.end(), [&](const TruthBox & tb) { return tb.vehicle_id == f.target_id; });
  if (target_it == truth.end()) {
    return std::nullopt;
  }
  f.truth = target_it->box;

  if (overlap_pair) {
    // the pair must overlap in the image
    const auto other_it = std::find_if(truth.begin(), truth.end(), [&](const TruthBox & tb) {
      return tb.vehicle_id == 3 - f.target_id;
    });
    if (other_it == truth.end() || intersection_area(other_it->box, f.truth) <= 0.0) {
      return std::nullopt;
    }
    if (cfg.require_shared_anchor) {
      const auto & target = f.vehicles[static_cast<std::size_t>(f.target_id)];
      const PixelPoint a = project_anchor(reference_point(target, cfg.reference), cam.extrinsics, cam.intrinsics);
      if (!other_it->box.contains(a.u, a.v) || !f.truth.contains(a.u, a.v)) {
        return std::nullopt;
      }
    }
  } else {
    for (std::size_t i = 0; i < truth.size(); ++i) {
      for (std::size_t j = i + 1; j < truth.size(); ++j) {
        if (intersection_area(truth[i].box, truth[j].box) > 0.0) {
          return std::nullopt;
        }
      }
    }
  }
  // both members of a pair must be detectable, and so must the target
  for (const auto & v : others) {
    const bool checked = v.id == f.target_id || (overlap_pair && v.id <= 2);
    if (checked && detail::visible_fraction(others, cam, v.id) < cfg.min_visible) {
      return std::nullopt;
    }
  }
  return f;
}

/// Builds the corpus deterministically from cfg.seed. The first
/// round(frames * overlap_fraction) frames carry an overlapping pair.
inline std::vector<CorpusFrame> build_corpus(const CorpusConfig & cfg)
{
  if (!cfg.is_valid()) {
    throw Error(ErrorCode::invalid_argument, "invalid corpus configuration");
  }
  const int n_overlap = static_cast<int>(std::lround(cfg.frames * cfg.overlap_fraction));
  std::vector<CorpusFrame> out;
  out.reserve(static_cast<std::size_t>(cfg.frames));
  for (int i = 0; i < cfg.frames; ++i) {
    const bool pair = i < n_overlap;
    Rng rng(derive_seed(cfg.seed, "corpus", static_cast<std::uint64_t>(i)));
    std::optional<CorpusFrame> f;
    for (int attempt = 0; attempt < 1000 && !f; ++attempt) {
      f = draw_corpus_frame(cfg, pair, rng);
    }
    if (!f) {
      throw Error(ErrorCode::infeasible_placement, "corpus frame " + std::to_string(i) + " cannot be drawn");
    }
    f->index = i;
    f->seed = derive_seed(cfg.seed, "frame", static_cast<std::uint64_t>(i));
    const double t = 0.1 * i;
    f->sensor = sense(t, f->vehicles, 0, cfg.sensing, f->seed);
    const auto & target = *std::find_if(
      f->vehicles.begin(), f->vehicles.end(), [&](const VehicleState & v) { return v.id == f->target_id; });
    TwinStore store(PositionSource{cfg.reference, cfg.gnss_sigma, derive_seed(cfg.seed, "gnss")});
    store.publish(target, t);
    f->twin = query_target(store, target.id, t, ChannelConfig{});
    f->twin.position = {
      f->twin.position.x + cfg.twin_offset.x, f->twin.position.y + cfg.twin_offset.y,
      f->twin.position.z + cfg.twin_offset.z};
    f->d_g = gnss_distance(f->sensor.camera.extrinsics.optical_center(), f->twin);
    out.push_back(std::move(*f));
  }
  return out;
}

struct FuseEvalRow
{
  int frame{0};
  ScoredIdentification scored;
};

/// Runs both matchers on every corpus frame.
inline std::vector<ScoredIdentification> evaluate_corpus(
  std::span<const CorpusFrame> corpus, const FusionParams & params)
{
  std::vector<ScoredIdentification> out;
  out.reserve(corpus.size() * 2);
  for (const auto & f : corpus) {
    for (MatchMethod m : {MatchMethod::fused, MatchMethod::baseline}) {
      ScoredIdentification s;
      s.result = identify(f.sensor, f.twin, f.d_g, m, params, derive_seed(f.seed, "sampler"));
      s.truth = f.truth;
      s.truth_id = f.target_id;
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace vcfusion
