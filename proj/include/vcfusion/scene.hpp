#pragma once

#include "vcfusion/error.hpp"
#include "vcfusion/geometry.hpp"
#include "vcfusion/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vcfusion
{

struct LaneSpec
{
  int lane_count{3};
  double lane_width{3.5};
  double length{300.0};

  double road_width() const { return lane_count * lane_width; }
  double lane_center(int lane) const { return (lane + 0.5) * lane_width; }

  // lane 0 is the rightmost lane; y = 0 at the right road edge
  int lane_of(double y) const
  {
    const int lane = static_cast<int>(std::floor(y / lane_width));
    return std::clamp(lane, 0, lane_count - 1);
  }

  bool is_valid() const { return lane_count >= 2 && lane_width > 0.0 && length > 0.0; }
};

enum class VehicleKind { car, truck, ego };

inline std::string_view to_string(VehicleKind kind)
{
  switch (kind) {
    case VehicleKind::car: return "car";
    case VehicleKind::truck: return "truck";
    case VehicleKind::ego: return "ego";
  }
  return "car";
}

struct VehicleDims
{
  double length{4.5};
  double width{1.8};
  double height{1.5};
};

struct VehicleState
{
  int id{0};
  double s{0.0};  // longitudinal position of the body center
  double y{0.0};  // lateral position of the body center
  double v{0.0};
  double a{0.0};
  int lane{0};
  VehicleDims dims;
  VehicleKind kind{VehicleKind::car};

  double rear() const { return s - 0.5 * dims.length; }
  double front() const { return s + 0.5 * dims.length; }

  Cuboid3D cuboid() const
  {
    return {{s, y, 0.5 * dims.height}, dims.length, dims.width, dims.height, 0.0};
  }

  WorldPoint centroid() const { return {s, y, 0.5 * dims.height}; }
  WorldPoint rear_center() const { return {rear(), y, 0.5 * dims.height}; }
};

/// Bumper-to-bumper gap from `follower` to `leader` (negative on overlap).
inline double bumper_gap(const VehicleState & follower, const VehicleState & leader)
{
  return leader.rear() - follower.front();
}

struct ManeuverPlan
{
  int vehicle_id{0};
  double t_start{0.0};
  double t_end{0.0};
  int from_lane{0};
  int to_lane{0};
};

struct Collision
{
  double t{0.0};
  int first_id{0};
  int second_id{0};
};

// ---------------------------------------------------------------------------
// car following

struct IdmParams
{
  double time_headway{1.2};
  double max_accel{2.0};
  double comfortable_decel{2.5};
  double min_accel{-8.0};
  double jam_gap{2.0};
  double exponent{4.0};
};

struct LeaderView
{
  double gap{0.0};    // bumper-to-bumper, m
  double speed{0.0};  // m/s
};

inline double idm_desired_gap(double v, double closing_speed, const IdmParams & p)
{
  const double dynamic =
    v * p.time_headway + v * closing_speed / (2.0 * std::sqrt(p.max_accel * p.comfortable_decel));
  return p.jam_gap + std::max(0.0, dynamic);
}

/// Intelligent Driver Model acceleration, clamped to [min_accel, max_accel].
inline double idm_accel(
  double v, double desired_speed, const std::optional<LeaderView> & leader, const IdmParams & p)
{
  double free_term = 0.0;
  if (desired_speed > 0.0) {
    free_term = std::pow(std::max(v, 0.0) / desired_speed, p.exponent);
  } else if (v > 0.0) {
    free_term = std::numeric_limits<double>::infinity();
  }
  double interaction = 0.0;
  if (leader) {
    if (leader->gap <= 0.0) {
      return p.min_accel;
    }
    const double ratio = idm_desired_gap(v, v - leader->speed, p) / leader->gap;
    interaction = ratio * ratio;
  }
  const double a = p.max_accel * (1.0 - free_term - interaction);
  return std::clamp(a, p.min_accel, p.max_accel);
}

inline double car_following_accel(
  const VehicleState & follower, const VehicleState * leader, double desired_speed,
  const IdmParams & p)
{
  std::optional<LeaderView> view;
  if (leader != nullptr) {
    view = LeaderView{bumper_gap(follower, *leader), leader->v};
  }
  return idm_accel(follower.v, desired_speed, view, p);
}

// ---------------------------------------------------------------------------
// lateral motion

/// Smooth monotone blend on [0,1] with zero slope at both ends.
inline double lateral_profile(double q)
{
  q = std::clamp(q, 0.0, 1.0);
  return q - std::sin(2.0 * std::numbers::pi * q) / (2.0 * std::numbers::pi);
}

struct LaneChangeParams
{
  double duration{4.0};
  double trigger_distance{80.0};
  double lead_gap{15.0};
  double lag_gap{10.0};
  // lag gap is also checked at the boundary-crossing instant, projected
  // with constant speeds over this horizon
  double lag_anticipation{2.0};
};

// ---------------------------------------------------------------------------
// ego driver

enum class DriverPolicy { guided, baseline };

inline std::string_view to_string(DriverPolicy p)
{
  return p == DriverPolicy::guided ? "guided" : "baseline";
}

struct DriverParams
{
  DriverPolicy policy{DriverPolicy::baseline};
  double p_trigger{0.5};
  double react_range{60.0};
  double guided_decel{-2.0};
  double baseline_decel{-6.0};
  double reaction_time{0.75};
  // guided driver follows warned vehicles without the reaction delay
  bool anticipate_warned{true};
};

struct TrackedVehicle
{
  int id{0};
  double gap{0.0};
  double speed{0.0};
  double time_in_lane{0.0};  // how long its center has been in the ego lane
  bool anticipated{false};   // the driver was warned about this vehicle
};

struct EgoPerception
{
  std::optional<TrackedVehicle> leader;  // perceived car-following leader
  std::vector<TrackedVehicle> encroachers;  // centered in ego lane, ahead
};

struct Alert
{
  TrackedVehicle vehicle;
  double probability{0.0};
};

struct EgoGuidance
{
  std::vector<Alert> alerts;
};

/// Acceleration command of the scripted ego driver.
///
/// Both drivers follow the perceived leader with IDM and brake at
/// `baseline_decel` once a cut-in vehicle has been centered in their lane
/// for `reaction_time` while the gap is closing inside the IDM desired gap.
/// The guided driver additionally treats every advised vehicle ahead within
/// `react_range` whose probability exceeds `p_trigger` as a virtual leader,
/// braking no harder than `guided_decel` on its account. A vehicle it was
/// warned about is followed as soon as it enters the lane and never triggers
/// the late hard brake.
inline double ego_policy(
  const VehicleState & ego, double desired_speed, const EgoPerception & perception,
  const EgoGuidance * guidance, const DriverParams & driver, const IdmParams & idm)
{
  std::optional<LeaderView> leader;
  if (perception.leader) {
    leader = LeaderView{perception.leader->gap, perception.leader->speed};
  }
  double a = idm_accel(ego.v, desired_speed, leader, idm);

  for (const auto & cut_in : perception.encroachers) {
    const double closing = ego.v - cut_in.speed;
    if (
      !cut_in.anticipated && cut_in.time_in_lane >= driver.reaction_time && closing > 0.0 &&
      cut_in.gap < idm_desired_gap(ego.v, closing, idm)) {
      a = std::min(a, driver.baseline_decel);
    }
  }

  if (driver.policy == DriverPolicy::guided && guidance != nullptr) {
    for (const auto & alert : guidance->alerts) {
      const auto & veh = alert.vehicle;
      if (alert.probability > driver.p_trigger && veh.gap > 0.0 && veh.gap <= driver.react_range) {
        const double virtual_follow =
          idm_accel(ego.v, desired_speed, LeaderView{veh.gap, veh.speed}, idm);
        a = std::min(a, std::max(driver.guided_decel, virtual_follow));
      }
    }
  }
  return std::clamp(a, idm.min_accel, idm.max_accel);
}

// ---------------------------------------------------------------------------
// scenario

struct ScenarioConfig
{
  std::uint64_t seed{1};
  double dt_sim{0.01};
  double duration{30.0};
  LaneSpec lanes;
  int neighbor_count{6};
  int potential_changer_count{3};
  double ego_v0{19.0};
  double neighbor_v0{17.0};
  double accident_s{240.0};  // center of the stopped trucks
  double spawn_min{20.0};    // neighbor spawn range (center s)
  double spawn_max{110.0};
  double min_spawn_gap{8.0};
  VehicleDims car_dims{4.5, 1.8, 1.5};
  VehicleDims truck_dims{10.0, 2.5, 3.5};
  IdmParams idm;
  LaneChangeParams lane_change;
  DriverParams driver;

  bool is_valid() const
  {
    return dt_sim > 0.0 && duration >= 0.0 && lanes.is_valid() && neighbor_count >= 0 &&
           potential_changer_count >= 0 && potential_changer_count <= neighbor_count &&
           ego_v0 >= 0.0 && neighbor_v0 >= 0.0 && spawn_max >= spawn_min;
  }
};

struct TrajectoryLog
{
  LaneSpec lanes;
  double dt{0.01};
  std::vector<double> times;
  std::vector<std::vector<VehicleState>> frames;  // constant roster and order
  std::vector<ManeuverPlan> maneuvers;            // ground-truth plans
  std::vector<Collision> collisions;

  bool empty() const { return times.empty(); }
  std::size_t size() const { return times.size(); }

  std::optional<std::size_t> vehicle_index(int id) const
  {
    if (frames.empty()) {
      return std::nullopt;
    }
    const auto & roster = frames.front();
    for (std::size_t i = 0; i < roster.size(); ++i) {
      if (roster[i].id == id) {
        return i;
      }
    }
    return std::nullopt;
  }

  std::size_t require_vehicle(int id) const
  {
    if (auto idx = vehicle_index(id)) {
      return *idx;
    }
    throw Error(ErrorCode::unknown_vehicle, "vehicle " + std::to_string(id) + " not in log");
  }

  /// Sample index nearest to time t (clamped to the log range).
  std::size_t index_at(double t) const
  {
    if (times.empty()) {
      throw Error(ErrorCode::invalid_argument, "empty trajectory log");
    }
    const double k = std::round((t - times.front()) / dt);
    if (k <= 0.0) {
      return 0;
    }
    return std::min(static_cast<std::size_t>(k), times.size() - 1);
  }

  /// Every `stride`-th sample, e.g. the 0.1 s metric grid.
  TrajectoryLog resampled(double period) const
  {
    TrajectoryLog out;
    out.lanes = lanes;
    out.maneuvers = maneuvers;
    out.collisions = collisions;
    const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(period / dt)));
    out.dt = dt * static_cast<double>(stride);
    for (std::size_t k = 0; k < times.size(); k += stride) {
      out.times.push_back(times[k]);
      out.frames.push_back(frames[k]);
    }
    return out;
  }
};

/// Latest advisories received by the ego at a guidance tick. Each entry names
/// the physical vehicle the overlay was drawn on.
struct GuidanceFrame
{
  double t{0.0};
  std::vector<std::pair<int, double>> advisories;  // (vehicle id, probability)
};

class Scenario
{
public:
  explicit Scenario(ScenarioConfig cfg) : cfg_(std::move(cfg))
  {
    if (!cfg_.is_valid()) {
      throw Error(ErrorCode::invalid_argument, "invalid scenario configuration");
    }
    place_vehicles();
    log_.lanes = cfg_.lanes;
    log_.dt = cfg_.dt_sim;
  }

  const ScenarioConfig & config() const { return cfg_; }
  double time() const { return static_cast<double>(step_count_) * cfg_.dt_sim; }
  std::size_t step_count() const { return step_count_; }
  std::size_t total_steps() const
  {
    return static_cast<std::size_t>(std::llround(cfg_.duration / cfg_.dt_sim));
  }
  bool finished() const { return step_count_ >= total_steps(); }

  const std::vector<VehicleState> & vehicles() const { return vehicles_; }
  const VehicleState & ego() const { return vehicles_[ego_index_]; }
  int ego_id() const { return vehicles_[ego_index_].id; }
  const VehicleState & vehicle(int id) const { return vehicles_.at(index_of(id)); }
  bool is_potential_changer(int id) const { return flags_.at(index_of(id)).potential_changer; }
  const std::vector<ManeuverPlan> & maneuvers() const { return log_.maneuvers; }
  const std::vector<Collision> & collisions() const { return log_.collisions; }
  const TrajectoryLog & log() const { return log_; }
  TrajectoryLog take_log() { return std::move(log_); }

  /// Advance one dt_sim. A non-null `received` replaces the guidance the ego
  /// holds; the held guidance is only consulted by the guided driver.
  void step(const GuidanceFrame * received = nullptr)
  {
    if (received != nullptr) {
      held_guidance_ = *received;
      if (cfg_.driver.policy == DriverPolicy::guided) {
        for (const auto & [id, prob] : received->advisories) {
          if (prob > cfg_.driver.p_trigger && cfg_.driver.anticipate_warned) warned_.insert(id);
        }
      }
    }
    const double t = time();
    update_lane_entry(t);
    trigger_lane_changes(t);

    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      vehicles_[i].a = compute_accel(i, t);
      // never reverse
      if (vehicles_[i].v + vehicles_[i].a * cfg_.dt_sim < 0.0) {
        vehicles_[i].a = -vehicles_[i].v / cfg_.dt_sim;
      }
    }
    log_.times.push_back(t);
    log_.frames.push_back(vehicles_);

    const double dt = cfg_.dt_sim;
    ++step_count_;
    const double t_next = time();
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      auto & veh = vehicles_[i];
      veh.s += veh.v * dt;
      veh.v = std::max(0.0, veh.v + veh.a * dt);
      auto & flag = flags_[i];
      if (flag.maneuver) {
        const auto & plan = *flag.maneuver;
        const double q = (t_next - plan.t_start) / (plan.t_end - plan.t_start);
        const double y0 = cfg_.lanes.lane_center(plan.from_lane);
        const double y1 = cfg_.lanes.lane_center(plan.to_lane);
        veh.y = y0 + (y1 - y0) * lateral_profile(q);
        if (q >= 1.0) {
          veh.y = y1;
          flag.maneuver.reset();
        }
      }
      veh.lane = cfg_.lanes.lane_of(veh.y);
    }
    detect_collisions(t_next);
  }

  void run_to_end()
  {
    while (!finished()) {
      step();
    }
  }

private:
  struct Flags
  {
    bool potential_changer{false};
    double desired_speed{0.0};
    std::optional<ManeuverPlan> maneuver;
    double entered_ego_lane{-std::numeric_limits<double>::infinity()};
    bool in_ego_lane{false};
  };

  std::size_t index_of(int id) const
  {
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      if (vehicles_[i].id == id) {
        return i;
      }
    }
    throw Error(ErrorCode::unknown_vehicle, "vehicle " + std::to_string(id));
  }

  int ego_lane() const { return cfg_.lanes.lane_count - 1; }

  void add_vehicle(VehicleState st, Flags f)
  {
    st.lane = cfg_.lanes.lane_of(st.y);
    vehicles_.push_back(st);
    flags_.push_back(std::move(f));
  }

  void place_vehicles()
  {
    Rng rng(derive_seed(cfg_.seed, "scenario"));
    const auto & lanes = cfg_.lanes;
    int next_id = 0;

    VehicleState ego;
    ego.id = next_id++;
    ego.kind = VehicleKind::ego;
    ego.dims = cfg_.car_dims;
    ego.s = 0.0;
    ego.y = lanes.lane_center(ego_lane());
    ego.v = cfg_.ego_v0;
    ego_index_ = vehicles_.size();
    add_vehicle(ego, Flags{false, cfg_.ego_v0, std::nullopt, -std::numeric_limits<double>::infinity(), true});

    // the two rightmost lanes are blocked
    for (int lane = 0; lane < std::min(2, lanes.lane_count - 1); ++lane) {
      VehicleState truck;
      truck.id = next_id++;
      truck.kind = VehicleKind::truck;
      truck.dims = cfg_.truck_dims;
      truck.s = cfg_.accident_s;
      truck.y = lanes.lane_center(lane);
      truck.v = 0.0;
      add_vehicle(truck, Flags{false, 0.0, std::nullopt, -std::numeric_limits<double>::infinity(), false});
    }

    // potential changers start next to the open lane, the rest further right
    const int changer_lane = std::max(0, lanes.lane_count - 2);
    const int other_lanes = std::max(1, lanes.lane_count - 2);
    std::uniform_real_distribution<double> spawn(cfg_.spawn_min, cfg_.spawn_max);
    for (int n = 0; n < cfg_.neighbor_count; ++n) {
      const bool changer = n < cfg_.potential_changer_count;
      const int lane = changer ? changer_lane : (n - cfg_.potential_changer_count) % other_lanes;
      VehicleState veh;
      veh.id = next_id++;
      veh.kind = VehicleKind::car;
      veh.dims = cfg_.car_dims;
      veh.y = lanes.lane_center(lane);
      veh.v = cfg_.neighbor_v0;
      bool placed = false;
      for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        veh.s = spawn(rng);
        placed = fits(veh, lane);
      }
      if (!placed) {
        throw Error(
          ErrorCode::infeasible_placement,
          "cannot place neighbor " + std::to_string(veh.id) + " in lane " + std::to_string(lane));
      }
      add_vehicle(veh, Flags{changer, cfg_.neighbor_v0, std::nullopt, -std::numeric_limits<double>::infinity(), false});
    }
  }

  bool fits(const VehicleState & cand, int lane) const
  {
    for (const auto & other : vehicles_) {
      if (cfg_.lanes.lane_of(other.y) != lane) {
        continue;
      }
      const double gap = (cand.s < other.s) ? bumper_gap(cand, other) : bumper_gap(other, cand);
      if (gap < cfg_.min_spawn_gap) {
        return false;
      }
    }
    return true;
  }

  // lanes a vehicle blocks for followers: its own, plus both ends of a maneuver
  bool occupies(std::size_t i, int lane) const
  {
    if (vehicles_[i].lane == lane) {
      return true;
    }
    const auto & m = flags_[i].maneuver;
    return m && (m->from_lane == lane || m->to_lane == lane);
  }

  std::optional<std::size_t> leader_in_lane(std::size_t i, int lane) const
  {
    std::optional<std::size_t> best;
    const auto & me = vehicles_[i];
    for (std::size_t j = 0; j < vehicles_.size(); ++j) {
      if (j == i || !occupies(j, lane)) {
        continue;
      }
      const auto & other = vehicles_[j];
      if (other.s > me.s || (other.s == me.s && j > i)) {
        if (!best || other.s < vehicles_[*best].s) {
          best = j;
        }
      }
    }
    return best;
  }

  std::optional<std::size_t> follower_in_lane(std::size_t i, int lane) const
  {
    std::optional<std::size_t> best;
    const auto & me = vehicles_[i];
    for (std::size_t j = 0; j < vehicles_.size(); ++j) {
      if (j == i || !occupies(j, lane)) {
        continue;
      }
      const auto & other = vehicles_[j];
      if (other.s < me.s || (other.s == me.s && j < i)) {
        if (!best || other.s > vehicles_[*best].s) {
          best = j;
        }
      }
    }
    return best;
  }

  double follow_accel(std::size_t i, int lane) const
  {
    const auto leader = leader_in_lane(i, lane);
    return car_following_accel(
      vehicles_[i], leader ? &vehicles_[*leader] : nullptr, flags_[i].desired_speed, cfg_.idm);
  }

  bool lane_blocked_ahead(std::size_t i) const
  {
    const auto & me = vehicles_[i];
    for (const auto & other : vehicles_) {
      if (
        other.kind == VehicleKind::truck && other.lane == me.lane && other.s > me.s &&
        bumper_gap(me, other) <= cfg_.lane_change.trigger_distance) {
        return true;
      }
    }
    return false;
  }

  void trigger_lane_changes(double t)
  {
    const auto & lc = cfg_.lane_change;
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      auto & flag = flags_[i];
      const auto & me = vehicles_[i];
      if (!flag.potential_changer || flag.maneuver || me.lane + 1 >= cfg_.lanes.lane_count) {
        continue;
      }
      if (!lane_blocked_ahead(i)) {
        continue;
      }
      const int target = me.lane + 1;
      if (const auto lead = leader_in_lane(i, target)) {
        if (bumper_gap(me, vehicles_[*lead]) <= lc.lead_gap) {
          continue;
        }
      }
      if (const auto lag = follower_in_lane(i, target)) {
        const auto & behind = vehicles_[*lag];
        const double gap = bumper_gap(behind, me);
        const double projected = gap - (behind.v - me.v) * lc.lag_anticipation;
        if (std::min(gap, projected) <= lc.lag_gap) {
          continue;
        }
      }
      ManeuverPlan plan{me.id, t, t + lc.duration, me.lane, target};
      flag.maneuver = plan;
      log_.maneuvers.push_back(plan);
    }
  }

  void update_lane_entry(double t)
  {
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      if (i == ego_index_) {
        continue;
      }
      const bool inside = vehicles_[i].lane == ego().lane;
      auto & flag = flags_[i];
      if (inside && !flag.in_ego_lane) {
        flag.entered_ego_lane = step_count_ == 0 ? -std::numeric_limits<double>::infinity() : t;
      }
      flag.in_ego_lane = inside;
    }
  }

  EgoPerception perceive(double t) const
  {
    EgoPerception out;
    const auto & me = ego();
    for (std::size_t j = 0; j < vehicles_.size(); ++j) {
      if (j == ego_index_ || !flags_[j].in_ego_lane || vehicles_[j].s <= me.s) {
        continue;
      }
      TrackedVehicle tv{
        vehicles_[j].id, bumper_gap(me, vehicles_[j]), vehicles_[j].v,
        t - flags_[j].entered_ego_lane, warned_.count(vehicles_[j].id) > 0};
      out.encroachers.push_back(tv);
      const bool followed = tv.anticipated || tv.time_in_lane >= cfg_.driver.reaction_time;
      if (followed && (!out.leader || tv.gap < out.leader->gap)) {
        out.leader = tv;
      }
    }
    return out;
  }

  EgoGuidance guidance_view() const
  {
    EgoGuidance g;
    if (!held_guidance_) {
      return g;
    }
    const auto & me = ego();
    for (const auto & [id, prob] : held_guidance_->advisories) {
      if (id == me.id) {
        continue;
      }
      const auto & other = vehicles_[index_of(id)];
      if (other.s <= me.s) {
        continue;
      }
      g.alerts.push_back({{other.id, bumper_gap(me, other), other.v, 0.0, true}, prob});
    }
    return g;
  }

  double compute_accel(std::size_t i, double t) const
  {
    const auto & veh = vehicles_[i];
    if (veh.kind == VehicleKind::truck) {
      return 0.0;
    }
    if (i == ego_index_) {
      const EgoGuidance g = guidance_view();
      return ego_policy(
        veh, flags_[i].desired_speed, perceive(t), held_guidance_ ? &g : nullptr, cfg_.driver,
        cfg_.idm);
    }
    const auto & m = flags_[i].maneuver;
    if (m) {
      return std::min(follow_accel(i, m->from_lane), follow_accel(i, m->to_lane));
    }
    return follow_accel(i, veh.lane);
  }

  void detect_collisions(double t)
  {
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      for (std::size_t j = i + 1; j < vehicles_.size(); ++j) {
        const auto & a = vehicles_[i];
        const auto & b = vehicles_[j];
        if (std::abs(a.y - b.y) >= 0.5 * (a.dims.width + b.dims.width)) {
          continue;
        }
        const bool overlap = a.rear() < b.front() && b.rear() < a.front();
        if (!overlap) {
          continue;
        }
        const bool known = std::any_of(
          log_.collisions.begin(), log_.collisions.end(), [&](const Collision & c) {
            return c.first_id == a.id && c.second_id == b.id;
          });
        if (!known) {
          log_.collisions.push_back({t, a.id, b.id});
        }
      }
    }
  }

  ScenarioConfig cfg_;
  std::vector<VehicleState> vehicles_;
  std::vector<Flags> flags_;
  std::size_t ego_index_{0};
  std::size_t step_count_{0};
  std::optional<GuidanceFrame> held_guidance_;
  std::set<int> warned_;
  TrajectoryLog log_;
};

inline Scenario build_scenario(const ScenarioConfig & cfg) { return Scenario(cfg); }

/// Run a scenario to its configured duration without guidance.
inline TrajectoryLog simulate(const ScenarioConfig & cfg)
{
  Scenario sc(cfg);
  sc.run_to_end();
  return sc.take_log();
}

// ---------------------------------------------------------------------------
// lane change extraction

struct ExtractionParams
{
  double settle_offset{0.3};   // m from the new lane center
  double settle_speed{0.01};   // m/s lateral
};

/// Lane changes recovered from lateral positions alone. The end point is the
/// first instant after the boundary crossing at which the vehicle is within
/// `settle_offset` of the new lane center and laterally at rest.
inline std::vector<ManeuverPlan> extract_lane_changes(
  const TrajectoryLog & log, const ExtractionParams & params = {})
{
  std::vector<ManeuverPlan> events;
  if (log.size() < 2) {
    return events;
  }
  const auto & lanes = log.lanes;
  const std::size_t n_veh = log.frames.front().size();
  for (std::size_t vi = 0; vi < n_veh; ++vi) {
    auto y_at = [&](std::size_t k) { return log.frames[k][vi].y; };
    auto lateral_speed = [&](std::size_t k) {
      return k == 0 ? 0.0 : std::abs(y_at(k) - y_at(k - 1)) / log.dt;
    };
    std::size_t k = 1;
    while (k < log.size()) {
      const int prev_lane = lanes.lane_of(y_at(k - 1));
      const int lane = lanes.lane_of(y_at(k));
      if (lane == prev_lane) {
        ++k;
        continue;
      }
      std::size_t start = k - 1;
      while (start > 0 && lateral_speed(start) >= params.settle_speed) {
        --start;
      }
      std::size_t end = k;
      bool settled = false;
      for (; end < log.size(); ++end) {
        if (lanes.lane_of(y_at(end)) != lane) {
          break;
        }
        if (
          std::abs(y_at(end) - lanes.lane_center(lane)) < params.settle_offset &&
          lateral_speed(end) < params.settle_speed) {
          settled = true;
          break;
        }
      }
      if (settled) {
        events.push_back(
          {log.frames[k][vi].id, log.times[start], log.times[end], prev_lane, lane});
      }
      k = std::max(end, k + 1);
    }
  }
  std::stable_sort(events.begin(), events.end(), [](const ManeuverPlan & a, const ManeuverPlan & b) {
    return a.t_end < b.t_end;
  });
  return events;
}

}  // namespace vcfusion
