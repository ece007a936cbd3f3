#pragma once

#include "vcfusion/error.hpp"
#include "vcfusion/geometry.hpp"
#include "vcfusion/random.hpp"
#include "vcfusion/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vcfusion
{

/// Cloud-side digital twin snapshot of one vehicle.
struct TwinRecord
{
  int vehicle_id{0};
  WorldPoint position;
  double speed{0.0};
  double publish_t{0.0};
};

struct ChannelConfig
{
  double publish_period{0.1};
  double latency{0.0};

  bool is_valid() const { return publish_period > 0.0 && latency >= 0.0; }
};

/// Which body point a vehicle reports as its position.
enum class ReferencePoint { rear_center, centroid };

inline std::string_view to_string(ReferencePoint r)
{
  return r == ReferencePoint::rear_center ? "rear_center" : "centroid";
}

inline WorldPoint reference_point(const VehicleState & state, ReferencePoint r)
{
  return r == ReferencePoint::rear_center ? state.rear_center() : state.centroid();
}

/// How published positions are produced: reference point plus horizontal
/// GNSS error, a pure function of (seed, vehicle, publish tick).
struct PositionSource
{
  ReferencePoint reference{ReferencePoint::rear_center};
  double gnss_sigma{0.0};
  std::uint64_t seed{0};

  WorldPoint measure(const VehicleState & state, double t) const
  {
    WorldPoint p = reference_point(state, reference);
    if (gnss_sigma > 0.0) {
      const auto tick = static_cast<std::uint64_t>(std::llround(t * 1000.0));
      Rng rng(derive_seed(seed, "gnss", (static_cast<std::uint64_t>(state.id) << 40U) ^ tick));
      std::normal_distribution<double> err(0.0, gnss_sigma);
      p.x += err(rng);
      p.y += err(rng);
    }
    return p;
  }
};

struct CloudAdvisory
{
  int target_id{0};
  WorldPoint position;
  double lane_change_probability{0.0};
  double issued_t{0.0};
};

namespace detail
{
// slack for publish times that sit on a decimal grid (0.1 is not exact)
inline constexpr double time_eps = 1e-9;

template <typename Record, typename TimeOf>
const Record * latest_not_after(const std::vector<Record> & history, double bound, TimeOf time_of)
{
  auto it = std::upper_bound(
    history.begin(), history.end(), bound + time_eps,
    [&](double b, const Record & r) { return b < time_of(r); });
  if (it == history.begin()) {
    return nullptr;
  }
  return &*std::prev(it);
}
}  // namespace detail

/// Single-writer store of twin records and advisories, keyed by vehicle.
class TwinStore
{
public:
  explicit TwinStore(
    PositionSource source = {}, double horizon = std::numeric_limits<double>::infinity())
  : source_(source), horizon_(horizon)
  {
  }

  const PositionSource & source() const { return source_; }

  void publish(const VehicleState & state, double t)
  {
    auto & hist = records_[state.id];
    hist.push_back({state.id, source_.measure(state, t), state.v, t});
    trim(hist, t, [](const TwinRecord & r) { return r.publish_t; });
  }

  void publish_advisory(const CloudAdvisory & advisory)
  {
    auto & hist = advisories_[advisory.target_id];
    hist.push_back(advisory);
    trim(hist, advisory.issued_t, [](const CloudAdvisory & a) { return a.issued_t; });
  }

  const std::vector<TwinRecord> & history(int id) const
  {
    static const std::vector<TwinRecord> empty;
    auto it = records_.find(id);
    return it == records_.end() ? empty : it->second;
  }

  std::vector<int> vehicle_ids() const
  {
    std::vector<int> ids;
    for (const auto & [id, hist] : records_) {
      ids.push_back(id);
    }
    return ids;
  }

  std::size_t record_count(int id) const { return history(id).size(); }

  const TwinRecord * find(int id, double bound) const
  {
    auto it = records_.find(id);
    if (it == records_.end()) {
      return nullptr;
    }
    return detail::latest_not_after(it->second, bound, [](const TwinRecord & r) { return r.publish_t; });
  }

  const CloudAdvisory * find_advisory(int id, double bound) const
  {
    auto it = advisories_.find(id);
    if (it == advisories_.end()) {
      return nullptr;
    }
    return detail::latest_not_after(
      it->second, bound, [](const CloudAdvisory & a) { return a.issued_t; });
  }

  std::vector<int> advised_ids() const
  {
    std::vector<int> ids;
    for (const auto & [id, hist] : advisories_) {
      ids.push_back(id);
    }
    return ids;
  }

private:
  template <typename Record, typename TimeOf>
  void trim(std::vector<Record> & hist, double now, TimeOf time_of)
  {
    if (!std::isfinite(horizon_)) {
      return;
    }
    auto keep = std::find_if(hist.begin(), hist.end(), [&](const Record & r) {
      return time_of(r) >= now - horizon_ - detail::time_eps;
    });
    hist.erase(hist.begin(), keep);
  }

  PositionSource source_;
  double horizon_;
  std::map<int, std::vector<TwinRecord>> records_;
  std::map<int, std::vector<CloudAdvisory>> advisories_;
};

inline void publish(TwinStore & store, const VehicleState & state, double t)
{
  store.publish(state, t);
}

/// Latest record with publish_t <= t - latency.
inline TwinRecord query_target(const TwinStore & store, int id, double t, const ChannelConfig & cfg)
{
  if (const TwinRecord * r = store.find(id, t - cfg.latency)) {
    return *r;
  }
  throw Error(
    ErrorCode::no_data, "no twin record for vehicle " + std::to_string(id) + " at t=" +
                          std::to_string(t) + " with latency " + std::to_string(cfg.latency));
}

inline std::optional<CloudAdvisory> query_advisory(
  const TwinStore & store, int id, double t, const ChannelConfig & cfg)
{
  if (const CloudAdvisory * a = store.find_advisory(id, t - cfg.latency)) {
    return *a;
  }
  return std::nullopt;
}

inline double distance(const WorldPoint & a, const WorldPoint & b)
{
  return (a.vec() - b.vec()).norm();
}

/// D_g: Euclidean distance from the ego camera to the twin's reported position.
inline double gnss_distance(const WorldPoint & ego_camera_position, const TwinRecord & twin)
{
  return distance(ego_camera_position, twin.position);
}

/// True when t sits on the k * period grid.
inline bool on_grid(double t, double period)
{
  const double k = std::round(t / period);
  return std::abs(t - k * period) < 1e-7;
}

}  // namespace vcfusion
