#pragma once

#include "vcfusion/error.hpp"
#include "vcfusion/geometry.hpp"
#include "vcfusion/random.hpp"
#include "vcfusion/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace vcfusion
{

struct Camera
{
  CameraExtrinsics extrinsics;
  CameraIntrinsics intrinsics;
};

/// Where the forward camera sits on the ego body.
struct CameraMount
{
  double forward{1.0};  // from the body center, m
  double height{1.2};   // above ground, m
};

inline WorldPoint camera_position(const VehicleState & ego, const CameraMount & mount)
{
  return {ego.s + mount.forward, ego.y, mount.height};
}

inline Camera camera_on(
  const VehicleState & ego, const CameraMount & mount, const CameraIntrinsics & intrinsics)
{
  return {forward_camera_at(camera_position(ego, mount)), intrinsics};
}

/// Per-pixel camera-to-surface distance raster, row-major, top row first.
struct DepthMap
{
  int width{0};
  int height{0};
  float far_value{1000.0F};
  std::vector<float> values;

  DepthMap() = default;
  DepthMap(int w, int h, float far = 1000.0F)
  : width(w), height(h), far_value(far), values(static_cast<std::size_t>(w) * h, far)
  {
  }

  float at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
  float & at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }
};

struct Detection
{
  Box2D box;
  int source_id{-1};  // ground truth, scoring only; never read by fusion
};

struct DetectorNoiseModel
{
  double edge_jitter_sigma{2.0};
  double miss_prob{0.0};
  double false_positive_rate{0.0};  // expected spurious boxes per frame
  std::uint64_t seed{0};

  bool is_valid() const
  {
    return edge_jitter_sigma >= 0.0 && miss_prob >= 0.0 && miss_prob <= 1.0 &&
           false_positive_rate >= 0.0;
  }
};

struct DepthNoiseModel
{
  double sigma{0.0};
  std::uint64_t seed{0};
};

struct SensorFrame
{
  double t{0.0};
  std::vector<Detection> detections;
  DepthMap depth;
  Camera camera;
};

struct TruthBox
{
  int vehicle_id{0};
  Box2D box;
  double rear_depth{0.0};
  std::vector<Eigen::Vector2d> silhouette;
};

namespace detail
{

inline bool all_corners_visible(const Cuboid3D & c, const Camera & cam)
{
  for (const auto & corner : c.corners()) {
    if (!(world_to_camera(corner, cam.extrinsics).z > cam.intrinsics.near_plane)) {
      return false;
    }
  }
  return true;
}

/// Optical-axis distance of the face closest to the camera, i.e. the rear
/// face for a vehicle ahead.
inline double rear_face_depth(const VehicleState & st, const Camera & cam)
{
  const WorldPoint rear{st.rear(), st.y, 0.5 * st.dims.height};
  const WorldPoint front{st.front(), st.y, 0.5 * st.dims.height};
  return std::min(
    world_to_camera(rear, cam.extrinsics).z, world_to_camera(front, cam.extrinsics).z);
}

}  // namespace detail

/// Ground-truth boxes with their rear-face depths, for every vehicle fully in
/// front of the near plane whose clipped hull has positive area.
inline std::vector<TruthBox> render_truth(std::span<const VehicleState> states, const Camera & cam)
{
  std::vector<TruthBox> out;
  for (const auto & st : states) {
    const Cuboid3D body = st.cuboid();
    if (!detail::all_corners_visible(body, cam)) {
      continue;
    }
    const Box2D box = project_cuboid_hull(body, cam.extrinsics, cam.intrinsics);
    if (box.area() <= 0.0) {
      continue;
    }
    out.push_back({
      st.id, box, detail::rear_face_depth(st, cam),
      project_cuboid_silhouette(body, cam.extrinsics, cam.intrinsics)});
  }
  return out;
}

inline std::vector<std::pair<int, Box2D>> render_truth_boxes(
  std::span<const VehicleState> states, const Camera & cam)
{
  std::vector<std::pair<int, Box2D>> out;
  for (const auto & tb : render_truth(states, cam)) {
    out.emplace_back(tb.vehicle_id, tb.box);
  }
  return out;
}

/// Calls fn(u, v) for every pixel whose center lies inside the vehicle's
/// projected hull (its image silhouette).
template <typename Fn>
void for_each_hull_pixel(const TruthBox & tb, const CameraIntrinsics & in, Fn fn)
{
  const int u0 = std::max(0, static_cast<int>(std::ceil(tb.box.u_min - 0.5)));
  const int u1 = std::min(in.width - 1, static_cast<int>(std::floor(tb.box.u_max - 0.5)));
  const int v0 = std::max(0, static_cast<int>(std::ceil(tb.box.v_min - 0.5)));
  const int v1 = std::min(in.height - 1, static_cast<int>(std::floor(tb.box.v_max - 0.5)));
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      if (inside_convex(tb.silhouette, u + 0.5, v + 0.5)) {
        fn(u, v);
      }
    }
  }
}

/// Planar depth model: pixels whose centers fall inside a vehicle hull take
/// that vehicle's rear-face distance; the nearest vehicle wins on overlap.
/// Gaussian sensor noise, when enabled, touches vehicle pixels only.
inline DepthMap render_depth_map(
  std::span<const VehicleState> states, const Camera & cam, const DepthNoiseModel & noise = {},
  float far_value = 1000.0F)
{
  const auto & in = cam.intrinsics;
  DepthMap map(in.width, in.height, far_value);
  std::vector<std::uint8_t> covered(map.values.size(), 0);
  for (const auto & tb : render_truth(states, cam)) {
    const auto depth = static_cast<float>(tb.rear_depth);
    for_each_hull_pixel(tb, in, [&](int u, int v) {
      const std::size_t idx = static_cast<std::size_t>(v) * in.width + u;
      map.values[idx] = std::min(map.values[idx], depth);
      covered[idx] = 1;
    });
  }
  if (noise.sigma > 0.0) {
    Rng rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, noise.sigma);
    for (std::size_t i = 0; i < map.values.size(); ++i) {
      if (covered[i] != 0) {
        const double noisy = map.values[i] + gauss(rng);
        map.values[i] = static_cast<float>(std::max(noisy, 1e-3));
      }
    }
  }
  return map;
}

/// Stand-in for the on-board detector: independent misses, per-edge Gaussian
/// jitter, re-clipping, and a seeded output order.
inline std::vector<Detection> emulate_detections(
  std::span<const std::pair<int, Box2D>> truth, const DetectorNoiseModel & noise,
  const CameraIntrinsics & in)
{
  if (!noise.is_valid()) {
    throw Error(ErrorCode::invalid_argument, "invalid detector noise model");
  }
  Rng rng(noise.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, noise.edge_jitter_sigma);
  std::vector<Detection> out;
  for (const auto & [id, box] : truth) {
    if (unit(rng) < noise.miss_prob) {
      continue;
    }
    Box2D b = box;
    if (noise.edge_jitter_sigma > 0.0) {
      b.u_min += jitter(rng);
      b.v_min += jitter(rng);
      b.u_max += jitter(rng);
      b.v_max += jitter(rng);
      if (b.u_min > b.u_max) std::swap(b.u_min, b.u_max);
      if (b.v_min > b.v_max) std::swap(b.v_min, b.v_max);
    }
    b = clip_to_image(b, in);
    if (b.area() > 0.0) {
      out.push_back({b, id});
    }
  }
  if (noise.false_positive_rate > 0.0) {
    std::poisson_distribution<int> count(noise.false_positive_rate);
    const int spurious = count(rng);
    for (int k = 0; k < spurious; ++k) {
      const double w = 20.0 + 80.0 * unit(rng);
      const double h = 20.0 + 60.0 * unit(rng);
      const double u = unit(rng) * (in.width - w);
      const double v = unit(rng) * (in.height - h);
      out.push_back({{u, v, u + w, v + h}, -1});
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

inline std::vector<Box2D> boxes_of(std::span<const Detection> detections)
{
  std::vector<Box2D> out;
  out.reserve(detections.size());
  for (const auto & d : detections) {
    out.push_back(d.box);
  }
  return out;
}

struct SensingConfig
{
  CameraIntrinsics intrinsics;
  CameraMount mount;
  double edge_jitter_sigma{2.0};
  double miss_prob{0.0};
  double false_positive_rate{0.0};
  double depth_noise_sigma{0.1};
  float far_value{1000.0F};
};

/// Full synthetic sensor stack for one ego view. `ego_id` is excluded from
/// the rendered scene.
inline SensorFrame sense(
  double t, std::span<const VehicleState> states, int ego_id, const SensingConfig & cfg,
  std::uint64_t seed)
{
  const VehicleState * ego = nullptr;
  std::vector<VehicleState> others;
  others.reserve(states.size());
  for (const auto & st : states) {
    if (st.id == ego_id) {
      ego = &st;
    } else {
      others.push_back(st);
    }
  }
  if (ego == nullptr) {
    throw Error(ErrorCode::unknown_vehicle, "ego " + std::to_string(ego_id) + " not in frame");
  }
  SensorFrame frame;
  frame.t = t;
  frame.camera = camera_on(*ego, cfg.mount, cfg.intrinsics);
  const auto truth = render_truth_boxes(others, frame.camera);
  DetectorNoiseModel det{
    cfg.edge_jitter_sigma, cfg.miss_prob, cfg.false_positive_rate, derive_seed(seed, "detector")};
  frame.detections = emulate_detections(truth, det, cfg.intrinsics);
  frame.depth = render_depth_map(
    others, frame.camera, DepthNoiseModel{cfg.depth_noise_sigma, derive_seed(seed, "depth")},
    cfg.far_value);
  return frame;
}

}  // namespace vcfusion
