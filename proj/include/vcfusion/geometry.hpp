#pragma once

#include "vcfusion/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace vcfusion
{

/// World frame: x along the road (forward), y to the left, z up. Meters.
struct WorldPoint
{
  double x{0.0};
  double y{0.0};
  double z{0.0};

  Eigen::Vector3d vec() const { return {x, y, z}; }
};

/// Camera frame: z along the optical axis, x right, y down. Meters.
struct CameraPoint
{
  double x{0.0};
  double y{0.0};
  double z{0.0};
};

struct PixelPoint
{
  double u{0.0};
  double v{0.0};
  double depth{0.0};  // camera-frame z of the source point
};

struct Box2D
{
  double u_min{0.0};
  double v_min{0.0};
  double u_max{0.0};
  double v_max{0.0};

  double width() const { return u_max - u_min; }
  double height() const { return v_max - v_min; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
  double center_u() const { return 0.5 * (u_min + u_max); }
  double center_v() const { return 0.5 * (v_min + v_max); }

  // closed box: the boundary counts as inside
  bool contains(double u, double v) const
  {
    return u >= u_min && u <= u_max && v >= v_min && v <= v_max;
  }

  bool operator==(const Box2D &) const = default;
};

struct CameraExtrinsics
{
  Eigen::Matrix3d rotation{Eigen::Matrix3d::Identity()};
  Eigen::Vector3d translation{Eigen::Vector3d::Zero()};

  bool is_valid(double tol = 1e-9) const
  {
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    return (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol && translation.allFinite();
  }

  /// Inverse of the pose: camera optical center expressed in the world frame.
  WorldPoint optical_center() const
  {
    const Eigen::Vector3d c = -rotation.transpose() * translation;
    return {c.x(), c.y(), c.z()};
  }
};

struct CameraIntrinsics
{
  double focal_length{0.004};   // m
  double pixel_size_x{4.0e-6};  // m / px
  double pixel_size_y{4.0e-6};  // m / px
  double principal_u{480.0};
  double principal_v{270.0};
  int width{960};
  int height{540};
  double near_plane{0.5};

  double fx() const { return focal_length / pixel_size_x; }
  double fy() const { return focal_length / pixel_size_y; }

  bool is_valid() const
  {
    return focal_length > 0.0 && pixel_size_x > 0.0 && pixel_size_y > 0.0 && width > 0 &&
           height > 0 && principal_u >= 0.0 && principal_u < width && principal_v >= 0.0 &&
           principal_v < height && near_plane > 0.0;
  }
};

struct Cuboid3D
{
  WorldPoint center;
  double length{4.5};
  double width{1.8};
  double height{1.5};
  double yaw{0.0};

  /// Corners in world frame, ordered (±length/2, ±width/2, ±height/2) with
  /// the length sign varying slowest.
  std::array<WorldPoint, 8> corners() const
  {
    std::array<WorldPoint, 8> out{};
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    std::size_t k = 0;
    for (double dl : {-0.5, 0.5}) {
      for (double dw : {-0.5, 0.5}) {
        for (double dh : {-0.5, 0.5}) {
          const double lx = dl * length;
          const double ly = dw * width;
          out[k++] = {
            center.x + c * lx - s * ly, center.y + s * lx + c * ly, center.z + dh * height};
        }
      }
    }
    return out;
  }
};

/// Rotation taking world axes (x fwd, y left, z up) to camera axes
/// (x right, y down, z fwd) for a camera looking down world +x.
inline Eigen::Matrix3d forward_looking_rotation()
{
  Eigen::Matrix3d r;
  r << 0.0, -1.0, 0.0,
       0.0, 0.0, -1.0,
       1.0, 0.0, 0.0;
  return r;
}

/// Extrinsics for a forward-looking camera whose optical center sits at
/// `position` in the world frame.
inline CameraExtrinsics forward_camera_at(const WorldPoint & position)
{
  CameraExtrinsics e;
  e.rotation = forward_looking_rotation();
  e.translation = -e.rotation * position.vec();
  return e;
}

inline CameraPoint world_to_camera(const WorldPoint & p, const CameraExtrinsics & e)
{
  const Eigen::Vector3d c = e.rotation * p.vec() + e.translation;
  return {c.x(), c.y(), c.z()};
}

inline PixelPoint camera_to_pixel(const CameraPoint & p, const CameraIntrinsics & in)
{
  if (!(p.z > in.near_plane)) {
    throw Error(
      ErrorCode::behind_camera,
      "point at z_c=" + std::to_string(p.z) + " is not in front of the near plane");
  }
  return {in.principal_u + in.fx() * (p.x / p.z), in.principal_v + in.fy() * (p.y / p.z), p.z};
}

/// Inverse of camera_to_pixel for a known depth.
inline CameraPoint pixel_to_camera(double u, double v, double depth, const CameraIntrinsics & in)
{
  return {(u - in.principal_u) * depth / in.fx(), (v - in.principal_v) * depth / in.fy(), depth};
}

/// Anchor point: image location of a cloud-reported world position. May lie
/// outside the image; callers decide what to do with that.
inline PixelPoint project_anchor(
  const WorldPoint & p, const CameraExtrinsics & e, const CameraIntrinsics & in)
{
  return camera_to_pixel(world_to_camera(p, e), in);
}

inline Box2D clip_to_image(const Box2D & b, const CameraIntrinsics & in)
{
  const auto w = static_cast<double>(in.width);
  const auto h = static_cast<double>(in.height);
  return {
    std::clamp(b.u_min, 0.0, w), std::clamp(b.v_min, 0.0, h), std::clamp(b.u_max, 0.0, w),
    std::clamp(b.v_max, 0.0, h)};
}

/// Unclipped axis-aligned hull of the 8 projected corners.
inline Box2D project_cuboid_hull_unclipped(
  const Cuboid3D & c, const CameraExtrinsics & e, const CameraIntrinsics & in)
{
  Box2D hull{
    std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
    -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto & corner : c.corners()) {
    const PixelPoint px = project_anchor(corner, e, in);
    hull.u_min = std::min(hull.u_min, px.u);
    hull.v_min = std::min(hull.v_min, px.v);
    hull.u_max = std::max(hull.u_max, px.u);
    hull.v_max = std::max(hull.v_max, px.v);
  }
  return hull;
}

/// Image outline of a cuboid: the convex hull of its projected corners,
/// counter-clockwise in (u, v).
inline std::vector<Eigen::Vector2d> project_cuboid_silhouette(
  const Cuboid3D & c, const CameraExtrinsics & e, const CameraIntrinsics & in)
{
  std::vector<Eigen::Vector2d> pts;
  for (const auto & corner : c.corners()) {
    const PixelPoint px = project_anchor(corner, e, in);
    pts.emplace_back(px.u, px.v);
  }
  std::sort(pts.begin(), pts.end(), [](const Eigen::Vector2d & a, const Eigen::Vector2d & b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  auto cross = [](const Eigen::Vector2d & o, const Eigen::Vector2d & a, const Eigen::Vector2d & b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  // monotone chain
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto & p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 1 ? k - 1 : k);
  return hull;
}

/// Closed containment test against a counter-clockwise convex polygon.
inline bool inside_convex(const std::vector<Eigen::Vector2d> & poly, double u, double v)
{
  if (poly.size() < 3) {
    return false;
  }
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto & a = poly[i];
    const auto & b = poly[(i + 1) % poly.size()];
    if ((b.x() - a.x()) * (v - a.y()) - (b.y() - a.y()) * (u - a.x()) < 0.0) {
      return false;
    }
  }
  return true;
}

inline Box2D project_cuboid_hull(
  const Cuboid3D & c, const CameraExtrinsics & e, const CameraIntrinsics & in)
{
  return clip_to_image(project_cuboid_hull_unclipped(c, e, in), in);
}

inline double intersection_area(const Box2D & a, const Box2D & b)
{
  const double iw = std::min(a.u_max, b.u_max) - std::max(a.u_min, b.u_min);
  const double ih = std::min(a.v_max, b.v_max) - std::max(a.v_min, b.v_min);
  return (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
}

/// Zero-area boxes give 0 against anything, themselves included.
inline double iou(const Box2D & a, const Box2D & b)
{
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) {
    return 0.0;
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace vcfusion
