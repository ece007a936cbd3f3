#pragma once

#include "vcfusion/geometry.hpp"
#include "vcfusion/sensing.hpp"

#include <Eigen/Geometry>

#include <cstdint>
#include <random>
#include <vector>

namespace vcfusion::testing
{

/// Small seeded generator for property tests. Every case draws from its own
/// stream, so a failure can be replayed from the printed case index.
class Gen
{
public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal(double mean, double sigma) { return std::normal_distribution<double>(mean, sigma)(rng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

  Eigen::Matrix3d rotation()
  {
    Eigen::Quaterniond q(normal(0, 1), normal(0, 1), normal(0, 1), normal(0, 1));
    q.normalize();
    return q.toRotationMatrix();
  }

  CameraExtrinsics pose()
  {
    CameraExtrinsics e;
    e.rotation = rotation();
    e.translation = {uniform(-50, 50), uniform(-50, 50), uniform(-50, 50)};
    return e;
  }

  Box2D box(double extent = 200.0)
  {
    const double u = uniform(-extent, extent);
    const double v = uniform(-extent, extent);
    return {u, v, u + uniform(0.5, extent), v + uniform(0.5, extent)};
  }

  /// Box with integer corners, for pixel-counting oracles.
  Box2D grid_box(int extent = 40)
  {
    const int u = integer(0, extent);
    const int v = integer(0, extent);
    return {
      static_cast<double>(u), static_cast<double>(v), static_cast<double>(u + integer(1, extent)),
      static_cast<double>(v + integer(1, extent))};
  }

  std::vector<int> bits(std::size_t n, double p = 0.5)
  {
    std::vector<int> out(n);
    for (auto & b : out) b = coin(p) ? 1 : 0;
    return out;
  }

  std::mt19937_64 & engine() { return rng_; }

private:
  std::mt19937_64 rng_;
};

inline VehicleState car(int id, double s, double y, double v = 15.0)
{
  VehicleState st;
  st.id = id;
  st.s = s;
  st.y = y;
  st.v = v;
  st.lane = LaneSpec{}.lane_of(y);
  return st;
}

/// Ego at the origin in the middle lane.
inline VehicleState ego_car() { auto e = car(0, 0.0, LaneSpec{}.lane_center(1)); e.kind = VehicleKind::ego; return e; }

}  // namespace vcfusion::testing
