#pragma once

#include "vcfusion/error.hpp"
#include "vcfusion/geometry.hpp"
#include "vcfusion/random.hpp"
#include "vcfusion/sensing.hpp"
#include "vcfusion/twinlink.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace vcfusion
{

struct DepthEstimate
{
  std::size_t detection_index{0};
  double distance{0.0};
};

enum class MatchMethod { fused, baseline };

inline std::string_view to_string(MatchMethod m)
{
  return m == MatchMethod::fused ? "fused" : "baseline";
}

struct IdentificationResult
{
  double t{0.0};
  std::optional<std::size_t> chosen_index;  // into the frame's detections
  std::optional<Detection> chosen;
  MatchMethod method{MatchMethod::fused};
  PixelPoint anchor;
  int candidate_count{0};

  bool identified() const { return chosen.has_value(); }
};

/// How the resize threshold is applied: per side length (default) or to the
/// box area.
enum class ShrinkMode { per_dimension, area };

struct FusionParams
{
  double shrink{0.8};
  int samples{16};
  ShrinkMode shrink_mode{ShrinkMode::per_dimension};
};

inline Box2D shrink_box(const Box2D & b, double th, ShrinkMode mode = ShrinkMode::per_dimension)
{
  if (!(th > 0.0 && th <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "shrink threshold must lie in (0, 1]");
  }
  const double scale = mode == ShrinkMode::area ? std::sqrt(th) : th;
  const double half_w = 0.5 * b.width() * scale;
  const double half_h = 0.5 * b.height() * scale;
  const double cu = b.center_u();
  const double cv = b.center_v();
  return {cu - half_w, cv - half_h, cu + half_w, cv + half_h};
}

/// Region sampled for depth: bottom quarter of the shrunken box.
inline Box2D depth_sampling_region(
  const Box2D & b, double th, ShrinkMode mode = ShrinkMode::per_dimension)
{
  Box2D r = shrink_box(b, th, mode);
  r.v_min = r.v_max - 0.25 * r.height();
  return r;
}

/// Whole pixels [u, u+1) x [v, v+1) lying inside `region`, intersected with
/// the image, as inclusive index ranges.
struct PixelRange
{
  int u0{0};
  int u1{-1};
  int v0{0};
  int v1{-1};

  bool empty() const { return u1 < u0 || v1 < v0; }
  bool contains(int u, int v) const { return u >= u0 && u <= u1 && v >= v0 && v <= v1; }
};

inline PixelRange whole_pixels(const Box2D & region, int width, int height)
{
  PixelRange r;
  r.u0 = std::max(0, static_cast<int>(std::ceil(region.u_min)));
  r.v0 = std::max(0, static_cast<int>(std::ceil(region.v_min)));
  r.u1 = std::min(width - 1, static_cast<int>(std::floor(region.u_max)) - 1);
  r.v1 = std::min(height - 1, static_cast<int>(std::floor(region.v_max)) - 1);
  return r;
}

namespace detail
{

template <typename OnSample>
std::optional<double> sample_box_depth(
  const DepthMap & img, const Box2D & box, const FusionParams & p, Rng & rng, OnSample on_sample)
{
  const PixelRange px = whole_pixels(depth_sampling_region(box, p.shrink, p.shrink_mode), img.width, img.height);
  if (px.empty()) {
    return std::nullopt;
  }
  std::uniform_int_distribution<int> pick_u(px.u0, px.u1);
  std::uniform_int_distribution<int> pick_v(px.v0, px.v1);
  // shifted mean: exact for constant regions
  double first = 0.0;
  double shifted_sum = 0.0;
  for (int j = 0; j < p.samples; ++j) {
    const int u = pick_u(rng);
    const int v = pick_v(rng);
    on_sample(u, v);
    const double d = img.at(u, v);
    if (j == 0) {
      first = d;
    }
    shifted_sum += d - first;
  }
  return first + shifted_sum / p.samples;
}

}  // namespace detail

/// Depth evaluation: average of `n` seeded uniform samples from the shrunken
/// lower quarter of each box. One estimate per box, in input order.
template <typename OnSample>
std::vector<DepthEstimate> depth_evaluate(
  const DepthMap & img, std::span<const Box2D> boxes, const FusionParams & p, std::uint64_t seed,
  OnSample on_sample)
{
  if (p.samples < 1) {
    throw Error(ErrorCode::invalid_argument, "sample count must be >= 1");
  }
  Rng rng(seed);
  std::vector<DepthEstimate> out;
  out.reserve(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto d = detail::sample_box_depth(img, boxes[i], p, rng, [&](int u, int v) { on_sample(i, u, v); });
    if (!d) {
      throw Error(
        ErrorCode::empty_region, "box " + std::to_string(i) + " has no whole pixel to sample");
    }
    out.push_back({i, *d});
  }
  return out;
}

inline std::vector<DepthEstimate> depth_evaluate(
  const DepthMap & img, std::span<const Box2D> boxes, double th, int n, std::uint64_t seed)
{
  return depth_evaluate(img, boxes, FusionParams{th, n}, seed, [](std::size_t, int, int) {});
}

/// Same as depth_evaluate, but boxes with an empty sampling region are left
/// out instead of failing the whole frame.
inline std::vector<DepthEstimate> depth_evaluate_available(
  const DepthMap & img, std::span<const Box2D> boxes, const FusionParams & p, std::uint64_t seed)
{
  Rng rng(seed);
  std::vector<DepthEstimate> out;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (const auto d = detail::sample_box_depth(img, boxes[i], p, rng, [](int, int) {})) {
      out.push_back({i, *d});
    }
  }
  return out;
}

inline std::vector<std::size_t> anchor_candidates(
  const PixelPoint & anchor, std::span<const Box2D> boxes)
{
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (boxes[i].contains(anchor.u, anchor.v)) {
      out.push_back(i);
    }
  }
  return out;
}

/// Distance matching. A unique anchor-containing box wins outright;
/// otherwise the candidate whose depth estimate is closest to d_g wins
/// (smallest index on ties; candidates without an estimate rank last).
inline IdentificationResult match_target(
  const PixelPoint & anchor, std::span<const Box2D> boxes, std::span<const DepthEstimate> depths,
  double d_g)
{
  const auto cands = anchor_candidates(anchor, boxes);
  if (cands.empty()) {
    throw Error(ErrorCode::no_candidate, "anchor lies in no detected box");
  }
  IdentificationResult res;
  res.method = MatchMethod::fused;
  res.anchor = anchor;
  res.candidate_count = static_cast<int>(cands.size());
  if (cands.size() == 1) {
    res.chosen_index = cands.front();
    return res;
  }
  double best = std::numeric_limits<double>::infinity();
  std::size_t pick = cands.front();
  for (std::size_t c : cands) {
    for (const auto & d : depths) {
      if (d.detection_index == c) {
        const double diff = std::abs(d.distance - d_g);
        if (diff < best) {
          best = diff;
          pick = c;
        }
        break;
      }
    }
  }
  res.chosen_index = pick;
  return res;
}

/// Anchor-only matcher: unique containment, else the candidate whose center
/// is nearest the anchor (smallest index on ties).
inline IdentificationResult match_target_baseline(
  const PixelPoint & anchor, std::span<const Box2D> boxes)
{
  const auto cands = anchor_candidates(anchor, boxes);
  if (cands.empty()) {
    throw Error(ErrorCode::no_candidate, "anchor lies in no detected box");
  }
  IdentificationResult res;
  res.method = MatchMethod::baseline;
  res.anchor = anchor;
  res.candidate_count = static_cast<int>(cands.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c : cands) {
    const double du = boxes[c].center_u() - anchor.u;
    const double dv = boxes[c].center_v() - anchor.v;
    const double dist = std::hypot(du, dv);
    if (dist < best) {
      best = dist;
      res.chosen_index = c;
    }
  }
  return res;
}

/// Per-frame target identification against one twin record. Anchors behind
/// the camera or outside the image give a no-match with zero candidates.
inline IdentificationResult identify(
  const SensorFrame & frame, const TwinRecord & twin, double d_g, MatchMethod method,
  const FusionParams & params, std::uint64_t seed)
{
  IdentificationResult res;
  res.t = frame.t;
  res.method = method;
  const auto & in = frame.camera.intrinsics;
  try {
    res.anchor = project_anchor(twin.position, frame.camera.extrinsics, in);
  } catch (const Error & e) {
    if (e.code() != ErrorCode::behind_camera) {
      throw;
    }
    return res;
  }
  if (res.anchor.u < 0.0 || res.anchor.u >= in.width || res.anchor.v < 0.0 || res.anchor.v >= in.height) {
    return res;
  }
  const auto boxes = boxes_of(frame.detections);
  const auto cands = anchor_candidates(res.anchor, boxes);
  res.candidate_count = static_cast<int>(cands.size());
  if (cands.empty()) {
    return res;
  }
  IdentificationResult m;
  if (method == MatchMethod::fused) {
    const auto depths = depth_evaluate_available(frame.depth, boxes, params, seed);
    m = match_target(res.anchor, boxes, depths, d_g);
  } else {
    m = match_target_baseline(res.anchor, boxes);
  }
  res.chosen_index = m.chosen_index;
  res.chosen = frame.detections[*m.chosen_index];
  return res;
}

}  // namespace vcfusion
