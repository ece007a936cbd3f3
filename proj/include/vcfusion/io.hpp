#pragma once

#include "vcfusion/error.hpp"
#include "vcfusion/evaluation.hpp"
#include "vcfusion/fusion.hpp"
#include "vcfusion/prediction.hpp"
#include "vcfusion/scene.hpp"
#include "vcfusion/sensing.hpp"
#include "vcfusion/twinlink.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace vcfusion
{

// Every writer renders to a string first; files are written whole.

inline void write_file(const std::filesystem::path & path, std::string_view content)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) {
    throw Error(ErrorCode::io, "short write to " + path.string());
  }
}

inline std::string read_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::io, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string json_text(const nlohmann::json & j) { return j.dump(2) + "\n"; }

inline void write_json(const std::filesystem::path & path, const nlohmann::json & j)
{
  write_file(path, json_text(j));
}

// times sit on the simulation grid; two decimals print them exactly
inline std::string format_time(double t) { return fmt::format("{:.2f}", t); }

// ---------------------------------------------------------------------------
// trajectories

/// One row per vehicle per sample of the 0.1 s grid.
inline std::string trajectory_csv(const TrajectoryLog & log)
{
  const TrajectoryLog grid = log.empty() ? log : log.resampled(metric_period);
  std::string out = "t,id,kind,s,y,v,a,lane\n";
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (const auto & v : grid.frames[k]) {
      fmt::format_to(
        std::back_inserter(out), "{},{},{},{},{},{},{},{}\n", format_time(grid.times[k]), v.id,
        to_string(v.kind), v.s, v.y, v.v, v.a, v.lane);
    }
  }
  return out;
}

inline std::string maneuver_csv(std::span<const ManeuverPlan> plans)
{
  std::string out = "id,t_start,t_end,from_lane,to_lane\n";
  for (const auto & p : plans) {
    fmt::format_to(
      std::back_inserter(out), "{},{},{},{},{}\n", p.vehicle_id, format_time(p.t_start),
      format_time(p.t_end), p.from_lane, p.to_lane);
  }
  return out;
}

// ---------------------------------------------------------------------------
// sensing

inline constexpr std::array<char, 4> depth_magic{'D', 'P', 'T', '1'};

namespace detail
{
template <typename T>
void append_le(std::string & out, T value)
{
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T read_le(std::string_view data, std::size_t offset)
{
  T value;
  std::memcpy(&value, data.data() + offset, sizeof(T));
  return value;
}
}  // namespace detail

inline std::string depth_map_bytes(const DepthMap & map)
{
  std::string out(depth_magic.begin(), depth_magic.end());
  detail::append_le(out, static_cast<std::uint32_t>(map.width));
  detail::append_le(out, static_cast<std::uint32_t>(map.height));
  out.reserve(out.size() + map.values.size() * sizeof(float));
  for (float v : map.values) {
    detail::append_le(out, v);
  }
  return out;
}

inline DepthMap parse_depth_map(std::string_view data)
{
  constexpr std::size_t header = 12;
  if (data.size() < header || !std::equal(depth_magic.begin(), depth_magic.end(), data.begin())) {
    throw Error(ErrorCode::io, "not a DPT1 depth map");
  }
  const auto w = detail::read_le<std::uint32_t>(data, 4);
  const auto h = detail::read_le<std::uint32_t>(data, 8);
  const std::uint64_t count = static_cast<std::uint64_t>(w) * h;
  if (data.size() != header + count * sizeof(float)) {
    throw Error(ErrorCode::io, fmt::format("depth map payload is {} bytes, expected {}", data.size() - header, count * 4));
  }
  DepthMap map;
  map.width = static_cast<int>(w);
  map.height = static_cast<int>(h);
  map.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    map.values[i] = detail::read_le<float>(data, header + i * sizeof(float));
  }
  return map;
}

inline void write_depth_map(const std::filesystem::path & path, const DepthMap & map)
{
  write_file(path, depth_map_bytes(map));
}

inline DepthMap read_depth_map(const std::filesystem::path & path) { return parse_depth_map(read_file(path)); }

inline std::string detections_csv_header() { return "t,source_id,u_min,v_min,u_max,v_max\n"; }

inline void append_detections(std::string & out, const SensorFrame & frame)
{
  for (const auto & d : frame.detections) {
    fmt::format_to(
      std::back_inserter(out), "{},{},{},{},{},{}\n", format_time(frame.t), d.source_id, d.box.u_min,
      d.box.v_min, d.box.u_max, d.box.v_max);
  }
}

// ---------------------------------------------------------------------------
// twin channel

inline std::string twin_csv_header() { return "t,id,x,y,z,v,probability\n"; }

/// The probability field is empty when no advisory was live for the vehicle.
inline void append_twin_row(
  std::string & out, double t, const TwinRecord & rec, std::optional<double> probability)
{
  fmt::format_to(
    std::back_inserter(out), "{},{},{},{},{},{},{}\n", format_time(t), rec.vehicle_id, rec.position.x,
    rec.position.y, rec.position.z, rec.speed, probability ? fmt::format("{}", *probability) : std::string());
}

// ---------------------------------------------------------------------------
// identification

inline std::string identification_csv_header()
{
  return "t,method,chosen_source_id,gt_target_id,iou_vs_gt,candidate_count\n";
}

/// An unidentified frame reports chosen_source_id -1 and IoU 0.
inline void append_identification(std::string & out, const ScoredIdentification & s)
{
  const auto & r = s.result;
  const int chosen = r.chosen ? r.chosen->source_id : -1;
  const double overlap = r.chosen ? iou(r.chosen->box, s.truth) : 0.0;
  fmt::format_to(
    std::back_inserter(out), "{},{},{},{},{},{}\n", format_time(r.t), to_string(r.method), chosen,
    s.truth_id, overlap, r.candidate_count);
}

inline std::string curve_csv(const AccuracyCurve & curve)
{
  std::string out = "threshold,accuracy_fused,accuracy_baseline\n";
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    fmt::format_to(
      std::back_inserter(out), "{},{},{}\n", curve.thresholds[i], curve.accuracy.at(MatchMethod::fused)[i],
      curve.accuracy.at(MatchMethod::baseline)[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// prediction

inline std::string dataset_csv(std::span<const LabeledSample> samples)
{
  std::string out = "vehicle_id,t,label";
  for (std::size_t i = 1; i <= feature_count; ++i) {
    fmt::format_to(std::back_inserter(out), ",f{}", i);
  }
  out += '\n';
  for (const auto & s : samples) {
    fmt::format_to(std::back_inserter(out), "{},{},{}", s.vehicle_id, format_time(s.t), s.label);
    for (double f : s.features) {
      fmt::format_to(std::back_inserter(out), ",{}", f);
    }
    out += '\n';
  }
  return out;
}

inline std::string trace_csv_header() { return "vehicle_id,t,probability,raw,aggressive,conservative\n"; }

inline void append_trace(
  std::string & out, const PredictionTrace & raw, const PredictionTrace & aggressive,
  const PredictionTrace & conservative)
{
  if (aggressive.records.size() != raw.records.size() || conservative.records.size() != raw.records.size()) {
    throw Error(ErrorCode::length_mismatch, "filtered traces differ in length from the raw trace");
  }
  for (std::size_t i = 0; i < raw.records.size(); ++i) {
    const auto & r = raw.records[i];
    fmt::format_to(
      std::back_inserter(out), "{},{},{},{},{},{}\n", raw.vehicle_id, format_time(r.t), r.probability,
      r.prediction, aggressive.records[i].prediction, conservative.records[i].prediction);
  }
}

}  // namespace vcfusion
