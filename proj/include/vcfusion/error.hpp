#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vcfusion
{

enum class ErrorCode {
  behind_camera,
  infeasible_placement,
  no_data,
  empty_region,
  no_candidate,
  unknown_vehicle,
  degenerate_dataset,
  dimension_mismatch,
  empty_results,
  length_mismatch,
  pair_mismatch,
  invalid_argument,
  config,
  io,
};

inline std::string_view to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::behind_camera: return "BehindCamera";
    case ErrorCode::infeasible_placement: return "InfeasiblePlacement";
    case ErrorCode::no_data: return "NoData";
    case ErrorCode::empty_region: return "EmptyRegion";
    case ErrorCode::no_candidate: return "NoCandidate";
    case ErrorCode::unknown_vehicle: return "UnknownVehicle";
    case ErrorCode::degenerate_dataset: return "DegenerateDataset";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::empty_results: return "EmptyResults";
    case ErrorCode::length_mismatch: return "LengthMismatch";
    case ErrorCode::pair_mismatch: return "PairMismatch";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::config: return "ConfigError";
    case ErrorCode::io: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string & what)
  : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
  {
  }

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace vcfusion
