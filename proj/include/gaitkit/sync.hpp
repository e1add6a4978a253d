#pragma once

#include <Eigen/Core>

#include <vector>

#include "gaitkit/series.hpp"
#include "gaitkit/skeleton.hpp"

namespace gaitkit {

/// reference_time = rate * source_time + offset
struct TimeMapping {
  double offset = 0.0;
  double rate = 1.0;

  double to_reference(double source_time) const { return rate * source_time + offset; }
  double to_source(double reference_time) const { return (reference_time - offset) / rate; }
  TimeMapping inverse() const { return {-offset / rate, 1.0 / rate}; }
};

struct JumpParams {
  /// Minimum mean-ankle elevation above the session median (m).
  double jump_height = 0.10;
  /// Peaks closer than this (s) are merged, keeping the higher one.
  double min_jump_gap = 1.0;
  Eigen::Vector3d up = Eigen::Vector3d::UnitY();
};

/// Apex times of jumps, refined to sub-frame precision by fitting a parabola
/// through the highest sample and its neighbours. Returned in time order.
std::vector<double> detect_jumps(const SkeletonSequence& seq, const JumpParams& params = {});

/// Affine clock mapping from matched jump landmarks. With equal-length lists
/// every pair is used (reduced-major-axis fit, so swapping the arguments
/// yields the inverse mapping); otherwise only the first and last landmarks
/// are matched. Throws ErrorCode::InsufficientLandmarks for fewer than two
/// landmarks on either side and ErrorCode::InconsistentLandmarks when the
/// implied rate is not positive.
TimeMapping align(const std::vector<double>& source_jumps, const std::vector<double>& reference_jumps);

/// Samples `source` (on the source clock) at each target timestamp (on the
/// reference clock). Targets mapping more than `tolerance` seconds outside the
/// source span, or next to a missing sample, become NaN.
SampledSeries resample_to(const SampledSeries& source, const TimeMapping& mapping,
                          const std::vector<double>& target_timestamps, double tolerance);

/// All joint coordinates of a sequence as channels (joint-major, x/y/z).
SampledSeries skeleton_series(const SkeletonSequence& seq);

}  // namespace gaitkit
