#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gaitkit/classify.hpp"
#include "gaitkit/gait_events.hpp"
#include "gaitkit/kinematics.hpp"
#include "gaitkit/progression.hpp"
#include "gaitkit/skeleton.hpp"
#include "gaitkit/sync.hpp"

namespace gaitkit {

/// Parameters of the synthetic walker. Per-side arrays are (left, right);
/// lengths in metres, angles in degrees, times in seconds.
struct SynthParams {
  double frame_rate = 30.0;
  int n_strides = 10;
  double stride_length = 1.2;
  double cadence = 110.0;  // steps per minute
  double shank_length = 0.42;
  double foot_length = 0.20;
  double ankle_height = 0.08;
  double step_width = 0.16;
  double swing_lift = 0.12;
  double swing_pitch = 15.0;
  double knee_amplitude = 20.0;
  std::array<double, 2> toe_out{7.0, 7.0};
  std::array<double, 2> inversion_bias{0.0, 0.0};
  std::array<double, 2> stance_fraction{0.6, 0.6};
  double noise_sigma = 0.0;
  double lead_in = 2.0;
  double tail = 2.0;
  /// Apex times; empty places one jump in the middle of the lead-in and one
  /// in the middle of the tail.
  std::vector<double> jump_times;
  double jump_height = 0.25;
  double jump_duration = 0.4;
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  int dims = 3;
  std::uint64_t seed = 1;
  GaitClass label = GaitClass::Normal;
  std::string condition = "normal";

  double cycle_period() const { return 120.0 / cadence; }
  double walk_start() const { return lead_in; }
  double walk_end() const;
  double duration() const { return walk_end() + tail; }
  std::vector<double> effective_jump_times() const;
};

/// Throws ErrorCode::Config for out-of-range values or jumps that overlap the
/// walking interval.
void validate(const SynthParams& params);

struct SynthTruth {
  GaitClass label = GaitClass::Normal;
  std::vector<GaitEvent> events;  // exact times; frame = first frame at or after
  std::vector<GaitCycle> cycles;
  AngleSeries angles;
  std::vector<FootProgressionSample> fpa;
  ProgressionLine<double> line;  // midline of the walk
  std::vector<double> jump_times;
  TimeMapping clock;             // source -> this stream's clock
};

struct SynthSession {
  SkeletonSequence sequence;
  SynthTruth truth;
};

SynthSession generate(const SynthParams& params);

/// A second recording of the same walk on another clock:
/// reference_time = rate * source_time + offset, sampled on the reference's
/// own frame grid.
struct ReferenceClock {
  double frame_rate = 100.0;
  double offset = 0.0;
  double rate = 1.0;
  double noise_sigma = 0.0;
};

SynthSession generate_reference(const SynthParams& params, const ReferenceClock& clock);

/// Default-ish parameters for a class, varied by `seed`.
SynthParams class_preset(GaitClass c, std::uint64_t seed, const SynthParams& base = {});

/// `per_class` sessions of every class, seeds derived from `seed`.
std::vector<SynthParams> class_suite(int per_class, std::uint64_t seed, const SynthParams& base = {});

SynthParams parse_synth_params(std::string_view json, const SynthParams& defaults = {});
std::string synth_params_json(const SynthParams& params);
std::string truth_json(const SynthTruth& truth, const SynthParams& params);

}  // namespace gaitkit
