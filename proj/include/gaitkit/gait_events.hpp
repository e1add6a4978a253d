#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "gaitkit/series.hpp"
#include "gaitkit/skeleton.hpp"

namespace gaitkit {

enum class EventKind { HeelStrike, ToeOff };

std::string_view event_kind_name(EventKind k);  // "HS" / "TO"

struct GaitEvent {
  EventKind kind = EventKind::HeelStrike;
  Side side = Side::Left;
  std::int64_t frame_index = 0;
  double timestamp = 0.0;
};

struct GaitCycle {
  Side side = Side::Left;
  GaitEvent start;    // heel strike
  GaitEvent toe_off;
  GaitEvent end;      // next heel strike of the same foot

  double duration() const { return end.timestamp - start.timestamp; }
  double stance_duration() const { return toe_off.timestamp - start.timestamp; }
  double stance_fraction() const { return stance_duration() / duration(); }
};

struct EventParams {
  /// Horizontal ankle speed (m/s) below which the foot counts as planted.
  double v_stop = 0.05;
  /// Toe vertical velocity (m/s) marking lift-off.
  double v_lift = 0.10;
  /// Events of a foot closer than this are merged (seconds; 0.2 s is
  /// 0.2 * frame_rate frames).
  double refractory_s = 0.2;
  /// Moving-average window applied before differencing. Event frames are
  /// shifted back by the filter's half width.
  int smoothing_window = 1;
  Eigen::Vector3d up = Eigen::Vector3d::UnitY();
};

/// Heel strikes open stationary intervals of the ankle (horizontal speed
/// below v_stop, where the ankle bottoms out); toe-offs are the onset of toe
/// lift (vertical velocity above v_lift) that ends each interval. Kinds
/// alternate per side. Throws ErrorCode::MissingJoint when the side's ankle
/// or toe never appears.
std::vector<GaitEvent> detect_events(const SkeletonSequence& seq, Side side,
                                     const EventParams& params = {});

/// One cycle per consecutive (HS, TO, HS) of the same side; trailing partial
/// cycles are dropped. Throws ErrorCode::Sequencing on non-alternating or
/// non-increasing input.
std::vector<GaitCycle> segment_cycles(const std::vector<GaitEvent>& events);

/// Resamples every channel onto n_points equally spaced fractions of the
/// cycle's [start, end] interval. Throws ErrorCode::Range when the cycle lies
/// outside the series' time span.
Eigen::MatrixXd normalize_cycle(const SampledSeries& series, const GaitCycle& cycle,
                                int n_points = 101);

/// "kind,side,frame,t"
std::string events_csv(const std::vector<GaitEvent>& events);

}  // namespace gaitkit
