#pragma once

#include <Eigen/Core>

#include <array>
#include <span>
#include <string>
#include <vector>

#include "gaitkit/gait_events.hpp"
#include "gaitkit/kinematics.hpp"
#include "gaitkit/series.hpp"
#include "gaitkit/sync.hpp"

namespace gaitkit {

/// Per-frame errors of one side on the reference frame grid. Channels follow
/// kAngleParameters; excluded frames hold NaN.
struct SideErrors {
  Side side = Side::Left;
  std::vector<std::int64_t> frames;
  SampledSeries errors;
  std::size_t aligned = 0;
  std::size_t excluded = 0;

  /// Finite values of one parameter, in frame order.
  std::vector<double> values(AngleParameter p) const;
};

struct AngularErrors {
  std::array<SideErrors, 2> sides;
  bool signed_errors = false;

  const SideErrors& side(Side s) const { return sides[s == Side::Left ? 0 : 1]; }
  std::size_t aligned() const { return sides[0].aligned + sides[1].aligned; }
  std::size_t excluded() const { return sides[0].excluded + sides[1].excluded; }
  std::vector<double> values(AngleParameter p) const;
};

/// |estimate - reference| (or estimate - reference when signed) for every
/// reference frame whose mapped estimate time falls within one estimate frame
/// of the estimate's span. Throws ErrorCode::EmptyInput for an empty series and
/// ErrorCode::EmptyOverlap when no frame aligns.
AngularErrors angular_errors(const AngleSeries& estimate, const AngleSeries& reference,
                             const TimeMapping& mapping, bool signed_errors = false);

struct HistogramBin {
  double lower_edge = 0.0;
  std::size_t count = 0;
  double percentage = 0.0;
};

struct ErrorHistogram {
  double bin_width = 1.0;
  std::vector<HistogramBin> bins;  // contiguous from 0
  std::size_t total_frames = 0;
};

/// Right-open bins [k w, (k+1) w). Throws ErrorCode::EmptyInput on empty input
/// and ErrorCode::Range on negative or non-finite errors.
ErrorHistogram histogram(std::span<const double> errors, double bin_width = 1.0);

struct CycleErrorCurve {
  Eigen::VectorXd points;
  std::size_t cycles_averaged = 0;
};

/// Errors of one side together with that side's gait cycles.
struct CycleErrorInput {
  const SampledSeries* errors = nullptr;
  std::vector<GaitCycle> cycles;
};

/// Mean over cycles of the cycle-normalized error of one channel. Cycles that
/// fall outside their series are ignored; throws ErrorCode::EmptyInput if none
/// overlaps.
CycleErrorCurve cycle_error_curve(std::span<const CycleErrorInput> inputs, Eigen::Index channel,
                                  int n_points = 101);
CycleErrorCurve cycle_error_curve(const SampledSeries& errors, Eigen::Index channel,
                                  const std::vector<GaitCycle>& cycles, int n_points = 101);

/// Quartiles use linear interpolation between order statistics at q (n - 1)
/// (inclusive method); outliers lie beyond 1.5 IQR from the quartiles.
struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  std::vector<double> outliers;
  std::size_t n = 0;
};

BoxStats box_stats(std::span<const double> values);

std::string histogram_csv(const std::vector<std::pair<std::string, ErrorHistogram>>& groups);
std::string box_stats_csv(const std::vector<std::pair<std::string, BoxStats>>& groups);

}  // namespace gaitkit
