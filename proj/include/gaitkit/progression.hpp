#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include <cmath>
#include <string>
#include <vector>

#include "gaitkit/error.hpp"
#include "gaitkit/gait_events.hpp"
#include "gaitkit/kinematics.hpp"
#include "gaitkit/skeleton.hpp"

namespace gaitkit {

/// Line of progression x = m z + x0, y = n z + y0 (equivalently
/// (x - x0)/m = (y - y0)/n = z). `sense` orients the direction along the
/// walking direction (+1 towards increasing z).
template <typename Scalar>
struct ProgressionLine {
  Scalar m = 0;
  Scalar n = 0;
  Scalar x0 = 0;
  Scalar y0 = 0;
  Scalar sense = 1;

  Vec3<Scalar> direction() const { return sense * Vec3<Scalar>(m, n, Scalar(1)).normalized(); }
  Vec3<Scalar> at(Scalar z) const { return Vec3<Scalar>(m * z + x0, n * z + y0, z); }
};

/// Smallest z spread (same units as the points) accepted by the fit.
inline constexpr double kMinDepthSpread = 1e-9;

/// Least-squares fit of x and y against z through the 2x2 normal equations
///
///   [m x0; n y0] = [Σxz Σx; Σyz Σy] [Σz² Σz; Σz N]^-1
///
/// over the columns of a 3xN point matrix. Throws ErrorCode::DegenerateFit for
/// fewer than two points or a z spread below kMinDepthSpread.
template <typename Derived>
ProgressionLine<typename Derived::Scalar> fit_progression_line(const Eigen::MatrixBase<Derived>& points) {
  using Scalar = typename Derived::Scalar;
  static_assert(Derived::RowsAtCompileTime == 3 || Derived::RowsAtCompileTime == Eigen::Dynamic);
  const Eigen::Index count = points.cols();
  if (points.rows() != 3 || count < 2) {
    throw Error(ErrorCode::DegenerateFit, "progression fit needs at least two 3D points");
  }
  const auto x = points.row(0);
  const auto y = points.row(1);
  const auto z = points.row(2);
  using std::abs;
  if (!(abs(z.maxCoeff() - z.minCoeff()) > Scalar(kMinDepthSpread))) {
    throw Error(ErrorCode::DegenerateFit, "progression fit: points have no spread along the depth axis");
  }

  Eigen::Matrix<Scalar, 2, 2> moments;
  moments << x.dot(z), x.sum(),
             y.dot(z), y.sum();
  Eigen::Matrix<Scalar, 2, 2> gram;
  gram << z.squaredNorm(), z.sum(),
          z.sum(), Scalar(count);
  const Eigen::Matrix<Scalar, 2, 2> solution = moments * gram.inverse();

  ProgressionLine<Scalar> line;
  line.m = solution(0, 0);
  line.x0 = solution(0, 1);
  line.n = solution(1, 0);
  line.y0 = solution(1, 1);
  if (!std::isfinite(static_cast<double>(line.m + line.n + line.x0 + line.y0))) {
    throw Error(ErrorCode::DegenerateFit, "progression fit is ill-conditioned");
  }
  return line;
}

/// Signed transverse-plane angle (degrees) from the line direction to one foot
/// axis vector; toe-out is positive on both sides.
double signed_foot_angle(const Eigen::Vector3d& foot_axis, const Eigen::Vector3d& direction,
                         Side side, const Eigen::Vector3d& up, bool projected = true);

struct FootAngleResult {
  double mean_deg = 0.0;
  std::size_t frames_used = 0;
};

/// Mean signed angle between the foot-axis vectors (3xN columns, toe minus
/// ankle) and the line over a stance phase. Frames whose horizontal foot
/// projection is shorter than 1e-6 are skipped. Throws ErrorCode::EmptyInput
/// when nothing is left to average.
FootAngleResult foot_progression_angle(const Eigen::Matrix3Xd& foot_axes,
                                       const ProgressionLine<double>& line, Side side,
                                       const Eigen::Vector3d& up = Eigen::Vector3d::UnitY(),
                                       bool projected = true);

struct FootProgressionSample {
  GaitCycle cycle;
  Side side = Side::Left;
  double angle = 0.0;  // degrees, toe-out positive
  ProgressionLine<double> line;
};

struct ProgressionOptions {
  Eigen::Vector3d up = Eigen::Vector3d::UnitY();
  /// Use heel -> toe as the foot axis when a heel keypoint exists.
  bool heel_to_toe = false;
  /// Measure between transverse-plane projections (clinical FPA).
  bool projected = true;
  /// On a degenerate fit use the ankle displacement instead of skipping.
  bool fallback_to_displacement = false;
};

/// One sample per cycle: the line is fitted to the ankle over the cycle's
/// stance phase together with the closing heel strike, and the foot angle is
/// averaged over the stance frames. Cycles with degenerate fits are skipped.
std::vector<FootProgressionSample> session_progression(const SkeletonSequence& seq,
                                                       const std::vector<GaitCycle>& cycles,
                                                       const ProgressionOptions& options = {});

/// Horizontal walking direction from the mid-ankle trajectory. Falls back to
/// +z (3D) or +x (2D) when the trajectory has no usable spread.
Eigen::Vector3d estimate_walking_direction(const SkeletonSequence& seq,
                                           const Eigen::Vector3d& up = Eigen::Vector3d::UnitY());

/// "cycle_start_frame,side,fpa_deg"
std::string progression_csv(const std::vector<FootProgressionSample>& samples);

}  // namespace gaitkit
