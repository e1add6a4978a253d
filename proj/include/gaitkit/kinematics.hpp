#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gaitkit/error.hpp"
#include "gaitkit/series.hpp"
#include "gaitkit/skeleton.hpp"

namespace gaitkit {

/// Links shorter than this (in the sequence's units) are degenerate.
inline constexpr double kMinLinkLength = 1e-6;

template <typename Scalar>
struct LinkVectors {
  Vec3<Scalar> shank;  // ankle - knee
  Vec3<Scalar> foot;   // ankle - toe
  Side side = Side::Left;
  std::int64_t frame_index = 0;
};

/// Shank and foot links of one side. Throws ErrorCode::MissingJoint naming the
/// absent joint, ErrorCode::DegenerateGeometry for a zero-length link.
LinkVectors<double> link_vectors(const SkeletonFrame& frame, Side side);

template <typename Scalar>
constexpr Scalar rad_to_deg(Scalar r) {
  return r * Scalar(180) / Scalar(EIGEN_PI);
}

template <typename Scalar>
constexpr Scalar deg_to_rad(Scalar d) {
  return d * Scalar(EIGEN_PI) / Scalar(180);
}

/// Angle in degrees in [0, 180] between u and v, i.e. arccos(u.v / |u||v|).
/// Evaluated as 2 atan2(|a - b|, |a + b|) on the unit vectors a, b, which
/// stays accurate for nearly parallel or antiparallel inputs.
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar angle_between(const Eigen::MatrixBase<DerivedU>& u,
                                        const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  using std::atan2;
  const Scalar nu = u.norm();
  const Scalar nv = v.norm();
  if (!(nu > Scalar(0)) || !(nv > Scalar(0))) {
    throw Error(ErrorCode::DegenerateGeometry, "angle_between: zero-length vector");
  }
  const auto a = (u / nu).eval();
  const auto b = (v / nv).eval();
  return rad_to_deg(Scalar(2) * atan2((a - b).norm(), (a + b).norm()));
}

/// Elevation of the foot link out of the horizontal plane (normal `up`):
/// 90 - angle(foot, up).
template <typename Scalar, typename Derived>
Scalar inversion_eversion(const LinkVectors<Scalar>& link, const Eigen::MatrixBase<Derived>& up) {
  return Scalar(90) - angle_between(link.foot, up);
}

/// Elevation of the foot link out of the frontal plane whose normal is the
/// walking direction: 90 - angle(foot, progression).
template <typename Scalar, typename Derived>
Scalar dorsiflexion_plantarflexion(const LinkVectors<Scalar>& link,
                                   const Eigen::MatrixBase<Derived>& progression) {
  return Scalar(90) - angle_between(link.foot, progression);
}

template <typename Scalar>
Scalar ankle_angle(const LinkVectors<Scalar>& link) {
  return angle_between(link.foot, link.shank);
}

struct AngleSample {
  std::int64_t frame_index = 0;
  double timestamp = 0.0;
  Side side = Side::Left;
  double inversion_eversion = 0.0;
  double dorsiflexion_plantarflexion = 0.0;
  double ankle = 0.0;
};

enum class AngleParameter { InversionEversion, DorsiflexionPlantarflexion, Ankle };

inline constexpr std::array<AngleParameter, 3> kAngleParameters{
    AngleParameter::InversionEversion, AngleParameter::DorsiflexionPlantarflexion,
    AngleParameter::Ankle};

std::string_view parameter_name(AngleParameter p);
double value_of(const AngleSample& s, AngleParameter p);

struct AngleSeries {
  std::vector<AngleSample> samples;  // ordered by frame, left before right
  int dims = 3;
  Eigen::Vector3d up = Eigen::Vector3d::UnitY();
  Eigen::Vector3d progression = Eigen::Vector3d::UnitZ();
  /// Every frame of the source sequence, sampled or not.
  std::vector<std::int64_t> frame_indices;
  std::vector<double> frame_times;

  std::vector<AngleSample> side(Side s) const;
};

/// One side's angles on the full frame grid; channels follow kAngleParameters
/// and frames without a sample hold NaN.
SampledSeries angle_table(const AngleSeries& series, Side side);

struct AngleConfig {
  Eigen::Vector3d up = Eigen::Vector3d::UnitY();
  /// Walking direction; estimated from the ankle trajectory when absent.
  std::optional<Eigen::Vector3d> progression;
};

/// Per-frame, per-side angles of a normalized sequence. Frames lacking a
/// side's knee, ankle or toe produce no sample for that side.
AngleSeries angle_series(const SkeletonSequence& seq, const AngleConfig& config = {});

/// "frame,t,side,inv_ev_deg,dorsi_plantar_deg,ankle_deg"
std::string angle_series_csv(const AngleSeries& series);
std::string angle_csv_row(const AngleSample& s);

}  // namespace gaitkit
