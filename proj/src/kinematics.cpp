#include "gaitkit/kinematics.hpp"

#include <limits>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gaitkit/progression.hpp"

namespace gaitkit {

LinkVectors<double> link_vectors(const SkeletonFrame& frame, Side side) {
  for (JointId j : {knee(side), ankle(side), toe(side)}) {
    if (!frame.has(j)) {
      throw Error(ErrorCode::MissingJoint,
                  fmt::format("frame {}: missing joint {}", frame.frame_index, joint_name(j)));
    }
  }
  LinkVectors<double> link;
  link.side = side;
  link.frame_index = frame.frame_index;
  link.shank = frame.at(ankle(side)) - frame.at(knee(side));
  link.foot = frame.at(ankle(side)) - frame.at(toe(side));
  if (link.shank.norm() < kMinLinkLength || link.foot.norm() < kMinLinkLength) {
    throw Error(ErrorCode::DegenerateGeometry,
                fmt::format("frame {}: zero-length {} link", frame.frame_index,
                            link.shank.norm() < kMinLinkLength ? "shank" : "foot"));
  }
  return link;
}

std::string_view parameter_name(AngleParameter p) {
  switch (p) {
    case AngleParameter::InversionEversion: return "inversion_eversion";
    case AngleParameter::DorsiflexionPlantarflexion: return "dorsiflexion_plantarflexion";
    case AngleParameter::Ankle: return "ankle";
  }
  return "";
}

double value_of(const AngleSample& s, AngleParameter p) {
  switch (p) {
    case AngleParameter::InversionEversion: return s.inversion_eversion;
    case AngleParameter::DorsiflexionPlantarflexion: return s.dorsiflexion_plantarflexion;
    case AngleParameter::Ankle: return s.ankle;
  }
  return 0.0;
}

std::vector<AngleSample> AngleSeries::side(Side s) const {
  std::vector<AngleSample> out;
  for (const auto& sample : samples) {
    if (sample.side == s) out.push_back(sample);
  }
  return out;
}

SampledSeries angle_table(const AngleSeries& series, Side side) {
  SampledSeries out;
  out.t = series.frame_times;
  out.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(out.t.size()),
                                         static_cast<Eigen::Index>(kAngleParameters.size()),
                                         std::numeric_limits<double>::quiet_NaN());
  std::size_t row = 0;
  for (const auto& s : series.samples) {
    if (s.side != side) continue;
    while (row < series.frame_indices.size() && series.frame_indices[row] != s.frame_index) ++row;
    if (row == series.frame_indices.size()) break;
    for (std::size_t p = 0; p < kAngleParameters.size(); ++p) {
      out.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(p)) = value_of(s, kAngleParameters[p]);
    }
  }
  return out;
}

AngleSeries angle_series(const SkeletonSequence& seq, const AngleConfig& config) {
  AngleSeries series;
  series.dims = seq.dims;
  series.up = config.up.normalized();
  series.progression = config.progression ? config.progression->normalized()
                                          : estimate_walking_direction(seq, series.up);
  std::size_t skipped = 0;
  for (const auto& frame : seq.frames) {
    series.frame_indices.push_back(frame.frame_index);
    series.frame_times.push_back(frame.timestamp);
    for (Side side : kSides) {
      LinkVectors<double> link;
      try {
        link = link_vectors(frame, side);
      } catch (const Error& e) {
        ++skipped;
        spdlog::debug("angles: skipping {} side of frame {}: {}", side_name(side), frame.frame_index, e.what());
        continue;
      }
      AngleSample s;
      s.frame_index = frame.frame_index;
      s.timestamp = frame.timestamp;
      s.side = side;
      s.inversion_eversion = inversion_eversion(link, series.up);
      s.dorsiflexion_plantarflexion = dorsiflexion_plantarflexion(link, series.progression);
      s.ankle = ankle_angle(link);
      series.samples.push_back(s);
    }
  }
  if (skipped > 0) spdlog::info("angles: {} side-frames skipped for missing or degenerate joints", skipped);
  return series;
}

std::string angle_csv_row(const AngleSample& s) {
  return fmt::format("{},{},{},{},{},{}\n", s.frame_index, s.timestamp, side_name(s.side),
                     s.inversion_eversion, s.dorsiflexion_plantarflexion, s.ankle);
}

std::string angle_series_csv(const AngleSeries& series) {
  std::string out = "frame,t,side,inv_ev_deg,dorsi_plantar_deg,ankle_deg\n";
  for (const auto& s : series.samples) out += angle_csv_row(s);
  return out;
}

}  // namespace gaitkit
